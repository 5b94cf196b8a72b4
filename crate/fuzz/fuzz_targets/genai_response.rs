#![no_main]

use artvista_genai::{decode_stylize_response, decode_txt2img_response};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = decode_txt2img_response(data);
    let _ = decode_stylize_response(data);
});
