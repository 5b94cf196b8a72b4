#![no_main]

use artvista_service::{parse_fill_request, parse_generate_request, parse_session_request, PaintSession};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_generate_request(data);
    let _ = parse_session_request(data);
    let _ = parse_fill_request(data);
    if let Ok(s) = PaintSession::from_json(data) {
        let again = PaintSession::from_json(&s.to_json()).expect("serialized session must parse");
        assert_eq!(again, s);
    }
});
