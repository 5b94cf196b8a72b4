#![no_main]

use artvista_core::RasterImage;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(img) = RasterImage::decode(data) else { return };
    assert_eq!(img.as_bytes().len(), img.pixel_count() * 4);
    let png = img.encode_png().expect("decoded images re-encode");
    assert_eq!(RasterImage::decode(&png).expect("own PNG decodes"), img);
});
