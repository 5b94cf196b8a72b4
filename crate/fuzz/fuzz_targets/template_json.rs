#![no_main]

use artvista_core::{render_template_svg, template_from_json, template_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(t) = template_from_json(data) else { return };
    // Inputs may carry extra decimals, so compare canonical forms.
    let canonical = template_to_json(&t);
    let again = template_from_json(&canonical).expect("canonical output must parse");
    assert_eq!(template_to_json(&again), canonical);
    render_template_svg(&t, 1.0).expect("valid templates render");
});
