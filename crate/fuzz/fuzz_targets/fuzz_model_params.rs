#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Model files are loaded from disk; the decoder must reject hostile
    // shape headers without panicking or over-allocating.
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = harvest_har::models::decode_model(text);
    }
});
