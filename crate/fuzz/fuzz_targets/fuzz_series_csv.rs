#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // The dataset CSV parser must never panic on arbitrary input.
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = harvest_har::data::parse_series_csv(text);
    }
});
