#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Both report-directory CSV readers (traces and metrics).
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = harvest_har::eval::parse_trace_csv(text);
        let _ = harvest_har::eval::parse_metrics_csv(text);
    }
});
