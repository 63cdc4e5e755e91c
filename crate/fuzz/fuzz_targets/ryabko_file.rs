#![no_main]

use hedgelab::loss::OutcomeSpace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = hedgelab::config::parse_ryabko_file(text, &OutcomeSpace::Binary);
        let _ = hedgelab::config::parse_ryabko_file(text, &OutcomeSpace::Interval);
    }
});
