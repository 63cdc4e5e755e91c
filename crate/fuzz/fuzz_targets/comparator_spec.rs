#![no_main]

use hedgelab::loss::OutcomeSpace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        for space in [OutcomeSpace::Binary, OutcomeSpace::Interval, OutcomeSpace::Discrete { labels: 4 }] {
            let _ = hedgelab::config::parse_comparator_spec(text, &space, 1);
            let _ = hedgelab::config::parse_comparator_spec(text, &space, 3);
        }
    }
});
