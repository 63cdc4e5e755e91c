#![no_main]

use hedgelab::loss::OutcomeSpace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        for space in [OutcomeSpace::Binary, OutcomeSpace::Discrete { labels: 8 }] {
            let _ = hedgelab::config::parse_markov_file(text, &space);
        }
    }
});
