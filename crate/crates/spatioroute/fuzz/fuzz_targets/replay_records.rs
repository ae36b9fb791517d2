//! Replay fixture parsing accepts a single record or an array and must
//! never panic on arbitrary JSON.

#![no_main]

use libfuzzer_sys::fuzz_target;
use spatioroute::backend::replay::{parse_records, ReplayBackend};

fuzz_target!(|raw: &str| {
    if let Ok(records) = parse_records(raw) {
        let backend = ReplayBackend::from_records(records);
        let _ = backend.len();
    }
});
