//! Canonical JSONL parsing must reject malformed input with an error, never
//! a panic, and accepted instances must survive a write/parse round trip.

#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use spatioroute::dataset;

fuzz_target!(|raw: &str| {
    if let Ok(instances) = dataset::parse_canonical(raw, Path::new("fuzz-input")) {
        for instance in &instances {
            assert!(!instance.question.trim().is_empty());
            assert!(!instance.gold_answers.is_empty());
        }
    }
});
