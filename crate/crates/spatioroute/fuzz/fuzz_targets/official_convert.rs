//! Joining official questions/annotations JSON must never panic; on success
//! every instance carries at least one gold answer.

#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use spatioroute::dataset;

fuzz_target!(|input: (&str, &str)| {
    let (questions, annotations) = input;
    if let Ok(outcome) = dataset::convert_official_str(
        questions,
        annotations,
        Path::new("questions"),
        Path::new("annotations"),
    ) {
        assert!(!outcome.instances.is_empty(), "an empty join must be an error");
        for instance in &outcome.instances {
            assert!(!instance.gold_answers.is_empty());
        }
    }
});
