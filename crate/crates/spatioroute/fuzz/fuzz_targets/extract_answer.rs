//! The answer normalizer must never panic and must be idempotent.

#![no_main]

use libfuzzer_sys::fuzz_target;
use spatioroute::eval::extract_answer;

fuzz_target!(|raw: &str| {
    let once = extract_answer(raw);
    assert_eq!(extract_answer(&once), once, "normalizer is not idempotent");
});
