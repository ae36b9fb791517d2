//! Chat-completions response bodies come from an untrusted server; parsing
//! must never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use spatioroute::backend::live::parse_completion;

fuzz_target!(|raw: &str| {
    let _ = parse_completion(raw);
});
