//! classify must never panic; it errors only on whitespace-only input, and
//! routing a classifiable question must always succeed.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|question: &str| {
    match spatioroute::classify(question) {
        Ok(_) => {
            let routed = spatioroute::route::route_rule(question, Some("I face the door."))
                .expect("classifiable questions always route");
            assert!(routed.prompt_text.contains(question));
        }
        Err(_) => assert!(question.split_whitespace().next().is_none()),
    }
});
