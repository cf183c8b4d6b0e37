#![no_main]

use libfuzzer_sys::fuzz_target;
use mcadams_core::io::parse_trials;

fuzz_target!(|data: &[u8]| {
    let _ = parse_trials(data);
});
