#![no_main]

use libfuzzer_sys::fuzz_target;
use mcadams_core::io::{decode_wav, encode_wav};

fuzz_target!(|data: &[u8]| {
    if let Ok(audio) = decode_wav(data) {
        // anything that decodes must survive a re-encode unchanged
        let again = decode_wav(&encode_wav(&audio)).expect("re-encoded file decodes");
        assert_eq!(again.samples, audio.samples);
    }
});
