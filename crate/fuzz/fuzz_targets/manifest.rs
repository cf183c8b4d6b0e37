#![no_main]

use libfuzzer_sys::fuzz_target;
use mcadams_core::io::parse_manifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(manifest) = parse_manifest(data, "base") {
        for row in &manifest.rows {
            assert!(!row.utterance_id.is_empty());
            assert!(manifest.get(&row.utterance_id).is_some());
        }
    }
});
