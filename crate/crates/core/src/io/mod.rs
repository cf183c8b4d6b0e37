//! File formats: PCM16 WAV, CSV manifests and trial lists, key=value configs.

mod config;
mod manifest;
mod wav;

pub use config::{load_config, parse_config};
pub use manifest::{
    load_manifest, load_trials, parse_manifest, parse_trials, Manifest, ManifestRow, TrialLabel,
    TrialRow,
};
pub use wav::{decode_wav, encode_wav, read_wav, sample_to_word, write_wav};
