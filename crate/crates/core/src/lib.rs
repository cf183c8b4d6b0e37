//! Speech pseudonymisation by McAdams-coefficient warping of LPC pole angles.
//!
//! Each frame is analysed by linear prediction, the angles of its complex
//! poles are raised to the power `alpha` (`0 < alpha <= 1`), and the frame is
//! resynthesised from the warped filter and the original residual. Speakers
//! receive a secret per-split coefficient drawn from a configured range.
//!
//! ```
//! use mcadams_core::{anonymise_utterance, sample_alpha, AlphaMode, AnonymisationConfig, AudioBuffer};
//!
//! let config = AnonymisationConfig {
//!     mode: AlphaMode::uniform(0.7, 0.9).unwrap(),
//!     secret_seed: b"not-a-real-secret".to_vec(),
//!     split: "test".into(),
//!     ..Default::default()
//! };
//! let ctx = sample_alpha(&config, "speaker-17").unwrap();
//! let audio = AudioBuffer::new((0..1600).map(|n| (n as f64 * 0.05).sin() * 0.3).collect(), 16_000);
//! let out = anonymise_utterance(&audio, &ctx, &config).unwrap();
//! assert_eq!(out.len(), audio.len());
//! ```

// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anonymizer;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod io;
pub mod lpc;
pub mod mcadams;
pub mod poles;

pub use anonymizer::{
    anonymise_corpus, anonymise_utterance, sample_alpha, AlphaMode, AnonymisationConfig, CorpusOptions,
    CorpusReport, SpeakerContext, SplitConfigs,
};
pub use dsp::{frame_signal, overlap_add, AudioBuffer, FrameStream};
pub use error::{Error, Result};
pub use lpc::{fit_lpc, synthesize, LpcModel};
pub use mcadams::{angle_to_hz, warp_angle, warp_poleset, McAdamsCoefficient};
pub use poles::{coeffs_from_poles, poles_from_coeffs, Pole, PoleSet};
