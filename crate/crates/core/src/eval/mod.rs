//! Desk-scale assessment: spectral envelopes and pole tables, a trainingless
//! cepstral speaker verifier with EER, and log-spectral distortion.

mod analysis;
mod eer;
mod embedding;
mod envelope;
mod lsd;
mod protocol;

pub use analysis::{analyze_frame, analysis_frame, dump_poles, FrameAnalysis, PoleRow, PoleTable};
pub use eer::{compute_eer, score_trials, scores_csv, ScoreSet, ScoredTrial};
pub use embedding::{cosine_similarity, embed_utterance, lpc_to_cepstrum, SpeakerEmbedding, CEPSTRAL_ORDER};
pub use envelope::{envelope_from_coeffs, envelope_from_poles, EnvelopeCurve};
pub use lsd::{log_spectral_distortion, LSD_FLOOR_DB};
pub use protocol::{evaluate, load_utterances, EvalOutcome, Scenario, Utterance};
