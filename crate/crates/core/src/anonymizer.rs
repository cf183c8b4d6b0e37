//! Utterance and corpus anonymisation.
//!
//! Each speaker gets one McAdams coefficient per split, drawn uniformly from
//! the configured range by a keyed hash of `(secret seed, speaker, split)`.
//! The draw is reproducible and independent of processing order, and the
//! enrolment and test sides of the same speaker get unrelated coefficients.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Component, Path, PathBuf};

use hmac::{Hmac, KeyInit, Mac};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dsp::{frame_with_geometry, overlap_add, AudioBuffer, FrameGeometry, ANONYMISATION_RATE_HZ};
use crate::error::{Error, Result};
use crate::io::{read_wav, write_wav, Manifest, ManifestRow};
use crate::lpc::{fit_lpc, synthesize, LpcModel, DEFAULT_ORDER};
use crate::mcadams::{warp_poleset, McAdamsCoefficient};
use crate::poles::{coeffs_from_poles, poles_from_coeffs};

/// How the coefficient is chosen for a speaker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    Fixed(McAdamsCoefficient),
    Uniform {
        min: McAdamsCoefficient,
        max: McAdamsCoefficient,
    },
}

impl AlphaMode {
    pub fn fixed(alpha: f64) -> Result<Self> {
        Ok(AlphaMode::Fixed(McAdamsCoefficient::new(alpha)?))
    }

    pub fn uniform(min: f64, max: f64) -> Result<Self> {
        let lo = McAdamsCoefficient::new(min)?;
        let hi = McAdamsCoefficient::new(max)?;
        if lo > hi {
            return Err(Error::Config(format!("alpha_min {min} exceeds alpha_max {max}")));
        }
        Ok(AlphaMode::Uniform { min: lo, max: hi })
    }

    pub fn contains(&self, alpha: McAdamsCoefficient) -> bool {
        match *self {
            AlphaMode::Fixed(a) => a == alpha,
            AlphaMode::Uniform { min, max } => {
                min <= alpha && (alpha < max || (min == max && alpha == max))
            }
        }
    }
}

impl fmt::Display for AlphaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaMode::Fixed(a) => write!(f, "fixed({a})"),
            AlphaMode::Uniform { min, max } => write!(f, "uniform({min},{max})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnonymisationConfig {
    pub mode: AlphaMode,
    pub lpc_order: usize,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub secret_seed: Vec<u8>,
    /// Split label mixed into the coefficient draw. Empty means "not bound
    /// to a split"; the corpus runner fills it in from the manifest.
    pub split: String,
}

impl Default for AnonymisationConfig {
    /// Fixed alpha = 0.8, order 20, 20 ms frames with a 10 ms hop.
    fn default() -> Self {
        Self {
            mode: AlphaMode::Fixed(McAdamsCoefficient::BASELINE),
            lpc_order: DEFAULT_ORDER,
            frame_ms: 20.0,
            hop_ms: 10.0,
            secret_seed: Vec::new(),
            split: String::new(),
        }
    }
}

impl AnonymisationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lpc_order < 2 {
            return Err(Error::Config(format!("lpc_order {} is below 2", self.lpc_order)));
        }
        let geometry = self.geometry()?;
        if geometry.frame_len <= self.lpc_order {
            return Err(Error::Config(format!(
                "{} ms frames hold {} samples, too few for order {}",
                self.frame_ms, geometry.frame_len, self.lpc_order
            )));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<FrameGeometry> {
        FrameGeometry::from_ms(self.frame_ms, self.hop_ms, ANONYMISATION_RATE_HZ)
    }

    pub fn with_split(&self, split: impl Into<String>) -> Self {
        Self {
            split: split.into(),
            ..self.clone()
        }
    }

    pub fn seed_digest(&self) -> String {
        hex::encode(&Sha256::digest(&self.secret_seed)[..8])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub mode: AlphaMode,
    pub seed_digest: String,
    pub split: String,
}

/// A speaker's resolved coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerContext {
    pub speaker_id: String,
    pub alpha: McAdamsCoefficient,
    pub provenance: Provenance,
}

impl SpeakerContext {
    /// Context for a known coefficient, bypassing the keyed draw.
    pub fn with_alpha(speaker_id: impl Into<String>, alpha: McAdamsCoefficient) -> Self {
        Self {
            speaker_id: speaker_id.into(),
            alpha,
            provenance: Provenance {
                mode: AlphaMode::Fixed(alpha),
                seed_digest: String::new(),
                split: String::new(),
            },
        }
    }
}

/// Maps `(seed, speaker, split)` to `[0, 1)` with HMAC-SHA256.
pub fn keyed_unit(seed: &[u8], speaker_id: &str, split: &str) -> f64 {
    let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(seed).expect("HMAC takes keys of any length");
    for part in [speaker_id.as_bytes(), split.as_bytes()] {
        mac.update(&(part.len() as u64).to_le_bytes());
        mac.update(part);
    }
    let tag = mac.finalize().into_bytes();
    let word = u64::from_le_bytes(tag[..8].try_into().expect("8 bytes"));
    (word >> 11) as f64 / (1u64 << 53) as f64
}

pub fn sample_alpha(config: &AnonymisationConfig, speaker_id: &str) -> Result<SpeakerContext> {
    let alpha = match config.mode {
        AlphaMode::Fixed(a) => a,
        AlphaMode::Uniform { min, max } => {
            let u = keyed_unit(&config.secret_seed, speaker_id, &config.split);
            let (lo, hi) = (min.value(), max.value());
            let mut a = lo + u * (hi - lo);
            if a >= hi && hi > lo {
                // rounding landed on the open end of the interval
                a = f64::from_bits(hi.to_bits() - 1);
            }
            McAdamsCoefficient::new(a)?
        }
    };
    Ok(SpeakerContext {
        speaker_id: speaker_id.to_owned(),
        alpha,
        provenance: Provenance {
            mode: config.mode,
            seed_digest: config.seed_digest(),
            split: config.split.clone(),
        },
    })
}

/// One frame through analysis, warp and resynthesis.
#[derive(Debug, Clone)]
pub struct WarpedFrame {
    pub analysis: LpcModel,
    pub warped_coeffs: Vec<f64>,
    pub output: Vec<f64>,
}

pub fn warp_frame(frame: &[f64], order: usize, alpha: McAdamsCoefficient) -> Result<WarpedFrame> {
    let analysis = fit_lpc(frame, order)?;
    if analysis.passthrough {
        return Ok(WarpedFrame {
            warped_coeffs: analysis.coeffs.clone(),
            output: frame.to_vec(),
            analysis,
        });
    }
    let poles = poles_from_coeffs(&analysis.coeffs)?;
    let warped_coeffs = coeffs_from_poles(&warp_poleset(&poles, alpha));
    let mut output = synthesize(&warped_coeffs, &analysis.residual)?;
    match_energy(&mut output, frame);
    Ok(WarpedFrame {
        analysis,
        warped_coeffs,
        output,
    })
}

/// Rescales `output` to the energy of `reference`.
///
/// Spare LPC poles sit on a near-uniform ring where they almost cancel; the
/// warp breaks that spacing and can raise a frame's gain by tens of dB.
fn match_energy(output: &mut [f64], reference: &[f64]) {
    let target: f64 = reference.iter().map(|x| x * x).sum();
    let actual: f64 = output.iter().map(|x| x * x).sum();
    if actual > 0.0 && target > 0.0 {
        let gain = (target / actual).sqrt();
        output.iter_mut().for_each(|x| *x *= gain);
    }
}

/// Anonymises one 16 kHz utterance with the coefficient in `ctx`.
///
/// Each resynthesised frame is scaled back to the energy of the analysed
/// frame before overlap-add. The output has the input's length and is scaled
/// down as a whole only if some sample would exceed full scale.
pub fn anonymise_utterance(
    audio: &AudioBuffer,
    ctx: &SpeakerContext,
    config: &AnonymisationConfig,
) -> Result<AudioBuffer> {
    audio.check_anonymisable()?;
    config.validate()?;
    let stream = frame_with_geometry(&audio.samples, config.geometry()?, audio.sample_rate_hz);
    let frames = stream
        .frames
        .iter()
        .enumerate()
        .map(|(k, frame)| {
            warp_frame(frame, config.lpc_order, ctx.alpha)
                .map(|w| w.output)
                .map_err(|e| match e {
                    Error::Numeric(m) => Error::Numeric(format!("frame {k}: {m}")),
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = overlap_add(&stream.with_frames(frames), audio.len())?;
    let peak = out.peak();
    if peak > 1.0 {
        out.samples.iter_mut().for_each(|x| *x /= peak);
    }
    Ok(out)
}

/// Per-split configurations for corpus runs.
///
/// A row uses the config whose `split` equals the row's split, or else the
/// single unbound config (empty `split`) relabelled with the row's split.
#[derive(Debug, Clone, Default)]
pub struct SplitConfigs {
    configs: Vec<AnonymisationConfig>,
}

impl SplitConfigs {
    pub fn new(configs: Vec<AnonymisationConfig>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &configs {
            c.validate()?;
            if !seen.insert(c.split.as_str()) {
                return Err(Error::Config(if c.split.is_empty() {
                    "more than one config without a split label".to_owned()
                } else {
                    format!("more than one config for split {:?}", c.split)
                }));
            }
        }
        Ok(Self { configs })
    }

    pub fn for_split(&self, split: &str) -> Option<AnonymisationConfig> {
        self.configs
            .iter()
            .find(|c| c.split == split)
            .cloned()
            .or_else(|| {
                self.configs
                    .iter()
                    .find(|c| c.split.is_empty())
                    .map(|c| c.with_split(split))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UtteranceStatus {
    Ok,
    IoFailed(String),
    ProcessingFailed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceReport {
    pub utterance_id: String,
    pub speaker_id: String,
    pub split: String,
    pub alpha: McAdamsCoefficient,
    pub output: PathBuf,
    pub status: UtteranceStatus,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusReport {
    pub utterances: Vec<UtteranceReport>,
}

impl CorpusReport {
    pub fn all_ok(&self) -> bool {
        self.utterances.iter().all(|u| u.status == UtteranceStatus::Ok)
    }

    pub fn any_io_failure(&self) -> bool {
        self.utterances
            .iter()
            .any(|u| matches!(u.status, UtteranceStatus::IoFailed(_)))
    }

    /// `utterance_id,speaker_id,split,alpha,status,output,message`, alpha
    /// shown only when `reveal_alpha` is set.
    pub fn to_csv(&self, reveal_alpha: bool) -> String {
        let mut out = String::from("utterance_id,speaker_id,split,alpha,status,output,message\n");
        for u in &self.utterances {
            let (status, message) = match &u.status {
                UtteranceStatus::Ok => ("ok", String::new()),
                UtteranceStatus::IoFailed(m) => ("io-error", m.clone()),
                UtteranceStatus::ProcessingFailed(m) => ("processing-error", m.clone()),
            };
            out.push_str(&csv_line(&[
                &u.utterance_id,
                &u.speaker_id,
                &u.split,
                &alpha_field(u.alpha, reveal_alpha),
                status,
                &u.output.display().to_string(),
                &message,
            ]));
        }
        out
    }

    /// One line per `(speaker, split)`: `speaker_id,split,alpha`.
    pub fn speakers_csv(&self, reveal_alpha: bool) -> String {
        let mut seen = HashSet::new();
        let mut out = String::from("speaker_id,split,alpha\n");
        for u in &self.utterances {
            if seen.insert((&u.speaker_id, &u.split)) {
                out.push_str(&csv_line(&[&u.speaker_id, &u.split, &alpha_field(u.alpha, reveal_alpha)]));
            }
        }
        out
    }
}

fn alpha_field(alpha: McAdamsCoefficient, reveal: bool) -> String {
    if reveal {
        alpha.to_string()
    } else {
        "redacted".to_owned()
    }
}

pub(crate) fn csv_line(fields: &[&str]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n', '\r']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                (*f).to_owned()
            }
        })
        .collect();
    let mut line = quoted.join(",");
    line.push('\n');
    line
}

/// Where a manifest row's output goes: its relative path mirrored under
/// `outdir`, or `outdir/<utterance_id>.wav` when the path is absolute or
/// climbs out of the manifest directory.
pub fn output_path(outdir: &Path, row: &ManifestRow) -> PathBuf {
    let mirrored = !row.path.as_os_str().is_empty()
        && row.path.components().all(|c| matches!(c, Component::Normal(_)));
    if mirrored {
        return outdir.join(&row.path);
    }
    let mut name: String = row
        .utterance_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    if name.starts_with('.') {
        name.insert(0, '_');
    }
    outdir.join(format!("{name}.wav"))
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusOptions {
    /// Worker threads; 1 processes rows serially in manifest order.
    pub jobs: usize,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self { jobs: 1 }
    }
}

pub(crate) fn worker_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

/// Anonymises every manifest row into `outdir`.
///
/// Aborts before touching any file if a split has no config or two rows map
/// to the same output path. Per-row read, processing and write failures are
/// recorded in the report and the run continues.
pub fn anonymise_corpus(
    manifest: &Manifest,
    configs: &SplitConfigs,
    outdir: &Path,
    options: CorpusOptions,
) -> Result<CorpusReport> {
    let mut outputs = HashSet::new();
    let mut contexts: HashMap<(&str, &str), (AnonymisationConfig, SpeakerContext)> = HashMap::new();
    let mut jobs = Vec::with_capacity(manifest.rows.len());
    for row in &manifest.rows {
        let out = output_path(outdir, row);
        if !outputs.insert(out.clone()) {
            return Err(Error::Structural(format!(
                "two manifest rows map to output {}",
                out.display()
            )));
        }
        let key = (row.speaker_id.as_str(), row.split.as_str());
        if let Entry::Vacant(slot) = contexts.entry(key) {
            let config = configs.for_split(&row.split).ok_or_else(|| {
                Error::Config(format!("no configuration for split {:?}", row.split))
            })?;
            let ctx = sample_alpha(&config, &row.speaker_id)?;
            slot.insert((config, ctx));
        }
        jobs.push((row, out));
    }

    let pool = worker_pool(options.jobs)?;
    let utterances = pool.install(|| {
        jobs.par_iter()
            .map(|(row, out)| {
                let (config, ctx) = &contexts[&(row.speaker_id.as_str(), row.split.as_str())];
                let status = match process_row(&manifest.resolve(row), out, ctx, config) {
                    Ok(()) => UtteranceStatus::Ok,
                    Err(e @ (Error::Io { .. } | Error::Decode(_) | Error::UnsupportedFormat(_))) => {
                        UtteranceStatus::IoFailed(e.to_string())
                    }
                    Err(e) => UtteranceStatus::ProcessingFailed(e.to_string()),
                };
                UtteranceReport {
                    utterance_id: row.utterance_id.clone(),
                    speaker_id: row.speaker_id.clone(),
                    split: row.split.clone(),
                    alpha: ctx.alpha,
                    output: out.clone(),
                    status,
                }
            })
            .collect()
    });
    Ok(CorpusReport { utterances })
}

fn process_row(
    input: &Path,
    output: &Path,
    ctx: &SpeakerContext,
    config: &AnonymisationConfig,
) -> Result<()> {
    let audio = read_wav(input)?;
    let anonymised = anonymise_utterance(&audio, ctx, config)?;
    if let Some(parent) = output.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_wav(output, &anonymised)
}
