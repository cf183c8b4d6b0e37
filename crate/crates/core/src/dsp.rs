//! Short-time framing, windowing and overlap-add.
//!
//! Frames are cut with a 50% overlap and a periodic Hann window, which sums
//! to exactly one at that overlap. The window is applied once at analysis
//! and never again at synthesis, so summing unmodified frames reproduces the
//! input everywhere except the leading hop (covered by a single rising half
//! window).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Sample rate the anonymiser operates at.
pub const ANONYMISATION_RATE_HZ: u32 = 16_000;

/// Mono PCM audio with samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Rejects anything that is not 16 kHz audio with finite samples.
    pub fn check_anonymisable(&self) -> Result<()> {
        if self.sample_rate_hz != ANONYMISATION_RATE_HZ {
            return Err(Error::Input(format!(
                "sample rate {} Hz, expected {} Hz",
                self.sample_rate_hz, ANONYMISATION_RATE_HZ
            )));
        }
        if let Some(i) = self.samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!("non-finite sample at index {i}")));
        }
        Ok(())
    }
}

/// Frame length and hop, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGeometry {
    pub frame_len: usize,
    pub hop: usize,
}

impl FrameGeometry {
    /// Converts millisecond durations to sample counts, rejecting anything
    /// that is not a whole number of samples or not a 50% overlap.
    pub fn from_ms(frame_ms: f64, hop_ms: f64, sample_rate_hz: u32) -> Result<Self> {
        let frame_len = ms_to_samples(frame_ms, sample_rate_hz)?;
        let hop = ms_to_samples(hop_ms, sample_rate_hz)?;
        Self::new(frame_len, hop)
    }

    pub fn new(frame_len: usize, hop: usize) -> Result<Self> {
        if hop == 0 || frame_len != 2 * hop {
            return Err(Error::Config(format!(
                "frame length {frame_len} must be twice the hop {hop} (50% overlap)"
            )));
        }
        Ok(Self { frame_len, hop })
    }

    /// Number of frames needed to cover `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        len.div_ceil(self.hop)
    }
}

fn ms_to_samples(ms: f64, sample_rate_hz: u32) -> Result<usize> {
    let exact = ms * f64::from(sample_rate_hz) / 1000.0;
    let rounded = exact.round();
    if !exact.is_finite() || rounded < 1.0 || (exact - rounded).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "{ms} ms is not a whole number of samples at {sample_rate_hz} Hz"
        )));
    }
    Ok(rounded as usize)
}

/// Periodic Hann window: `0.5 - 0.5 cos(2 pi n / N)`.
pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Windowed, overlapping frames of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStream {
    pub frames: Vec<Vec<f64>>,
    pub geometry: FrameGeometry,
    pub window: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl FrameStream {
    pub fn frame_len(&self) -> usize {
        self.geometry.frame_len
    }

    pub fn hop(&self) -> usize {
        self.geometry.hop
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Same geometry and window, different frame contents.
    pub fn with_frames(&self, frames: Vec<Vec<f64>>) -> Self {
        Self {
            frames,
            geometry: self.geometry,
            window: self.window.clone(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// Cuts `audio` into Hann-windowed frames of `frame_ms` with hop `hop_ms`.
pub fn frame_signal(audio: &AudioBuffer, frame_ms: f64, hop_ms: f64) -> Result<FrameStream> {
    let geometry = FrameGeometry::from_ms(frame_ms, hop_ms, audio.sample_rate_hz)?;
    Ok(frame_with_geometry(&audio.samples, geometry, audio.sample_rate_hz))
}

pub fn frame_with_geometry(samples: &[f64], geometry: FrameGeometry, sample_rate_hz: u32) -> FrameStream {
    let window = hann_periodic(geometry.frame_len);
    let frames = (0..geometry.frame_count(samples.len()))
        .map(|k| {
            let start = k * geometry.hop;
            (0..geometry.frame_len)
                .map(|n| samples.get(start + n).copied().unwrap_or(0.0) * window[n])
                .collect()
        })
        .collect();
    FrameStream {
        frames,
        geometry,
        window,
        sample_rate_hz,
    }
}

/// Sums frames back at their hop offsets and truncates to `output_len`.
pub fn overlap_add(frames: &FrameStream, output_len: usize) -> Result<AudioBuffer> {
    let FrameGeometry { frame_len, hop } = frames.geometry;
    let mut out = vec![0.0; output_len];
    for (k, frame) in frames.frames.iter().enumerate() {
        if frame.len() != frame_len {
            return Err(Error::Structural(format!(
                "frame {k} has {} samples, geometry says {frame_len}",
                frame.len()
            )));
        }
        let start = k * hop;
        if start >= output_len {
            break;
        }
        for (o, x) in out[start..].iter_mut().zip(frame) {
            *o += x;
        }
    }
    Ok(AudioBuffer::new(out, frames.sample_rate_hz))
}
