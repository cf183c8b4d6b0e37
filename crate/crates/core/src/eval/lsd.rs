use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dsp::{frame_with_geometry, AudioBuffer, FrameGeometry};
use crate::error::{Error, Result};
use crate::lpc::SILENCE_THRESHOLD;

/// Log-magnitudes are floored here before differencing.
pub const LSD_FLOOR_DB: f64 = -100.0;

fn energy(frame: &[f64]) -> f64 {
    frame.iter().map(|x| x * x).sum()
}

/// Mean over frames of the RMS difference (dB) between the two log-magnitude
/// spectra.
///
/// Only frames lying wholly inside `[hop, len)` are compared: the leading
/// hop is never fully reconstructed by overlap-add. A frame counts if either
/// signal is above the silence threshold there; with no such frame the
/// distortion is 0.
pub fn log_spectral_distortion(original: &AudioBuffer, processed: &AudioBuffer) -> Result<f64> {
    if original.len() != processed.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} vs {} samples",
            original.len(),
            processed.len()
        )));
    }
    if original.sample_rate_hz != processed.sample_rate_hz {
        return Err(Error::Input(format!(
            "sample rate mismatch: {} vs {} Hz",
            original.sample_rate_hz, processed.sample_rate_hz
        )));
    }
    let hop = (original.sample_rate_hz / 100) as usize;
    let geometry = FrameGeometry::new(2 * hop, hop)?;
    let a = frame_with_geometry(&original.samples, geometry, original.sample_rate_hz);
    let b = frame_with_geometry(&processed.samples, geometry, processed.sample_rate_hz);

    let n = geometry.frame_len;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let log_spectrum = |frame: &[f64]| -> Vec<f64> {
        let mut buf: Vec<Complex64> = frame.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft.process(&mut buf);
        buf[..bins]
            .iter()
            .map(|z| (10.0 * z.norm_sqr().log10()).max(LSD_FLOOR_DB))
            .collect()
    };

    let mut total = 0.0;
    let mut counted = 0usize;
    let interior = a
        .frames
        .iter()
        .zip(&b.frames)
        .enumerate()
        .filter(|(k, _)| *k >= 1 && k * hop + n <= original.len());
    for (_, (fa, fb)) in interior {
        if energy(fa) < SILENCE_THRESHOLD && energy(fb) < SILENCE_THRESHOLD {
            continue;
        }
        let sa = log_spectrum(fa);
        let sb = log_spectrum(fb);
        let mse = sa.iter().zip(&sb).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / bins as f64;
        total += mse.sqrt();
        counted += 1;
    }
    Ok(if counted == 0 { 0.0 } else { total / counted as f64 })
}
