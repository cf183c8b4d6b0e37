use crate::dsp::{frame_with_geometry, AudioBuffer, FrameGeometry};
use crate::error::{Error, Result};
use crate::lpc::{fit_lpc, DEFAULT_ORDER};

/// Dimension of [`SpeakerEmbedding`].
pub const CEPSTRAL_ORDER: usize = 20;

/// Mean LPC cepstrum over the voiced frames of an utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerEmbedding(pub Vec<f64>);

/// Cepstrum `c_1..c_n` of the all-pole model `1 / A(z)`:
/// `c_m = -a_m - (1/m) sum_{k=1}^{m-1} k c_k a_{m-k}`, with `a_m = 0` past the order.
pub fn lpc_to_cepstrum(coeffs: &[f64], n: usize) -> Vec<f64> {
    let a = |m: usize| coeffs.get(m - 1).copied().unwrap_or(0.0);
    let mut c: Vec<f64> = Vec::with_capacity(n);
    for m in 1..=n {
        let acc: f64 = (1..m).map(|k| k as f64 * c[k - 1] * a(m - k)).sum();
        c.push(-a(m) - acc / m as f64);
    }
    c
}

/// 20 ms / 10 ms framing, order-20 LPC per voiced frame, cepstra averaged.
pub fn embed_utterance(audio: &AudioBuffer) -> Result<SpeakerEmbedding> {
    let hop = (audio.sample_rate_hz / 100) as usize;
    let geometry = FrameGeometry::new(2 * hop, hop)?;
    let stream = frame_with_geometry(&audio.samples, geometry, audio.sample_rate_hz);
    let mut sum = vec![0.0; CEPSTRAL_ORDER];
    let mut voiced = 0usize;
    for frame in &stream.frames {
        let model = fit_lpc(frame, DEFAULT_ORDER)?;
        if model.passthrough {
            continue;
        }
        for (s, c) in sum.iter_mut().zip(lpc_to_cepstrum(&model.coeffs, CEPSTRAL_ORDER)) {
            *s += c;
        }
        voiced += 1;
    }
    if voiced == 0 {
        return Err(Error::Input("utterance has no voiced frames".into()));
    }
    Ok(SpeakerEmbedding(sum.into_iter().map(|s| s / voiced as f64).collect()))
}

/// Cosine of the angle between two vectors; 0 if either is all zeros.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rustfft::{num_complex::Complex64, FftPlanner};
    use std::f64::consts::PI;

    #[test]
    fn first_order_base_case() {
        let c = lpc_to_cepstrum(&[-0.6], 3);
        assert_eq!(c[0], 0.6);
        // -ln(1 + a z^-1) = sum (-1)^m a^m / m
        assert!((c[1] - 0.36 / 2.0).abs() < 1e-15);
        assert!((c[2] - 0.216 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn recursion_matches_fft_cepstrum() {
        // real cepstrum of log|1/A| equals c_m / 2 for a minimum-phase model
        let coeffs = [-1.2, 0.9, -0.3, 0.2, -0.05];
        let n = 4096;
        let mut spec: Vec<Complex64> = (0..n)
            .map(|i| {
                let w = 2.0 * PI * i as f64 / n as f64;
                let a: Complex64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c * Complex64::from_polar(1.0, -w * (k + 1) as f64))
                    .sum::<Complex64>()
                    + 1.0;
                Complex64::new(-a.norm().ln(), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
        let c = lpc_to_cepstrum(&coeffs, 20);
        for m in 1..=20 {
            assert!((2.0 * spec[m].re / n as f64 - c[m - 1]).abs() < 1e-10, "c_{m}");
        }
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]), 0.0);
        assert!((cosine_similarity(&[1.0, 2.0], &[-2.0, -4.0]) + 1.0).abs() < 1e-15);
    }

    fn ar_signal(coeffs: &[f64], seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e: Vec<f64> = (0..16_000).map(|_| rng.random_range(-0.01..0.01)).collect();
        AudioBuffer::new(crate::lpc::synthesize(coeffs, &e).unwrap(), 16_000)
    }

    #[test]
    fn same_process_scores_higher() {
        let p = [-1.2, 0.9, -0.3, 0.2];
        // poles 0.9 e^{+-j2.0}
        let q = [-2.0 * 0.9 * 2.0f64.cos(), 0.81];
        let a1 = embed_utterance(&ar_signal(&p, 1)).unwrap();
        let a2 = embed_utterance(&ar_signal(&p, 2)).unwrap();
        let b = embed_utterance(&ar_signal(&q, 3)).unwrap();
        assert_eq!(a1, embed_utterance(&ar_signal(&p, 1)).unwrap());
        assert!(cosine_similarity(&a1.0, &a2.0) > cosine_similarity(&a1.0, &b.0));
        assert_eq!(a1.0.len(), CEPSTRAL_ORDER);
    }

    #[test]
    fn silence_cannot_be_embedded() {
        assert!(embed_utterance(&AudioBuffer::new(vec![0.0; 1600], 16_000)).is_err());
    }
}
