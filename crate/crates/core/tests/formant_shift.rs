use std::f64::consts::PI;

use mcadams_core::{anonymise_utterance, synthesize, AnonymisationConfig, AudioBuffer, McAdamsCoefficient, SpeakerContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex64, FftPlanner};

const FS: f64 = 16_000.0;

/// Box-Muller standard normal.
fn gaussian(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

fn resonator(freqs_hz: &[f64], rho: f64, seed: u64) -> AudioBuffer {
    // product of second-order sections
    let mut a = vec![1.0];
    for f in freqs_hz {
        let section = [1.0, -2.0 * rho * (2.0 * PI * f / FS).cos(), rho * rho];
        let mut next = vec![0.0; a.len() + 2];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in section.iter().enumerate() {
                next[i + j] += x * y;
            }
        }
        a = next;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e: Vec<f64> = (0..32_000).map(|_| gaussian(&mut rng)).collect();
    let mut x = synthesize(&a[1..], &e).unwrap();
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x.iter_mut().for_each(|v| *v *= 0.5 / peak);
    AudioBuffer::new(x, FS as u32)
}

/// Welch power spectrum with 2048-point Hann segments, 50% overlap.
fn welch(x: &[f64]) -> Vec<f64> {
    let n = 2048;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let w: Vec<f64> = (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect();
    let mut acc = vec![0.0; n / 2 + 1];
    let mut start = 0;
    while start + n <= x.len() {
        let mut buf: Vec<Complex64> = (0..n).map(|i| Complex64::new(x[start + i] * w[i], 0.0)).collect();
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        start += n / 2;
    }
    acc
}

/// Frequency of the strongest bin in `[lo, hi]` Hz, refined by a parabola through log power.
fn peak_hz(x: &[f64], lo: f64, hi: f64) -> f64 {
    let p = welch(x);
    let bin = FS / 2048.0;
    let (k, _) = p
        .iter()
        .enumerate()
        .filter(|(k, _)| (*k as f64 * bin) >= lo && (*k as f64 * bin) <= hi)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let (l, c, r) = (p[k - 1].ln(), p[k].ln(), p[k + 1].ln());
    let offset = 0.5 * (l - r) / (l - 2.0 * c + r);
    (k as f64 + offset) * bin
}

fn warped_hz(f: f64, alpha: f64) -> f64 {
    let phi = 2.0 * PI * f / FS;
    (alpha * phi.ln()).exp() * FS / (2.0 * PI)
}

fn anonymise(audio: &AudioBuffer, alpha: f64) -> AudioBuffer {
    let ctx = SpeakerContext::with_alpha("s", McAdamsCoefficient::new(alpha).unwrap());
    anonymise_utterance(audio, &ctx, &AnonymisationConfig::default()).unwrap()
}

#[test]
fn baseline_moves_1000_hz_resonance_to_1205_hz() {
    let audio = resonator(&[1000.0], 0.97, 1);
    let expected = warped_hz(1000.0, 0.8);
    assert!((expected - 1205.3).abs() < 0.5, "oracle gave {expected}");
    let before = peak_hz(&audio.samples, 200.0, 4000.0);
    assert!((before - 1000.0).abs() < 30.0, "input peak at {before}");
    let after = peak_hz(&anonymise(&audio, 0.8).samples, 200.0, 4000.0);
    assert!((after - expected).abs() <= 30.0, "peak at {after}, expected {expected}");
}

#[test]
fn resonances_either_side_of_one_radian_move_towards_it() {
    let pivot = FS / (2.0 * PI);
    let audio = resonator(&[1000.0, 5000.0], 0.97, 2);
    for alpha in [0.9, 0.7, 0.5] {
        let out = anonymise(&audio, alpha);
        let low = peak_hz(&out.samples, 200.0, pivot);
        let high = peak_hz(&out.samples, pivot, 7800.0);
        assert!(low > 1000.0 + 30.0, "alpha {alpha}: low peak {low}");
        assert!(high < 5000.0 - 30.0, "alpha {alpha}: high peak {high}");
        let (el, eh) = (warped_hz(1000.0, alpha), warped_hz(5000.0, alpha));
        assert!((low - el).abs() < 0.05 * el, "alpha {alpha}: low peak {low}, expected {el}");
        assert!((high - eh).abs() < 0.05 * eh, "alpha {alpha}: high peak {high}, expected {eh}");
    }
}
