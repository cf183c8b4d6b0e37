use std::fmt::Write;

use super::envelope::{envelope_from_coeffs, EnvelopeCurve};
use crate::anonymizer::AnonymisationConfig;
use crate::dsp::{frame_with_geometry, AudioBuffer};
use crate::error::{Error, Result};
use crate::lpc::fit_lpc;
use crate::mcadams::{angle_to_hz, pow_angle, warp_poleset, McAdamsCoefficient};
use crate::poles::{coeffs_from_poles, poles_from_coeffs, PoleSet};

/// One upper-half-plane (or real) pole and where each coefficient sends it.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleRow {
    pub rho: f64,
    pub phi: f64,
    pub warped_phi: Vec<f64>,
    pub freq_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleTable {
    pub alphas: Vec<McAdamsCoefficient>,
    pub rows: Vec<PoleRow>,
}

impl PoleTable {
    fn build(poles: &PoleSet, alphas: &[McAdamsCoefficient], sample_rate_hz: u32) -> Self {
        let mut rows: Vec<PoleRow> = poles
            .real()
            .iter()
            .map(|p| (p, false))
            .chain(poles.upper().iter().map(|p| (p, true)))
            .map(|(p, complex)| PoleRow {
                rho: p.magnitude,
                phi: p.angle,
                warped_phi: alphas
                    .iter()
                    .map(|a| if complex { pow_angle(p.angle, a.value()) } else { p.angle })
                    .collect(),
                freq_hz: angle_to_hz(p.angle, sample_rate_hz),
            })
            .collect();
        rows.sort_by(|a, b| a.phi.total_cmp(&b.phi).then(a.rho.total_cmp(&b.rho)));
        Self {
            alphas: alphas.to_vec(),
            rows,
        }
    }

    /// `rho,phi,phi_alpha_<a>...,freq_hz`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,phi");
        for a in &self.alphas {
            write!(out, ",phi_alpha_{a}").unwrap();
        }
        out.push_str(",freq_hz\n");
        for r in &self.rows {
            write!(out, "{},{}", r.rho, r.phi).unwrap();
            for w in &r.warped_phi {
                write!(out, ",{w}").unwrap();
            }
            writeln!(out, ",{}", r.freq_hz).unwrap();
        }
        out
    }
}

/// The `frame_index`-th windowed analysis frame under `config`'s geometry.
pub fn analysis_frame(audio: &AudioBuffer, frame_index: usize, config: &AnonymisationConfig) -> Result<Vec<f64>> {
    audio.check_anonymisable()?;
    config.validate()?;
    let stream = frame_with_geometry(&audio.samples, config.geometry()?, audio.sample_rate_hz);
    let count = stream.len();
    stream.frames.into_iter().nth(frame_index).ok_or_else(|| {
        Error::Input(format!("frame {frame_index} requested but the audio has {count} frames"))
    })
}

fn frame_poles(audio: &AudioBuffer, frame_index: usize, config: &AnonymisationConfig) -> Result<(Vec<f64>, PoleSet)> {
    let frame = analysis_frame(audio, frame_index, config)?;
    let model = fit_lpc(&frame, config.lpc_order)?;
    if model.passthrough {
        return Err(Error::Input(format!("frame {frame_index} is silent")));
    }
    let poles = poles_from_coeffs(&model.coeffs)?;
    Ok((model.coeffs, poles))
}

/// Pole positions of one frame and their warped angles for each coefficient.
pub fn dump_poles(
    audio: &AudioBuffer,
    frame_index: usize,
    config: &AnonymisationConfig,
    alphas: &[McAdamsCoefficient],
) -> Result<PoleTable> {
    let (_, poles) = frame_poles(audio, frame_index, config)?;
    Ok(PoleTable::build(&poles, alphas, audio.sample_rate_hz))
}

#[derive(Debug, Clone)]
pub struct FrameAnalysis {
    pub poles: PoleTable,
    pub original: EnvelopeCurve,
    pub warped: Vec<(McAdamsCoefficient, EnvelopeCurve)>,
}

/// Pole table plus the original and per-coefficient warped envelopes of one frame.
pub fn analyze_frame(
    audio: &AudioBuffer,
    frame_index: usize,
    config: &AnonymisationConfig,
    alphas: &[McAdamsCoefficient],
    grid_size: usize,
) -> Result<FrameAnalysis> {
    let (coeffs, poles) = frame_poles(audio, frame_index, config)?;
    let rate = audio.sample_rate_hz;
    let warped = alphas
        .iter()
        .map(|&a| {
            let c = coeffs_from_poles(&warp_poleset(&poles, a));
            Ok((a, envelope_from_coeffs(&c, grid_size, rate)?))
        })
        .collect::<Result<_>>()?;
    Ok(FrameAnalysis {
        poles: PoleTable::build(&poles, alphas, rate),
        original: envelope_from_coeffs(&coeffs, grid_size, rate)?,
        warped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn voiced() -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e: Vec<f64> = (0..3200).map(|_| rng.random_range(-0.01..0.01)).collect();
        let x = crate::lpc::synthesize(&[-1.2, 0.9, -0.3, 0.2], &e).unwrap();
        AudioBuffer::new(x, 16_000)
    }

    fn alphas() -> Vec<McAdamsCoefficient> {
        [0.9, 0.7, 0.5].iter().map(|&a| McAdamsCoefficient::new(a).unwrap()).collect()
    }

    #[test]
    fn pole_table_layout() {
        let t = dump_poles(&voiced(), 5, &AnonymisationConfig::default(), &alphas()).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("rho,phi,phi_alpha_0.9,phi_alpha_0.7,phi_alpha_0.5,freq_hz\n"));
        // 20 poles: every real one plus one row per conjugate pair
        let pairs = t.rows.iter().filter(|r| r.phi > 0.0 && r.phi < std::f64::consts::PI).count();
        assert_eq!(t.rows.len() + pairs, 20);
        assert!(t.rows.windows(2).all(|w| w[0].phi <= w[1].phi));
        for r in &t.rows {
            for w in &r.warped_phi {
                if r.phi > 0.0 && r.phi < std::f64::consts::PI {
                    assert_eq!((w - r.phi).signum(), (1.0 - r.phi).signum());
                }
            }
        }
    }

    #[test]
    fn envelopes_for_each_alpha() {
        let fa = analyze_frame(&voiced(), 5, &AnonymisationConfig::default(), &alphas(), 257).unwrap();
        assert_eq!(fa.warped.len(), 3);
        assert!(fa.original.points.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn bad_frame_requests() {
        let cfg = AnonymisationConfig::default();
        assert!(dump_poles(&voiced(), 500, &cfg, &alphas()).is_err());
        let silent = AudioBuffer::new(vec![0.0; 3200], 16_000);
        assert!(dump_poles(&silent, 2, &cfg, &alphas()).is_err());
    }
}
