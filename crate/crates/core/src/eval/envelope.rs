use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poles::PoleSet;

/// `(frequency Hz, magnitude dB)` on a uniform grid from 0 to Nyquist.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCurve {
    pub points: Vec<(f64, f64)>,
}

impl EnvelopeCurve {
    /// Grid point with the largest magnitude.
    pub fn peak(&self) -> (f64, f64) {
        self.points
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0.0, 0.0))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,mag_db\n");
        for (f, m) in &self.points {
            out.push_str(&format!("{f},{m}\n"));
        }
        out
    }
}

fn grid(grid_size: usize, sample_rate_hz: u32) -> Result<impl Iterator<Item = (f64, f64)>> {
    if grid_size < 2 {
        return Err(Error::Config(format!("envelope grid needs at least 2 points, got {grid_size}")));
    }
    let nyquist = f64::from(sample_rate_hz) / 2.0;
    Ok((0..grid_size).map(move |i| {
        let t = i as f64 / (grid_size - 1) as f64;
        (t * PI, t * nyquist)
    }))
}

fn to_db(magnitude: f64, omega: f64) -> Result<f64> {
    if !(magnitude > 0.0) || !magnitude.is_finite() {
        return Err(Error::Numeric(format!(
            "|A| = {magnitude} at omega = {omega}; pole on the unit circle"
        )));
    }
    // + 0.0 folds -0 into 0
    Ok(-20.0 * magnitude.log10() + 0.0)
}

/// `-20 log10 |A(e^{jw})|` from the direct-form coefficients.
pub fn envelope_from_coeffs(coeffs: &[f64], grid_size: usize, sample_rate_hz: u32) -> Result<EnvelopeCurve> {
    if coeffs.iter().any(|a| !a.is_finite()) {
        return Err(Error::Numeric("non-finite coefficient".into()));
    }
    let points = grid(grid_size, sample_rate_hz)?
        .map(|(omega, hz)| {
            let a: Complex64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * Complex64::from_polar(1.0, -omega * (k + 1) as f64))
                .sum::<Complex64>()
                + 1.0;
            Ok((hz, to_db(a.norm(), omega)?))
        })
        .collect::<Result<_>>()?;
    Ok(EnvelopeCurve { points })
}

/// Same curve evaluated from the factored form `prod |1 - p e^{-jw}|`.
pub fn envelope_from_poles(poles: &PoleSet, grid_size: usize, sample_rate_hz: u32) -> Result<EnvelopeCurve> {
    let points = grid(grid_size, sample_rate_hz)?
        .map(|(omega, hz)| {
            let e = Complex64::from_polar(1.0, -omega);
            let magnitude: f64 = poles
                .iter()
                .map(|p| (Complex64::new(1.0, 0.0) - p.to_complex() * e).norm())
                .product();
            Ok((hz, to_db(magnitude, omega)?))
        })
        .collect::<Result<_>>()?;
    Ok(EnvelopeCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_8;
    use crate::mcadams::{warp_poleset, McAdamsCoefficient};
    use crate::poles::{coeffs_from_poles, poles_from_coeffs, Pole};

    fn nearest_grid_hz(curve: &EnvelopeCurve, hz: f64) -> f64 {
        curve
            .points
            .iter()
            .map(|p| p.0)
            .min_by(|a, b| (a - hz).abs().total_cmp(&(b - hz).abs()))
            .unwrap()
    }

    #[test]
    fn flat_for_identity() {
        let c = envelope_from_coeffs(&[], 64, 16_000).unwrap();
        assert_eq!(c.points.len(), 64);
        assert!(c.points.iter().all(|p| p.1 == 0.0));
        assert_eq!(c.points[0].0, 0.0);
        assert_eq!(c.points[63].0, 8000.0);
        assert!(c.points.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn resonator_peak_and_warped_peak() {
        // 1 Hz grid resolution; resonance of a conjugate pair sits where
        // cos(w) = (1 + r^2) / (2 r) cos(theta)
        let resonance_hz = |r: f64, theta: f64| {
            ((1.0 + r * r) / (2.0 * r) * theta.cos()).acos() * 16_000.0 / (2.0 * PI)
        };
        let poles = PoleSet::from_parts(vec![], vec![Pole::new(0.95, FRAC_PI_8)]).unwrap();
        let curve = envelope_from_coeffs(&coeffs_from_poles(&poles), 8001, 16_000).unwrap();
        let expected = resonance_hz(0.95, FRAC_PI_8);
        assert_eq!(curve.peak().0, nearest_grid_hz(&curve, expected));
        assert!((curve.peak().0 - 1000.0).abs() < 10.0);

        let alpha = McAdamsCoefficient::new(0.8).unwrap();
        let warped = warp_poleset(&poles, alpha);
        let curve = envelope_from_coeffs(&coeffs_from_poles(&warped), 8001, 16_000).unwrap();
        let expected = resonance_hz(0.95, FRAC_PI_8.powf(0.8));
        assert_eq!(curve.peak().0, nearest_grid_hz(&curve, expected));
        assert!((curve.peak().0 - 1205.0).abs() < 10.0);
    }

    #[test]
    fn coefficient_and_pole_paths_agree() {
        let poles = poles_from_coeffs(&[-1.2, 0.9, -0.3, 0.2, -0.05]).unwrap();
        for a in [1.0, 0.9, 0.7, 0.5] {
            let warped = warp_poleset(&poles, McAdamsCoefficient::new(a).unwrap());
            let from_coeffs = envelope_from_coeffs(&coeffs_from_poles(&warped), 257, 16_000).unwrap();
            let from_poles = envelope_from_poles(&warped, 257, 16_000).unwrap();
            for (x, y) in from_coeffs.points.iter().zip(&from_poles.points) {
                assert_eq!(x.0, y.0);
                assert!((x.1 - y.1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unit_circle_pole_is_numeric_error() {
        // A(z) = 1 - z^-1 vanishes at w = 0
        assert!(matches!(envelope_from_coeffs(&[-1.0], 16, 16_000), Err(Error::Numeric(_))));
        assert!(matches!(envelope_from_coeffs(&[], 1, 16_000), Err(Error::Config(_))));
    }

    #[test]
    fn csv_layout() {
        let c = envelope_from_coeffs(&[], 3, 16_000).unwrap();
        assert_eq!(c.to_csv(), "freq_hz,mag_db\n0,0\n4000,0\n8000,0\n");
    }
}
