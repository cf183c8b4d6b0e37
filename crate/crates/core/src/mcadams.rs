//! Pole-angle warping by the McAdams coefficient.
//!
//! Every complex pole `rho * e^{j phi}` with `phi` in `(0, pi)` moves to
//! `rho * e^{j phi^alpha}` and its conjugate follows. Real poles and all
//! magnitudes are untouched, so stability and conjugate closure carry over.
//! `phi = 1` rad is a fixed point: for `alpha < 1`, angles below it move up
//! and angles above it move down.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::poles::{Pole, PoleSet};

/// The exponent applied to pole angles, restricted to `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct McAdamsCoefficient(f64);

impl McAdamsCoefficient {
    pub const IDENTITY: Self = Self(1.0);

    /// Fixed coefficient of the original signal-processing baseline.
    pub const BASELINE: Self = Self(0.8);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::Config(format!(
                "McAdams coefficient must lie in (0, 1], got {alpha}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for McAdamsCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `phi^exponent` with no range checks. The anonymiser only ever uses
/// exponents in `(0, 1]`; anything above 1 inverts a previous warp.
pub fn pow_angle(phi: f64, exponent: f64) -> f64 {
    phi.powf(exponent)
}

/// Warps an upper-half-plane angle, `0 < phi < pi`.
pub fn warp_angle(phi: f64, alpha: McAdamsCoefficient) -> Result<f64> {
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::Structural(format!(
            "angle {phi} is outside (0, pi); real-axis poles are not warped"
        )));
    }
    Ok(pow_angle(phi, alpha.0))
}

/// Applies the warp to every complex pair of `poles`.
pub fn warp_poleset(poles: &PoleSet, alpha: McAdamsCoefficient) -> PoleSet {
    if alpha == McAdamsCoefficient::IDENTITY {
        return poles.clone();
    }
    let warped = poles.map_upper(|p| Pole::new(p.magnitude, pow_angle(p.angle, alpha.0)));
    debug_assert!(warped.upper().iter().all(|p| p.angle > 0.0 && p.angle < PI));
    warped
}

/// Linear map from pole angle to frequency: `pi` is Nyquist.
pub fn angle_to_hz(phi: f64, sample_rate_hz: u32) -> f64 {
    phi * f64::from(sample_rate_hz) / (2.0 * PI)
}

pub fn hz_to_angle(hz: f64, sample_rate_hz: u32) -> f64 {
    hz * 2.0 * PI / f64::from(sample_rate_hz)
}
