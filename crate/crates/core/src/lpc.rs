//! Autocorrelation LPC analysis and all-pole resynthesis.
//!
//! The model is `A(z) = 1 + a_1 z^-1 + ... + a_p z^-p`. Residual extraction and
//! synthesis both start from a zero filter state, so each frame is processed
//! independently and `synthesize(m.coeffs, m.residual)` reproduces the frame.

use crate::error::{Error, Result};

/// Frames whose zero-lag autocorrelation falls below this are treated as silence.
pub const SILENCE_THRESHOLD: f64 = 1e-12;

/// Relative diagonal loading added to `r[0]` before the recursion.
pub const DIAGONAL_LOADING: f64 = 1e-9;

/// Default analysis order.
pub const DEFAULT_ORDER: usize = 20;

/// Prediction coefficients `a_1..a_p` plus the residual of the analysed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcModel {
    pub coeffs: Vec<f64>,
    pub residual: Vec<f64>,
    /// Set for silent frames: coefficients are all zero and the residual is
    /// the frame itself.
    pub passthrough: bool,
}

impl LpcModel {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    fn identity(frame: &[f64], order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order],
            residual: frame.to_vec(),
            passthrough: true,
        }
    }
}

/// Output of the Levinson-Durbin recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct Levinson {
    pub coeffs: Vec<f64>,
    pub reflection: Vec<f64>,
    pub prediction_error: f64,
}

/// Biased autocorrelation `r[k] = sum_n x[n] x[n-k]` for lags `0..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|lag| {
            if lag >= x.len() {
                return 0.0;
            }
            x[lag..].iter().zip(x).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// Solves the normal equations for `A(z)` from autocorrelations `r[0..=order]`.
///
/// Fails if `r[0]` is not positive or a reflection coefficient leaves `(-1, 1)`,
/// which only happens when the autocorrelation is not positive definite.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<Levinson> {
    if r.len() <= order {
        return Err(Error::Structural(format!(
            "need {} autocorrelation lags, got {}",
            order + 1,
            r.len()
        )));
    }
    if !(r[0] > 0.0) || r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("invalid autocorrelation r[0] = {}", r[0])));
    }

    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut reflection = Vec::with_capacity(order);
    let mut err = r[0];

    for i in 0..order {
        let acc = r[i + 1] + (0..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = -acc / err;
        if !(k.abs() < 1.0) {
            return Err(Error::Numeric(format!(
                "reflection coefficient {k} at stage {} is outside (-1, 1)",
                i + 1
            )));
        }
        prev[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = prev[j] + k * prev[i - 1 - j];
        }
        a[i] = k;
        reflection.push(k);
        err *= 1.0 - k * k;
    }

    Ok(Levinson {
        coeffs: a,
        reflection,
        prediction_error: err,
    })
}

/// Fits an order-`order` model to a (windowed) frame by the autocorrelation
/// method. Silent frames come back as a flagged identity model.
pub fn fit_lpc(frame: &[f64], order: usize) -> Result<LpcModel> {
    if frame.len() <= order {
        return Err(Error::Config(format!(
            "frame of {} samples is too short for LPC order {order}",
            frame.len()
        )));
    }
    if frame.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite sample in analysis frame".into()));
    }
    let mut r = autocorrelation(frame, order);
    if r[0] < SILENCE_THRESHOLD {
        return Ok(LpcModel::identity(frame, order));
    }
    r[0] *= 1.0 + DIAGONAL_LOADING;
    let fit = levinson_durbin(&r, order)?;
    debug_assert!(fit.reflection.iter().all(|k| k.abs() < 1.0));
    let residual = inverse_filter(&fit.coeffs, frame);
    Ok(LpcModel {
        coeffs: fit.coeffs,
        residual,
        passthrough: false,
    })
}

/// FIR prediction-error filter: `e[n] = x[n] + sum_k a_k x[n-k]`, zero history.
pub fn inverse_filter(coeffs: &[f64], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| {
            let past: f64 = coeffs
                .iter()
                .zip(x[..n].iter().rev())
                .map(|(a, xp)| a * xp)
                .sum();
            x[n] + past
        })
        .collect()
}

/// All-pole synthesis `y[n] = e[n] - sum_k a_k y[n-k]` from a zero state.
pub fn synthesize(coeffs: &[f64], residual: &[f64]) -> Result<Vec<f64>> {
    if let Some(a) = coeffs.iter().find(|a| !a.is_finite()) {
        return Err(Error::Numeric(format!("non-finite coefficient {a}")));
    }
    let mut out: Vec<f64> = Vec::with_capacity(residual.len());
    for (n, e) in residual.iter().enumerate() {
        let fed: f64 = coeffs
            .iter()
            .zip(out.iter().rev())
            .map(|(a, yp)| a * yp)
            .sum();
        let y = e - fed;
        if !y.is_finite() {
            return Err(Error::Numeric(format!("synthesis diverged at sample {n}")));
        }
        out.push(y);
    }
    Ok(out)
}
