//! Pole extraction from LPC coefficients and the reverse expansion.
//!
//! Roots of `z^p + a_1 z^(p-1) + ... + a_p` are the eigenvalues of its
//! companion matrix. Each root is then polished with a few guarded Newton
//! steps and conjugate pairs are symmetrised, so a [`PoleSet`] is always
//! closed under conjugation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Roots with `|Im| <= REAL_POLE_THRESHOLD` are treated as real.
pub const REAL_POLE_THRESHOLD: f64 = 1e-8;

/// Newton polishing stops once the relative step falls below this.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// Maximum imaginary residue tolerated when expanding a root list to real coefficients.
pub const COEFF_IMAG_TOLERANCE: f64 = 1e-9;

/// Coefficient round-trip bound. Refined roots are used unless they miss
/// it where the unrefined eigenvalues do better.
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-6;

const MAX_POLISH_STEPS: usize = 8;

/// A pole in polar form: magnitude `rho >= 0`, angle `phi` in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub magnitude: f64,
    pub angle: f64,
}

impl Pole {
    pub fn new(magnitude: f64, angle: f64) -> Self {
        Self { magnitude, angle }
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self {
            magnitude: z.norm(),
            angle: z.im.atan2(z.re),
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.angle)
    }

    pub fn conj(self) -> Self {
        Self {
            magnitude: self.magnitude,
            angle: -self.angle,
        }
    }
}

/// Multiset of poles, closed under conjugation.
///
/// Real poles (angle 0 or pi) are kept apart from the upper-half-plane member
/// of each complex pair; the lower-half mirror is implied, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    real: Vec<Pole>,
    upper: Vec<Pole>,
}

impl PoleSet {
    /// Builds a set from real poles and the upper member of each complex pair.
    pub fn from_parts(real: Vec<Pole>, upper: Vec<Pole>) -> Result<Self> {
        for p in &real {
            if !(p.magnitude >= 0.0) || !(p.angle == 0.0 || p.angle == PI) {
                return Err(Error::Structural(format!(
                    "real pole must have angle 0 or pi and magnitude >= 0, got {p:?}"
                )));
            }
        }
        for p in &upper {
            if !(p.magnitude >= 0.0) || !(p.angle > 0.0 && p.angle < PI) {
                return Err(Error::Structural(format!(
                    "complex pole must lie in the upper half plane, got {p:?}"
                )));
            }
        }
        Ok(Self { real, upper })
    }

    /// Builds a set from an explicit root list, which must be closed under
    /// conjugation to within `1e-9`.
    pub fn from_roots(roots: &[Complex64]) -> Result<Self> {
        if roots.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("non-finite root".into()));
        }
        let (real, upper) = pair_roots(roots, Some(1e-9))?;
        Ok(Self { real, upper })
    }

    pub fn real(&self) -> &[Pole] {
        &self.real
    }

    /// Upper-half-plane members of the complex pairs.
    pub fn upper(&self) -> &[Pole] {
        &self.upper
    }

    pub fn order(&self) -> usize {
        self.real.len() + 2 * self.upper.len()
    }

    /// Every pole, conjugates included.
    pub fn iter(&self) -> impl Iterator<Item = Pole> + '_ {
        self.real
            .iter()
            .copied()
            .chain(self.upper.iter().flat_map(|p| [*p, p.conj()]))
    }

    pub fn max_magnitude(&self) -> f64 {
        self.iter().fold(0.0, |m, p| m.max(p.magnitude))
    }

    pub fn map_upper(&self, f: impl Fn(Pole) -> Pole) -> Self {
        Self {
            real: self.real.clone(),
            upper: self.upper.iter().map(|p| f(*p)).collect(),
        }
    }
}

fn real_pole(x: f64) -> Pole {
    if x < 0.0 {
        Pole::new(-x, PI)
    } else {
        Pole::new(x, 0.0)
    }
}

/// Splits roots into real poles and upper-half poles. Each upper root is
/// matched to the nearest conjugate of a lower root and the pair averaged.
/// With `tolerance`, a match further away than that is a structural error.
fn pair_roots(roots: &[Complex64], tolerance: Option<f64>) -> Result<(Vec<Pole>, Vec<Pole>)> {
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for z in roots {
        if z.im.abs() <= REAL_POLE_THRESHOLD {
            real.push(real_pole(z.re));
        } else if z.im > 0.0 {
            upper.push(*z);
        } else {
            lower.push(z.conj());
        }
    }
    if upper.len() != lower.len() {
        return Err(Error::Structural(format!(
            "{} roots above the real axis but {} below",
            upper.len(),
            lower.len()
        )));
    }

    let mut paired = Vec::with_capacity(upper.len());
    for u in upper {
        let (idx, dist) = lower
            .iter()
            .enumerate()
            .map(|(i, l)| (i, (u - l).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("counts match");
        if let Some(tol) = tolerance {
            if dist > tol * u.norm().max(1.0) {
                return Err(Error::Structural(format!(
                    "root {u} has no conjugate partner (nearest is {dist} away)"
                )));
            }
        }
        let l = lower.swap_remove(idx);
        paired.push(Pole::from_complex((u + l) * 0.5));
    }
    Ok((real, paired))
}

/// Double-double accumulator: `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, other: Dd) -> Dd {
        let s = self.hi + other.hi;
        let b = s - self.hi;
        let e = (self.hi - (s - b)) + (other.hi - b);
        Dd::renorm(s, e + self.lo + other.lo)
    }

    fn mul(self, x: f64) -> Dd {
        let p = self.hi * x;
        let e = self.hi.mul_add(x, -p);
        Dd::renorm(p, e + self.lo * x)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

/// Evaluates the monic polynomial `z^p + c_1 z^(p-1) + ... + c_p` and its
/// derivative. The value is accumulated in double-double (compensated
/// Horner), so it stays accurate next to clustered roots.
fn eval_monic(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let (mut re, mut im) = (Dd::new(1.0), Dd::new(0.0));
    let mut deriv = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        deriv = deriv * z + Complex64::new(re.hi, im.hi);
        let next_re = re.mul(z.re).add(im.mul(z.im).neg()).add(Dd::new(c));
        let next_im = re.mul(z.im).add(im.mul(z.re));
        re = next_re;
        im = next_im;
    }
    (Complex64::new(re.hi + re.lo, im.hi + im.lo), deriv)
}

/// Newton refinement that only accepts steps which shrink the residual and
/// stay well inside the gap to the nearest other root.
fn polish(coeffs: &[f64], z: Complex64, gap: f64) -> Complex64 {
    let mut z = z;
    let (mut value, mut deriv) = eval_monic(coeffs, z);
    for _ in 0..MAX_POLISH_STEPS {
        if value.norm() == 0.0 || deriv.norm() == 0.0 {
            break;
        }
        let step = value / deriv;
        if !(step.norm() < 0.25 * gap) {
            break;
        }
        let candidate = z - step;
        let (v2, d2) = eval_monic(coeffs, candidate);
        if !(v2.norm() < value.norm()) {
            break;
        }
        z = candidate;
        value = v2;
        deriv = d2;
        if step.norm() <= ROOT_TOLERANCE * z.norm().max(1e-3) {
            break;
        }
    }
    z
}

/// All roots of `z^p + a_1 z^(p-1) + ... + a_p`, as a conjugate-closed pole set.
pub fn poles_from_coeffs(coeffs: &[f64]) -> Result<PoleSet> {
    if let Some(a) = coeffs.iter().find(|a| !a.is_finite()) {
        return Err(Error::Numeric(format!("non-finite coefficient {a}")));
    }
    let roots = companion_roots(coeffs)?;
    let (real, upper) = pair_roots(&roots, None)?;

    let all: Vec<Complex64> = real
        .iter()
        .chain(&upper)
        .flat_map(|p| {
            let z = p.to_complex();
            if p.angle > 0.0 && p.angle < PI {
                vec![z, z.conj()]
            } else {
                vec![z]
            }
        })
        .collect();
    let gap_to_others = |z: Complex64| {
        all.iter()
            .map(|w| (z - w).norm())
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min)
    };

    let plain = PoleSet {
        real: real.clone(),
        upper: upper.clone(),
    };
    let real = real
        .into_iter()
        .map(|p| {
            let z = p.to_complex();
            let z = Complex64::new(z.re, 0.0);
            let refined = polish(coeffs, z, gap_to_others(z));
            real_pole(refined.re)
        })
        .collect();
    let upper = upper
        .into_iter()
        .map(|p| {
            let z = p.to_complex();
            let refined = polish(coeffs, z, gap_to_others(z));
            // a refinement that lands on the real axis keeps the unrefined root
            if refined.im > REAL_POLE_THRESHOLD {
                Pole::from_complex(refined)
            } else {
                p
            }
        })
        .collect();
    let polished = PoleSet { real, upper };
    // Per-root refinement can scatter a tight cluster whose raw eigenvalues
    // carry errors that cancel in the product.
    if fit_error(&polished, coeffs) <= fit_error(&plain, coeffs).max(ROUND_TRIP_TOLERANCE) {
        Ok(polished)
    } else {
        Ok(plain)
    }
}

fn fit_error(poles: &PoleSet, coeffs: &[f64]) -> f64 {
    coeffs_from_poles(poles)
        .iter()
        .zip(coeffs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Eigenvalues of the companion matrix of the monic polynomial.
fn companion_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let p = coeffs.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    if p == 1 {
        return Ok(vec![Complex64::new(-coeffs[0], 0.0)]);
    }
    let mut c = DMatrix::<f64>::zeros(p, p);
    for (j, a) in coeffs.iter().enumerate() {
        c[(0, j)] = -a;
    }
    for i in 1..p {
        c[(i, i - 1)] = 1.0;
    }
    let schur = Schur::try_new(c, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("companion eigenvalue iteration did not converge".into()))?;
    let eig = schur.complex_eigenvalues();
    Ok(eig.iter().copied().collect())
}

/// Expands `prod (z - p_i)` into real coefficients `a_1..a_p`.
pub fn coeffs_from_poles(poles: &PoleSet) -> Vec<f64> {
    // running product, highest power first, leading 1 implicit at index 0
    let mut poly = vec![1.0];
    for p in &poles.real {
        let x = p.to_complex().re;
        poly = multiply(&poly, &[1.0, -x]);
    }
    for p in &poles.upper {
        let re = p.magnitude * p.angle.cos();
        poly = multiply(&poly, &[1.0, -2.0 * re, p.magnitude * p.magnitude]);
    }
    poly.remove(0);
    poly
}

/// Expands an arbitrary root list in complex arithmetic. Fails if the result
/// has an imaginary residue above [`COEFF_IMAG_TOLERANCE`], i.e. the roots
/// were not closed under conjugation.
pub fn coeffs_from_roots(roots: &[Complex64]) -> Result<Vec<f64>> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        poly = next;
    }
    poly[1..]
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if c.im.abs() > COEFF_IMAG_TOLERANCE {
                Err(Error::Structural(format!(
                    "coefficient a_{} has imaginary part {}; roots are not conjugate-closed",
                    k + 1,
                    c.im
                )))
            } else {
                Ok(c.re)
            }
        })
        .collect()
}

fn multiply(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_8;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_resonator() {
        let ps = poles_from_coeffs(&[-1.7554, 0.9025]).unwrap();
        assert!(ps.real().is_empty());
        assert_eq!(ps.upper().len(), 1);
        // analytic roots of z^2 - 1.7554 z + 0.9025
        let disc = Complex64::new(1.7554f64 * 1.7554 - 4.0 * 0.9025, 0.0).sqrt();
        let z = (Complex64::new(1.7554, 0.0) + disc) / 2.0;
        let p = ps.upper()[0];
        assert!((p.magnitude - z.norm()).abs() < 1e-12);
        assert!((p.angle - z.arg()).abs() < 1e-12);
        assert!((p.magnitude - 0.95).abs() < 1e-9);
        assert!((p.angle - FRAC_PI_8).abs() < 1e-4);
    }

    #[test]
    fn zero_model_has_poles_at_origin() {
        let ps = poles_from_coeffs(&[0.0; 20]).unwrap();
        assert_eq!(ps.order(), 20);
        assert!(ps.iter().all(|p| p.magnitude < 1e-6));
        assert!(poles_from_coeffs(&[]).unwrap().order() == 0);
    }

    #[test]
    fn single_real_pole() {
        let ps = poles_from_coeffs(&[-0.5]).unwrap();
        assert_eq!(ps.real(), &[Pole::new(0.5, 0.0)]);
        let ps = poles_from_coeffs(&[0.5]).unwrap();
        assert_eq!(ps.real(), &[Pole::new(0.5, PI)]);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(poles_from_coeffs(&[f64::NAN, 0.1]), Err(Error::Numeric(_))));
    }

    #[test]
    fn expansion_of_conjugate_pair() {
        let ps = PoleSet::from_parts(vec![], vec![Pole::new(0.95, FRAC_PI_8)]).unwrap();
        let a = coeffs_from_poles(&ps);
        assert!((a[0] + 2.0 * 0.95 * FRAC_PI_8.cos()).abs() < 1e-12);
        assert!((a[1] - 0.9025).abs() < 1e-12);
        assert!((a[0] + 1.7554).abs() < 1e-4);
        assert!(coeffs_from_poles(&PoleSet::from_parts(vec![], vec![]).unwrap()).is_empty());
    }

    #[test]
    fn open_conjugate_set_is_structural_error() {
        let z = Complex64::from_polar(0.9, 0.7);
        assert!(matches!(PoleSet::from_roots(&[z]), Err(Error::Structural(_))));
        assert!(matches!(
            PoleSet::from_roots(&[z, Complex64::from_polar(0.9, -0.71)]),
            Err(Error::Structural(_))
        ));
        assert!(matches!(coeffs_from_roots(&[z]), Err(Error::Structural(_))));
        let ok = PoleSet::from_roots(&[z, z.conj(), Complex64::new(-0.3, 0.0)]).unwrap();
        assert_eq!(ok.order(), 3);
    }

    #[test]
    fn from_parts_checks_half_plane() {
        assert!(PoleSet::from_parts(vec![Pole::new(0.5, 0.2)], vec![]).is_err());
        assert!(PoleSet::from_parts(vec![], vec![Pole::new(0.5, -0.2)]).is_err());
        assert!(PoleSet::from_parts(vec![], vec![Pole::new(0.5, PI)]).is_err());
    }

    /// Random stable pole set of the given order.
    pub(crate) fn random_poles(rng: &mut ChaCha8Rng, order: usize) -> PoleSet {
        let extra = if order >= 2 && rng.random_bool(0.5) { 2 } else { 0 };
        let n_real = order % 2 + extra;
        let n_pairs = (order - n_real) / 2;
        let real = (0..n_real)
            .map(|_| real_pole(rng.random_range(-0.95..0.95)))
            .collect();
        let upper = (0..n_pairs)
            .map(|_| Pole::new(rng.random_range(0.05..0.98), rng.random_range(0.02..PI - 0.02)))
            .collect();
        PoleSet::from_parts(real, upper).unwrap()
    }

    #[test]
    fn clustered_poles_round_trip() {
        let upper = vec![
            Pole::new(0.975, 0.40),
            Pole::new(0.97, 0.405),
            Pole::new(0.96, 0.41),
            Pole::new(0.98, 0.03),
            Pole::new(0.95, 0.035),
            Pole::new(0.9, 2.0),
        ];
        let coeffs = coeffs_from_poles(&PoleSet::from_parts(vec![], upper.clone()).unwrap());
        let found = poles_from_coeffs(&coeffs).unwrap();
        let back = coeffs_from_poles(&found);
        for (x, y) in back.iter().zip(&coeffs) {
            assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
        let sorted = |mut v: Vec<Pole>| {
            v.sort_by(|a, b| a.angle.total_cmp(&b.angle));
            v
        };
        for (p, q) in sorted(found.upper().to_vec()).iter().zip(sorted(upper)) {
            assert!((p.angle - q.angle).abs() < 1e-6, "{p:?} vs {q:?}");
            assert!((p.magnitude - q.magnitude).abs() < 1e-6, "{p:?} vs {q:?}");
        }
    }

    #[test]
    fn both_expansions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for order in 1..=20 {
            let ps = random_poles(&mut rng, order);
            let roots: Vec<_> = ps.iter().map(Pole::to_complex).collect();
            let a = coeffs_from_poles(&ps);
            let b = coeffs_from_roots(&roots).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn coefficient_round_trip(seed in any::<u64>(), order in 1usize..=20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = coeffs_from_poles(&random_poles(&mut rng, order));
            let back = coeffs_from_poles(&poles_from_coeffs(&a).unwrap());
            prop_assert_eq!(back.len(), a.len());
            for (x, y) in a.iter().zip(&back) {
                prop_assert!((x - y).abs() <= 1e-6, "{} vs {}", x, y);
            }
        }

        #[test]
        fn extracted_poles_are_closed_and_stable(seed in any::<u64>(), order in 1usize..=20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = coeffs_from_poles(&random_poles(&mut rng, order));
            let ps = poles_from_coeffs(&a).unwrap();
            prop_assert_eq!(ps.order(), order);
            let roots: Vec<_> = ps.iter().map(Pole::to_complex).collect();
            prop_assert!(coeffs_from_roots(&roots).is_ok());
            prop_assert!(ps.max_magnitude() < 1.0);
        }
    }
}
