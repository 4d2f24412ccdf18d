//! Fixed-point polynomial surrogate for the loss derivatives.
//!
//! Honest nodes compute `g` and `h` through this surrogate rather than the
//! transcendental formulas, so the gradient circuit can check them exactly.
//! A margin `m` is clamped to `[-M, M)` and encoded with `f` fraction bits,
//! normalized to `t = m / M`, and the derivatives are expanded in the
//! Chebyshev basis of `t`:
//!
//! ```text
//! t      = floor(m_fp * round(2^f / M) / 2^f)
//! T_0    = 2^f,  T_1 = t
//! T_k    = 2 * floor(t * T_{k-1} / 2^f) - T_{k-2}
//! g_fp   = floor(sum_k a_k T_k / 2^f)          (h alike, own coefficients)
//! ```
//!
//! Every step is an integer operation, mirrored one-for-one by the gadgets in
//! `r1cs::gadgets`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::loss::{analytic_loss_grad_hess, Label};

/// Largest tolerated `|surrogate - analytic|` on the dense grid.
pub const MAX_SURROGATE_ERROR: f64 = 2e-2;
/// Grid used for the fidelity check.
pub const CHECK_GRID_POINTS: usize = 10_001;
/// Grid used for the least-squares fit.
pub const FIT_GRID_POINTS: usize = 4_001;
pub const DEFAULT_DEGREE: usize = 14;
pub const DEFAULT_FRACTION_BITS: u32 = 16;
pub const DEFAULT_MARGIN_CLAMP: f64 = 6.0;
pub const DEFAULT_GRADIENT_BOUND: f64 = 32.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurrogateError {
    #[error("surrogate error {max_error:.4} exceeds {tolerance} at degree {degree}")]
    ToleranceNotMet {
        degree: usize,
        max_error: f64,
        tolerance: f64,
    },
    #[error("invalid surrogate parameters: {0}")]
    InvalidParameters(String),
    #[error("margin {0} cannot be encoded")]
    EncodingOverflow(f64),
    #[error("surrogate value leaves the gradient bound {bound} (g in [{g_min}, {g_max}], h in [{h_min}, {h_max}])")]
    OutOfBounds {
        bound: f64,
        g_min: f64,
        g_max: f64,
        h_min: f64,
        h_max: f64,
    },
}

/// Fixed-point gradient statistics of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct GradientPair {
    pub g: i64,
    pub h: i64,
}

impl GradientPair {
    pub fn grad(&self, fraction_bits: u32) -> f64 {
        self.g as f64 / (1u64 << fraction_bits) as f64
    }

    pub fn hess(&self, fraction_bits: u32) -> f64 {
        self.h as f64 / (1u64 << fraction_bits) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    fraction_bits: u32,
    margin_clamp: f64,
    /// `round(M * 2^f)`; encoded margins lie in `[-clamp_fp, clamp_fp)`.
    clamp_fp: i64,
    /// `round(2^f / M)`
    margin_scale: i64,
    /// Chebyshev coefficients of `g`, indexed by [`Label::index`].
    grad: [Vec<i64>; 2],
    hess: [Vec<i64>; 2],
}

impl Surrogate {
    pub fn fraction_bits(&self) -> u32 {
        self.fraction_bits
    }

    pub fn one(&self) -> i64 {
        1i64 << self.fraction_bits
    }

    pub fn margin_clamp(&self) -> f64 {
        self.margin_clamp
    }

    pub fn clamp_fp(&self) -> i64 {
        self.clamp_fp
    }

    pub fn margin_scale(&self) -> i64 {
        self.margin_scale
    }

    pub fn degree(&self) -> usize {
        self.grad[0].len() - 1
    }

    pub fn grad_coeffs(&self, label: Label) -> &[i64] {
        &self.grad[label.index()]
    }

    pub fn hess_coeffs(&self, label: Label) -> &[i64] {
        &self.hess[label.index()]
    }

    /// Rounds to `f` fraction bits and clamps into `[-M, M)`.
    pub fn encode_margin(&self, margin: f64) -> Result<i64, SurrogateError> {
        if !margin.is_finite() {
            return Err(SurrogateError::EncodingOverflow(margin));
        }
        let scaled = (margin * self.one() as f64).round();
        let clamped = scaled.clamp(-(self.clamp_fp as f64), (self.clamp_fp - 1) as f64);
        Ok(clamped as i64)
    }

    pub fn normalize(&self, margin_fp: i64) -> i64 {
        fixed_mul(margin_fp, self.margin_scale, self.fraction_bits)
    }

    /// `[T_0, .., T_d]` at the normalized margin `t`.
    pub fn chebyshev_basis(&self, t: i64) -> Vec<i64> {
        let d = self.degree();
        let mut basis = Vec::with_capacity(d + 1);
        basis.push(self.one());
        if d >= 1 {
            basis.push(t);
        }
        for k in 2..=d {
            let next = 2 * fixed_mul(t, basis[k - 1], self.fraction_bits) - basis[k - 2];
            basis.push(next);
        }
        basis
    }

    pub fn gradient(&self, label: Label, margin_fp: i64) -> GradientPair {
        let basis = self.chebyshev_basis(self.normalize(margin_fp));
        GradientPair {
            g: combine(&self.grad[label.index()], &basis, self.fraction_bits),
            h: combine(&self.hess[label.index()], &basis, self.fraction_bits),
        }
    }

    /// Surrogate derivatives at a real margin, clamped and encoded first.
    pub fn gradient_at(&self, label: Label, margin: f64) -> Result<GradientPair, SurrogateError> {
        Ok(self.gradient(label, self.encode_margin(margin)?))
    }

    /// Largest `|surrogate - analytic|` for `(g, h)` over `points` evenly
    /// spaced margins covering `[-M, M]`.
    pub fn max_grid_error(&self, points: usize) -> (f64, f64) {
        let mut worst = (0.0f64, 0.0f64);
        let scale = self.one() as f64;
        for label in [Label::Negative, Label::Positive] {
            for m in grid(self.margin_clamp, points) {
                let exact = analytic_loss_grad_hess(label, m);
                let approx = self.gradient(label, self.encode_margin(m).expect("grid is finite"));
                worst.0 = worst.0.max((approx.g as f64 / scale - exact.grad).abs());
                worst.1 = worst.1.max((approx.h as f64 / scale - exact.hess).abs());
            }
        }
        worst
    }

    /// `(min g, max g, min h, max h)` over every encodable margin, both labels.
    pub fn value_range(&self) -> (i64, i64, i64, i64) {
        let mut r = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for m in -self.clamp_fp..self.clamp_fp {
            let basis = self.chebyshev_basis(self.normalize(m));
            for label in [Label::Negative, Label::Positive] {
                let g = combine(&self.grad[label.index()], &basis, self.fraction_bits);
                let h = combine(&self.hess[label.index()], &basis, self.fraction_bits);
                r = (r.0.min(g), r.1.max(g), r.2.min(h), r.3.max(h));
            }
        }
        r
    }
}

/// `floor(a * b / 2^f)`
pub fn fixed_mul(a: i64, b: i64, fraction_bits: u32) -> i64 {
    ((a as i128 * b as i128) >> fraction_bits) as i64
}

fn combine(coeffs: &[i64], basis: &[i64], fraction_bits: u32) -> i64 {
    let acc: i128 = coeffs
        .iter()
        .zip(basis)
        .map(|(&c, &t)| c as i128 * t as i128)
        .sum();
    (acc >> fraction_bits) as i64
}

fn grid(clamp: f64, points: usize) -> impl Iterator<Item = f64> {
    let step = 2.0 * clamp / (points.max(2) - 1) as f64;
    (0..points).map(move |i| -clamp + step * i as f64)
}

fn chebyshev_row(t: f64, degree: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(degree + 1);
    row.push(1.0);
    if degree >= 1 {
        row.push(t);
    }
    for k in 2..=degree {
        row.push(2.0 * t * row[k - 1] - row[k - 2]);
    }
    row
}

/// Least-squares Chebyshev fits of `g` and `h` for both labels, rounded to
/// fixed point. The hessian intercept is then lifted so that no encodable
/// margin yields `h < 0`. Fails with `ToleranceNotMet` when the rounded
/// surrogate misses [`MAX_SURROGATE_ERROR`] on the check grid.
pub fn fit_surrogate(
    degree: usize,
    margin_clamp: f64,
    grid_size: usize,
    fraction_bits: u32,
) -> Result<Surrogate, SurrogateError> {
    if !(margin_clamp.is_finite() && margin_clamp > 0.0) {
        return Err(SurrogateError::InvalidParameters(format!(
            "margin clamp {margin_clamp}"
        )));
    }
    if !(4..=30).contains(&fraction_bits) {
        return Err(SurrogateError::InvalidParameters(format!(
            "fraction bits {fraction_bits}"
        )));
    }
    if grid_size <= degree + 1 {
        return Err(SurrogateError::InvalidParameters(format!(
            "grid of {grid_size} points for degree {degree}"
        )));
    }
    let one = (1i64 << fraction_bits) as f64;
    let margins: Vec<f64> = grid(margin_clamp, grid_size).collect();
    let design = DMatrix::from_fn(grid_size, degree + 1, |i, k| {
        chebyshev_row(margins[i] / margin_clamp, degree)[k]
    });
    let svd = design.clone().svd(true, true);

    let fit = |target: &dyn Fn(f64) -> f64| -> Vec<i64> {
        let b = DVector::from_iterator(grid_size, margins.iter().map(|&m| target(m)));
        let coeffs = svd
            .solve(&b, 1e-12)
            .expect("svd computed with both factors");
        coeffs.iter().map(|c| (c * one).round() as i64).collect()
    };

    let mut grad: [Vec<i64>; 2] = Default::default();
    let mut hess: [Vec<i64>; 2] = Default::default();
    for label in [Label::Negative, Label::Positive] {
        grad[label.index()] = fit(&|m| analytic_loss_grad_hess(label, m).grad);
        hess[label.index()] = fit(&|m| analytic_loss_grad_hess(label, m).hess);
    }

    let clamp_fp = (margin_clamp * one).round() as i64;
    let mut surrogate = Surrogate {
        fraction_bits,
        margin_clamp,
        clamp_fp,
        margin_scale: (one / margin_clamp).round() as i64,
        grad,
        hess,
    };

    // T_0 is exactly 2^f, so the intercept shifts every output by itself.
    let (_, _, h_min, _) = surrogate.value_range();
    if h_min < 0 {
        for coeffs in surrogate.hess.iter_mut() {
            coeffs[0] -= h_min;
        }
    }

    let (g_err, h_err) = surrogate.max_grid_error(CHECK_GRID_POINTS);
    let max_error = g_err.max(h_err);
    if max_error > MAX_SURROGATE_ERROR {
        return Err(SurrogateError::ToleranceNotMet {
            degree,
            max_error,
            tolerance: MAX_SURROGATE_ERROR,
        });
    }
    Ok(surrogate)
}

/// The agreed loss: squared logistic, realized through a checked surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    surrogate: Surrogate,
    gradient_bound: f64,
}

impl LossSpec {
    /// Validates that every encodable margin yields `|g| < B` and `0 <= h < B`.
    pub fn new(surrogate: Surrogate, gradient_bound: f64) -> Result<Self, SurrogateError> {
        let one = surrogate.one() as f64;
        let bound_fp = (gradient_bound * one).round() as i64;
        let (g_min, g_max, h_min, h_max) = surrogate.value_range();
        if g_min < -bound_fp || g_max >= bound_fp || h_min < 0 || h_max >= bound_fp {
            return Err(SurrogateError::OutOfBounds {
                bound: gradient_bound,
                g_min: g_min as f64 / one,
                g_max: g_max as f64 / one,
                h_min: h_min as f64 / one,
                h_max: h_max as f64 / one,
            });
        }
        Ok(Self {
            surrogate,
            gradient_bound,
        })
    }

    /// Fits with the given parameters and validates.
    pub fn fit(
        degree: usize,
        margin_clamp: f64,
        fraction_bits: u32,
        gradient_bound: f64,
    ) -> Result<Self, SurrogateError> {
        Self::new(
            fit_surrogate(degree, margin_clamp, FIT_GRID_POINTS, fraction_bits)?,
            gradient_bound,
        )
    }

    pub fn surrogate(&self) -> &Surrogate {
        &self.surrogate
    }

    pub fn gradient_bound(&self) -> f64 {
        self.gradient_bound
    }

    pub fn fraction_bits(&self) -> u32 {
        self.surrogate.fraction_bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn default_surrogate() -> &'static Surrogate {
        static S: OnceLock<Surrogate> = OnceLock::new();
        S.get_or_init(|| {
            fit_surrogate(
                DEFAULT_DEGREE,
                DEFAULT_MARGIN_CLAMP,
                FIT_GRID_POINTS,
                DEFAULT_FRACTION_BITS,
            )
            .unwrap()
        })
    }

    #[test]
    fn default_fit_meets_tolerance() {
        let s = default_surrogate();
        let (g, h) = s.max_grid_error(CHECK_GRID_POINTS);
        assert!(g <= MAX_SURROGATE_ERROR, "g error {g}");
        assert!(h <= MAX_SURROGATE_ERROR, "h error {h}");
    }

    #[test]
    fn low_degrees_are_rejected() {
        for degree in [0, 6] {
            let err = fit_surrogate(degree, 6.0, FIT_GRID_POINTS, 16).unwrap_err();
            assert!(
                matches!(err, SurrogateError::ToleranceNotMet { .. }),
                "{err}"
            );
        }
    }

    #[test]
    fn refit_on_denser_grid_is_stable() {
        let a = fit_surrogate(DEFAULT_DEGREE, 6.0, 2001, 16).unwrap();
        let b = fit_surrogate(DEFAULT_DEGREE, 6.0, 4002, 16).unwrap();
        let ea = {
            let e = a.max_grid_error(CHECK_GRID_POINTS);
            e.0.max(e.1)
        };
        let eb = {
            let e = b.max_grid_error(CHECK_GRID_POINTS);
            e.0.max(e.1)
        };
        assert!((ea - eb).abs() < 0.1 * ea, "{ea} vs {eb}");
    }

    #[test]
    fn hessian_is_nonnegative_everywhere() {
        let (_, _, h_min, _) = default_surrogate().value_range();
        assert!(h_min >= 0);
    }

    #[test]
    fn margins_clamp_to_range() {
        let s = default_surrogate();
        assert_eq!(s.encode_margin(100.0).unwrap(), s.clamp_fp() - 1);
        assert_eq!(s.encode_margin(-100.0).unwrap(), -s.clamp_fp());
        assert_eq!(s.encode_margin(1.5).unwrap(), 3 << 15);
        assert!(s.encode_margin(f64::NAN).is_err());
    }

    #[test]
    fn gradient_tracks_analytic_at_zero() {
        let s = default_surrogate();
        let gp = s.gradient(Label::Positive, 0);
        assert!((gp.grad(16) + std::f64::consts::LN_2).abs() < 2e-2);
        let gn = s.gradient(Label::Negative, 0);
        assert!((gn.grad(16) - std::f64::consts::LN_2).abs() < 2e-2);
    }

    #[test]
    fn fixed_mul_floors() {
        assert_eq!(fixed_mul(384, 512, 8), 768);
        assert_eq!(fixed_mul(-1, 1, 8), -1);
        assert_eq!(fixed_mul(-256, 256, 8), -256);
    }

    #[test]
    fn loss_spec_bounds() {
        let s = default_surrogate().clone();
        assert!(LossSpec::new(s.clone(), 32.0).is_ok());
        assert!(matches!(
            LossSpec::new(s, 4.0),
            Err(SurrogateError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn invalid_parameters() {
        assert!(fit_surrogate(4, -1.0, 100, 16).is_err());
        assert!(fit_surrogate(4, 6.0, 3, 16).is_err());
        assert!(fit_surrogate(4, 6.0, 100, 2).is_err());
    }
}
