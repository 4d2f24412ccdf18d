//! Squared logistic loss `L(y, m) = ln(1 + exp(-y m))^2` and its first two
//! derivatives in the margin.
//!
//! With `s = softplus(-y m)` and `q = sigmoid(-y m)`:
//!
//! ```text
//! g = dL/dm   = -2 y s q
//! h = d2L/dm2 =  2 q^2 + 2 s q (1 - q)
//! ```

use serde::{Deserialize, Serialize};

/// Binary label. Stored as `{0, 1}` on disk, used as `{-1, +1}` in the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_binary(bit: bool) -> Self {
        if bit {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    /// `-1.0` or `+1.0`
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    /// Index into per-label tables: 0 for negative, 1 for positive.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossDerivatives {
    pub loss: f64,
    pub grad: f64,
    pub hess: f64,
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn analytic_loss_grad_hess(y: Label, margin: f64) -> LossDerivatives {
    let sign = y.sign();
    let z = -sign * margin;
    let s = softplus(z);
    let q = sigmoid(z);
    let q_bar = sigmoid(-z);
    LossDerivatives {
        loss: s * s,
        grad: -2.0 * sign * s * q,
        hess: 2.0 * q * q + 2.0 * s * q * q_bar,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    #[allow(clippy::approx_constant)]
    fn values_at_zero_margin() {
        let d = analytic_loss_grad_hess(Label::Positive, 0.0);
        let ln2 = std::f64::consts::LN_2;
        assert!((d.loss - ln2 * ln2).abs() < 1e-15);
        assert!((d.loss - 0.480453).abs() < 1e-6);
        assert!((d.grad + ln2).abs() < 1e-15);
        assert!((d.grad + 0.693147).abs() < 1e-6);
    }

    #[test]
    fn gradient_is_antisymmetric_in_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let m: f64 = rng.random_range(-20.0..20.0);
            let pos = analytic_loss_grad_hess(Label::Positive, m);
            let neg = analytic_loss_grad_hess(Label::Negative, -m);
            assert_eq!(pos.grad, -neg.grad);
            assert_eq!(pos.hess, neg.hess);
        }
    }

    #[test]
    fn stable_for_extreme_margins() {
        for m in [-800.0, -50.0, 50.0, 800.0] {
            for y in [Label::Negative, Label::Positive] {
                let d = analytic_loss_grad_hess(y, m);
                assert!(d.loss.is_finite() && d.grad.is_finite() && d.hess.is_finite());
                assert!(d.hess >= 0.0);
            }
        }
        // far on the wrong side the loss is ~ m^2
        let d = analytic_loss_grad_hess(Label::Positive, -50.0);
        assert!((d.grad + 100.0).abs() < 1e-9);
    }

    #[test]
    fn matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let step = 1e-5;
        for _ in 0..1000 {
            let y = Label::from_binary(rng.random());
            let m: f64 = rng.random_range(-6.0..6.0);
            let d = analytic_loss_grad_hess(y, m);
            let lp = analytic_loss_grad_hess(y, m + step);
            let lm = analytic_loss_grad_hess(y, m - step);
            let fd_g = (lp.loss - lm.loss) / (2.0 * step);
            let fd_h = (lp.grad - lm.grad) / (2.0 * step);
            assert!((fd_g - d.grad).abs() <= 1e-6 * d.grad.abs(), "g at {m}");
            assert!((fd_h - d.hess).abs() <= 1e-6 * d.hess.abs(), "h at {m}");
        }
    }
}
