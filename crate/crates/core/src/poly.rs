//! Dense univariate polynomials over [`FieldElement`], lowest degree first.
//!
//! Multiplication, division and interpolation are the textbook quadratic
//! algorithms. The prover does not go through this type on its hot path (see
//! `snark::extrapolate`); it is used to build and audit QAP
//! polynomials.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::field::{batch_inverse, FieldElement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("division by the zero polynomial")]
    ZeroDivisor,
    #[error("interpolation points share the abscissa {0}")]
    DuplicateAbscissa(FieldElement),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<FieldElement>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: FieldElement) -> Self {
        Self::new(vec![c])
    }

    /// `x - root`
    pub fn linear_root(root: FieldElement) -> Self {
        Self::new(vec![-root, FieldElement::ONE])
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| FieldElement::from_i64(c)).collect())
    }

    /// `prod (x - r)` over `roots`.
    pub fn from_roots(roots: &[FieldElement]) -> Self {
        let mut coeffs = vec![FieldElement::ONE];
        for &r in roots {
            let mut next = vec![FieldElement::ZERO; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= r * c;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<FieldElement> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<FieldElement> {
        self.coeffs.last().copied()
    }

    pub fn eval(&self, x: FieldElement) -> FieldElement {
        self.coeffs
            .iter()
            .rev()
            .fold(FieldElement::ZERO, |acc, &c| acc * x + c)
    }

    pub fn scale(&self, k: FieldElement) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    /// Returns `(q, r)` with `self = q * d + r` and `deg r < deg d`.
    pub fn divmod(&self, divisor: &Self) -> Result<(Self, Self), PolyError> {
        let lead = divisor.leading().ok_or(PolyError::ZeroDivisor)?;
        let dn = divisor.coeffs.len();
        if self.coeffs.len() < dn {
            return Ok((Self::zero(), self.clone()));
        }
        let lead_inv = lead
            .inv()
            .expect("normalized leading coefficient is nonzero");
        let mut rem = self.coeffs.clone();
        let mut quot = vec![FieldElement::ZERO; rem.len() - dn + 1];
        for i in (0..quot.len()).rev() {
            let q = rem[i + dn - 1] * lead_inv;
            quot[i] = q;
            if q.is_zero() {
                continue;
            }
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[i + j] -= q * d;
            }
        }
        rem.truncate(dn - 1);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Synthetic division by `x - root`, discarding the remainder.
    fn div_by_linear(&self, root: FieldElement) -> Vec<FieldElement> {
        let n = self.coeffs.len();
        if n < 2 {
            return Vec::new();
        }
        let mut out = vec![FieldElement::ZERO; n - 1];
        let mut carry = FieldElement::ZERO;
        for i in (1..n).rev() {
            carry = self.coeffs[i] + carry * root;
            out[i - 1] = carry;
        }
        out
    }
}

/// Minimal-degree polynomial through `points`, in `O(n^2)`.
pub fn lagrange_interpolate(
    points: &[(FieldElement, FieldElement)],
) -> Result<Polynomial, PolyError> {
    if points.is_empty() {
        return Ok(Polynomial::zero());
    }
    let xs: Vec<FieldElement> = points.iter().map(|p| p.0).collect();
    let vanishing = Polynomial::from_roots(&xs);

    let mut basis = Vec::with_capacity(points.len());
    let mut denoms = Vec::with_capacity(points.len());
    for &x in &xs {
        let q = vanishing.div_by_linear(x);
        let d = Polynomial { coeffs: q.clone() }.eval(x);
        if d.is_zero() {
            return Err(PolyError::DuplicateAbscissa(x));
        }
        denoms.push(d);
        basis.push(q);
    }
    batch_inverse(&mut denoms).expect("denominators checked nonzero");

    let mut acc = vec![FieldElement::ZERO; points.len()];
    for ((q, inv), &(_, y)) in basis.iter().zip(&denoms).zip(points) {
        let w = y * *inv;
        if w.is_zero() {
            continue;
        }
        for (a, &c) in acc.iter_mut().zip(q) {
            *a += w * c;
        }
    }
    Ok(Polynomial::new(acc))
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |p: &Polynomial, i: usize| p.coeffs.get(i).copied().unwrap_or_default();
        Polynomial::new((0..n).map(|i| get(self, i) + get(rhs, i)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![FieldElement::ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}
