//! The evaluation domain `{1, .., n}` and its Lagrange basis.
//!
//! For consecutive integers the vanishing polynomial has closed-form
//! derivatives, `Z'(j) = (-1)^(n-j) (j-1)! (n-j)!`, so every basis value
//! comes from factorial tables and one batch inversion.

use crate::field::{batch_inverse, FieldElement};

/// `k!` and `1/k!` for `k <= max`.
#[derive(Debug, Clone)]
pub struct Factorials {
    fact: Vec<FieldElement>,
    inv_fact: Vec<FieldElement>,
}

impl Factorials {
    pub fn new(max: usize) -> Self {
        let mut fact = Vec::with_capacity(max + 1);
        fact.push(FieldElement::ONE);
        for k in 1..=max {
            fact.push(fact[k - 1] * FieldElement::new(k as u64));
        }
        let mut inv_fact = vec![FieldElement::ZERO; max + 1];
        inv_fact[max] = fact[max].inv().expect("max is far below p");
        for k in (1..=max).rev() {
            inv_fact[k - 1] = inv_fact[k] * FieldElement::new(k as u64);
        }
        Self { fact, inv_fact }
    }

    pub fn fact(&self, k: usize) -> FieldElement {
        self.fact[k]
    }

    pub fn inv_fact(&self, k: usize) -> FieldElement {
        self.inv_fact[k]
    }

    /// `1/k` for `1 <= k <= max`.
    pub fn inv(&self, k: usize) -> FieldElement {
        self.fact[k - 1] * self.inv_fact[k]
    }

    /// `1 / Z'(j)` for the domain `{1, .., n}`.
    pub fn inv_vanishing_derivative(&self, n: usize, j: usize) -> FieldElement {
        let v = self.inv_fact[j - 1] * self.inv_fact[n - j];
        if (n - j) % 2 == 1 {
            -v
        } else {
            v
        }
    }

    /// `Z(k) = (k-1)! / (k-1-n)!` for an integer `k > n`.
    pub fn vanishing_beyond(&self, n: usize, k: usize) -> FieldElement {
        self.fact[k - 1] * self.inv_fact[k - 1 - n]
    }
}

/// `Z(s) = prod_{j=1..n} (s - j)`.
pub fn vanishing_at(n: usize, s: FieldElement) -> FieldElement {
    (1..=n as u64).map(|j| s - FieldElement::new(j)).product()
}

/// `s` lies in `{1, .., n}`.
pub fn in_domain(n: usize, s: FieldElement) -> bool {
    s.value() >= 1 && s.value() <= n as u64
}

/// `[L_1(s), .., L_n(s)]` and `Z(s)`; `s` must lie outside the domain.
pub fn lagrange_basis_at(n: usize, s: FieldElement) -> (Vec<FieldElement>, FieldElement) {
    assert!(!in_domain(n, s), "evaluation point inside the domain");
    let tables = Factorials::new(n);
    let mut diffs: Vec<FieldElement> = (1..=n as u64).map(|j| s - FieldElement::new(j)).collect();
    let z = diffs.iter().copied().product();
    batch_inverse(&mut diffs).expect("s is outside the domain");
    let basis = diffs
        .iter()
        .enumerate()
        .map(|(i, &inv)| z * inv * tables.inv_vanishing_derivative(n, i + 1))
        .collect();
    (basis, z)
}
