//! Extends a polynomial given by its values on `{1, .., m}` to the points
//! `m + 1, .., m + count` without interpolating.
//!
//! For `k` outside the domain,
//!
//! ```text
//! P(k) = Z(k) * sum_j (v_j / Z'(j)) / (k - j)
//! ```
//!
//! and the sum is a Hankel matrix-vector product in `1 / (k - j)`, computed
//! with a three-way Karatsuba split in `O(n^1.59)`.

use crate::field::{reduce128, FieldElement};

use super::domain::Factorials;

const BASE_CASE: usize = 64;

/// `y[i] = sum_j h[i + j] x[j]` for square `n x n`, `h.len() == 2n - 1`.
pub fn hankel_mul(h: &[FieldElement], x: &[FieldElement]) -> Vec<FieldElement> {
    let n = x.len();
    assert_eq!(h.len(), (2 * n).saturating_sub(1), "hankel vector length");
    if n <= BASE_CASE {
        return hankel_naive(h, x);
    }
    if n % 2 == 1 {
        let mut xp = x.to_vec();
        xp.push(FieldElement::ZERO);
        let mut hp = h.to_vec();
        hp.extend([FieldElement::ZERO; 2]);
        let mut y = hankel_mul(&hp, &xp);
        y.truncate(n);
        return y;
    }
    let k = n / 2;
    let (x0, x1) = x.split_at(k);
    let (ha, hb, hc) = (&h[..2 * k - 1], &h[k..3 * k - 1], &h[2 * k..]);
    let sum: Vec<_> = x0.iter().zip(x1).map(|(&a, &b)| a + b).collect();
    let diff = |u: &[FieldElement]| -> Vec<FieldElement> {
        u.iter().zip(hb).map(|(&a, &b)| a - b).collect()
    };
    let p = hankel_mul(hb, &sum);
    let q0 = hankel_mul(&diff(ha), x0);
    let q1 = hankel_mul(&diff(hc), x1);
    p.iter()
        .zip(&q0)
        .map(|(&a, &b)| a + b)
        .chain(p.iter().zip(&q1).map(|(&a, &b)| a + b))
        .collect()
}

fn hankel_naive(h: &[FieldElement], x: &[FieldElement]) -> Vec<FieldElement> {
    // products are below 2^122, so 32 of them fit in a u128 before reducing
    (0..x.len())
        .map(|i| {
            let mut out = FieldElement::ZERO;
            for (hs, xs) in h[i..i + x.len()].chunks(32).zip(x.chunks(32)) {
                let acc: u128 = hs
                    .iter()
                    .zip(xs)
                    .map(|(a, b)| a.value() as u128 * b.value() as u128)
                    .sum();
                out += FieldElement::new(reduce128(acc));
            }
            out
        })
        .collect()
}

/// Precomputed tables for extending degree-`< m` polynomials from
/// `{1, .., m}` to `{m + 1, .., m + count}`.
#[derive(Debug, Clone)]
pub struct Extrapolator {
    m: usize,
    count: usize,
    tables: Factorials,
    /// `1 / (d + 1)` for `d < 2n - 1`, `n = max(m, count)`
    kernel: Vec<FieldElement>,
}

impl Extrapolator {
    pub fn new(m: usize, count: usize) -> Self {
        assert!(m >= 1 && count >= 1);
        let n = m.max(count);
        let tables = Factorials::new(m + count + n);
        let kernel = (1..2 * n).map(|d| tables.inv(d)).collect();
        Self {
            m,
            count,
            tables,
            kernel,
        }
    }

    pub fn domain_size(&self) -> usize {
        self.m
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `Z(m + 1 + i)` for `i < count`.
    pub fn vanishing(&self) -> Vec<FieldElement> {
        (0..self.count)
            .map(|i| self.tables.vanishing_beyond(self.m, self.m + 1 + i))
            .collect()
    }

    pub fn extend(&self, values: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(values.len(), self.m, "one value per domain point");
        let n = self.m.max(self.count);
        // x[j'] = v_j / Z'(j) with j = m - j'
        let mut x: Vec<FieldElement> = (0..self.m)
            .map(|jp| {
                let j = self.m - jp;
                values[j - 1] * self.tables.inv_vanishing_derivative(self.m, j)
            })
            .collect();
        x.resize(n, FieldElement::ZERO);
        let sums = hankel_mul(&self.kernel, &x);
        sums.into_iter()
            .take(self.count)
            .enumerate()
            .map(|(i, s)| s * self.tables.vanishing_beyond(self.m, self.m + 1 + i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{lagrange_interpolate, Polynomial};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<FieldElement> {
        (0..n).map(|_| FieldElement::random(rng)).collect()
    }

    fn dense_hankel(h: &[FieldElement], x: &[FieldElement]) -> Vec<FieldElement> {
        (0..x.len())
            .map(|i| x.iter().enumerate().map(|(j, &xj)| h[i + j] * xj).sum())
            .collect()
    }

    #[test]
    fn karatsuba_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for n in [1usize, 2, 31, 32, 33, 64, 65, 100, 257] {
            let h = random_vec(&mut rng, 2 * n - 1);
            let x = random_vec(&mut rng, n);
            assert_eq!(hankel_mul(&h, &x), dense_hankel(&h, &x), "n = {n}");
        }
    }

    #[test]
    fn extension_matches_interpolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for (m, count) in [(1, 1), (1, 3), (5, 6), (40, 41), (70, 20)] {
            let values = random_vec(&mut rng, m);
            let pts: Vec<_> = values
                .iter()
                .enumerate()
                .map(|(j, &v)| (FieldElement::new(j as u64 + 1), v))
                .collect();
            let poly = lagrange_interpolate(&pts).unwrap();
            let ext = Extrapolator::new(m, count);
            let expect: Vec<_> = (0..count)
                .map(|i| poly.eval(FieldElement::new((m + 1 + i) as u64)))
                .collect();
            assert_eq!(ext.extend(&values), expect, "m = {m}, count = {count}");
            let roots: Vec<_> = (1..=m as u64).map(FieldElement::new).collect();
            let z = Polynomial::from_roots(&roots);
            assert_eq!(ext.vanishing()[0], z.eval(FieldElement::new(m as u64 + 1)));
        }
    }

    proptest! {
        #[test]
        fn hankel_is_linear(seed in any::<u64>(), n in 1usize..80) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_vec(&mut rng, 2 * n - 1);
            let x = random_vec(&mut rng, n);
            let y = random_vec(&mut rng, n);
            let sum: Vec<_> = x.iter().zip(&y).map(|(&a, &b)| a + b).collect();
            let lhs = hankel_mul(&h, &sum);
            let rhs: Vec<_> = hankel_mul(&h, &x).into_iter().zip(hankel_mul(&h, &y)).map(|(a, b)| a + b).collect();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
