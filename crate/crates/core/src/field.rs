//! Arithmetic in the prime field `Z_p` with `p = 2^61 - 1`.
//!
//! The same prime is the circuit field and the order of every group in
//! [`crate::bilinear`]. Values are kept canonical (`0 <= v < p`) at all times.
//! Signed integers map to the field as `p - |x|`; [`FieldElement::to_signed`]
//! undoes that for values in `(-p/2, p/2)`.

use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::Rng;
use thiserror::Error;

/// The Mersenne prime `2^61 - 1`.
pub const MODULUS: u64 = (1u64 << 61) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("division by zero in the field")]
    DivisionByZero,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FieldElement(u64);

#[inline(always)]
fn reduce64(x: u64) -> u64 {
    // x < 2^64: fold the top bits once, then a conditional subtract.
    let r = (x & MODULUS) + (x >> 61);
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

/// Reduces any `u128` modulo `p` (`2^61 = 1` folds the three 61-bit limbs).
#[inline(always)]
pub(crate) fn reduce128(x: u128) -> u64 {
    let lo = (x as u64) & MODULUS;
    let mid = ((x >> 61) as u64) & MODULUS;
    let top = (x >> 122) as u64;
    reduce64(lo + mid + top)
}

impl FieldElement {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    pub fn new(value: u64) -> Self {
        Self(reduce64(value))
    }

    pub fn from_i64(value: i64) -> Self {
        if value >= 0 {
            Self::new(value as u64)
        } else {
            -Self::new(value.unsigned_abs())
        }
    }

    pub fn from_i128(value: i128) -> Self {
        let m = value.unsigned_abs() % MODULUS as u128;
        let e = Self(m as u64);
        if value < 0 {
            -e
        } else {
            e
        }
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    /// Centered representative in `(-p/2, p/2]`.
    pub fn to_signed(self) -> i64 {
        if self.0 > MODULUS / 2 {
            -((MODULUS - self.0) as i64)
        } else {
            self.0 as i64
        }
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.pow(MODULUS - 2))
    }

    pub fn double(self) -> Self {
        self + self
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(rng.random_range(0..MODULUS))
    }

    pub fn random_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(rng.random_range(1..MODULUS))
    }

    /// Little-endian canonical encoding.
    pub fn to_le_bytes(self) -> [u8; 8] {
        self.0.to_le_bytes()
    }

    /// Rejects non-canonical encodings.
    pub fn from_le_bytes(bytes: [u8; 8]) -> Option<Self> {
        let v = u64::from_le_bytes(bytes);
        (v < MODULUS).then_some(Self(v))
    }
}

/// Inverts every element in place with a single field inversion.
pub fn batch_inverse(values: &mut [FieldElement]) -> Result<(), FieldError> {
    let mut prefix = Vec::with_capacity(values.len());
    let mut acc = FieldElement::ONE;
    for v in values.iter() {
        if v.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        prefix.push(acc);
        acc *= *v;
    }
    let mut inv = acc.inv()?;
    for (v, before) in values.iter_mut().zip(prefix).rev() {
        let next = inv * *v;
        *v = inv * before;
        inv = next;
    }
    Ok(())
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fp({})", self.0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for FieldElement {
    fn from(value: u64) -> Self {
        Self::new(value)
    }
}

impl From<i64> for FieldElement {
    fn from(value: i64) -> Self {
        Self::from_i64(value)
    }
}

impl Add for FieldElement {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        // both < 2^61, the sum fits in u64
        let s = self.0 + rhs.0;
        Self(if s >= MODULUS { s - MODULUS } else { s })
    }
}

impl Sub for FieldElement {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        if self.0 >= rhs.0 {
            Self(self.0 - rhs.0)
        } else {
            Self(self.0 + MODULUS - rhs.0)
        }
    }
}

impl Mul for FieldElement {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self(reduce128(self.0 as u128 * rhs.0 as u128))
    }
}

impl Neg for FieldElement {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        if self.0 == 0 {
            self
        } else {
            Self(MODULUS - self.0)
        }
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Sum for FieldElement {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a FieldElement> for FieldElement {
    fn sum<I: Iterator<Item = &'a Self>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

impl Product for FieldElement {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ONE, Mul::mul)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fe(v: u64) -> FieldElement {
        FieldElement::new(v)
    }

    /// Extended Euclid over i128, independent of `pow`.
    fn egcd_inverse(a: u64) -> u64 {
        let (mut old_r, mut r) = (a as i128, MODULUS as i128);
        let (mut old_s, mut s) = (1i128, 0i128);
        while r != 0 {
            let q = old_r / r;
            (old_r, r) = (r, old_r - q * r);
            (old_s, s) = (s, old_s - q * s);
        }
        assert_eq!(old_r, 1);
        old_s.rem_euclid(MODULUS as i128) as u64
    }

    #[test]
    fn add_wraps_and_has_identity() {
        assert_eq!(fe(MODULUS - 1) + fe(1), FieldElement::ZERO);
        assert_eq!(fe(0) + fe(7), fe(7));
    }

    #[test]
    fn add_and_mul_match_bigint() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = BigUint::from(MODULUS);
        for _ in 0..1000 {
            let a = FieldElement::random(&mut rng);
            let b = FieldElement::random(&mut rng);
            let (ba, bb) = (BigUint::from(a.value()), BigUint::from(b.value()));
            assert_eq!(BigUint::from((a + b).value()), (&ba + &bb) % &p);
            assert_eq!(BigUint::from((a * b).value()), (&ba * &bb) % &p);
            assert_eq!(BigUint::from((a - b).value()), (&ba + &p - &bb) % &p);
        }
    }

    #[test]
    fn inverse_of_two() {
        assert_eq!(fe(2).inv().unwrap().value(), 1152921504606846976);
        assert_eq!(egcd_inverse(2), 1152921504606846976);
    }

    #[test]
    fn inverse_matches_extended_euclid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let a = FieldElement::random_nonzero(&mut rng);
            let inv = a.inv().unwrap();
            assert_eq!(inv.value(), egcd_inverse(a.value()));
            assert_eq!(a * inv, FieldElement::ONE);
        }
    }

    #[test]
    fn fermat() {
        assert_eq!(fe(3).pow(MODULUS - 1), FieldElement::ONE);
    }

    #[test]
    fn zero_has_no_inverse() {
        assert_eq!(FieldElement::ZERO.inv(), Err(FieldError::DivisionByZero));
        let mut v = vec![fe(1), fe(0)];
        assert!(batch_inverse(&mut v).is_err());
    }

    #[test]
    fn batch_inverse_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<_> = (0..50)
            .map(|_| FieldElement::random_nonzero(&mut rng))
            .collect();
        let mut inv = vals.clone();
        batch_inverse(&mut inv).unwrap();
        for (v, i) in vals.iter().zip(&inv) {
            assert_eq!(v.inv().unwrap(), *i);
        }
    }

    #[test]
    fn signed_round_trip() {
        for v in [-5i64, 0, 7, -(1 << 40), 1 << 59] {
            assert_eq!(FieldElement::from_i64(v).to_signed(), v);
        }
        assert_eq!(FieldElement::from_i128(-3), FieldElement::from_i64(-3));
        assert_eq!(FieldElement::from_i128(MODULUS as i128 + 4), fe(4));
    }

    #[test]
    fn axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let a = FieldElement::random(&mut rng);
            let b = FieldElement::random(&mut rng);
            let c = FieldElement::random(&mut rng);
            assert_eq!((a + b) + c, a + (b + c));
            assert_eq!((a * b) * c, a * (b * c));
            assert_eq!(a + b, b + a);
            assert_eq!(a * b, b * a);
            assert_eq!(a * (b + c), a * b + a * c);
            assert_eq!(a + (-a), FieldElement::ZERO);
            if !a.is_zero() {
                assert_eq!(a * a.inv().unwrap(), FieldElement::ONE);
            }
        }
    }

    #[test]
    fn reduce_full_width() {
        let x = u128::MAX;
        let expect = (x % MODULUS as u128) as u64;
        assert_eq!(reduce128(x), expect);
    }

    #[test]
    fn byte_encoding_rejects_non_canonical() {
        assert_eq!(
            FieldElement::from_le_bytes(fe(9).to_le_bytes()),
            Some(fe(9))
        );
        assert_eq!(FieldElement::from_le_bytes(MODULUS.to_le_bytes()), None);
    }
}
