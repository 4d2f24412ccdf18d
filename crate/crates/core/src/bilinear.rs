//! A bilinear group `e: G1 x G2 -> GT` of prime order `p`.
//!
//! This is the transparent-exponent reference backend: an element is stored
//! as its discrete log with respect to the side's generator. The pairing is
//! therefore exactly bilinear and non-degenerate, but offers **no**
//! cryptographic hardness. Callers only ever see elements through the
//! operations below, so a real pairing-friendly curve can stand in behind the
//! same surface.

use std::fmt;

use thiserror::Error;

use crate::field::FieldElement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    G1,
    G2,
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("cannot combine elements of {0:?} and {1:?}")]
    SideMismatch(Side, Side),
    #[error("non-canonical group element encoding")]
    InvalidEncoding,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupElement {
    side: Side,
    exponent: FieldElement,
}

impl GroupElement {
    pub fn generator(side: Side) -> Self {
        Self {
            side,
            exponent: FieldElement::ONE,
        }
    }

    pub fn identity(side: Side) -> Self {
        Self {
            side,
            exponent: FieldElement::ZERO,
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn is_identity(&self) -> bool {
        self.exponent.is_zero()
    }

    /// `self^k`
    pub fn exp(&self, k: FieldElement) -> Self {
        Self {
            side: self.side,
            exponent: self.exponent * k,
        }
    }

    /// Group law.
    pub fn mul(&self, other: &Self) -> Result<Self, GroupError> {
        if self.side != other.side {
            return Err(GroupError::SideMismatch(self.side, other.side));
        }
        Ok(Self {
            side: self.side,
            exponent: self.exponent + other.exponent,
        })
    }

    pub fn inverse(&self) -> Self {
        Self {
            side: self.side,
            exponent: -self.exponent,
        }
    }

    /// Backend encoding, 8 bytes little-endian. The side is not encoded.
    pub fn to_bytes(&self) -> [u8; 8] {
        self.exponent.to_le_bytes()
    }

    pub fn from_bytes(side: Side, bytes: [u8; 8]) -> Result<Self, GroupError> {
        let exponent = FieldElement::from_le_bytes(bytes).ok_or(GroupError::InvalidEncoding)?;
        Ok(Self { side, exponent })
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // the exponent is the whole secret in this backend; keep it out of logs
        write!(f, "GroupElement({:?}, ..)", self.side)
    }
}

/// Free-function form of [`GroupElement::exp`].
pub fn group_exp(base: &GroupElement, k: FieldElement) -> GroupElement {
    base.exp(k)
}

/// Free-function form of [`GroupElement::mul`].
pub fn group_mul(a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
    a.mul(b)
}

/// `e(a, b)` for `a` in G1 and `b` in G2.
pub fn pairing(a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
    match (a.side, b.side) {
        (Side::G1, Side::G2) => Ok(GroupElement {
            side: Side::Gt,
            exponent: a.exponent * b.exponent,
        }),
        (Side::G1, other) => Err(GroupError::SideMismatch(Side::G2, other)),
        (other, _) => Err(GroupError::SideMismatch(Side::G1, other)),
    }
}

/// `prod bases[i]^scalars[i]`, all on one side.
pub fn multi_exp(
    side: Side,
    bases: &[GroupElement],
    scalars: &[FieldElement],
) -> Result<GroupElement, GroupError> {
    let mut acc = GroupElement::identity(side);
    for (b, &k) in bases.iter().zip(scalars) {
        if k.is_zero() {
            continue;
        }
        acc = acc.mul(&b.exp(k))?;
    }
    Ok(acc)
}
