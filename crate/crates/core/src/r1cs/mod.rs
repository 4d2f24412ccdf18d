//! Rank-1 constraint systems: `(A_j . w) * (B_j . w) = (C_j . w)` for every row `j`.
//!
//! Index 0 of every witness is the constant one, indices `1..=num_public`
//! are the public inputs and the rest are private.

mod builder;
pub mod gadgets;
mod gradient;
pub mod random;

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::field::{reduce128, FieldElement};

pub use builder::{CircuitBuilder, Variable};
pub use gradient::{
    build_gradient_circuit, constraint_count, synthesize_forged_witness, synthesize_witness,
    GradientCircuit, GradientCircuitParams, InstanceSlots, PublicInputs, SynthesizedShard,
    DEFAULT_RANGE_BITS, NUM_PUBLIC,
};
pub use random::random_satisfied_system;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum R1csError {
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("variable {index} is out of range for {num_vars} variables")]
    VariableOutOfRange { index: usize, num_vars: usize },
    #[error("witness slot 0 must hold the constant one")]
    ConstantSlot,
    #[error("value {value} does not fit in {bits} bits")]
    ValueOutOfRange { value: FieldElement, bits: u32 },
    #[error("witness value missing for variable {0}")]
    MissingValue(usize),
    #[error("invalid circuit parameters: {0}")]
    InvalidParams(String),
    #[error("shard has {got} instances, circuit expects {expected}")]
    ShardSize { expected: usize, got: usize },
    #[error("margin {0} cannot be encoded")]
    EncodingOverflow(f64),
    #[error("malformed byte encoding")]
    Encoding,
}

/// Sparse linear form `sum coeff * w[index]`, sorted by index, no zero terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearCombination {
    terms: Vec<(usize, FieldElement)>,
}

impl LinearCombination {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_var(index: usize) -> Self {
        Self::term(index, FieldElement::ONE)
    }

    pub fn term(index: usize, coeff: FieldElement) -> Self {
        if coeff.is_zero() {
            return Self::zero();
        }
        Self {
            terms: vec![(index, coeff)],
        }
    }

    /// `c * one`
    pub fn constant(c: FieldElement) -> Self {
        Self::term(0, c)
    }

    pub fn from_i64(c: i64) -> Self {
        Self::constant(FieldElement::from_i64(c))
    }

    pub fn terms(&self) -> &[(usize, FieldElement)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.last().map(|t| t.0)
    }

    pub fn add_term(&mut self, index: usize, coeff: FieldElement) {
        *self = std::mem::take(self) + &Self::term(index, coeff);
    }

    pub fn eval(&self, values: &[FieldElement]) -> FieldElement {
        // each product is below 2^122, so 32 of them fit in a u128
        let mut acc = 0u128;
        let mut out = FieldElement::ZERO;
        for (n, &(i, c)) in self.terms.iter().enumerate() {
            acc += c.value() as u128 * values[i].value() as u128;
            if n % 32 == 31 {
                out += FieldElement::new(reduce128(acc));
                acc = 0;
            }
        }
        out + FieldElement::new(reduce128(acc))
    }
}

impl From<Variable> for LinearCombination {
    fn from(v: Variable) -> Self {
        Self::from_var(v.index())
    }
}

impl Add<&LinearCombination> for LinearCombination {
    type Output = LinearCombination;
    fn add(self, rhs: &LinearCombination) -> LinearCombination {
        let (a, b) = (&self.terms, &rhs.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x.0 == y.0 => {
                    i += 1;
                    j += 1;
                    (x.0, x.1 + y.1)
                }
                (Some(&x), Some(&y)) if x.0 < y.0 => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            if !next.1.is_zero() {
                out.push(next);
            }
        }
        LinearCombination { terms: out }
    }
}

impl Add for LinearCombination {
    type Output = LinearCombination;
    fn add(self, rhs: LinearCombination) -> LinearCombination {
        self + &rhs
    }
}

impl Neg for LinearCombination {
    type Output = LinearCombination;
    fn neg(self) -> LinearCombination {
        self * -FieldElement::ONE
    }
}

impl Sub<&LinearCombination> for LinearCombination {
    type Output = LinearCombination;
    fn sub(self, rhs: &LinearCombination) -> LinearCombination {
        self + &(-rhs.clone())
    }
}

impl Sub for LinearCombination {
    type Output = LinearCombination;
    fn sub(self, rhs: LinearCombination) -> LinearCombination {
        self - &rhs
    }
}

impl Mul<FieldElement> for LinearCombination {
    type Output = LinearCombination;
    fn mul(self, k: FieldElement) -> LinearCombination {
        if k.is_zero() {
            return LinearCombination::zero();
        }
        LinearCombination {
            terms: self.terms.into_iter().map(|(i, c)| (i, c * k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub a: LinearCombination,
    pub b: LinearCombination,
    pub c: LinearCombination,
}

impl Constraint {
    pub fn holds(&self, values: &[FieldElement]) -> bool {
        self.a.eval(values) * self.b.eval(values) == self.c.eval(values)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    num_vars: usize,
    num_public: usize,
    rows: Vec<Constraint>,
}

impl ConstraintSystem {
    pub fn new(
        num_vars: usize,
        num_public: usize,
        rows: Vec<Constraint>,
    ) -> Result<Self, R1csError> {
        if num_public >= num_vars {
            return Err(R1csError::InvalidParams(format!(
                "{num_public} public inputs need more than {num_vars} variables"
            )));
        }
        for row in &rows {
            for lc in [&row.a, &row.b, &row.c] {
                if let Some(index) = lc.max_index().filter(|&i| i >= num_vars) {
                    return Err(R1csError::VariableOutOfRange { index, num_vars });
                }
            }
        }
        Ok(Self {
            num_vars,
            num_public,
            rows,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_public(&self) -> usize {
        self.num_public
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    /// Index of the first violated row, if any.
    pub fn first_violation(&self, w: &Witness) -> Result<Option<usize>, R1csError> {
        if w.values.len() != self.num_vars {
            return Err(R1csError::LengthMismatch {
                expected: self.num_vars,
                got: w.values.len(),
            });
        }
        Ok(self.rows.iter().position(|r| !r.holds(&w.values)))
    }
}

/// Full assignment; `values[0] == 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    values: Vec<FieldElement>,
}

impl Witness {
    pub fn new(values: Vec<FieldElement>) -> Result<Self, R1csError> {
        if values.first() != Some(&FieldElement::ONE) {
            return Err(R1csError::ConstantSlot);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `values[1..=num_public]`
    pub fn public_slice(&self, num_public: usize) -> &[FieldElement] {
        &self.values[1..=num_public]
    }

    /// Overwrites one slot. Slot 0 is refused.
    pub fn set(&mut self, index: usize, value: FieldElement) -> Result<(), R1csError> {
        if index == 0 {
            return Err(R1csError::ConstantSlot);
        }
        let len = self.values.len();
        *self
            .values
            .get_mut(index)
            .ok_or(R1csError::VariableOutOfRange {
                index,
                num_vars: len,
            })? = value;
        Ok(())
    }
}

pub fn is_satisfied(cs: &ConstraintSystem, w: &Witness) -> Result<bool, R1csError> {
    Ok(cs.first_violation(w)?.is_none())
}
