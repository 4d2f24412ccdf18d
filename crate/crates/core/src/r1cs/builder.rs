use crate::field::FieldElement;

use super::{Constraint, ConstraintSystem, LinearCombination, R1csError, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(usize);

impl Variable {
    pub const ONE: Variable = Variable(0);

    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn from_index(index: usize) -> Self {
        Variable(index)
    }
}

/// Allocates variables and records constraints.
///
/// In shape mode no values are tracked. In witness mode every allocation
/// carries a value; strict witness mode turns out-of-range hints into errors,
/// lenient mode records truncated bits so an invalid witness can still be laid
/// out.
#[derive(Debug)]
pub struct CircuitBuilder {
    num_public: usize,
    num_vars: usize,
    rows: Vec<Constraint>,
    values: Option<Vec<FieldElement>>,
    strict: bool,
    record_rows: bool,
}

impl CircuitBuilder {
    /// Shape mode. Public inputs occupy `1..=num_public`.
    pub fn new(num_public: usize) -> Self {
        Self {
            num_public,
            num_vars: 1 + num_public,
            rows: Vec::new(),
            values: None,
            strict: true,
            record_rows: true,
        }
    }

    /// Witness mode; public slots start at zero and are filled with
    /// [`set_value`](Self::set_value).
    pub fn witness(num_public: usize, strict: bool) -> Self {
        let mut values = vec![FieldElement::ZERO; 1 + num_public];
        values[0] = FieldElement::ONE;
        Self {
            values: Some(values),
            strict,
            ..Self::new(num_public)
        }
    }

    /// Skip storing rows when only the assignment is wanted.
    pub fn without_rows(mut self) -> Self {
        self.record_rows = false;
        self
    }

    pub fn is_witness_mode(&self) -> bool {
        self.values.is_some()
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn public(&self, i: usize) -> Variable {
        assert!(
            i < self.num_public,
            "public input {i} of {}",
            self.num_public
        );
        Variable(1 + i)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    /// New private variable. In witness mode `value` must be `Some`.
    pub fn alloc(&mut self, value: Option<FieldElement>) -> Result<Variable, R1csError> {
        let index = self.num_vars;
        if let Some(vals) = self.values.as_mut() {
            vals.push(value.ok_or(R1csError::MissingValue(index))?);
        }
        self.num_vars += 1;
        Ok(Variable(index))
    }

    pub fn set_value(&mut self, var: Variable, value: FieldElement) {
        if let Some(vals) = self.values.as_mut() {
            vals[var.0] = value;
        }
    }

    pub fn value(&self, var: Variable) -> Option<FieldElement> {
        self.values.as_ref().map(|v| v[var.0])
    }

    /// Evaluates `lc` on the partial assignment.
    pub fn eval(&self, lc: &LinearCombination) -> Option<FieldElement> {
        self.values.as_ref().map(|v| lc.eval(v))
    }

    pub fn enforce(&mut self, a: LinearCombination, b: LinearCombination, c: LinearCombination) {
        if self.record_rows {
            self.rows.push(Constraint { a, b, c });
        }
    }

    pub fn finish(self) -> Result<(ConstraintSystem, Option<Witness>), R1csError> {
        let cs = ConstraintSystem::new(self.num_vars, self.num_public, self.rows)?;
        let w = self.values.map(Witness::new).transpose()?;
        Ok((cs, w))
    }
}
