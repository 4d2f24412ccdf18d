//! Quadratic arithmetic program over the domain `{1, .., m}`.
//!
//! `A_i(j)` is the coefficient of variable `i` in row `j`'s `A` form (same
//! for `B`, `C`), and `Z(x) = prod (x - j)`. The per-variable polynomials are
//! kept in their sparse evaluation form, which is what setup and the prover
//! consume; coefficient form is produced on request.

use crate::field::FieldElement;
use crate::poly::{lagrange_interpolate, Polynomial};
use crate::r1cs::{ConstraintSystem, LinearCombination, Witness};

use super::domain::{in_domain, lagrange_basis_at};
use super::SnarkError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matrix {
    A,
    B,
    C,
}

#[derive(Debug, Clone)]
pub struct Qap {
    cs: ConstraintSystem,
}

/// Every `A_i(s)`, `B_i(s)`, `C_i(s)` and `Z(s)` at one point.
#[derive(Debug, Clone)]
pub struct QapEvaluation {
    pub a: Vec<FieldElement>,
    pub b: Vec<FieldElement>,
    pub c: Vec<FieldElement>,
    pub z: FieldElement,
}

pub fn r1cs_to_qap(cs: &ConstraintSystem) -> Result<Qap, SnarkError> {
    if cs.num_constraints() == 0 {
        return Err(SnarkError::EmptySystem);
    }
    Ok(Qap { cs: cs.clone() })
}

impl Qap {
    pub fn num_constraints(&self) -> usize {
        self.cs.num_constraints()
    }

    pub fn num_vars(&self) -> usize {
        self.cs.num_vars()
    }

    pub fn num_public(&self) -> usize {
        self.cs.num_public()
    }

    pub fn constraint_system(&self) -> &ConstraintSystem {
        &self.cs
    }

    fn row_form(&self, j: usize, which: Matrix) -> &LinearCombination {
        let row = &self.cs.rows()[j];
        match which {
            Matrix::A => &row.a,
            Matrix::B => &row.b,
            Matrix::C => &row.c,
        }
    }

    /// `Z(x)` in coefficient form.
    pub fn target(&self) -> Polynomial {
        let roots: Vec<_> = (1..=self.num_constraints() as u64)
            .map(FieldElement::new)
            .collect();
        Polynomial::from_roots(&roots)
    }

    /// `A_i`, `B_i` or `C_i` in coefficient form.
    pub fn variable_poly(&self, which: Matrix, var: usize) -> Polynomial {
        let pts: Vec<_> = (0..self.num_constraints())
            .map(|j| {
                let coeff = self
                    .row_form(j, which)
                    .terms()
                    .iter()
                    .find(|t| t.0 == var)
                    .map_or(FieldElement::ZERO, |t| t.1);
                (FieldElement::new(j as u64 + 1), coeff)
            })
            .collect();
        lagrange_interpolate(&pts).expect("domain points are distinct")
    }

    /// `(A . w, B . w, C . w)` on every domain point.
    pub fn row_values(&self, w: &Witness) -> Result<[Vec<FieldElement>; 3], SnarkError> {
        if w.len() != self.num_vars() {
            return Err(SnarkError::LengthMismatch {
                expected: self.num_vars(),
                got: w.len(),
            });
        }
        let vals = w.values();
        let eval = |which| {
            (0..self.num_constraints())
                .map(|j| self.row_form(j, which).eval(vals))
                .collect()
        };
        Ok([eval(Matrix::A), eval(Matrix::B), eval(Matrix::C)])
    }

    /// `A_w`, `B_w`, `C_w` in coefficient form.
    pub fn witness_polys(&self, w: &Witness) -> Result<[Polynomial; 3], SnarkError> {
        let interp = |vals: &[FieldElement]| {
            let pts: Vec<_> = vals
                .iter()
                .enumerate()
                .map(|(j, &v)| (FieldElement::new(j as u64 + 1), v))
                .collect();
            lagrange_interpolate(&pts).expect("domain points are distinct")
        };
        let [a, b, c] = self.row_values(w)?;
        Ok([interp(&a), interp(&b), interp(&c)])
    }

    /// Remainder of `A_w B_w - C_w` modulo `Z`; zero iff `w` satisfies the system.
    pub fn divisibility_remainder(&self, w: &Witness) -> Result<Polynomial, SnarkError> {
        let [a, b, c] = self.witness_polys(w)?;
        let (_, r) = (&(&a * &b) - &c)
            .divmod(&self.target())
            .expect("Z is monic");
        Ok(r)
    }

    /// Evaluates every variable polynomial at `s`, outside the domain.
    pub fn evaluate_at(&self, s: FieldElement) -> Result<QapEvaluation, SnarkError> {
        let m = self.num_constraints();
        if in_domain(m, s) {
            return Err(SnarkError::PointInDomain);
        }
        let (basis, z) = lagrange_basis_at(m, s);
        let n = self.num_vars();
        let mut out = QapEvaluation {
            a: vec![FieldElement::ZERO; n],
            b: vec![FieldElement::ZERO; n],
            c: vec![FieldElement::ZERO; n],
            z,
        };
        for (row, &l) in self.cs.rows().iter().zip(&basis) {
            for (lc, acc) in [
                (&row.a, &mut out.a),
                (&row.b, &mut out.b),
                (&row.c, &mut out.c),
            ] {
                for &(i, coeff) in lc.terms() {
                    acc[i] += coeff * l;
                }
            }
        }
        Ok(out)
    }
}
