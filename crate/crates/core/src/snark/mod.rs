//! A Pinocchio-style argument for R1CS with a three-pairing check:
//!
//! ```text
//! e(piA, piB) == e(piC, G) * e(V_pub, H)        G = H = g2
//! ```
//!
//! There are no knowledge-of-exponent terms, so the argument is sound only
//! against provers that run [`prove`] as published. A prover free to pick
//! arbitrary group elements can satisfy the equation for any statement; the
//! threat model here is nodes that poison their inputs, not ones that forge
//! group elements.
//!
//! The prover works in evaluation form. With `a_j, b_j, c_j` the row values
//! of the witness and `P_ab` the degree `< m` interpolant of `a_j b_j`,
//!
//! ```text
//! F = (A_w + d1 Z)(B_w + d2 Z) - P_ab
//! ```
//!
//! vanishes on the domain and has degree `<= 2m`, so its values at
//! `m + 1 ..= 2m + 1` pin it down and `g1^{F(s)}` follows from the CRS
//! quotient bases. For a satisfying witness `P_ab = C_w` and
//! `F = Z (H_q + d2 A_w + d1 B_w + d1 d2 Z)`. Otherwise `P_ab - C_w` is
//! exactly the remainder of `A_w B_w - C_w` modulo `Z`, so forge mode is the
//! same computation with that remainder dropped, and the proof fails the
//! check unless the remainder happens to vanish at `s`.

mod bench;
pub mod domain;
pub mod extrapolate;
mod qap;
mod setup;

use rand::Rng;
use thiserror::Error;

use crate::bilinear::{multi_exp, pairing, GroupElement, GroupError, Side};
use crate::field::FieldElement;
use crate::r1cs::{R1csError, Witness};

pub use bench::{bench_prove_verify, BenchReport};
pub use extrapolate::Extrapolator;
pub use qap::{r1cs_to_qap, Matrix, Qap, QapEvaluation};
pub use setup::{setup, Crs, ToxicWaste};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnarkError {
    #[error("the constraint system has no rows")]
    EmptySystem,
    #[error("witness violates constraint {row}")]
    UnsatisfiedWitness { row: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("evaluation point lies in the domain")]
    PointInDomain,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("malformed proof encoding")]
    Encoding,
    #[error(transparent)]
    Circuit(#[from] R1csError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProveMode {
    /// Refuse witnesses that violate the system.
    Strict,
    /// Run the same pipeline on any witness, dropping the division remainder.
    Forge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Proof {
    pub pi_a: GroupElement,
    pub pi_b: GroupElement,
    pub pi_c: GroupElement,
}

impl Proof {
    /// `[8-byte count = 3][piA][piB][piC]`, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32);
        out.extend_from_slice(&3u64.to_le_bytes());
        for e in [self.pi_a, self.pi_b, self.pi_c] {
            out.extend_from_slice(&e.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnarkError> {
        if bytes.len() != 32 || bytes[..8] != 3u64.to_le_bytes() {
            return Err(SnarkError::Encoding);
        }
        let elem = |side, i: usize| {
            let chunk: [u8; 8] = bytes[8 + 8 * i..16 + 8 * i].try_into().expect("8 bytes");
            GroupElement::from_bytes(side, chunk).map_err(|_| SnarkError::Encoding)
        };
        Ok(Self {
            pi_a: elem(Side::G1, 0)?,
            pi_b: elem(Side::G2, 1)?,
            pi_c: elem(Side::G1, 2)?,
        })
    }
}

pub fn prove<R: Rng + ?Sized>(
    crs: &Crs,
    qap: &Qap,
    w: &Witness,
    mode: ProveMode,
    rng: &mut R,
) -> Result<Proof, SnarkError> {
    let m = qap.num_constraints();
    if crs.num_constraints() != m || crs.num_vars() != qap.num_vars() {
        return Err(SnarkError::LengthMismatch {
            expected: crs.num_vars(),
            got: qap.num_vars(),
        });
    }
    let [a, b, c] = qap.row_values(w)?;
    let ab: Vec<FieldElement> = a.iter().zip(&b).map(|(&x, &y)| x * y).collect();
    if mode == ProveMode::Strict {
        if let Some(row) = ab.iter().zip(&c).position(|(x, y)| x != y) {
            return Err(SnarkError::UnsatisfiedWitness { row });
        }
    }

    let d1 = FieldElement::random(rng);
    let d2 = FieldElement::random(rng);

    let ext = Extrapolator::new(m, m + 1);
    let z = ext.vanishing();
    let (a_ext, b_ext, ab_ext) = (ext.extend(&a), ext.extend(&b), ext.extend(&ab));
    let quotient: Vec<FieldElement> = (0..=m)
        .map(|k| (a_ext[k] + d1 * z[k]) * (b_ext[k] + d2 * z[k]) - ab_ext[k])
        .collect();

    let vals = w.values();
    let pi_a = multi_exp(Side::G1, crs.a_g1(), vals)?.mul(&crs.z_g1().exp(d1))?;
    let pi_b = multi_exp(Side::G2, crs.b_g2(), vals)?.mul(&crs.z_g2().exp(d2))?;
    let first_private = crs.num_public() + 1;
    let c_priv = multi_exp(
        Side::G1,
        &crs.c_g1()[first_private..],
        &vals[first_private..],
    )?;
    let pi_c = c_priv.mul(&multi_exp(Side::G1, crs.quotient_g1(), &quotient)?)?;
    Ok(Proof { pi_a, pi_b, pi_c })
}

/// `prod_{i <= num_public} (g1^{C_i(s)})^{w_i}` with `w_0 = 1`.
pub fn compute_vpub(crs: &Crs, public_inputs: &[FieldElement]) -> Result<GroupElement, SnarkError> {
    if public_inputs.len() != crs.num_public() {
        return Err(SnarkError::LengthMismatch {
            expected: crs.num_public(),
            got: public_inputs.len(),
        });
    }
    let scalars: Vec<FieldElement> = std::iter::once(FieldElement::ONE)
        .chain(public_inputs.iter().copied())
        .collect();
    Ok(multi_exp(Side::G1, &crs.c_g1()[..scalars.len()], &scalars)?)
}

/// Any malformed input (wrong sides, wrong length) is a rejection.
pub fn verify(crs: &Crs, public_inputs: &[FieldElement], proof: &Proof) -> bool {
    let check = || -> Result<bool, SnarkError> {
        let vpub = compute_vpub(crs, public_inputs)?;
        let g = crs.g2();
        let lhs = pairing(&proof.pi_a, &proof.pi_b)?;
        let rhs = pairing(&proof.pi_c, &g)?.mul(&pairing(&vpub, &g)?)?;
        Ok(lhs == rhs)
    };
    check().unwrap_or(false)
}
