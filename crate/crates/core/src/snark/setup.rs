use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::bilinear::{GroupElement, Side};
use crate::field::FieldElement;

use super::domain::{in_domain, lagrange_basis_at};
use super::qap::Qap;

/// Public parameters for one circuit.
///
/// Besides the per-variable encodings, the prover gets `g1^{L_k(s)}` for the
/// Lagrange basis of the doubled domain `{1, .., 2m + 1}` at `k > m`: the
/// quotient term `H'(s) Z(s)` is a polynomial of degree `<= 2m` that vanishes
/// on `{1, .., m}`, so those `m + 1` bases suffice to encode it.
#[derive(Debug, Clone)]
pub struct Crs {
    pub(super) num_constraints: usize,
    pub(super) num_public: usize,
    pub(super) a_g1: Vec<GroupElement>,
    pub(super) b_g2: Vec<GroupElement>,
    pub(super) c_g1: Vec<GroupElement>,
    pub(super) z_g1: GroupElement,
    pub(super) z_g2: GroupElement,
    pub(super) quotient_g1: Vec<GroupElement>,
}

impl Crs {
    pub fn num_constraints(&self) -> usize {
        self.num_constraints
    }

    pub fn num_public(&self) -> usize {
        self.num_public
    }

    pub fn num_vars(&self) -> usize {
        self.a_g1.len()
    }

    pub fn a_g1(&self) -> &[GroupElement] {
        &self.a_g1
    }

    pub fn b_g2(&self) -> &[GroupElement] {
        &self.b_g2
    }

    pub fn c_g1(&self) -> &[GroupElement] {
        &self.c_g1
    }

    pub fn z_g1(&self) -> GroupElement {
        self.z_g1
    }

    pub fn z_g2(&self) -> GroupElement {
        self.z_g2
    }

    /// `g1^{L_k(s)}` for `k = m + 1 ..= 2m + 1`.
    pub fn quotient_g1(&self) -> &[GroupElement] {
        &self.quotient_g1
    }

    /// `G` and `H` of the verification equation; both are the G2 generator.
    pub fn g2(&self) -> GroupElement {
        GroupElement::generator(Side::G2)
    }
}

/// The setup secret. Only setup and white-box tests ever hold one.
pub struct ToxicWaste {
    s: FieldElement,
}

impl ToxicWaste {
    pub fn s(&self) -> FieldElement {
        self.s
    }
}

/// Samples `s` outside `{0, 1, .., 2m + 1}` and encodes the circuit at `s`.
pub fn setup(qap: &Qap, seed: u64) -> (Crs, ToxicWaste) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let m = qap.num_constraints();
    let doubled = 2 * m + 1;
    let s = loop {
        let s = FieldElement::random(&mut rng);
        if !s.is_zero() && !in_domain(doubled, s) {
            break s;
        }
    };
    let ev = qap.evaluate_at(s).expect("s is outside the domain");
    let g1 = GroupElement::generator(Side::G1);
    let g2 = GroupElement::generator(Side::G2);
    let (wide_basis, _) = lagrange_basis_at(doubled, s);
    let crs = Crs {
        num_constraints: m,
        num_public: qap.num_public(),
        a_g1: ev.a.iter().map(|&v| g1.exp(v)).collect(),
        b_g2: ev.b.iter().map(|&v| g2.exp(v)).collect(),
        c_g1: ev.c.iter().map(|&v| g1.exp(v)).collect(),
        z_g1: g1.exp(ev.z),
        z_g2: g2.exp(ev.z),
        quotient_g1: wide_basis[m..].iter().map(|&v| g1.exp(v)).collect(),
    };
    (crs, ToxicWaste { s })
}
