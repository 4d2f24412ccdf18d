//! Random satisfiable systems for tests and benchmarks.

use rand::Rng;

use crate::field::FieldElement;

use super::{Constraint, ConstraintSystem, LinearCombination, Witness};

fn random_lc<R: Rng + ?Sized>(rng: &mut R, defined: usize) -> LinearCombination {
    let mut lc = LinearCombination::zero();
    for _ in 0..rng.random_range(1..=3) {
        lc.add_term(rng.random_range(0..defined), FieldElement::random(rng));
    }
    lc
}

/// `n_constraints` rows, each `(A . w) * (B . w) = w_out` for a fresh output
/// variable over earlier ones. The first `n_public` outputs are the public
/// inputs, so every public input appears in some `C` row.
pub fn random_satisfied_system<R: Rng + ?Sized>(
    rng: &mut R,
    n_constraints: usize,
    n_public: usize,
) -> (ConstraintSystem, Witness) {
    assert!(n_constraints >= 1 && n_public <= n_constraints);
    let n_seed = 2;
    let num_vars = 1 + n_constraints + n_seed;
    // public outputs at 1..=n_public, then seed inputs, then private outputs
    let mut values = vec![FieldElement::ZERO; num_vars];
    values[0] = FieldElement::ONE;
    let seed_start = 1 + n_public;
    for v in &mut values[seed_start..seed_start + n_seed] {
        *v = FieldElement::random(rng);
    }
    let mut defined: Vec<usize> = std::iter::once(0)
        .chain(seed_start..seed_start + n_seed)
        .collect();
    let mut rows = Vec::with_capacity(n_constraints);
    for j in 0..n_constraints {
        let out = if j < n_public {
            1 + j
        } else {
            seed_start + n_seed + (j - n_public)
        };
        let remap = |lc: LinearCombination| {
            let mut m = LinearCombination::zero();
            for &(i, c) in lc.terms() {
                m.add_term(defined[i], c);
            }
            m
        };
        let a = remap(random_lc(rng, defined.len()));
        let b = remap(random_lc(rng, defined.len()));
        values[out] = a.eval(&values) * b.eval(&values);
        rows.push(Constraint {
            a,
            b,
            c: LinearCombination::from_var(out),
        });
        defined.push(out);
    }
    let cs = ConstraintSystem::new(num_vars, n_public, rows).expect("well-formed system");
    (cs, Witness::new(values).expect("constant slot is one"))
}
