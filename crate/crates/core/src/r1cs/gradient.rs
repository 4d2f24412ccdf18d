//! The gradient-validity circuit for one node's shard.
//!
//! Public inputs are `[G_total, H_total, n_count]`. For each instance `i`
//! the private witness holds the label selector `y_i`, the encoded margin
//! `m_i`, the surrogate derivatives `g_i`, `h_i` and all auxiliary slots.
//!
//! Per instance, with `f` fraction bits, surrogate degree `d`, and
//! `R(w)` the cost of a range check of width `w`
//! (`bits(w) + 1` rows for a power of two, twice that otherwise):
//!
//! ```text
//! 1                    y_i * y_i = y_i
//! R(2 M 2^f)           m_i + M 2^f in [0, 2 M 2^f)
//! d (f + 2)            t_i = m_i * scale, then T_2 ..= T_d
//! 2 (f + 3)            label select and rescale, once for g and once for h
//! R(2 B 2^f)           g_i + B 2^f in [0, 2 B 2^f)
//! R(B 2^f)             h_i in [0, B 2^f)
//! ```
//!
//! plus three global rows: `sum g = G_total`, `sum h = H_total` and
//! `n * 1 = n_count`. With the defaults (`f = 16`, `M = 6`, `B = 32`,
//! `d = 14`) that is `378 n + 3` rows.
//!
//! The public inputs only ever appear in `C` rows, which keeps the verifier's
//! public-input term a plain product over `C_i(s)`.

use crate::boosting::{GradientPair, Label, LossSpec, Surrogate};
use crate::field::FieldElement;

use super::gadgets::{chebyshev_basis, fixed_mul, range_check, range_check_cost, rescale};
use super::{CircuitBuilder, ConstraintSystem, LinearCombination, R1csError, Variable, Witness};

pub const NUM_PUBLIC: usize = 3;
pub const DEFAULT_RANGE_BITS: u32 = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCircuitParams {
    n_instances: usize,
    gradient_bound: f64,
    range_bits: u32,
    surrogate: Surrogate,
}

impl GradientCircuitParams {
    pub fn new(n_instances: usize, loss: &LossSpec, range_bits: u32) -> Result<Self, R1csError> {
        let params = Self {
            n_instances,
            gradient_bound: loss.gradient_bound(),
            range_bits,
            surrogate: loss.surrogate().clone(),
        };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<(), R1csError> {
        let bad = |msg: String| Err(R1csError::InvalidParams(msg));
        if self.n_instances == 0 {
            return bad("n_instances must be at least 1".into());
        }
        if self.surrogate.degree() == 0 {
            return bad("surrogate degree must be at least 1".into());
        }
        if !(8..=40).contains(&self.range_bits) {
            return bad(format!("range_bits {} outside 8..=40", self.range_bits));
        }
        let limit = 1u64 << self.range_bits;
        if self.grad_width() >= limit {
            return bad(format!(
                "2 B 2^f = {} must stay below 2^range_bits = {limit}",
                self.grad_width()
            ));
        }
        if self.margin_width() > limit {
            return bad(format!(
                "2 M 2^f = {} exceeds 2^range_bits",
                self.margin_width()
            ));
        }
        // totals must not wrap around the field
        if (self.n_instances as u128) << self.range_bits >= 1u128 << 60 {
            return bad(format!(
                "{} instances of {} bits can overflow the field",
                self.n_instances, self.range_bits
            ));
        }
        Ok(())
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn fraction_bits(&self) -> u32 {
        self.surrogate.fraction_bits()
    }

    pub fn margin_clamp(&self) -> f64 {
        self.surrogate.margin_clamp()
    }

    pub fn gradient_bound(&self) -> f64 {
        self.gradient_bound
    }

    pub fn range_bits(&self) -> u32 {
        self.range_bits
    }

    pub fn surrogate(&self) -> &Surrogate {
        &self.surrogate
    }

    pub fn degree(&self) -> usize {
        self.surrogate.degree()
    }

    /// `round(B * 2^f)`
    pub fn bound_fp(&self) -> i64 {
        (self.gradient_bound * self.surrogate.one() as f64).round() as i64
    }

    fn margin_width(&self) -> u64 {
        2 * self.surrogate.clamp_fp() as u64
    }

    fn grad_width(&self) -> u64 {
        2 * self.bound_fp() as u64
    }

    fn hess_width(&self) -> u64 {
        self.bound_fp() as u64
    }

    /// Copy with a different instance count.
    pub fn with_instances(&self, n_instances: usize) -> Result<Self, R1csError> {
        let params = Self {
            n_instances,
            ..self.clone()
        };
        params.validate()?;
        Ok(params)
    }
}

/// Rows of [`build_gradient_circuit`], from the closed form in the module docs.
pub fn constraint_count(params: &GradientCircuitParams) -> usize {
    let f = params.fraction_bits() as usize;
    let per_instance = 1
        + range_check_cost(params.margin_width())
        + params.degree() * (f + 2)
        + 2 * (f + 3)
        + range_check_cost(params.grad_width())
        + range_check_cost(params.hess_width());
    params.n_instances * per_instance + NUM_PUBLIC
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceSlots {
    pub y: Variable,
    pub m: Variable,
    pub g: Variable,
    pub h: Variable,
}

#[derive(Debug, Clone)]
pub struct GradientCircuit {
    pub cs: ConstraintSystem,
    pub layout: Vec<InstanceSlots>,
}

impl GradientCircuit {
    pub fn g_total(&self) -> Variable {
        Variable::from_index(1)
    }

    pub fn h_total(&self) -> Variable {
        Variable::from_index(2)
    }

    pub fn n_count(&self) -> Variable {
        Variable::from_index(3)
    }
}

/// The statement a node proves: its gradient totals and instance count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PublicInputs {
    pub g_total: i64,
    pub h_total: i64,
    pub n_count: u64,
}

impl PublicInputs {
    pub fn to_field(&self) -> Vec<FieldElement> {
        vec![
            FieldElement::from_i64(self.g_total),
            FieldElement::from_i64(self.h_total),
            FieldElement::new(self.n_count),
        ]
    }

    pub fn from_field(values: &[FieldElement]) -> Result<Self, R1csError> {
        match values {
            [g, h, n] => Ok(Self {
                g_total: g.to_signed(),
                h_total: h.to_signed(),
                n_count: n.value(),
            }),
            _ => Err(R1csError::LengthMismatch {
                expected: NUM_PUBLIC,
                got: values.len(),
            }),
        }
    }

    /// `[8-byte count][8-byte field values]`, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let values = self.to_field();
        let mut out = Vec::with_capacity(8 + 8 * values.len());
        out.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, R1csError> {
        let (count, rest) = bytes.split_first_chunk::<8>().ok_or(R1csError::Encoding)?;
        let count = u64::from_le_bytes(*count) as usize;
        if rest.len() != 8 * count {
            return Err(R1csError::Encoding);
        }
        let values = rest
            .chunks_exact(8)
            .map(|c| {
                FieldElement::from_le_bytes(c.try_into().expect("chunk of 8"))
                    .ok_or(R1csError::Encoding)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_field(&values)
    }
}

#[derive(Debug, Clone)]
pub struct SynthesizedShard {
    pub witness: Witness,
    pub public: PublicInputs,
    /// Per-instance values as placed in the witness.
    pub gradients: Vec<GradientPair>,
}

type Tamper<'a> = &'a dyn Fn(usize, GradientPair) -> GradientPair;

fn lay_out(
    b: &mut CircuitBuilder,
    params: &GradientCircuitParams,
    shard: Option<&[(Label, f64)]>,
    tamper: Option<Tamper<'_>>,
) -> Result<(Vec<InstanceSlots>, Vec<GradientPair>), R1csError> {
    let s = params.surrogate();
    let f = params.fraction_bits();
    let fe = FieldElement::from_i64;
    let lin = |coeffs: &[i64], basis: &[LinearCombination]| {
        coeffs
            .iter()
            .zip(basis)
            .fold(LinearCombination::zero(), |acc, (&c, t)| {
                acc + &(t.clone() * fe(c))
            })
    };
    let delta = |neg: &[i64], pos: &[i64]| -> Vec<i64> {
        pos.iter().zip(neg).map(|(p, n)| p - n).collect()
    };
    let (g_neg, g_pos) = (
        s.grad_coeffs(Label::Negative),
        s.grad_coeffs(Label::Positive),
    );
    let (h_neg, h_pos) = (
        s.hess_coeffs(Label::Negative),
        s.hess_coeffs(Label::Positive),
    );
    let (g_delta, h_delta) = (delta(g_neg, g_pos), delta(h_neg, h_pos));

    let mut layout = Vec::with_capacity(params.n_instances);
    let mut gradients = Vec::with_capacity(params.n_instances);
    let (mut g_sum, mut h_sum) = (LinearCombination::zero(), LinearCombination::zero());
    for i in 0..params.n_instances {
        let item = match shard {
            Some(rows) => {
                let (label, margin) = rows[i];
                let m_fp = s
                    .encode_margin(margin)
                    .map_err(|_| R1csError::EncodingOverflow(margin))?;
                Some((label, m_fp))
            }
            None => None,
        };

        let y = b.alloc(item.map(|(l, _)| FieldElement::new(l.is_positive() as u64)))?;
        b.enforce(y.into(), y.into(), y.into());
        let m = b.alloc(item.map(|(_, m_fp)| fe(m_fp)))?;
        range_check(
            b,
            &(LinearCombination::from(m) + &LinearCombination::from_i64(s.clamp_fp())),
            params.margin_width(),
        )?;

        let t = fixed_mul(
            b,
            &m.into(),
            &LinearCombination::from_i64(s.margin_scale()),
            f,
        )?;
        let basis = chebyshev_basis(b, &t.into(), params.degree(), f)?;

        let select =
            |b: &mut CircuitBuilder, base: &[i64], delta: &[i64]| -> Result<Variable, R1csError> {
                let shift = lin(delta, &basis);
                let u_value = b.value(y).zip(b.eval(&shift)).map(|(yv, sv)| yv * sv);
                let u = b.alloc(u_value)?;
                b.enforce(y.into(), shift, u.into());
                rescale(b, &(lin(base, &basis) + &LinearCombination::from(u)), f)
            };
        let g = select(b, g_neg, &g_delta)?;
        let h = select(b, h_neg, &h_delta)?;

        let honest = GradientPair {
            g: b.value(g).map_or(0, |v| v.to_signed()),
            h: b.value(h).map_or(0, |v| v.to_signed()),
        };
        let placed = match tamper {
            Some(t) => t(i, honest),
            None => honest,
        };
        b.set_value(g, fe(placed.g));
        b.set_value(h, fe(placed.h));
        gradients.push(placed);

        range_check(
            b,
            &(LinearCombination::from(g) + &LinearCombination::from_i64(params.bound_fp())),
            params.grad_width(),
        )?;
        range_check(b, &h.into(), params.hess_width())?;

        g_sum = g_sum + &LinearCombination::from(g);
        h_sum = h_sum + &LinearCombination::from(h);
        layout.push(InstanceSlots { y, m, g, h });
    }

    let one = || LinearCombination::constant(FieldElement::ONE);
    let (g_total, h_total, n_count) = (b.public(0), b.public(1), b.public(2));
    b.enforce(g_sum, one(), g_total.into());
    b.enforce(h_sum, one(), h_total.into());
    b.enforce(
        LinearCombination::from_i64(params.n_instances as i64),
        one(),
        n_count.into(),
    );
    Ok((layout, gradients))
}

pub fn build_gradient_circuit(
    params: &GradientCircuitParams,
) -> Result<GradientCircuit, R1csError> {
    let mut b = CircuitBuilder::new(NUM_PUBLIC);
    let (layout, _) = lay_out(&mut b, params, None, None)?;
    let (cs, _) = b.finish()?;
    Ok(GradientCircuit { cs, layout })
}

fn synthesize(
    params: &GradientCircuitParams,
    shard: &[(Label, f64)],
    strict: bool,
    tamper: Option<Tamper<'_>>,
) -> Result<SynthesizedShard, R1csError> {
    if shard.len() != params.n_instances {
        return Err(R1csError::ShardSize {
            expected: params.n_instances,
            got: shard.len(),
        });
    }
    let mut b = CircuitBuilder::witness(NUM_PUBLIC, strict).without_rows();
    let (_, gradients) = lay_out(&mut b, params, Some(shard), tamper)?;
    let public = PublicInputs {
        g_total: gradients.iter().map(|p| p.g).sum(),
        h_total: gradients.iter().map(|p| p.h).sum(),
        n_count: params.n_instances as u64,
    };
    for (i, v) in public.to_field().into_iter().enumerate() {
        let var = b.public(i);
        b.set_value(var, v);
    }
    let (_, w) = b.finish()?;
    Ok(SynthesizedShard {
        witness: w.expect("witness mode"),
        public,
        gradients,
    })
}

/// Honest witness: margins are clamped and encoded, derivatives come from
/// the surrogate, public totals are their sums.
pub fn synthesize_witness(
    params: &GradientCircuitParams,
    shard: &[(Label, f64)],
) -> Result<SynthesizedShard, R1csError> {
    synthesize(params, shard, true, None)
}

/// Witness whose `g_i`, `h_i` slots (and hence totals) are replaced by
/// `tamper(i, honest)`. Every auxiliary slot is still derived honestly, so
/// the result generally violates the circuit.
pub fn synthesize_forged_witness(
    params: &GradientCircuitParams,
    shard: &[(Label, f64)],
    tamper: impl Fn(usize, GradientPair) -> GradientPair,
) -> Result<SynthesizedShard, R1csError> {
    synthesize(params, shard, false, Some(&tamper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boosting::surrogate::{DEFAULT_DEGREE, DEFAULT_GRADIENT_BOUND};
    use crate::r1cs::is_satisfied;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    fn loss() -> &'static LossSpec {
        static L: OnceLock<LossSpec> = OnceLock::new();
        L.get_or_init(|| LossSpec::fit(DEFAULT_DEGREE, 6.0, 16, DEFAULT_GRADIENT_BOUND).unwrap())
    }

    fn params(n: usize) -> GradientCircuitParams {
        GradientCircuitParams::new(n, loss(), DEFAULT_RANGE_BITS).unwrap()
    }

    fn random_shard(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<(Label, f64)> {
        (0..n)
            .map(|_| {
                (
                    Label::from_binary(rng.random()),
                    rng.random_range(-spread..spread),
                )
            })
            .collect()
    }

    #[test]
    fn single_instance_honest_is_satisfied() {
        let p = params(1);
        let circuit = build_gradient_circuit(&p).unwrap();
        let s = synthesize_witness(&p, &[(Label::Positive, 0.3)]).unwrap();
        assert!(is_satisfied(&circuit.cs, &s.witness).unwrap());
    }

    #[test]
    fn sign_flipped_gradient_breaks_the_circuit() {
        let p = params(1);
        let circuit = build_gradient_circuit(&p).unwrap();
        let mut s = synthesize_witness(&p, &[(Label::Positive, 0.3)]).unwrap();
        let slot = circuit.layout[0].g;
        let g = s.witness.values()[slot.index()];
        s.witness.set(slot.index(), -g).unwrap();
        assert!(!is_satisfied(&circuit.cs, &s.witness).unwrap());
    }

    #[test]
    fn count_matches_closed_form() {
        for n in [1, 2, 7] {
            let p = params(n);
            let circuit = build_gradient_circuit(&p).unwrap();
            assert_eq!(circuit.cs.num_constraints(), constraint_count(&p));
            assert_eq!(circuit.cs.num_constraints(), 378 * n + 3);
        }
    }

    #[test]
    fn honest_shards_satisfy() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = params(4);
        let circuit = build_gradient_circuit(&p).unwrap();
        for _ in 0..200 {
            let shard = random_shard(&mut rng, 4, 9.0);
            let s = synthesize_witness(&p, &shard).unwrap();
            assert!(is_satisfied(&circuit.cs, &s.witness).unwrap());
            for ((label, margin), got) in shard.iter().zip(&s.gradients) {
                let expect = p.surrogate().gradient_at(*label, *margin).unwrap();
                assert_eq!(*got, expect);
            }
        }
    }

    #[test]
    fn margins_beyond_clamp_still_satisfy() {
        let p = params(6);
        let circuit = build_gradient_circuit(&p).unwrap();
        let shard: Vec<_> = [-1e6, -6.0, -5.99999, 5.99999, 6.0, 1e6]
            .iter()
            .enumerate()
            .map(|(i, &m)| (Label::from_binary(i % 2 == 0), m))
            .collect();
        let s = synthesize_witness(&p, &shard).unwrap();
        assert!(is_satisfied(&circuit.cs, &s.witness).unwrap());
        assert!(synthesize_witness(&p, &[(Label::Positive, f64::NAN); 6]).is_err());
    }

    #[test]
    fn perturbing_any_gradient_or_total_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let p = params(3);
        let circuit = build_gradient_circuit(&p).unwrap();
        let s = synthesize_witness(&p, &random_shard(&mut rng, 3, 6.0)).unwrap();
        let mut slots: Vec<usize> = circuit
            .layout
            .iter()
            .flat_map(|l| [l.g.index(), l.h.index()])
            .collect();
        slots.extend([
            circuit.g_total().index(),
            circuit.h_total().index(),
            circuit.n_count().index(),
        ]);
        for slot in slots {
            for delta in [1i64, -1, 1 << 20] {
                let mut w = s.witness.clone();
                let v = w.values()[slot];
                w.set(slot, v + FieldElement::from_i64(delta)).unwrap();
                assert!(
                    !is_satisfied(&circuit.cs, &w).unwrap(),
                    "slot {slot} delta {delta}"
                );
            }
        }
    }

    #[test]
    fn forged_witness_violates() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let p = params(3);
        let circuit = build_gradient_circuit(&p).unwrap();
        let shard = random_shard(&mut rng, 3, 6.0);
        let s = synthesize_forged_witness(&p, &shard, |_, gp| GradientPair {
            g: -10 * gp.g,
            h: 10 * gp.h,
        })
        .unwrap();
        assert!(!is_satisfied(&circuit.cs, &s.witness).unwrap());
        assert_eq!(
            s.public.g_total,
            s.gradients.iter().map(|x| x.g).sum::<i64>()
        );
        // the identity tamper reproduces the honest witness
        let same = synthesize_forged_witness(&p, &shard, |_, gp| gp).unwrap();
        assert_eq!(
            same.witness,
            synthesize_witness(&p, &shard).unwrap().witness
        );
    }

    #[test]
    fn shard_size_and_params_validation() {
        let p = params(2);
        assert!(matches!(
            synthesize_witness(&p, &[(Label::Positive, 0.0)]),
            Err(R1csError::ShardSize {
                expected: 2,
                got: 1
            })
        ));
        assert!(GradientCircuitParams::new(0, loss(), 24).is_err());
        assert!(GradientCircuitParams::new(4, loss(), 22).is_err());
        assert!(GradientCircuitParams::new(1 << 40, loss(), 24).is_err());
    }

    #[test]
    fn public_inputs_bytes_round_trip() {
        let pi = PublicInputs {
            g_total: -123456,
            h_total: 99,
            n_count: 40,
        };
        let bytes = pi.to_bytes();
        assert_eq!(bytes.len(), 32);
        assert_eq!(&bytes[..8], &3u64.to_le_bytes());
        assert_eq!(PublicInputs::from_bytes(&bytes).unwrap(), pi);
        assert!(PublicInputs::from_bytes(&bytes[..31]).is_err());
    }
}
