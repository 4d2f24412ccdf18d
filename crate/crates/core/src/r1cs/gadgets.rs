//! Reusable constraint gadgets. Fixed-point values carry `f` fraction bits
//! and are mapped into the field as `p - |x|` when negative.

use crate::field::FieldElement;

use super::{CircuitBuilder, LinearCombination, R1csError, Variable};

fn pow2(bits: u32) -> FieldElement {
    FieldElement::new(1u64 << bits)
}

fn signed(b: &CircuitBuilder, lc: &LinearCombination) -> Option<i128> {
    b.eval(lc).map(|v| v.to_signed() as i128)
}

/// Splits `lc` into `n_bits` boolean variables, least significant first.
///
/// Adds `n_bits` booleanity rows `b * b = b` and one recomposition row.
pub fn bit_decompose(
    b: &mut CircuitBuilder,
    lc: &LinearCombination,
    n_bits: u32,
) -> Result<Vec<Variable>, R1csError> {
    assert!(n_bits < 61, "{n_bits} bits exceed the field");
    let value = b.eval(lc);
    if let Some(v) = value {
        if b.is_strict() && v.value() >> n_bits != 0 {
            return Err(R1csError::ValueOutOfRange {
                value: v,
                bits: n_bits,
            });
        }
    }
    let mut bits = Vec::with_capacity(n_bits as usize);
    let mut recomposed = LinearCombination::zero();
    for j in 0..n_bits {
        let bit = b.alloc(value.map(|v| FieldElement::new((v.value() >> j) & 1)))?;
        b.enforce(bit.into(), bit.into(), bit.into());
        recomposed = recomposed + &LinearCombination::term(bit.index(), pow2(j));
        bits.push(bit);
    }
    b.enforce(
        recomposed,
        LinearCombination::constant(FieldElement::ONE),
        lc.clone(),
    );
    Ok(bits)
}

/// Bits needed to hold every value below `width`.
pub fn bits_for(width: u64) -> u32 {
    64 - (width - 1).leading_zeros()
}

/// Constrains `0 <= lc < width`. A power-of-two width costs one
/// decomposition; any other width checks `lc` and `width - 1 - lc`.
pub fn range_check(
    b: &mut CircuitBuilder,
    lc: &LinearCombination,
    width: u64,
) -> Result<(), R1csError> {
    assert!(width >= 2, "range width {width}");
    let bits = bits_for(width);
    bit_decompose(b, lc, bits)?;
    if !width.is_power_of_two() {
        let mirrored = LinearCombination::from_i64(width as i64 - 1) - lc;
        bit_decompose(b, &mirrored, bits)?;
    }
    Ok(())
}

/// Rows added by [`range_check`].
pub fn range_check_cost(width: u64) -> usize {
    let one = bits_for(width) as usize + 1;
    if width.is_power_of_two() {
        one
    } else {
        2 * one
    }
}

/// `c = floor(a * b / 2^f)`, enforced as `a * b = c * 2^f + r` with
/// `r` in `[0, 2^f)`. Costs `f + 2` rows.
pub fn fixed_mul(
    b: &mut CircuitBuilder,
    lhs: &LinearCombination,
    rhs: &LinearCombination,
    fraction_bits: u32,
) -> Result<Variable, R1csError> {
    let product = signed(b, lhs).zip(signed(b, rhs)).map(|(x, y)| x * y);
    divide_pow2(b, product, fraction_bits, |b, out| {
        b.enforce(lhs.clone(), rhs.clone(), out);
    })
}

/// `c = floor(lc / 2^f)`, enforced as `lc * 1 = c * 2^f + r`. Costs `f + 2` rows.
pub fn rescale(
    b: &mut CircuitBuilder,
    lc: &LinearCombination,
    fraction_bits: u32,
) -> Result<Variable, R1csError> {
    let value = signed(b, lc);
    divide_pow2(b, value, fraction_bits, |b, out| {
        b.enforce(
            lc.clone(),
            LinearCombination::constant(FieldElement::ONE),
            out,
        );
    })
}

fn divide_pow2(
    b: &mut CircuitBuilder,
    numerator: Option<i128>,
    fraction_bits: u32,
    enforce: impl FnOnce(&mut CircuitBuilder, LinearCombination),
) -> Result<Variable, R1csError> {
    let scale = 1i128 << fraction_bits;
    let q = b.alloc(numerator.map(|n| FieldElement::from_i128(n.div_euclid(scale))))?;
    let r = b.alloc(numerator.map(|n| FieldElement::from_i128(n.rem_euclid(scale))))?;
    let out = LinearCombination::term(q.index(), pow2(fraction_bits)) + &LinearCombination::from(r);
    enforce(b, out);
    bit_decompose(b, &r.into(), fraction_bits)?;
    Ok(q)
}

/// Fixed-point Horner evaluation of `sum coeffs[k] x^k`:
/// `y = c_d`, then `y = floor(y * x / 2^f) + c_k` down to `k = 0`.
pub fn poly_eval(
    b: &mut CircuitBuilder,
    x: &LinearCombination,
    coeffs: &[i64],
    fraction_bits: u32,
) -> Result<LinearCombination, R1csError> {
    let Some((&top, rest)) = coeffs.split_last() else {
        return Ok(LinearCombination::zero());
    };
    let mut y = LinearCombination::from_i64(top);
    for &c in rest.iter().rev() {
        let prod = fixed_mul(b, &y, x, fraction_bits)?;
        y = LinearCombination::from(prod) + &LinearCombination::from_i64(c);
    }
    Ok(y)
}

/// Fixed-point Chebyshev polynomials `T_0..=T_degree` of `t`:
/// `T_0 = 2^f`, `T_1 = t`, `T_k = 2 floor(t T_{k-1} / 2^f) - T_{k-2}`.
/// Costs `(degree - 1) * (f + 2)` rows.
pub fn chebyshev_basis(
    b: &mut CircuitBuilder,
    t: &LinearCombination,
    degree: usize,
    fraction_bits: u32,
) -> Result<Vec<LinearCombination>, R1csError> {
    let mut basis = vec![LinearCombination::constant(pow2(fraction_bits))];
    if degree >= 1 {
        basis.push(t.clone());
    }
    let two = FieldElement::new(2);
    for k in 2..=degree {
        let prod = fixed_mul(b, t, &basis[k - 1], fraction_bits)?;
        basis.push(LinearCombination::from(prod) * two - &basis[k - 2]);
    }
    Ok(basis)
}
