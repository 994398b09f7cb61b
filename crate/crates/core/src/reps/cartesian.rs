//! Cartesian (pseudo)tensor transforms by successive single-axis contraction.
//!
//! A tensor of order `n` is a row-major array of `3ⁿ` components. Contracting
//! one axis with the 3×3 matrix costs `3ⁿ⁺¹` multiply-adds, so the full
//! transform is `Θ(n·3ⁿ)`.

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::reps::spec::{Parity, MAX_CARTESIAN_ORDER};

/// Transforms `t` in place. `scratch` must hold at least `t.len()` values.
///
/// `m` is the row-major matrix; `sign` is applied once at the end (pass the
/// determinant for pseudotensors, `1.0` otherwise).
pub fn transform_in_place(order: usize, m: &[f64; 9], sign: f64, t: &mut [f64], scratch: &mut [f64]) {
    let len = t.len();
    debug_assert_eq!(len, 3usize.pow(order as u32));
    let scratch = &mut scratch[..len];
    let mut inner = len;
    for _axis in 0..order {
        inner /= 3;
        contract(inner, m, t, scratch);
        t.copy_from_slice(scratch);
    }
    if sign != 1.0 {
        for x in t.iter_mut() {
            *x *= sign;
        }
    }
}

fn contract(inner: usize, m: &[f64; 9], from: &[f64], to: &mut [f64]) {
    let outer = from.len() / (3 * inner);
    for o in 0..outer {
        let base = o * 3 * inner;
        for k in 0..inner {
            let x0 = from[base + k];
            let x1 = from[base + inner + k];
            let x2 = from[base + 2 * inner + k];
            to[base + k] = m[0] * x0 + m[1] * x1 + m[2] * x2;
            to[base + inner + k] = m[3] * x0 + m[4] * x1 + m[5] * x2;
            to[base + 2 * inner + k] = m[6] * x0 + m[7] * x1 + m[8] * x2;
        }
    }
}

/// `dst = sign · m^{⊗n} · src`, alternating between `dst` and `scratch` so
/// the last axis lands in `dst` without a final copy.
pub fn transform_into(order: usize, m: &[f64; 9], sign: f64, src: &[f64], dst: &mut [f64], scratch: &mut [f64]) {
    let len = src.len();
    debug_assert_eq!(len, 3usize.pow(order as u32));
    debug_assert_eq!(dst.len(), len);
    let scratch = &mut scratch[..len];
    if order == 0 {
        dst.copy_from_slice(src);
    }
    let mut inner = len;
    for axis in 0..order {
        inner /= 3;
        let to_dst = (order - 1 - axis) % 2 == 0;
        match (axis, to_dst) {
            (0, true) => contract(inner, m, src, dst),
            (0, false) => contract(inner, m, src, scratch),
            (_, true) => contract(inner, m, scratch, dst),
            (_, false) => contract(inner, m, dst, scratch),
        }
    }
    if sign != 1.0 {
        for x in dst.iter_mut() {
            *x *= sign;
        }
    }
}

/// `T' = (det g)^[pseudo] · g^{⊗n} · T`.
pub fn cartesian_transform(
    order: usize,
    parity: Parity,
    g: &GroupElement,
    t: &[f64],
) -> Result<Vec<f64>> {
    if order > MAX_CARTESIAN_ORDER {
        return Err(Error::UnsupportedDegree {
            degree: order,
            cap: MAX_CARTESIAN_ORDER,
        });
    }
    let len = 3usize.pow(order as u32);
    if t.len() != len {
        return Err(Error::shape(format!("{len} components"), t.len()));
    }
    let sign = match parity {
        Parity::Normal => 1.0,
        Parity::Pseudo => g.det(),
    };
    let mut out = t.to_vec();
    let mut scratch = vec![0.0; len];
    transform_in_place(order, &g.to_row_major(), sign, &mut out, &mut scratch);
    Ok(out)
}
