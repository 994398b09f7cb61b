//! Real-basis Wigner-D matrices.
//!
//! Built by the degree recurrence on real spherical harmonics: `D⁽¹⁾ = P·g·Pᵀ`
//! with `P` reordering `(x, y, z)` into the harmonic order `(y, z, x)`, and each
//! `D⁽ˡ⁾` assembled entrywise from `D⁽¹⁾` and `D⁽ˡ⁻¹⁾`. Components are ordered
//! `m = −l..=l`. Building every level up to `l` costs `O(l³)`.
//!
//! Seeding the recurrence with the full (possibly improper) matrix yields
//! `D⁽ˡ⁾(g) = det(g)ˡ · D⁽ˡ⁾(rot(g))`, which is the natural O(3) action on
//! degree-`l` harmonics: `Y⁽ˡ⁾(g·u) = D⁽ˡ⁾(g)·Y⁽ˡ⁾(u)` for every `g ∈ O(3)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::reps::spec::MAX_IRREP_DEGREE;

/// Harmonic order of the degree-1 basis: row `k` of `P` selects axis `AXIS_OF_M[k]`.
const AXIS_OF_M: [usize; 3] = [1, 2, 0];

/// All Wigner blocks `D⁽⁰⁾..=D⁽ˡᵐᵃˣ⁾` for one group element, stored contiguously.
///
/// Recomputing into an existing stack never allocates.
#[derive(Debug, Clone)]
pub struct WignerStack {
    lmax: usize,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl WignerStack {
    pub fn new(lmax: usize) -> Result<Self> {
        if lmax > MAX_IRREP_DEGREE {
            return Err(Error::UnsupportedDegree {
                degree: lmax,
                cap: MAX_IRREP_DEGREE,
            });
        }
        let mut offsets = Vec::with_capacity(lmax + 2);
        let mut total = 0;
        for l in 0..=lmax {
            offsets.push(total);
            total += (2 * l + 1) * (2 * l + 1);
        }
        offsets.push(total);
        Ok(Self {
            lmax,
            offsets,
            data: vec![0.0; total],
        })
    }

    /// Stack for `g` up to `lmax`.
    pub fn for_element(lmax: usize, g: &GroupElement) -> Result<Self> {
        let mut s = Self::new(lmax)?;
        s.compute(g);
        Ok(s)
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Row-major `(2l+1)×(2l+1)` block of degree `l`.
    pub fn block(&self, l: usize) -> &[f64] {
        &self.data[self.offsets[l]..self.offsets[l + 1]]
    }

    pub fn to_matrix(&self, l: usize) -> DMatrix<f64> {
        let n = 2 * l + 1;
        DMatrix::from_row_slice(n, n, self.block(l))
    }

    /// Fills every level for `g`.
    pub fn compute(&mut self, g: &GroupElement) {
        self.data[0] = 1.0;
        if self.lmax == 0 {
            return;
        }
        let m = g.matrix();
        let d1 = &mut self.data[self.offsets[1]..self.offsets[2]];
        for (r, &ar) in AXIS_OF_M.iter().enumerate() {
            for (c, &ac) in AXIS_OF_M.iter().enumerate() {
                d1[r * 3 + c] = m[(ar, ac)];
            }
        }
        for l in 2..=self.lmax {
            let (head, tail) = self.data.split_at_mut(self.offsets[l]);
            let r1 = &head[self.offsets[1]..self.offsets[2]];
            let prev = &head[self.offsets[l - 1]..];
            let out = &mut tail[..(2 * l + 1) * (2 * l + 1)];
            next_level(l, r1, prev, out);
        }
    }
}

/// `D⁽ˡ⁾(g)` as a dense matrix. Improper `g` carries the factor `det(g)ˡ`.
pub fn wigner_d(l: usize, g: &GroupElement) -> Result<DMatrix<f64>> {
    Ok(WignerStack::for_element(l, g)?.to_matrix(l))
}

struct Level<'a> {
    l: i64,
    r1: &'a [f64],
    prev: &'a [f64],
}

impl Level<'_> {
    #[inline]
    fn r1(&self, i: i64, j: i64) -> f64 {
        self.r1[((i + 1) * 3 + (j + 1)) as usize]
    }

    #[inline]
    fn prev(&self, a: i64, b: i64) -> f64 {
        let w = 2 * self.l - 1;
        let c = self.l - 1;
        self.prev[((a + c) * w + (b + c)) as usize]
    }

    #[inline]
    fn p(&self, i: i64, a: i64, b: i64) -> f64 {
        let l = self.l;
        if b == l {
            self.r1(i, 1) * self.prev(a, l - 1) - self.r1(i, -1) * self.prev(a, -l + 1)
        } else if b == -l {
            self.r1(i, 1) * self.prev(a, -l + 1) + self.r1(i, -1) * self.prev(a, l - 1)
        } else {
            self.r1(i, 0) * self.prev(a, b)
        }
    }

    fn u(&self, m: i64, n: i64) -> f64 {
        self.p(0, m, n)
    }

    fn v(&self, m: i64, n: i64) -> f64 {
        match m.cmp(&0) {
            std::cmp::Ordering::Equal => self.p(1, 1, n) + self.p(-1, -1, n),
            std::cmp::Ordering::Greater => {
                if m == 1 {
                    self.p(1, 0, n) * std::f64::consts::SQRT_2
                } else {
                    self.p(1, m - 1, n) - self.p(-1, -m + 1, n)
                }
            }
            std::cmp::Ordering::Less => {
                if m == -1 {
                    self.p(-1, 0, n) * std::f64::consts::SQRT_2
                } else {
                    self.p(1, m + 1, n) + self.p(-1, -m - 1, n)
                }
            }
        }
    }

    fn w(&self, m: i64, n: i64) -> f64 {
        if m > 0 {
            self.p(1, m + 1, n) + self.p(-1, -m - 1, n)
        } else {
            self.p(1, m - 1, n) - self.p(-1, -m + 1, n)
        }
    }
}

fn next_level(l: usize, r1: &[f64], prev: &[f64], out: &mut [f64]) {
    let lv = Level {
        l: l as i64,
        r1,
        prev,
    };
    let li = l as i64;
    let width = 2 * l + 1;
    for m in -li..=li {
        let am = m.abs();
        let d = if m == 0 { 1.0 } else { 0.0 };
        for n in -li..=li {
            let denom = if n.abs() == li {
                (2 * li * (2 * li - 1)) as f64
            } else {
                ((li + n) * (li - n)) as f64
            };
            let u = (((li + m) * (li - m)) as f64 / denom).sqrt();
            let v = 0.5 * ((1.0 + d) * ((li + am - 1) * (li + am)) as f64 / denom).sqrt()
                * (1.0 - 2.0 * d);
            let w = -0.5 * (((li - am - 1) * (li - am)) as f64 / denom).sqrt() * (1.0 - d);
            let mut val = 0.0;
            if u != 0.0 {
                val += u * lv.u(m, n);
            }
            if v != 0.0 {
                val += v * lv.v(m, n);
            }
            if w != 0.0 {
                val += w * lv.w(m, n);
            }
            out[((m + li) as usize) * width + (n + li) as usize] = val;
        }
    }
}
