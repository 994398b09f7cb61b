//! Block-diagonal action of a [`RepSpec`] on flat feature arrays.

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::reps::cartesian::transform_into;
use crate::reps::spec::{Parity, RepKind, RepSpec};
use crate::reps::wigner::WignerStack;

/// Everything needed to apply `ρ(g)` for one element: the matrix, its
/// determinant and, for irrep specs, the Wigner stack up to the spec's
/// highest degree. One Wigner matrix per degree serves every multiplicity.
#[derive(Debug, Clone)]
pub struct RepAction {
    matrix: [f64; 9],
    transpose: [f64; 9],
    det: f64,
    wigner: Option<WignerStack>,
}

impl RepAction {
    pub fn new(spec: &RepSpec, g: &GroupElement) -> Result<Self> {
        let matrix = g.to_row_major();
        let transpose = g.matrix().transpose().into();
        let transpose = row_major(&transpose);
        let wigner = match spec.kind() {
            RepKind::Irrep => Some(WignerStack::for_element(spec.max_degree(), g)?),
            RepKind::Cartesian => None,
        };
        Ok(Self {
            matrix,
            transpose,
            det: g.det(),
            wigner,
        })
    }

    /// Recomputes for a new element without allocating.
    pub fn update(&mut self, g: &GroupElement) {
        self.matrix = g.to_row_major();
        self.transpose = row_major(&g.matrix().transpose());
        self.det = g.det();
        if let Some(w) = self.wigner.as_mut() {
            w.compute(g);
        }
    }

    /// Scratch length needed by [`RepAction::apply_into`] for `spec`.
    pub fn scratch_len(spec: &RepSpec) -> usize {
        match spec.kind() {
            RepKind::Irrep => 0,
            RepKind::Cartesian => 3usize.pow(spec.max_degree() as u32),
        }
    }

    /// `out = ρ(g)·x`.
    pub fn apply_into(&self, spec: &RepSpec, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        self.apply_impl(spec, x, out, scratch, false)
    }

    /// `out = ρ(g)ᵀ·x = ρ(g⁻¹)·x`.
    pub fn apply_transpose_into(
        &self,
        spec: &RepSpec,
        x: &[f64],
        out: &mut [f64],
        scratch: &mut [f64],
    ) {
        self.apply_impl(spec, x, out, scratch, true)
    }

    fn apply_impl(
        &self,
        spec: &RepSpec,
        x: &[f64],
        out: &mut [f64],
        scratch: &mut [f64],
        transpose: bool,
    ) {
        debug_assert_eq!(x.len(), spec.total_dim());
        debug_assert_eq!(out.len(), spec.total_dim());
        let mut offset = 0;
        for block in spec.blocks() {
            let comps = block.components();
            let sign = match block.parity {
                Parity::Normal => 1.0,
                Parity::Pseudo => self.det,
            };
            for _ in 0..block.multiplicity {
                let src = &x[offset..offset + comps];
                let dst = &mut out[offset..offset + comps];
                match &self.wigner {
                    Some(w) => {
                        let d = w.block(block.degree);
                        matvec(d, src, dst, sign, transpose);
                    }
                    None => {
                        let m = if transpose { &self.transpose } else { &self.matrix };
                        transform_into(block.degree, m, sign, src, dst, scratch);
                    }
                }
                offset += comps;
            }
        }
    }

    /// Allocating convenience wrapper around [`RepAction::apply_into`].
    pub fn apply(&self, spec: &RepSpec, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        let mut scratch = vec![0.0; Self::scratch_len(spec)];
        self.apply_into(spec, x, &mut out, &mut scratch);
        out
    }

    pub fn apply_transpose(&self, spec: &RepSpec, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        let mut scratch = vec![0.0; Self::scratch_len(spec)];
        self.apply_transpose_into(spec, x, &mut out, &mut scratch);
        out
    }
}

fn row_major(m: &nalgebra::Matrix3<f64>) -> [f64; 9] {
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
    ]
}

#[inline]
fn matvec(d: &[f64], x: &[f64], out: &mut [f64], sign: f64, transpose: bool) {
    let n = x.len();
    if n == 1 {
        out[0] = sign * d[0] * x[0];
        return;
    }
    if transpose {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            let row = &d[r * n..(r + 1) * n];
            for (o, &dv) in out.iter_mut().zip(row) {
                *o += dv * xr;
            }
        }
        if sign != 1.0 {
            out.iter_mut().for_each(|o| *o *= sign);
        }
    } else {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &d[r * n..(r + 1) * n];
            *o = sign * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// `ρ(g)·features` for the direct sum described by `spec`.
pub fn apply_rep(spec: &RepSpec, g: &GroupElement, features: &[f64]) -> Result<Vec<f64>> {
    if features.len() != spec.total_dim() {
        return Err(Error::shape(spec.total_dim(), features.len()));
    }
    Ok(RepAction::new(spec, g)?.apply(spec, features))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{compose, inverse, random_element, random_reflection};
    use crate::reps::spec::parse_repspec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_features(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn identity_leaves_features_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let id = GroupElement::identity();
        let irr = parse_repspec("2x0n+3x1p+2x4n", RepKind::Irrep).unwrap();
        let f = random_features(&mut rng, irr.total_dim());
        assert_eq!(apply_rep(&irr, &id, &f).unwrap(), f);
        let cart = parse_repspec("2x0n+3x1p+2x3n", RepKind::Cartesian).unwrap();
        let f = random_features(&mut rng, cart.total_dim());
        let out = apply_rep(&cart, &id, &f).unwrap();
        assert!(out.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn scalars_are_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in [RepKind::Irrep, RepKind::Cartesian] {
            let spec = parse_repspec("2x0n", kind).unwrap();
            let g = random_element(&mut rng);
            assert_eq!(apply_rep(&spec, &g, &[0.3, -2.0]).unwrap(), vec![0.3, -2.0]);
        }
    }

    #[test]
    fn homomorphism_norm_and_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (text, kind) in [
            ("1x0p+2x1n+1x2p+1x3n+1x4p", RepKind::Irrep),
            ("1x0p+2x1n+1x2p+1x3n", RepKind::Cartesian),
        ] {
            let spec = parse_repspec(text, kind).unwrap();
            for _ in 0..20 {
                let (a, b) = (random_element(&mut rng), random_element(&mut rng));
                let f = random_features(&mut rng, spec.total_dim());
                let lhs = apply_rep(&spec, &compose(&a, &b), &f).unwrap();
                let rhs = apply_rep(&spec, &a, &apply_rep(&spec, &b, &f).unwrap()).unwrap();
                let err: Vec<f64> = lhs.iter().zip(&rhs).map(|(x, y)| x - y).collect();
                assert!(max_abs(&err) < 1e-10 * max_abs(&f));
                let n0: f64 = f.iter().map(|x| x * x).sum();
                let n1: f64 = lhs.iter().map(|x| x * x).sum();
                assert!((n0 - n1).abs() < 1e-10);
                let act = RepAction::new(&spec, &a).unwrap();
                let back = act.apply_transpose(&spec, &f);
                let inv = apply_rep(&spec, &inverse(&a), &f).unwrap();
                assert!(back.iter().zip(&inv).all(|(x, y)| (x - y).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn pseudo_blocks_flip_under_reflection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [RepKind::Irrep, RepKind::Cartesian] {
            let normal = parse_repspec("1x2n", kind).unwrap();
            let pseudo = parse_repspec("1x2p", kind).unwrap();
            let g = random_reflection(&mut rng);
            let f = random_features(&mut rng, normal.total_dim());
            let a = apply_rep(&normal, &g, &f).unwrap();
            let b = apply_rep(&pseudo, &g, &f).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| (x + y).abs() < 1e-14));
        }
    }

    #[test]
    fn update_matches_fresh_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = parse_repspec("1x1n+1x3p", RepKind::Irrep).unwrap();
        let mut act = RepAction::new(&spec, &random_element(&mut rng)).unwrap();
        let g = random_element(&mut rng);
        act.update(&g);
        let f = random_features(&mut rng, spec.total_dim());
        assert_eq!(act.apply(&spec, &f), apply_rep(&spec, &g, &f).unwrap());
    }

    #[test]
    fn length_mismatch() {
        let spec = parse_repspec("1x1n", RepKind::Irrep).unwrap();
        assert!(apply_rep(&spec, &GroupElement::identity(), &[1.0]).is_err());
    }
}
