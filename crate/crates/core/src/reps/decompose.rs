//! Numerical decomposition of Cartesian tensors into irreducible blocks.
//!
//! For each degree `l ≤ n` the intertwiners `X` (`(2l+1) × 3ⁿ`) satisfying
//! `D⁽ˡ⁾(R)·X = X·T(R)` for a set of sampled rotations form the null space of
//! `G = Σ_k (2I − T_k⊗D_k − (T_k⊗D_k)ᵀ)`, the normal matrix of the stacked
//! linear system written on column-major `vec(X)`. Its dimension is the
//! multiplicity of `l` in the tensor; unit-norm null vectors rescaled by
//! `√(2l+1)` give orthonormal rows of the change of basis.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::{random_element, random_rotation, GroupElement};
use crate::reps::action::RepAction;
use crate::reps::cartesian::transform_in_place;
use crate::reps::spec::{Parity, RepBlock, RepKind, RepSpec, MAX_CARTESIAN_ORDER};
use crate::reps::wigner::WignerStack;

const SOLVE_ROTATIONS: usize = 20;
const CHECK_ROTATIONS: usize = 100;
const NULL_EIGENVALUE_TOL: f64 = 1e-8;
const NULL_REFINE_SHIFT: f64 = 1e-6;
/// Largest tolerated off-block or on-block error of `Q·T(R)·Qᵀ − ⊕D(R)`.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Orthogonal change of basis from a Cartesian tensor to a direct sum of irreps.
#[derive(Debug, Clone)]
pub struct Intertwiner {
    pub matrix: DMatrix<f64>,
    pub source: RepSpec,
    pub target: RepSpec,
    /// Worst block-diagonalization residual measured on fresh rotations.
    pub residual: f64,
}

impl Intertwiner {
    pub fn order(&self) -> usize {
        self.source.blocks()[0].degree
    }

    /// `(l, multiplicity)` pairs in ascending `l`.
    pub fn multiset(&self) -> Vec<(usize, usize)> {
        let mut counts = BTreeMap::new();
        for b in self.target.blocks() {
            *counts.entry(b.degree).or_insert(0) += b.multiplicity;
        }
        counts.into_iter().collect()
    }

    /// `1x0 + 1x1 + 1x2` style summary.
    pub fn multiset_string(&self) -> String {
        self.multiset()
            .iter()
            .map(|(l, m)| format!("{m}x{l}"))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Cartesian components → irrep components.
    pub fn to_irreps(&self, t: &[f64]) -> Vec<f64> {
        (&self.matrix * nalgebra::DVector::from_column_slice(t))
            .as_slice()
            .to_vec()
    }

    /// Irrep components → Cartesian components.
    pub fn to_cartesian(&self, x: &[f64]) -> Vec<f64> {
        (self.matrix.transpose() * nalgebra::DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }

    /// Worst entry of `Q·T(g)·Qᵀ − ρ_target(g)` for one element.
    pub fn residual_for(&self, g: &GroupElement) -> f64 {
        let t = cartesian_matrix(self.order(), self.source.blocks()[0].parity, g);
        let lhs = &self.matrix * t * self.matrix.transpose();
        let rhs = block_matrix(&self.target, g);
        (lhs - rhs).amax()
    }
}

/// Dense `3ⁿ × 3ⁿ` matrix of the Cartesian action.
pub fn cartesian_matrix(order: usize, parity: Parity, g: &GroupElement) -> DMatrix<f64> {
    let n = 3usize.pow(order as u32);
    let sign = match parity {
        Parity::Normal => 1.0,
        Parity::Pseudo => g.det(),
    };
    let m = g.to_row_major();
    let mut out = DMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for c in 0..n {
        col.iter_mut().for_each(|x| *x = 0.0);
        col[c] = 1.0;
        transform_in_place(order, &m, sign, &mut col, &mut scratch);
        for r in 0..n {
            out[(r, c)] = col[r];
        }
    }
    out
}

/// Dense block-diagonal matrix of `ρ_spec(g)`.
pub fn block_matrix(spec: &RepSpec, g: &GroupElement) -> DMatrix<f64> {
    let n = spec.total_dim();
    let act = RepAction::new(spec, g).expect("spec degrees were validated");
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for c in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[c] = 1.0;
        let col = act.apply(spec, &e);
        for r in 0..n {
            out[(r, c)] = col[r];
        }
    }
    out
}

/// Intertwiner for a normal-parity tensor of `order`; computed once and cached.
pub fn decompose_cartesian(order: usize) -> Result<&'static Intertwiner> {
    static CACHE: [OnceLock<std::result::Result<Intertwiner, f64>>; MAX_CARTESIAN_ORDER + 1] =
        [const { OnceLock::new() }; MAX_CARTESIAN_ORDER + 1];
    if order > MAX_CARTESIAN_ORDER {
        return Err(Error::UnsupportedDegree {
            degree: order,
            cap: MAX_CARTESIAN_ORDER,
        });
    }
    match CACHE[order].get_or_init(|| solve(order)) {
        Ok(q) => Ok(q),
        Err(residual) => Err(Error::DecompositionFailed {
            order,
            residual: *residual,
        }),
    }
}

/// Irrep spec with the same total dimension as `spec` obtained by decomposing
/// every Cartesian block.
pub fn cartesian_to_irrep_spec(spec: &RepSpec) -> Result<RepSpec> {
    if spec.kind() == RepKind::Irrep {
        return Ok(spec.clone());
    }
    let mut counts: BTreeMap<(usize, bool), usize> = BTreeMap::new();
    for b in spec.blocks() {
        let q = decompose_cartesian(b.degree)?;
        for t in q.target.blocks() {
            let parity = match b.parity {
                Parity::Normal => t.parity,
                Parity::Pseudo => t.parity.flip(),
            };
            *counts
                .entry((t.degree, parity == Parity::Pseudo))
                .or_insert(0) += t.multiplicity * b.multiplicity;
        }
    }
    let blocks = counts
        .into_iter()
        .map(|((degree, pseudo), multiplicity)| RepBlock {
            multiplicity,
            degree,
            parity: if pseudo { Parity::Pseudo } else { Parity::Normal },
            kind: RepKind::Irrep,
        })
        .collect();
    RepSpec::new(RepKind::Irrep, blocks)
}

/// Shifted inverse iteration on an approximate null basis of a PSD matrix.
/// The eigensolver alone leaves errors near 1e-10 in the vectors.
fn refine_null_basis(mut normal: DMatrix<f64>, mut basis: DMatrix<f64>) -> DMatrix<f64> {
    for i in 0..normal.nrows() {
        normal[(i, i)] += NULL_REFINE_SHIFT;
    }
    let Some(chol) = normal.cholesky() else {
        return basis;
    };
    for _ in 0..2 {
        basis = chol.solve(&basis);
        basis = basis.qr().q();
    }
    basis
}

struct FoundBlock {
    degree: usize,
    rows: DMatrix<f64>,
    first_nonzero: usize,
}

fn solve(order: usize) -> std::result::Result<Intertwiner, f64> {
    let dim = 3usize.pow(order as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(0xdec0 + order as u64);
    let samples: Vec<GroupElement> = (0..SOLVE_ROTATIONS).map(|_| random_rotation(&mut rng)).collect();
    let tensors: Vec<DMatrix<f64>> = samples
        .iter()
        .map(|g| cartesian_matrix(order, Parity::Normal, g))
        .collect();
    let stacks: Vec<WignerStack> = samples
        .iter()
        .map(|g| WignerStack::for_element(order, g).expect("order ≤ cap"))
        .collect();

    let mut found = Vec::new();
    for l in 0..=order {
        let q = 2 * l + 1;
        let n = q * dim;
        let mut normal = DMatrix::<f64>::identity(n, n) * (2.0 * SOLVE_ROTATIONS as f64);
        for (t, stack) in tensors.iter().zip(&stacks) {
            let d = stack.block(l);
            for c in 0..dim {
                for cp in 0..dim {
                    let tc = t[(c, cp)];
                    if tc == 0.0 {
                        continue;
                    }
                    for r in 0..q {
                        for rp in 0..q {
                            let v = tc * d[r * q + rp];
                            normal[(c * q + r, cp * q + rp)] -= v;
                            normal[(cp * q + rp, c * q + r)] -= v;
                        }
                    }
                }
            }
        }
        let eig = SymmetricEigen::new(normal.clone());
        let mut null: Vec<usize> = (0..n)
            .filter(|&i| eig.eigenvalues[i].abs() < NULL_EIGENVALUE_TOL)
            .collect();
        null.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        if null.is_empty() {
            continue;
        }
        let basis = DMatrix::from_columns(
            &null.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>(),
        );
        let basis = refine_null_basis(normal, basis);
        for v in basis.column_iter() {
            let scale = (q as f64).sqrt();
            let mut rows = DMatrix::from_fn(q, dim, |r, c| v[c * q + r] * scale);
            let first_nonzero = (0..dim).find(|&c| rows[(0, c)].abs() > 1e-6).unwrap_or(dim);
            if first_nonzero < dim && rows[(0, first_nonzero)] < 0.0 {
                rows.neg_mut();
            }
            found.push(FoundBlock {
                degree: l,
                rows,
                first_nonzero,
            });
        }
    }
    found.sort_by_key(|b| (b.degree, b.first_nonzero));

    let total: usize = found.iter().map(|b| b.rows.nrows()).sum();
    if total != dim {
        return Err(f64::INFINITY);
    }
    let mut matrix = DMatrix::zeros(dim, dim);
    let mut row = 0;
    let mut blocks: Vec<RepBlock> = Vec::new();
    for b in &found {
        matrix.rows_mut(row, b.rows.nrows()).copy_from(&b.rows);
        row += b.rows.nrows();
        let parity = if (order + b.degree) % 2 == 0 {
            Parity::Normal
        } else {
            Parity::Pseudo
        };
        match blocks.last_mut() {
            Some(last) if last.degree == b.degree && last.parity == parity => last.multiplicity += 1,
            _ => blocks.push(RepBlock {
                multiplicity: 1,
                degree: b.degree,
                parity,
                kind: RepKind::Irrep,
            }),
        }
    }
    // One symmetric Newton step toward exact orthogonality.
    let gram = &matrix * matrix.transpose();
    matrix = (DMatrix::identity(dim, dim) * 3.0 - gram) * &matrix * 0.5;

    let source = RepSpec::single(RepKind::Cartesian, order, Parity::Normal).map_err(|_| f64::NAN)?;
    let target = RepSpec::new(RepKind::Irrep, blocks).map_err(|_| f64::NAN)?;
    let mut q = Intertwiner {
        matrix,
        source,
        target,
        residual: 0.0,
    };
    let orth = (&q.matrix * q.matrix.transpose() - DMatrix::identity(dim, dim)).amax();
    let mut check_rng = ChaCha8Rng::seed_from_u64(0xc4ec + order as u64);
    let mut residual = orth;
    for _ in 0..CHECK_ROTATIONS {
        let g = random_rotation(&mut check_rng);
        residual = residual.max(q.residual_for(&g));
    }
    if !(residual < RESIDUAL_TOL) {
        return Err(residual);
    }
    q.residual = residual;
    // Parity labels make the decomposition exact on all of O(3).
    let g = random_element(&mut check_rng);
    debug_assert!(q.residual_for(&g) < RESIDUAL_TOL);
    Ok(q)
}
