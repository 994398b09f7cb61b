//! Randomized homomorphism and orthogonality checks over degrees and parities.

use rand::Rng;

use crate::error::Result;
use crate::group::{compose, random_element};
use crate::reps::action::RepAction;
use crate::reps::spec::{Parity, RepKind, RepSpec};

/// Tolerance relative to `‖f‖∞`.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RepCheck {
    pub kind: RepKind,
    pub degree: usize,
    pub parity: Parity,
    /// `max ‖ρ(g₁g₂)f − ρ(g₁)ρ(g₂)f‖∞ / ‖f‖∞`.
    pub homomorphism: f64,
    /// `max ‖ρ(g)ᵀρ(g)f − f‖∞ / ‖f‖∞`.
    pub orthogonality: f64,
}

impl RepCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.homomorphism < tol && self.orthogonality < tol
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_one(spec: &RepSpec, pairs: usize, rng: &mut impl Rng) -> Result<(f64, f64)> {
    let (mut hom, mut orth) = (0.0f64, 0.0f64);
    for _ in 0..pairs {
        let g1 = random_element(rng);
        let g2 = random_element(rng);
        let f: Vec<f64> = (0..spec.total_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale = max_abs(&f).max(f64::MIN_POSITIVE);
        let a1 = RepAction::new(spec, &g1)?;
        let a2 = RepAction::new(spec, &g2)?;
        let a12 = RepAction::new(spec, &compose(&g1, &g2))?;
        let lhs = a12.apply(spec, &f);
        let rhs = a1.apply(spec, &a2.apply(spec, &f));
        let d: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        hom = hom.max(max_abs(&d) / scale);
        let back = a1.apply_transpose(spec, &a1.apply(spec, &f));
        let d: Vec<f64> = back.iter().zip(&f).map(|(a, b)| a - b).collect();
        orth = orth.max(max_abs(&d) / scale);
    }
    Ok((hom, orth))
}

/// Irrep degrees `0..=max_l` and Cartesian orders `0..=max_n`, both parities,
/// `pairs` random pairs of O(3) elements each.
pub fn check_reps(max_l: usize, max_n: usize, pairs: usize, rng: &mut impl Rng) -> Result<Vec<RepCheck>> {
    let mut out = Vec::new();
    for (kind, max) in [(RepKind::Irrep, max_l), (RepKind::Cartesian, max_n)] {
        for degree in 0..=max {
            for parity in [Parity::Normal, Parity::Pseudo] {
                let spec = RepSpec::single(kind, degree, parity)?;
                let (homomorphism, orthogonality) = check_one(&spec, pairs, rng)?;
                out.push(RepCheck {
                    kind,
                    degree,
                    parity,
                    homomorphism,
                    orthogonality,
                });
            }
        }
    }
    Ok(out)
}
