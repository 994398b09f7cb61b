//! Exact O(3) group elements.
//!
//! Every element is a 3×3 orthogonal matrix in `f64` together with its cached
//! determinant sign. Composition re-orthonormalizes with one Newton step once
//! accumulated drift exceeds [`DRIFT_TOL`].

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::Rng;
use rand_distr::StandardNormal;

/// Largest tolerated entry of `M·Mᵀ − I` before re-orthonormalizing.
pub const DRIFT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    matrix: Matrix3<f64>,
    det_sign: i8,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
            det_sign: 1,
        }
    }

    /// diag(1, 1, −1), the reflection through the xy-plane.
    pub fn mirror_z() -> Self {
        Self {
            matrix: Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, -1.0)),
            det_sign: -1,
        }
    }

    /// Point inversion −I.
    pub fn inversion() -> Self {
        Self {
            matrix: -Matrix3::identity(),
            det_sign: -1,
        }
    }

    /// Wraps an orthogonal matrix. Returns `None` when the matrix is not
    /// orthogonal to `tol` or its determinant is not ±1.
    pub fn from_matrix(matrix: Matrix3<f64>, tol: f64) -> Option<Self> {
        if orthogonality_error(&matrix) > tol {
            return None;
        }
        let det = matrix.determinant();
        let det_sign = if (det - 1.0).abs() <= tol {
            1
        } else if (det + 1.0).abs() <= tol {
            -1
        } else {
            return None;
        };
        Some(Self { matrix, det_sign })
    }

    /// Wraps a matrix the caller already knows to be orthogonal.
    pub(crate) fn from_matrix_unchecked(matrix: Matrix3<f64>) -> Self {
        let det_sign = if matrix.determinant() >= 0.0 { 1 } else { -1 };
        Self { matrix, det_sign }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn det_sign(&self) -> i8 {
        self.det_sign
    }

    pub fn det(&self) -> f64 {
        f64::from(self.det_sign)
    }

    pub fn is_proper(&self) -> bool {
        self.det_sign == 1
    }

    /// The proper rotation `det(g)·g`.
    pub fn rotation_part(&self) -> Matrix3<f64> {
        self.matrix * self.det()
    }

    /// Row-major flattening of the matrix.
    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.matrix;
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

    /// `‖g·gᵀ − I‖_max`.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.matrix)
    }

    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        (self.matrix - other.matrix).amax()
    }
}

impl Default for GroupElement {
    fn default() -> Self {
        Self::identity()
    }
}

fn orthogonality_error(m: &Matrix3<f64>) -> f64 {
    (m * m.transpose() - Matrix3::identity()).amax()
}

/// Haar-uniform proper rotation from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> GroupElement {
    loop {
        let w: f64 = rng.sample(StandardNormal);
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        let q = Quaternion::new(w, x, y, z);
        if q.norm() < 1e-12 {
            continue;
        }
        let rot = UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        return GroupElement {
            matrix: reorthonormalize(rot.into_inner()),
            det_sign: 1,
        };
    }
}

/// Haar-uniform improper element: a random rotation followed by diag(1,1,−1).
pub fn random_reflection<R: Rng + ?Sized>(rng: &mut R) -> GroupElement {
    compose(&GroupElement::mirror_z(), &random_rotation(rng))
}

/// Uniform sample from O(3): a rotation or a reflection with equal probability.
pub fn random_element<R: Rng + ?Sized>(rng: &mut R) -> GroupElement {
    if rng.gen_bool(0.5) {
        random_rotation(rng)
    } else {
        random_reflection(rng)
    }
}

/// `g1·g2`: `g2` acts first.
pub fn compose(g1: &GroupElement, g2: &GroupElement) -> GroupElement {
    GroupElement {
        matrix: reorthonormalize(g1.matrix * g2.matrix),
        det_sign: g1.det_sign * g2.det_sign,
    }
}

pub fn inverse(g: &GroupElement) -> GroupElement {
    GroupElement {
        matrix: g.matrix.transpose(),
        det_sign: g.det_sign,
    }
}

/// One Newton step `M ← M(3I − MᵀM)/2`, applied only when drift exceeds [`DRIFT_TOL`].
fn reorthonormalize(m: Matrix3<f64>) -> Matrix3<f64> {
    let gram = m.transpose() * m;
    if (gram - Matrix3::identity()).amax() <= DRIFT_TOL {
        return m;
    }
    m * (Matrix3::identity() * 3.0 - gram) * 0.5
}
