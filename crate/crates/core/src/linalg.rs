//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::Matrix2;

use crate::lie::Mat3;

/// Relative eigenvalue tolerance for "positive definite" decisions.
pub(crate) const PD_REL_TOL: f64 = 1e-12;

/// A symmetric 2x2 matrix `[a, b; b, d]` with closed-form spectral data.
#[derive(Debug, Clone, Copy)]
pub struct Sym2 {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl Sym2 {
    pub fn new(a: f64, b: f64, d: f64) -> Self {
        Self { a, b, d }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.b
    }

    /// Smallest eigenvalue, exact trace/determinant formula.
    pub fn eig_min(&self) -> f64 {
        let t = self.trace();
        let disc = (t * t - 4.0 * self.det()).max(0.0).sqrt();
        0.5 * (t - disc)
    }

    /// Largest eigenvalue.
    pub fn eig_max(&self) -> f64 {
        let t = self.trace();
        let disc = (t * t - 4.0 * self.det()).max(0.0).sqrt();
        0.5 * (t + disc)
    }

    /// Positive definite with the crate-wide tolerance `eig_min > 1e-12 * eig_max`.
    pub fn is_positive_definite(&self) -> bool {
        self.eig_min() > PD_REL_TOL * self.eig_max()
    }

    /// Quadratic form `z' M z` for `z = (z1, z2)`.
    pub fn quad(&self, z1: f64, z2: f64) -> f64 {
        self.a * z1 * z1 + 2.0 * self.b * z1 * z2 + self.d * z2 * z2
    }

    pub fn to_matrix(self) -> Matrix2<f64> {
        Matrix2::new(self.a, self.b, self.b, self.d)
    }
}

/// Spectral norm of a general 2x2 matrix (largest singular value, closed form).
pub fn spectral_norm_2x2(m: &Matrix2<f64>) -> f64 {
    // Largest eigenvalue of the symmetric product M' M.
    let g = m.transpose() * m;
    let s = Sym2::new(g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    s.eig_max().max(0.0).sqrt()
}

/// Projects a general 3x3 matrix to the nearest rotation (polar factor with
/// determinant forced to +1).
pub fn nearest_rotation(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    let d = (u * vt).determinant();
    let s = Mat3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, d.signum()));
    u * s * vt
}
