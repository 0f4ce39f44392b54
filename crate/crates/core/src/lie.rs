//! SU(2) and SO(3) primitives: hat/vee/exp/log maps, the double-cover
//! embedding, rotation composition, and the trace-based attitude distances
//! with their geometric bounds.
//!
//! Conventions:
//!
//! - A unit quaternion `q = (q1, q2, q3, q4)` has scalar part `q1`. It maps
//!   onto SU(2) as `X = q1*I + q2*L1 + q3*L2 + q4*L3` with the basis
//!   `L1 = [0, i; i, 0]`, `L2 = [0, -1; 1, 0]`, `L3 = [i, 0; 0, -i]`, so the
//!   group product on SU(2) is the Hamilton quaternion product.
//! - `X` and `-X` represent the same rotation; [`Su2Element::to_rotation`]
//!   is invariant under the sign flip (double cover).
//! - `exp_su2(w)` exponentiates the algebra element `hat_su2(w)` directly and
//!   therefore represents a rotation of `2*|w|` about `w/|w|`; callers pass
//!   `w/2` to rotate by `|w|` (the same split the kinematics use).

use nalgebra::{Complex, Matrix2, Vector3};
use thiserror::Error;

use crate::linalg::nearest_rotation;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
/// Complex 2x2 matrix, the materialized form of an SU(2) element.
pub type CMat2 = Matrix2<Complex<f64>>;

/// Unit-norm tolerance accepted by checked constructors.
const UNIT_TOL: f64 = 1e-6;
/// Tolerance for algebra/orthogonality membership checks.
const ALGEBRA_TOL: f64 = 1e-9;
/// Below this norm, exp maps switch to their Taylor forms.
const SMALL_ANGLE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("matrix is not skew-symmetric (|K + K'| = {defect:.3e})")]
    NotSkew { defect: f64 },
    #[error("matrix is not in su(2) (anti-Hermitian traceless defect {defect:.3e})")]
    NotInAlgebra { defect: f64 },
    #[error("quaternion norm {norm} deviates from 1 by more than {UNIT_TOL:.0e}")]
    NotUnit { norm: f64 },
    #[error("matrix is not a rotation (orthogonality defect {defect:.3e}, det {det})")]
    NotRotation { defect: f64, det: f64 },
    #[error("axis norm {norm} is not unit within 1e-12")]
    NotUnitAxis { norm: f64 },
}

/// Unit quaternion `(q1, q2, q3, q4)` with scalar part `q1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    q: [f64; 4],
}

impl UnitQuaternion {
    /// Checked constructor: rejects norms further than `1e-6` from unity and
    /// renormalizes the rest.
    pub fn new(q1: f64, q2: f64, q3: f64, q4: f64) -> Result<Self, LieError> {
        let norm = (q1 * q1 + q2 * q2 + q3 * q3 + q4 * q4).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(LieError::NotUnit { norm });
        }
        Ok(Self {
            q: [q1 / norm, q2 / norm, q3 / norm, q4 / norm],
        })
    }

    /// Constructor for components already known to be unit norm.
    pub(crate) fn new_unchecked(q1: f64, q2: f64, q3: f64, q4: f64) -> Self {
        Self { q: [q1, q2, q3, q4] }
    }

    pub fn identity() -> Self {
        Self { q: [1.0, 0.0, 0.0, 0.0] }
    }

    /// Scalar part `q1`.
    pub fn scalar(&self) -> f64 {
        self.q[0]
    }

    /// Vector part `(q2, q3, q4)`.
    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.q[1], self.q[2], self.q[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.q
    }

    pub fn norm(&self) -> f64 {
        self.q.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Four-component dot product; equals `cos(theta/2)` of the relative
    /// rotation for unit quaternions.
    pub fn dot(&self, other: &Self) -> f64 {
        self.q.iter().zip(other.q.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            q: [self.q[0] / n, self.q[1] / n, self.q[2] / n, self.q[3] / n],
        }
    }

    /// Hamilton product.
    pub fn product(&self, rhs: &Self) -> Self {
        let [a1, a2, a3, a4] = self.q;
        let [b1, b2, b3, b4] = rhs.q;
        Self {
            q: [
                a1 * b1 - a2 * b2 - a3 * b3 - a4 * b4,
                a1 * b2 + a2 * b1 + a3 * b4 - a4 * b3,
                a1 * b3 - a2 * b4 + a3 * b1 + a4 * b2,
                a1 * b4 + a2 * b3 - a3 * b2 + a4 * b1,
            ],
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            q: [self.q[0], -self.q[1], -self.q[2], -self.q[3]],
        }
    }
}

impl std::ops::Neg for UnitQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            q: [-self.q[0], -self.q[1], -self.q[2], -self.q[3]],
        }
    }
}

/// Element of SU(2), stored as a unit quaternion; the complex 2x2 form is
/// materialized on demand via [`Su2Element::to_complex`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Element(UnitQuaternion);

impl Su2Element {
    pub fn identity() -> Self {
        Self(UnitQuaternion::identity())
    }

    /// The quaternion-to-SU(2) embedding. Bijective; `from_quaternion(-q)`
    /// is the antipode `-from_quaternion(q)`.
    pub fn from_quaternion(q: UnitQuaternion) -> Self {
        Self(q)
    }

    /// Checked component constructor (rejects norms off unity by > 1e-6).
    pub fn from_components(q1: f64, q2: f64, q3: f64, q4: f64) -> Result<Self, LieError> {
        Ok(Self(UnitQuaternion::new(q1, q2, q3, q4)?))
    }

    pub fn quaternion(&self) -> UnitQuaternion {
        self.0
    }

    /// Materializes `X = [q1 + i q4, -q3 + i q2; q3 + i q2, q1 - i q4]`.
    pub fn to_complex(&self) -> CMat2 {
        let [q1, q2, q3, q4] = self.0.q;
        CMat2::new(
            Complex::new(q1, q4),
            Complex::new(-q3, q2),
            Complex::new(q3, q2),
            Complex::new(q1, -q4),
        )
    }

    /// Conjugate transpose `X*` (the group inverse).
    pub fn star(&self) -> Self {
        Self(self.0.conjugate())
    }

    /// Group product `X Y`. Does not renormalize; integrators renormalize
    /// once per step and composition chains drift below 1e-9 for well over
    /// 1e6 products.
    pub fn compose(&self, rhs: &Self) -> Self {
        Self(self.0.product(&rhs.0))
    }

    pub fn renormalized(&self) -> Self {
        Self(self.0.normalized())
    }

    /// Unitarity/determinant defect of the stored representation,
    /// `max(|X*X - I|, |det X - 1|)`; equals `|q|^2 - 1` in exact arithmetic.
    pub fn defect(&self) -> f64 {
        let n2 = self.0.q.iter().map(|c| c * c).sum::<f64>();
        (n2 - 1.0).abs()
    }

    /// Embeds into SO(3) (the double cover: `X` and `-X` map to the same
    /// rotation).
    pub fn to_rotation(&self) -> RotationMatrix {
        let [q1, q2, q3, q4] = self.0.q;
        RotationMatrix(Mat3::new(
            q1 * q1 + q2 * q2 - q3 * q3 - q4 * q4,
            2.0 * (q2 * q3 - q1 * q4),
            2.0 * (q2 * q4 + q1 * q3),
            2.0 * (q2 * q3 + q1 * q4),
            q1 * q1 - q2 * q2 + q3 * q3 - q4 * q4,
            2.0 * (q3 * q4 - q1 * q2),
            2.0 * (q2 * q4 - q1 * q3),
            2.0 * (q3 * q4 + q1 * q2),
            q1 * q1 - q2 * q2 - q3 * q3 + q4 * q4,
        ))
    }

    /// Rotation composition `a = [X [b]^ X*]v`: rotates `b` without
    /// materializing the rotation matrix. Norm preserving.
    pub fn rotate(&self, b: &Vec3) -> Vec3 {
        let p = UnitQuaternion::new_unchecked(0.0, b.x, b.y, b.z);
        let r = self.0.product(&p).product(&self.0.conjugate());
        r.vector()
    }

    /// Rotates by the inverse element, `R' b`.
    pub fn rotate_inverse(&self, b: &Vec3) -> Vec3 {
        self.star().rotate(b)
    }
}

impl std::ops::Neg for Su2Element {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// 3x3 rotation matrix (orthonormal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Checked constructor: orthogonality and determinant within 1e-9.
    pub fn from_matrix(m: Mat3) -> Result<Self, LieError> {
        let defect = (m.transpose() * m - Mat3::identity()).norm();
        let det = m.determinant();
        if defect > ALGEBRA_TOL || (det - 1.0).abs() > ALGEBRA_TOL {
            return Err(LieError::NotRotation { defect, det });
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    /// Projects an arbitrary matrix to the nearest rotation (polar factor).
    pub fn nearest(m: &Mat3) -> Self {
        Self(nearest_rotation(m))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self(self.0 * rhs.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn column(&self, i: usize) -> Vec3 {
        self.0.column(i).into()
    }

    /// Converts to SU(2), returning the canonical representative with
    /// nonnegative scalar part (Shepperd's max-pivot extraction). The other
    /// representative is its negation.
    pub fn to_su2(&self) -> Su2Element {
        let m = &self.0;
        let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let (q1, q2, q3, q4);
        if tr >= m[(0, 0)].max(m[(1, 1)]).max(m[(2, 2)]) {
            let s = (tr + 1.0).sqrt() * 2.0;
            q1 = 0.25 * s;
            q2 = (m[(2, 1)] - m[(1, 2)]) / s;
            q3 = (m[(0, 2)] - m[(2, 0)]) / s;
            q4 = (m[(1, 0)] - m[(0, 1)]) / s;
        } else if m[(0, 0)] >= m[(1, 1)] && m[(0, 0)] >= m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            q1 = (m[(2, 1)] - m[(1, 2)]) / s;
            q2 = 0.25 * s;
            q3 = (m[(0, 1)] + m[(1, 0)]) / s;
            q4 = (m[(0, 2)] + m[(2, 0)]) / s;
        } else if m[(1, 1)] >= m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            q1 = (m[(0, 2)] - m[(2, 0)]) / s;
            q2 = (m[(0, 1)] + m[(1, 0)]) / s;
            q3 = 0.25 * s;
            q4 = (m[(1, 2)] + m[(2, 1)]) / s;
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            q1 = (m[(1, 0)] - m[(0, 1)]) / s;
            q2 = (m[(0, 2)] + m[(2, 0)]) / s;
            q3 = (m[(1, 2)] + m[(2, 1)]) / s;
            q4 = 0.25 * s;
        }
        let q = UnitQuaternion::new_unchecked(q1, q2, q3, q4).normalized();
        let x = Su2Element(q);
        canonical_sign(x)
    }
}

/// Picks the representative with nonnegative scalar part; ties broken by the
/// first nonzero vector component.
fn canonical_sign(x: Su2Element) -> Su2Element {
    let [q1, q2, q3, q4] = x.0.q;
    let flip = if q1 != 0.0 {
        q1 < 0.0
    } else if q2 != 0.0 {
        q2 < 0.0
    } else if q3 != 0.0 {
        q3 < 0.0
    } else {
        q4 < 0.0
    };
    if flip { -x } else { x }
}

/// Axis-angle pair with a unit axis.
#[derive(Debug, Clone, Copy)]
pub struct AxisAngle {
    pub axis: Vec3,
    pub angle: f64,
}

impl AxisAngle {
    pub fn new(axis: Vec3, angle: f64) -> Result<Self, LieError> {
        let norm = axis.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(LieError::NotUnitAxis { norm });
        }
        Ok(Self { axis, angle })
    }

    /// The SU(2) element representing this rotation (positive branch).
    pub fn to_su2(&self) -> Su2Element {
        exp_su2(&(0.5 * self.angle * self.axis))
    }

    pub fn to_rotation(&self) -> RotationMatrix {
        exp_so3(&(self.angle * self.axis))
    }
}

/// `hat` map of SO(3): the skew matrix with `S(a) b = a x b`.
pub fn hat_so3(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// `vee` map of SO(3): `[K32, K13, K21]`. Rejects matrices that are not
/// skew-symmetric within 1e-9 (Frobenius norm of `K + K'`).
pub fn vee_so3(k: &Mat3) -> Result<Vec3, LieError> {
    let defect = (k + k.transpose()).norm();
    if defect > ALGEBRA_TOL {
        return Err(LieError::NotSkew { defect });
    }
    Ok(vee_so3_projected(k))
}

/// Component extraction without the membership check; used internally on
/// expressions that are skew by construction.
pub(crate) fn vee_so3_projected(k: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (k[(2, 1)] - k[(1, 2)]),
        0.5 * (k[(0, 2)] - k[(2, 0)]),
        0.5 * (k[(1, 0)] - k[(0, 1)]),
    )
}

/// `hat` map of SU(2): `w1 L1 + w2 L2 + w3 L3`.
pub fn hat_su2(w: &Vec3) -> CMat2 {
    CMat2::new(
        Complex::new(0.0, w.z),
        Complex::new(-w.y, w.x),
        Complex::new(w.y, w.x),
        Complex::new(0.0, -w.z),
    )
}

/// `vee` map of SU(2):
/// `(1/2) [Im(K12 + K21); Re(K21 - K12); Im(K11 - K22)]`.
/// Rejects matrices that are not anti-Hermitian traceless within 1e-9.
pub fn vee_su2(k: &CMat2) -> Result<Vec3, LieError> {
    let anti = k + k.adjoint();
    let defect = anti.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let trace = (k[(0, 0)] + k[(1, 1)]).norm();
    let defect = defect.max(trace);
    if defect > ALGEBRA_TOL {
        return Err(LieError::NotInAlgebra { defect });
    }
    Ok(vee_su2_projected(k))
}

pub(crate) fn vee_su2_projected(k: &CMat2) -> Vec3 {
    Vec3::new(
        0.5 * (k[(0, 1)].im + k[(1, 0)].im),
        0.5 * (k[(1, 0)].re - k[(0, 1)].re),
        0.5 * (k[(0, 0)].im - k[(1, 1)].im),
    )
}

/// `sin(x)/x` with a 4th-order Taylor fallback below 1e-6.
fn sinc(x: f64) -> f64 {
    if x.abs() < SMALL_ANGLE {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `(1 - cos(x)) / x^2` with a Taylor fallback below 1e-6.
fn cosc(x: f64) -> f64 {
    if x.abs() < SMALL_ANGLE {
        let x2 = x * x;
        0.5 - x2 / 24.0 + x2 * x2 / 720.0
    } else {
        (1.0 - x.cos()) / (x * x)
    }
}

/// Exponential map onto SO(3) (Rodrigues closed form). For `w = theta * u`
/// with unit `u`, the result rotates by `theta` about `u`.
pub fn exp_so3(w: &Vec3) -> RotationMatrix {
    let theta = w.norm();
    let k = hat_so3(w);
    let m = Mat3::identity() + sinc(theta) * k + cosc(theta) * (k * k);
    RotationMatrix(m)
}

/// Exponential map onto SU(2): exponentiates `hat_su2(w)` in closed form,
/// `cos(|w|) I + sin(|w|) hat_su2(w)/|w|`. Represents a rotation of `2|w|`,
/// so `exp_su2(w / 2)` matches `exp_so3(w)` under the embedding.
pub fn exp_su2(w: &Vec3) -> Su2Element {
    let theta = w.norm();
    let s = sinc(theta);
    Su2Element(UnitQuaternion::new_unchecked(
        theta.cos(),
        s * w.x,
        s * w.y,
        s * w.z,
    ))
}

/// Logarithm on SO(3): returns `w = theta * u` with `theta` in `[0, pi]`.
/// At `theta = pi` the axis sign is fixed by the largest diagonal entry.
pub fn log_so3(r: &RotationMatrix) -> Vec3 {
    log_su2_scaled(&r.to_su2()) * 2.0
}

/// Logarithm on SU(2): returns `w` with `exp_su2(w) = X` and `|w|` in
/// `[0, pi]` (half the rotation angle; `|w| > pi/2` means the element lies on
/// the far sheet of the double cover). `w = pi * e1` is returned at `-I`,
/// where the axis is not determined.
pub fn log_su2(x: &Su2Element) -> Vec3 {
    log_su2_scaled(x)
}

fn log_su2_scaled(x: &Su2Element) -> Vec3 {
    let s = x.0.scalar();
    let v = x.0.vector();
    let vn = v.norm();
    if vn < 1e-15 {
        if s < 0.0 {
            // X = -I: rotation by 2*pi on SU(2); axis undetermined.
            return Vec3::new(std::f64::consts::PI, 0.0, 0.0);
        }
        return Vec3::zeros();
    }
    let half_angle = vn.atan2(s);
    (half_angle / vn) * v
}

/// The SO(3) distance `Psi(R1, R2) = Trace(I - R1' R2) / 2`, valued in [0, 2].
pub fn dist_so3(r1: &RotationMatrix, r2: &RotationMatrix) -> f64 {
    let p = r1.0.transpose() * r2.0;
    0.5 * (3.0 - p.trace())
}

/// The SU(2) distance `Gamma(X1, X2) = Trace(I - X1* X2) / 2`, valued in
/// [0, 2]; equals `1 - cos(theta/2)` for a relative rotation of `theta`.
///
/// In the quaternion representation the trace of `X1* X2` is exactly
/// `2 <q1, q2>` with zero imaginary part (the off-diagonal conjugates cancel
/// identically), so the real-part extraction is exact here.
pub fn dist_su2(x1: &Su2Element, x2: &Su2Element) -> f64 {
    1.0 - x1.0.dot(&x2.0)
}

/// The attitude error vector `e_X = [X_e - Trace(X_e) I / 2]v / 2`, which
/// equals `sin(theta/2) u / 2` for `X_e` a rotation of `theta` about `u`.
///
/// Zero exactly at `X_e = I` and at the antipode `X_e = -I` (a relative
/// rotation of `2 pi` on SU(2), excluded by every controller domain but not
/// by this function).
pub fn attitude_error_vector(xe: &Su2Element) -> Vec3 {
    0.5 * xe.0.vector()
}
