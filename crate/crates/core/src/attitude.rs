//! SU(2) attitude tracking controller: error signals, torque feedback with
//! feedforward, gain-matrix certificates, stability domain and Lyapunov
//! value.
//!
//! The cross-term weight is named `c_a` here and throughout the full-state
//! controller; the attitude-only statement of the result calls the same
//! quantity `k_c`.

use nalgebra::Vector2;
use thiserror::Error;

use crate::lie::{
    attitude_error_vector, dist_su2, hat_so3, hat_su2, vee_su2_projected, Mat3, Su2Element, Vec3,
};
use crate::linalg::Sym2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttitudeError {
    #[error("phi = {0} outside (0, 2)")]
    InvalidPhi(f64),
    #[error("inertia matrix is not symmetric positive definite")]
    BadInertia,
    #[error("mass and gravity must be positive (m = {mass}, g = {gravity})")]
    BadScalars { mass: f64, gravity: f64 },
}

/// Mass, gravity and inertia of the rigid body.
#[derive(Debug, Clone)]
pub struct InertialParams {
    mass: f64,
    gravity: f64,
    inertia: Mat3,
    inertia_inv: Mat3,
    j_min: f64,
    j_max: f64,
}

impl InertialParams {
    /// Validates `J = J'` within 1e-12, `lambda_min(J) > 0`, `m > 0`, `g > 0`.
    pub fn new(mass: f64, gravity: f64, inertia: Mat3) -> Result<Self, AttitudeError> {
        if !(mass > 0.0) || !(gravity > 0.0) {
            return Err(AttitudeError::BadScalars { mass, gravity });
        }
        if (inertia - inertia.transpose()).norm() > 1e-12 {
            return Err(AttitudeError::BadInertia);
        }
        let eig = inertia.symmetric_eigen().eigenvalues;
        let j_min = eig.min();
        let j_max = eig.max();
        if j_min <= 0.0 {
            return Err(AttitudeError::BadInertia);
        }
        let inertia_inv = inertia.try_inverse().ok_or(AttitudeError::BadInertia)?;
        Ok(Self {
            mass,
            gravity,
            inertia,
            inertia_inv,
            j_min,
            j_max,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn inertia(&self) -> &Mat3 {
        &self.inertia
    }

    pub fn inertia_inv(&self) -> &Mat3 {
        &self.inertia_inv
    }

    pub fn inertia_min_eig(&self) -> f64 {
        self.j_min
    }

    pub fn inertia_max_eig(&self) -> f64 {
        self.j_max
    }

    /// Weight of gravity, `m g`, in newtons.
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }
}

/// Attitude controller gains; all strictly positive. `c_a` weighs the
/// cross term of the Lyapunov function.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeGains {
    pub k_x: f64,
    pub k_omega: f64,
    pub c_a: f64,
}

impl AttitudeGains {
    pub fn new(k_x: f64, k_omega: f64, c_a: f64) -> Self {
        assert!(k_x > 0.0 && k_omega > 0.0 && c_a > 0.0, "gains must be positive");
        Self { k_x, k_omega, c_a }
    }
}

/// Attitude reference: element of SU(2) plus body rates and their derivative.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeRef {
    pub attitude: Su2Element,
    pub rate: Vec3,
    pub rate_dot: Vec3,
}

/// The controller error signals.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeErrors {
    pub e_x: Vec3,
    pub e_omega: Vec3,
}

impl AttitudeErrors {
    /// The norm pair `z = (|e_X|, |e_omega|)`.
    pub fn z(&self) -> Vector2<f64> {
        Vector2::new(self.e_x.norm(), self.e_omega.norm())
    }
}

/// Computes `X_e = X_r* X`, `e_X` from the error element and
/// `e_omega = omega - [(X_e)* [omega_r]^ (X_e)]v` (the reference rate
/// expressed in the actual body frame).
pub fn attitude_errors(x: &Su2Element, omega: &Vec3, r: &AttitudeRef) -> AttitudeErrors {
    let xe = r.attitude.star().compose(x);
    let e_x = attitude_error_vector(&xe);
    let rotated_rate = xe.rotate_inverse(&r.rate);
    AttitudeErrors {
        e_x,
        e_omega: omega - rotated_rate,
    }
}

/// Full attitude feedback torque:
///
/// `tau = -k_X e_X - k_omega e_omega - S(J omega) omega + J ff`
///
/// where the feedforward bracket
/// `ff = [-[e_w/2]^ Xe* [w_r]^ Xe + Xe* [dw_r]^ Xe + Xe* [w_r]^ Xe [e_w/2]^]v`
/// is evaluated in the complex 2x2 representation and vee'd once. At zero
/// error the law reduces to the exact feedforward
/// `tau = -S(J w_r) w_r + J dw_r`.
pub fn attitude_torque(
    x: &Su2Element,
    omega: &Vec3,
    r: &AttitudeRef,
    gains: &AttitudeGains,
    params: &InertialParams,
) -> Vec3 {
    let errs = attitude_errors(x, omega, r);
    torque_from_errors(&errs, x, omega, r, gains, params)
}

/// Torque computation when the errors are already available.
pub fn torque_from_errors(
    errs: &AttitudeErrors,
    x: &Su2Element,
    omega: &Vec3,
    r: &AttitudeRef,
    gains: &AttitudeGains,
    params: &InertialParams,
) -> Vec3 {
    let xe = r.attitude.star().compose(x);
    let xe_c = xe.to_complex();
    let xe_star_c = xe.star().to_complex();
    let half_ew = hat_su2(&(0.5 * errs.e_omega));
    let rate_hat = hat_su2(&r.rate);
    let rate_dot_hat = hat_su2(&r.rate_dot);

    let conj_rate = xe_star_c * rate_hat * xe_c;
    let bracket = -half_ew * conj_rate + xe_star_c * rate_dot_hat * xe_c + conj_rate * half_ew;
    let ff = vee_su2_projected(&bracket);

    let j = params.inertia();
    -gains.k_x * errs.e_x - gains.k_omega * errs.e_omega - hat_so3(&(j * omega)) * omega + j * ff
}

/// The three certificate matrices of the attitude result, evaluated for a
/// gain set, inertia and domain radius `phi`.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeCertificate {
    pub w_aa: Sym2,
    pub m1_aa: Sym2,
    pub m2_aa: Sym2,
    pub w_aa_pd: bool,
    pub m1_aa_pd: bool,
    pub m2_aa_pd: bool,
}

impl AttitudeCertificate {
    /// All three matrices positive definite.
    pub fn certified(&self) -> bool {
        self.w_aa_pd && self.m1_aa_pd && self.m2_aa_pd
    }
}

/// Builds `W^aa`, `M1^aa`, `M2^aa`:
///
/// ```text
/// W^aa  = [ c_a k_X / jmax        -c_a k_w / (2 jmin) ]
///         [ -c_a k_w / (2 jmin)    k_w - c_a / 4      ]
/// M1^aa = 1/2 [ 4 k_X  -c_a  ;  -c_a  jmin ]
/// M2^aa = 1/2 [ 8 k_X / (2 - phi)  c_a  ;  c_a  jmax ]
/// ```
pub fn attitude_gain_matrices(
    gains: &AttitudeGains,
    params: &InertialParams,
    phi: f64,
) -> Result<AttitudeCertificate, AttitudeError> {
    if !(phi > 0.0 && phi < 2.0) {
        return Err(AttitudeError::InvalidPhi(phi));
    }
    let (j_min, j_max) = (params.inertia_min_eig(), params.inertia_max_eig());
    let w_aa = Sym2::new(
        gains.c_a * gains.k_x / j_max,
        -gains.c_a * gains.k_omega / (2.0 * j_min),
        gains.k_omega - gains.c_a / 4.0,
    );
    let m1_aa = Sym2::new(2.0 * gains.k_x, -0.5 * gains.c_a, 0.5 * j_min);
    let m2_aa = Sym2::new(
        4.0 * gains.k_x / (2.0 - phi),
        0.5 * gains.c_a,
        0.5 * j_max,
    );
    Ok(AttitudeCertificate {
        w_aa,
        m1_aa,
        m2_aa,
        w_aa_pd: w_aa.is_positive_definite(),
        m1_aa_pd: m1_aa.is_positive_definite(),
        m2_aa_pd: m2_aa.is_positive_definite(),
    })
}

/// Membership in the exponential-stability domain:
/// `Gamma(X_r, X) <= phi < 2` and `z' M2^aa z <= k_X phi`.
pub fn attitude_domain_check(
    errs: &AttitudeErrors,
    x: &Su2Element,
    r: &AttitudeRef,
    gains: &AttitudeGains,
    params: &InertialParams,
    phi: f64,
) -> bool {
    let Ok(cert) = attitude_gain_matrices(gains, params, phi) else {
        return false;
    };
    let gamma = dist_su2(&r.attitude, x);
    let z = errs.z();
    gamma <= phi && cert.m2_aa.quad(z.x, z.y) <= gains.k_x * phi
}

/// Lyapunov value
/// `V^a = k_X Gamma(X_r, X) + c_a e_omega . e_X + e_omega . J e_omega / 2`.
pub fn attitude_lyapunov(
    errs: &AttitudeErrors,
    x: &Su2Element,
    r: &AttitudeRef,
    gains: &AttitudeGains,
    params: &InertialParams,
) -> f64 {
    let gamma = dist_su2(&r.attitude, x);
    gains.k_x * gamma
        + gains.c_a * errs.e_omega.dot(&errs.e_x)
        + 0.5 * errs.e_omega.dot(&(params.inertia() * errs.e_omega))
}
