//! Full-state tracking controller: desired force, the three desired-attitude
//! constructions, continuity enforcement, thrust projection, the composite
//! gain certificate and Lyapunov machinery.

use std::collections::VecDeque;

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

use crate::attitude::{
    attitude_errors, attitude_gain_matrices, torque_from_errors, AttitudeGains, AttitudeRef,
    InertialParams,
};
use crate::dynamics::{
    frame_rates, DynamicsError, FrameCompletion, FrameRates, HeadingSeries, RigidBodyState,
    Series,
};
use crate::lie::{attitude_error_vector, dist_su2, exp_su2, RotationMatrix, Su2Element, Vec3};
use crate::linalg::{spectral_norm_2x2, Sym2};

/// Minimal absolute norm accepted by the free attitude constructions; the
/// controller applies the stricter policy threshold `1e-6 * m g` on top.
const FORCE_EPS: f64 = 1e-9;
/// Singularity threshold on the projection cross product.
const PROJECTION_EPS: f64 = 1e-6;
/// Below this squared planar norm, the tilt construction bypasses to
/// `X_A = I` (the yaw-axis degeneracy where the tilt axis is undefined).
const PLANAR_EPS_SQ: f64 = 1e-18;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackingError {
    #[error("desired force norm {norm:.3e} below threshold {threshold:.3e}")]
    DegenerateForce { norm: f64, threshold: f64 },
    #[error("projection singular: |b_d3 x b_r1| = {norm:.3e}")]
    ProjectionSingular { norm: f64 },
    #[error("need at least 3 desired-attitude samples, have {0}")]
    InsufficientHistory(usize),
    #[error("invalid domain parameters: {0}")]
    InvalidDomain(String),
}

/// Translational controller gains; all strictly positive.
#[derive(Debug, Clone, Copy)]
pub struct TranslationGains {
    pub k_p: f64,
    pub k_v: f64,
    pub c_p: f64,
}

impl TranslationGains {
    pub fn new(k_p: f64, k_v: f64, c_p: f64) -> Self {
        assert!(k_p > 0.0 && k_v > 0.0 && c_p > 0.0, "gains must be positive");
        Self { k_p, k_v, c_p }
    }
}

/// Domain parameters of the full-state certificate: attitude radius `phi`,
/// force bound `b_f` (A2) and initial position-error bound `b_p` (A3).
#[derive(Debug, Clone, Copy)]
pub struct DomainParams {
    pub phi: f64,
    pub b_f: f64,
    pub b_p: f64,
}

impl DomainParams {
    pub fn new(phi: f64, b_f: f64, b_p: f64) -> Result<Self, TrackingError> {
        if !(phi > 0.0 && phi < 2.0) {
            return Err(TrackingError::InvalidDomain(format!("phi = {phi} outside (0, 2)")));
        }
        if !(b_f > 0.0 && b_p > 0.0) {
            return Err(TrackingError::InvalidDomain(format!(
                "bounds must be positive (b_f = {b_f}, b_p = {b_p})"
            )));
        }
        Ok(Self { phi, b_f, b_p })
    }

    /// `alpha = 2 sqrt(2 phi)`, the sine-angle bound of the second
    /// geometric observation.
    pub fn alpha(&self) -> f64 {
        2.0 * (2.0 * self.phi).sqrt()
    }
}

/// Fully expanded reference state: translational series, attitude with body
/// rates, heading, and the reference inputs. `torque` is the input of the
/// reference dynamics rows; it is diagnostic only and never consumed by the
/// controller.
#[derive(Debug, Clone, Copy)]
pub struct FullReference {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub jerk: Vec3,
    pub snap: Vec3,
    pub attitude: Su2Element,
    pub rate: Vec3,
    pub rate_dot: Vec3,
    /// Raw heading vector used by case (i) (unit, non-parallel to thrust).
    pub heading_vector: Vec3,
    /// Heading angle (used by case (iii)) with its rate and acceleration.
    pub yaw: f64,
    pub yaw_rate: f64,
    pub yaw_accel: f64,
    /// Reference thrust magnitude.
    pub thrust: f64,
    /// Reference torque closing the reference dynamics rows.
    pub torque: Vec3,
}

impl FullReference {
    /// A motionless hover reference at `position` with yaw angle `yaw`.
    pub fn hover(position: Vec3, yaw: f64, params: &InertialParams) -> Self {
        let attitude = exp_su2(&Vec3::new(0.0, 0.0, 0.5 * yaw));
        Self {
            position,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            jerk: Vec3::zeros(),
            snap: Vec3::zeros(),
            attitude,
            rate: Vec3::zeros(),
            rate_dot: Vec3::zeros(),
            heading_vector: Vec3::new(yaw.cos(), yaw.sin(), 0.0),
            yaw,
            yaw_rate: 0.0,
            yaw_accel: 0.0,
            thrust: params.weight(),
            torque: Vec3::zeros(),
        }
    }
}

/// Desired attitude with its body rates: the transient target the attitude
/// controller tracks.
#[derive(Debug, Clone, Copy)]
pub struct DesiredAttitude {
    pub attitude: Su2Element,
    pub rate: Vec3,
    pub rate_dot: Vec3,
}

/// Controller output. `thrust` is the raw projection `f_d . R e3`; it may go
/// negative outside the guaranteed domain and is recorded unclamped (the
/// simulator owns the optional clamp).
#[derive(Debug, Clone, Copy)]
pub struct ControlOutput {
    pub thrust: f64,
    pub torque: Vec3,
    pub desired: DesiredAttitude,
    pub force_desired: Vec3,
    /// Set when a degenerate sample was handled by holding the previous
    /// desired attitude.
    pub held_previous: bool,
}

/// Desired force `f_d = -k_p e_p - k_v e_v + m g e3 + m a_r`.
pub fn desired_force(
    e_p: &Vec3,
    e_v: &Vec3,
    a_r: &Vec3,
    gains: &TranslationGains,
    params: &InertialParams,
) -> Vec3 {
    -gains.k_p * e_p - gains.k_v * e_v + params.weight() * Vec3::z() + params.mass() * a_r
}

/// Projection fixing the first desired body axis from a raw heading vector:
/// `b_d1 = -(b_d3 x (b_d3 x b_r1)) / |b_d3 x b_r1|`.
///
/// The result is unit and orthogonal to `b_d3` for any non-parallel heading.
pub fn desired_b1_projection(b_d3: &Vec3, b_r1: &Vec3) -> Result<Vec3, TrackingError> {
    let cross = b_d3.cross(b_r1);
    let norm = cross.norm();
    if norm < PROJECTION_EPS {
        return Err(TrackingError::ProjectionSingular { norm });
    }
    Ok(-b_d3.cross(&cross) / norm)
}

/// Case (ii) construction: `R_d = [b_d1, b_d3 x b_d1, b_d3]` with the first
/// axis projected from `b_r1` and the third along the desired force.
pub fn desired_attitude_case2(f_d: &Vec3, b_r1: &Vec3) -> Result<RotationMatrix, TrackingError> {
    let norm = f_d.norm();
    if norm < FORCE_EPS {
        return Err(TrackingError::DegenerateForce { norm, threshold: FORCE_EPS });
    }
    let b3 = f_d / norm;
    let b1 = desired_b1_projection(&b3, b_r1)?;
    let b2 = b3.cross(&b1);
    Ok(RotationMatrix::from_matrix_unchecked(
        crate::lie::Mat3::from_columns(&[b1, b2, b3]),
    ))
}

/// Case (iii) construction: tilt by `beta = atan2(sqrt(f1^2 + f2^2), f3)`
/// about `n = (-f2, f1, 0)/sqrt(f1^2 + f2^2)`, then yaw by `psi_r` about the
/// body third axis: `X_d = X_A X_B`. When the planar force components vanish
/// the tilt axis is undefined and `X_A = I` (the analytically forced limit).
pub fn desired_attitude_case3(f_d: &Vec3, psi_r: f64) -> Result<Su2Element, TrackingError> {
    let norm = f_d.norm();
    if norm < FORCE_EPS {
        return Err(TrackingError::DegenerateForce { norm, threshold: FORCE_EPS });
    }
    let planar_sq = f_d.x * f_d.x + f_d.y * f_d.y;
    let x_a = if planar_sq < PLANAR_EPS_SQ {
        Su2Element::identity()
    } else {
        let planar = planar_sq.sqrt();
        let beta = planar.atan2(f_d.z);
        let axis = Vec3::new(-f_d.y, f_d.x, 0.0) / planar;
        exp_su2(&(0.5 * beta * axis))
    };
    let x_b = exp_su2(&Vec3::new(0.0, 0.0, 0.5 * psi_r));
    Ok(x_a.compose(&x_b))
}

/// Finite-difference body rates of a uniformly sampled desired-attitude
/// stream, evaluated at the newest sample through the kinematics
/// `dX = X [w/2]^`. Second-order one-sided differences; the rate derivative
/// falls back to the three-point second difference when only three samples
/// exist. Consecutive samples are sign-aligned first, so raw streams with
/// double-cover flips are handled.
pub fn desired_rates(history: &[Su2Element], h: f64) -> Result<(Vec3, Vec3), TrackingError> {
    let n = history.len();
    if n < 3 {
        return Err(TrackingError::InsufficientHistory(n));
    }
    // Align signs walking backward from the newest sample.
    let take = n.min(4);
    let mut q = [[0.0f64; 4]; 4];
    let newest = history[n - 1].quaternion();
    q[0] = newest.as_array();
    let mut reference = newest;
    for (i, slot) in q.iter_mut().enumerate().take(take).skip(1) {
        let mut sample = history[n - 1 - i].quaternion();
        if sample.dot(&reference) < 0.0 {
            sample = -sample;
        }
        *slot = sample.as_array();
        reference = sample;
    }

    let mut qdot = [0.0f64; 4];
    let mut qddot = [0.0f64; 4];
    for k in 0..4 {
        qdot[k] = (3.0 * q[0][k] - 4.0 * q[1][k] + q[2][k]) / (2.0 * h);
        qddot[k] = if take >= 4 {
            (2.0 * q[0][k] - 5.0 * q[1][k] + 4.0 * q[2][k] - q[3][k]) / (h * h)
        } else {
            (q[0][k] - 2.0 * q[1][k] + q[2][k]) / (h * h)
        };
    }

    let conj = [q[0][0], -q[0][1], -q[0][2], -q[0][3]];
    let body_rate = hamilton(&conj, &qdot);
    let body_acc = hamilton(&conj, &qddot);
    Ok((
        2.0 * Vec3::new(body_rate[1], body_rate[2], body_rate[3]),
        2.0 * Vec3::new(body_acc[1], body_acc[2], body_acc[3]),
    ))
}

fn hamilton(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Sign selection preventing dynamical unwinding: keeps the candidate if
/// `Gamma(candidate, prev) < 1`, otherwise returns its antipode.
pub fn enforce_continuity(candidate: Su2Element, prev: &Su2Element) -> Su2Element {
    if dist_su2(&candidate, prev) < 1.0 {
        candidate
    } else {
        -candidate
    }
}

/// Thrust projection `f = f_d . R e3`; positive whenever
/// `Gamma(X_d, X) < 1 - 1/sqrt(2)`.
pub fn thrust_projection(f_d: &Vec3, x: &Su2Element) -> f64 {
    f_d.dot(&x.rotate(&Vec3::z()))
}

/// Where the desired body rates come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatesSource {
    /// Exact inverse kinematics: the desired-force derivatives follow
    /// algebraically from the closed-loop translation dynamics, and the
    /// desired frame is differentiated analytically. Default: the finite
    /// difference closes a one-step-delayed feedback loop through the
    /// desired attitude that turns unstable at stiff certified gains.
    #[default]
    InverseKinematics,
    /// Finite differences of the desired-attitude stream.
    Numerical,
    /// The analytic reference rates from the flatness expander (exact when
    /// the desired attitude coincides with the reference; the practical
    /// choice when the state feeding the controller refreshes slower than
    /// the control rate).
    Reference,
}

/// How the in-plane degree of freedom of the desired attitude is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttitudeCase {
    /// Case (i): project an externally supplied heading vector.
    ExternalHeading,
    /// Case (ii): project the first body axis of the reference attitude.
    ReferenceFrame,
    /// Case (iii): tilt-then-yaw composition from the heading angle.
    TiltYaw,
}

/// Stateful full-state tracking controller. One instance per trajectory:
/// it carries the previous desired attitude and the finite-difference
/// history used for the desired body rates.
#[derive(Debug, Clone)]
pub struct TrackingController {
    pub translation: TranslationGains,
    pub attitude: AttitudeGains,
    pub case: AttitudeCase,
    /// Controller period in seconds (the finite-difference step).
    pub period: f64,
    /// Replicates the experiment variant that zeroes the desired attitude
    /// accelerations.
    pub zero_rate_dot: bool,
    pub rates_source: RatesSource,
    history: VecDeque<Su2Element>,
    prev: Option<DesiredAttitude>,
}

impl TrackingController {
    pub fn new(
        translation: TranslationGains,
        attitude: AttitudeGains,
        case: AttitudeCase,
        period: f64,
    ) -> Self {
        assert!(period > 0.0);
        Self {
            translation,
            attitude,
            case,
            period,
            zero_rate_dot: false,
            rates_source: RatesSource::Numerical,
            history: VecDeque::with_capacity(4),
            prev: None,
        }
    }

    pub fn with_zero_rate_dot(mut self, flag: bool) -> Self {
        self.zero_rate_dot = flag;
        self
    }

    pub fn with_rates_source(mut self, source: RatesSource) -> Self {
        self.rates_source = source;
        self
    }

    /// Clears the per-trajectory state.
    pub fn reset(&mut self) {
        self.history.clear();
        self.prev = None;
    }

    /// One control evaluation: desired force, desired attitude for the
    /// configured case, numerically differentiated desired rates, continuity
    /// enforcement, attitude feedback torque and thrust projection.
    ///
    /// Degenerate samples (vanishing desired force or singular projection)
    /// hold the previous desired attitude and set the `held_previous` flag;
    /// the error propagates only when no previous sample exists.
    pub fn control(
        &mut self,
        state: &RigidBodyState,
        reference: &FullReference,
        params: &InertialParams,
    ) -> Result<ControlOutput, TrackingError> {
        let e_p = state.position - reference.position;
        let e_v = state.velocity - reference.velocity;
        let f_d = desired_force(&e_p, &e_v, &reference.acceleration, &self.translation, params);

        let candidate = match self.rates_source {
            RatesSource::InverseKinematics => self
                .ik_candidate(state, reference, params, &f_d, &e_v)
                .map(|frame| (frame.attitude, frame.rate, frame.rate_dot)),
            RatesSource::Numerical | RatesSource::Reference => self
                .desired_candidate(&f_d, reference, params)
                .map(|raw| (raw, Vec3::zeros(), Vec3::zeros())),
        };
        let (desired, held) = match candidate {
            Ok((raw, ik_rate, ik_rate_dot)) => {
                let x_d = match &self.prev {
                    Some(p) => enforce_continuity(raw, &p.attitude),
                    None => raw,
                };
                if self.history.len() == 4 {
                    self.history.pop_front();
                }
                self.history.push_back(x_d);
                let (rate, rate_dot) = match self.rates_source {
                    RatesSource::InverseKinematics => (ik_rate, ik_rate_dot),
                    RatesSource::Numerical => self.rates_from_history(reference),
                    RatesSource::Reference => (reference.rate, reference.rate_dot),
                };
                let rate_dot = if self.zero_rate_dot { Vec3::zeros() } else { rate_dot };
                (DesiredAttitude { attitude: x_d, rate, rate_dot }, false)
            }
            Err(err) => match self.prev {
                Some(p) => {
                    if self.history.len() == 4 {
                        self.history.pop_front();
                    }
                    self.history.push_back(p.attitude);
                    (p, true)
                }
                None => return Err(err),
            },
        };

        let att_ref = AttitudeRef {
            attitude: desired.attitude,
            rate: desired.rate,
            rate_dot: desired.rate_dot,
        };
        let errs = attitude_errors(&state.attitude, &state.rate, &att_ref);
        let torque = torque_from_errors(
            &errs,
            &state.attitude,
            &state.rate,
            &att_ref,
            &self.attitude,
            params,
        );
        let thrust = thrust_projection(&f_d, &state.attitude);
        self.prev = Some(desired);
        Ok(ControlOutput {
            thrust,
            torque,
            desired,
            force_desired: f_d,
            held_previous: held,
        })
    }

    fn desired_candidate(
        &self,
        f_d: &Vec3,
        reference: &FullReference,
        params: &InertialParams,
    ) -> Result<Su2Element, TrackingError> {
        let threshold = 1e-6 * params.weight();
        let norm = f_d.norm();
        if norm < threshold {
            return Err(TrackingError::DegenerateForce { norm, threshold });
        }
        match self.case {
            AttitudeCase::ExternalHeading => {
                desired_attitude_case2(f_d, &reference.heading_vector).map(|r| r.to_su2())
            }
            AttitudeCase::ReferenceFrame => {
                let b_r1 = reference.attitude.to_rotation().column(0);
                desired_attitude_case2(f_d, &b_r1).map(|r| r.to_su2())
            }
            AttitudeCase::TiltYaw => desired_attitude_case3(f_d, reference.yaw),
        }
    }

    /// Inverse-kinematics candidate: the desired-force derivatives follow
    /// from the translation error dynamics under the applied thrust
    /// `f = f_d . R e3`, and the frame columns are differentiated
    /// analytically. Exact for the modeled dynamics; reduces to the
    /// reference rates at zero tracking error.
    fn ik_candidate(
        &self,
        state: &RigidBodyState,
        reference: &FullReference,
        params: &InertialParams,
        f_d: &Vec3,
        e_v: &Vec3,
    ) -> Result<FrameRates, TrackingError> {
        let threshold = 1e-6 * params.weight();
        let norm = f_d.norm();
        if norm < threshold {
            return Err(TrackingError::DegenerateForce { norm, threshold });
        }
        let m = params.mass();
        let (k_p, k_v) = (self.translation.k_p, self.translation.k_v);
        let body_z = state.attitude.rotate(&Vec3::z());
        let thrust = f_d.dot(&body_z);
        let ev_dot =
            (thrust * body_z - params.weight() * Vec3::z()) / m - reference.acceleration;
        let f_d_dot = -k_p * e_v - k_v * ev_dot + m * reference.jerk;
        // d/dt(R e3) = R (w x e3).
        let body_z_dot = state.attitude.rotate(&state.rate.cross(&Vec3::z()));
        let thrust_dot = f_d_dot.dot(&body_z) + f_d.dot(&body_z_dot);
        let v_ddot = (thrust_dot * body_z + thrust * body_z_dot) / m;
        let ev_ddot = v_ddot - reference.jerk;
        let f_d_ddot = -k_p * ev_dot - k_v * ev_ddot + m * reference.snap;
        let force = Series { v: *f_d, d: f_d_dot, dd: f_d_ddot };

        let (heading, completion) = match self.case {
            AttitudeCase::TiltYaw => (
                HeadingSeries::Angle {
                    yaw: reference.yaw,
                    yaw_rate: reference.yaw_rate,
                    yaw_accel: reference.yaw_accel,
                },
                FrameCompletion::TiltYaw,
            ),
            AttitudeCase::ReferenceFrame => {
                // b_r1(t) = R_r e1 differentiated through the reference
                // kinematics.
                let e1 = Vec3::x();
                let b = reference.attitude.rotate(&e1);
                let bd = reference.attitude.rotate(&reference.rate.cross(&e1));
                let bdd = reference.attitude.rotate(
                    &(reference.rate_dot.cross(&e1)
                        + reference.rate.cross(&reference.rate.cross(&e1))),
                );
                (
                    HeadingSeries::Vector(Series { v: b, d: bd, dd: bdd }),
                    FrameCompletion::Projection,
                )
            }
            AttitudeCase::ExternalHeading => (
                // An externally supplied heading stream carries no
                // derivatives; treat it as frozen over the step.
                HeadingSeries::Vector(Series {
                    v: reference.heading_vector,
                    d: Vec3::zeros(),
                    dd: Vec3::zeros(),
                }),
                FrameCompletion::Projection,
            ),
        };
        frame_rates(&force, &heading, completion).map_err(|e| match e {
            DynamicsError::DegenerateThrust { norm } => {
                TrackingError::DegenerateForce { norm, threshold }
            }
            _ => TrackingError::ProjectionSingular { norm: 0.0 },
        })
    }

    /// Desired rates at the newest history sample. With fewer than three
    /// samples the analytic reference rates stand in (the expander values,
    /// exact whenever the desired attitude coincides with the reference).
    fn rates_from_history(&self, reference: &FullReference) -> (Vec3, Vec3) {
        match self.history.len() {
            n if n >= 3 => {
                let joined: Vec<Su2Element> = self.history.iter().copied().collect();
                desired_rates(&joined, self.period).expect("history length checked")
            }
            2 => {
                let newest = self.history[1].quaternion();
                let mut prev = self.history[0].quaternion();
                if prev.dot(&newest) < 0.0 {
                    prev = -prev;
                }
                let na = newest.as_array();
                let pa = prev.as_array();
                let mut qdot = [0.0; 4];
                for k in 0..4 {
                    qdot[k] = (na[k] - pa[k]) / self.period;
                }
                let conj = [na[0], -na[1], -na[2], -na[3]];
                let body = hamilton(&conj, &qdot);
                (2.0 * Vec3::new(body[1], body[2], body[3]), Vec3::zeros())
            }
            _ => (reference.rate, reference.rate_dot),
        }
    }
}

/// Composite gain certificate: translation and attitude bound/decay matrices,
/// the cross-coupling norm, `B_z`, the sufficient cross-weight bounds and the
/// less restrictive Schur-complement condition.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub alpha: f64,
    pub m1_pp: Sym2,
    pub m2_pp: Sym2,
    pub w_pp: Sym2,
    pub m1_aa: Sym2,
    pub m2_aa: Sym2,
    pub w_aa: Sym2,
    pub w_pa: Matrix2<f64>,
    pub w_pa_norm: f64,
    pub b_z: f64,
    pub m1_pp_pd: bool,
    pub m2_pp_pd: bool,
    pub w_pp_pd: bool,
    pub m1_aa_pd: bool,
    pub m2_aa_pd: bool,
    pub w_aa_pd: bool,
    /// Sufficient upper bounds on the cross weights; staying below them
    /// implies the six positive-definiteness conditions.
    pub c_a_sufficient: f64,
    pub c_p_sufficient: f64,
    /// Secondary, less restrictive coupling condition
    /// `W_pp - W_pa W_aa^{-1} W_pa' > 0` (evaluated when `W_aa` is PD).
    pub schur_pass: bool,
    /// All six matrices positive definite and `B_z > 0`.
    pub pass: bool,
}

impl CertificateReport {
    pub fn all_pd(&self) -> bool {
        self.m1_pp_pd
            && self.m2_pp_pd
            && self.w_pp_pd
            && self.m1_aa_pd
            && self.m2_aa_pd
            && self.w_aa_pd
    }
}

/// Evaluates the full-state gain certificate for a gain tuple, inertial
/// parameters and domain bounds.
pub fn gain_certificate(
    translation: &TranslationGains,
    attitude: &AttitudeGains,
    params: &InertialParams,
    domain: &DomainParams,
) -> CertificateReport {
    let alpha = domain.alpha();
    let m = params.mass();
    let (k_p, k_v, c_p) = (translation.k_p, translation.k_v, translation.c_p);
    let (k_x, k_w) = (attitude.k_x, attitude.k_omega);
    let (j_min, j_max) = (params.inertia_min_eig(), params.inertia_max_eig());

    let m1_pp = Sym2::new(0.5 * k_p, -0.5 * c_p, 0.5 * m);
    let m2_pp = Sym2::new(0.5 * k_p, 0.5 * c_p, 0.5 * m);
    let w_pp = Sym2::new(
        c_p * k_p / m * (1.0 - alpha),
        -c_p * k_v / (2.0 * m) * (1.0 + alpha),
        k_v * (1.0 - alpha) - c_p,
    );
    let att = attitude_gain_matrices(attitude, params, domain.phi)
        .expect("DomainParams guarantees phi in (0, 2)");
    let w_pa = 4.0
        * Matrix2::new(
            domain.b_f * c_p / m,
            0.0,
            domain.b_f + k_p * domain.b_p,
            0.0,
        );
    let w_pa_norm = spectral_norm_2x2(&w_pa);
    let b_z = 4.0 * att.w_aa.eig_min() * w_pp.eig_min() - w_pa_norm * w_pa_norm;

    let c_a_sufficient = (4.0 * k_w)
        .min(4.0 * k_w * k_x * j_min * j_min / (j_max * k_w * k_w + j_min * j_min * k_x))
        .min(2.0 * (k_x * j_min).sqrt());
    let c_p_sufficient = (k_v * (1.0 - alpha))
        .min(
            4.0 * m * k_p * k_v * (1.0 - alpha).powi(2)
                / (k_v * k_v * (1.0 + alpha).powi(2) + 4.0 * m * k_p * (1.0 - alpha)),
        )
        .min((k_p * m).sqrt());

    let schur_pass = if att.w_aa_pd {
        let inv = att.w_aa.to_matrix().try_inverse().expect("PD matrix invertible");
        let s = w_pp.to_matrix() - w_pa * inv * w_pa.transpose();
        Sym2::new(s[(0, 0)], 0.5 * (s[(0, 1)] + s[(1, 0)]), s[(1, 1)]).is_positive_definite()
    } else {
        false
    };

    let m1_pp_pd = m1_pp.is_positive_definite();
    let m2_pp_pd = m2_pp.is_positive_definite();
    let w_pp_pd = w_pp.is_positive_definite();
    let pass = m1_pp_pd
        && m2_pp_pd
        && w_pp_pd
        && att.m1_aa_pd
        && att.m2_aa_pd
        && att.w_aa_pd
        && b_z > 0.0;

    CertificateReport {
        alpha,
        m1_pp,
        m2_pp,
        w_pp,
        m1_aa: att.m1_aa,
        m2_aa: att.m2_aa,
        w_aa: att.w_aa,
        w_pa,
        w_pa_norm,
        b_z,
        m1_pp_pd,
        m2_pp_pd,
        w_pp_pd,
        m1_aa_pd: att.m1_aa_pd,
        m2_aa_pd: att.m2_aa_pd,
        w_aa_pd: att.w_aa_pd,
        c_a_sufficient,
        c_p_sufficient,
        schur_pass,
        pass,
    }
}

/// The constants of the Lyapunov sandwich and decay:
/// `c1 |z|^2 <= V <= c2 |z|^2` and `dV/dt <= -c3 |z|^2` on the domain.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovBounds {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

pub fn lyapunov_bounds(report: &CertificateReport) -> LyapunovBounds {
    LyapunovBounds {
        c1: report.m1_pp.eig_min().min(report.m1_aa.eig_min()),
        c2: report.m2_pp.eig_max().max(report.m2_aa.eig_max()),
        c3: report.b_z,
    }
}

/// Composite Lyapunov value
/// `V = k_p |e_p|^2 / 2 + m |e_v|^2 / 2 + c_p e_p . e_v
///    + k_X Gamma(X_d, X) + c_a e_X . e_w + e_w . J e_w / 2`.
#[allow(clippy::too_many_arguments)]
pub fn full_lyapunov(
    e_p: &Vec3,
    e_v: &Vec3,
    x_d: &Su2Element,
    x: &Su2Element,
    e_omega: &Vec3,
    translation: &TranslationGains,
    attitude: &AttitudeGains,
    params: &InertialParams,
) -> f64 {
    let e_x = attitude_error_vector(&x_d.star().compose(x));
    0.5 * translation.k_p * e_p.norm_squared()
        + 0.5 * params.mass() * e_v.norm_squared()
        + translation.c_p * e_p.dot(e_v)
        + attitude.k_x * dist_su2(x_d, x)
        + attitude.c_a * e_x.dot(e_omega)
        + 0.5 * e_omega.dot(&(params.inertia() * e_omega))
}

/// Membership report for the exponential-convergence domain and the larger
/// attractivity set.
#[derive(Debug, Clone, Copy)]
pub struct DomainReport {
    /// The realized attitude distance `Gamma(X_d, X)`.
    pub gamma: f64,
    /// Inside the exponential domain (certificate radius `phi < 1/8`,
    /// rate-error budget, and the composite quadratic-form cap).
    pub in_exponential: bool,
    /// Inside the attractivity set, maximized over the free radius
    /// `phi < 2`: `Gamma < 2` and `|e_w|^2 < 2 k_X (2 - Gamma) / jmax`.
    pub in_attractivity: bool,
}

/// Checks the sample against the exponential domain (at the configured
/// certificate radius) and the asymptotic attractivity set.
#[allow(clippy::too_many_arguments)]
pub fn domain_check_full(
    e_p: &Vec3,
    e_v: &Vec3,
    e_omega: &Vec3,
    x_d: &Su2Element,
    x: &Su2Element,
    translation: &TranslationGains,
    attitude: &AttitudeGains,
    params: &InertialParams,
    domain: &DomainParams,
) -> DomainReport {
    let report = gain_certificate(translation, attitude, params, domain);
    domain_check_with_report(e_p, e_v, e_omega, x_d, x, &report, translation, attitude, params, domain)
}

/// Domain check reusing a precomputed certificate (state independent); the
/// hot path of the simulation loop.
#[allow(clippy::too_many_arguments)]
pub fn domain_check_with_report(
    e_p: &Vec3,
    e_v: &Vec3,
    e_omega: &Vec3,
    x_d: &Su2Element,
    x: &Su2Element,
    report: &CertificateReport,
    translation: &TranslationGains,
    attitude: &AttitudeGains,
    params: &InertialParams,
    domain: &DomainParams,
) -> DomainReport {
    let gamma = dist_su2(x_d, x);
    let j_max = params.inertia_max_eig();
    let e_x = attitude_error_vector(&x_d.star().compose(x));
    let z_p = Vector2::new(e_p.norm(), e_v.norm());
    let z_a = Vector2::new(e_x.norm(), e_omega.norm());

    let rate_budget = 2.0 / j_max * attitude.k_x * (domain.phi - gamma);
    let quad_cap = report.m2_aa.eig_max() * z_a.norm_squared()
        + report.m2_pp.eig_max() * z_p.norm_squared();
    let in_exponential = domain.phi < 0.125
        && gamma <= domain.phi
        && e_omega.norm_squared() <= rate_budget
        && quad_cap <= 0.5 * translation.k_p * domain.b_p * domain.b_p;

    let in_attractivity =
        gamma < 2.0 && e_omega.norm_squared() < 2.0 / j_max * attitude.k_x * (2.0 - gamma);

    DomainReport {
        gamma,
        in_exponential,
        in_attractivity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{dist_so3, Mat3};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn params() -> InertialParams {
        InertialParams::new(0.1, 10.0, Mat3::from_diagonal(&Vec3::new(0.05, 0.07, 0.1))).unwrap()
    }

    fn random_vec3(rng: &mut impl Rng, scale: f64) -> Vec3 {
        Vec3::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    #[test]
    fn desired_force_examples() {
        let p = params();
        let gains = TranslationGains::new(1.0, 1.0, 0.1);
        // Hover at zero error: f_d = m g e3 = (0, 0, 1).
        let f = desired_force(&Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &gains, &p);
        assert!((f - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        // Unit position error with k_p = 1: f_d = (-1, 0, 1).
        let f = desired_force(&Vec3::x(), &Vec3::zeros(), &Vec3::zeros(), &gains, &p);
        assert!((f - Vec3::new(-1.0, 0.0, 1.0)).norm() < 1e-15);
        // Gains scaled to zero leave feedforward only.
        let tiny = TranslationGains::new(1e-300, 1e-300, 1e-300);
        let a_r = Vec3::new(1.0, 2.0, 3.0);
        let f = desired_force(&Vec3::x(), &Vec3::y(), &a_r, &tiny, &p);
        assert!((f - (Vec3::new(0.0, 0.0, 1.0) + 0.1 * a_r)).norm() < 1e-12);
    }

    #[test]
    fn b1_projection_examples() {
        let e1 = Vec3::x();
        let e3 = Vec3::z();
        assert!((desired_b1_projection(&e3, &e1).unwrap() - e1).norm() < 1e-15);
        // In-plane heading is invariant.
        let gamma = 0.7f64;
        let h = Vec3::new(gamma.cos(), gamma.sin(), 0.0);
        assert!((desired_b1_projection(&e3, &h).unwrap() - h).norm() < 1e-15);
        // Tilted third axis.
        let b3 = Vec3::new(1.0, 0.0, 1.0).normalize();
        let b1 = desired_b1_projection(&b3, &e1).unwrap();
        let expect = Vec3::new(1.0, 0.0, -1.0).normalize();
        assert!((b1 - expect).norm() < 1e-14);
        assert!(b1.dot(&b3).abs() < 1e-14);
        assert!((b1.norm() - 1.0).abs() < 1e-14);
        // Parallel heading is singular.
        assert!(matches!(
            desired_b1_projection(&e3, &Vec3::z()),
            Err(TrackingError::ProjectionSingular { .. })
        ));
    }

    #[test]
    fn case2_examples() {
        let r = desired_attitude_case2(&Vec3::z(), &Vec3::x()).unwrap();
        assert!((r.matrix() - Mat3::identity()).norm() < 1e-14);
        // Heading e2: quarter turn about e3.
        let r = desired_attitude_case2(&Vec3::z(), &Vec3::y()).unwrap();
        let expect = crate::lie::exp_so3(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        assert!((r.matrix() - expect.matrix()).norm() < 1e-14);
        // Tilted force: third column along f_d, orthonormal frame.
        let f = Vec3::new(1.0, 0.0, 1.0).normalize();
        let r = desired_attitude_case2(&f, &Vec3::x()).unwrap();
        assert!((r.column(2) - f).norm() < 1e-14);
        assert!((r.matrix().transpose() * r.matrix() - Mat3::identity()).norm() < 1e-13);
        assert!((r.matrix().determinant() - 1.0).abs() < 1e-13);
        assert!(matches!(
            desired_attitude_case2(&Vec3::zeros(), &Vec3::x()),
            Err(TrackingError::DegenerateForce { .. })
        ));
    }

    #[test]
    fn case3_examples() {
        // Vertical force, zero yaw: identity.
        let x = desired_attitude_case3(&Vec3::z(), 0.0).unwrap();
        assert!(dist_su2(&x, &Su2Element::identity()) < 1e-14);
        // Vertical force, yaw pi/2: pure yaw rotation.
        let x = desired_attitude_case3(&Vec3::z(), FRAC_PI_2).unwrap();
        let expect = exp_su2(&Vec3::new(0.0, 0.0, FRAC_PI_4));
        assert!(dist_su2(&x, &expect) < 1e-14);
        // 45-degree tilt: beta = pi/4, axis e2, third body axis along f_d.
        let f = Vec3::new(1.0, 0.0, 1.0) / 2f64.sqrt();
        let x = desired_attitude_case3(&f, 0.0).unwrap();
        let expect = exp_su2(&(0.5 * FRAC_PI_4 * Vec3::y()));
        assert!(dist_su2(&x, &expect) < 1e-14);
        assert!((x.rotate(&Vec3::z()) - f).norm() < 1e-12);
    }

    #[test]
    fn case3_third_axis_random() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..500 {
            let f = random_vec3(&mut rng, 3.0);
            if f.norm() < 1e-3 || f.z < -2.9 {
                continue;
            }
            let psi = rng.gen_range(-PI..PI);
            let x = desired_attitude_case3(&f, psi).unwrap();
            assert!((x.rotate(&Vec3::z()) - f.normalize()).norm() < 1e-10);
        }
    }

    #[test]
    fn case2_case3_agree_for_vertical_force_and_share_third_axis() {
        // For vertical desired force the two constructions coincide when the
        // case-2 heading is (cos psi, sin psi, 0). For tilted force they fix
        // the in-plane freedom differently but always share the third body
        // axis, and they agree to second order in the tilt angle.
        let mut rng = StdRng::seed_from_u64(29);
        for _ in 0..100 {
            let psi = rng.gen_range(-1.5f64..1.5);
            let h = Vec3::new(psi.cos(), psi.sin(), 0.0);
            let f = Vec3::new(0.0, 0.0, rng.gen_range(0.1..5.0));
            let r2 = desired_attitude_case2(&f, &h).unwrap();
            let x3 = desired_attitude_case3(&f, psi).unwrap();
            assert!((x3.to_rotation().matrix() - r2.matrix()).norm() < 1e-12);
        }
        for _ in 0..500 {
            let f = random_vec3(&mut rng, 2.0) + Vec3::new(0.0, 0.0, 3.0);
            let psi = rng.gen_range(-1.5f64..1.5);
            let h = Vec3::new(psi.cos(), psi.sin(), 0.0);
            let r2 = desired_attitude_case2(&f, &h).unwrap();
            let x3 = desired_attitude_case3(&f, psi).unwrap();
            assert!((x3.rotate(&Vec3::z()) - r2.column(2)).norm() < 1e-10);
        }
        for _ in 0..200 {
            let tilt = rng.gen_range(0.0..0.05f64);
            let dir = rng.gen_range(-PI..PI);
            let f = Vec3::new(tilt.sin() * dir.cos(), tilt.sin() * dir.sin(), tilt.cos());
            let psi = rng.gen_range(-1.5f64..1.5);
            let h = Vec3::new(psi.cos(), psi.sin(), 0.0);
            let r2 = desired_attitude_case2(&f, &h).unwrap();
            let x3 = desired_attitude_case3(&f, psi).unwrap();
            let mismatch = dist_so3(&x3.to_rotation(), &r2);
            assert!(mismatch < 4.0 * tilt * tilt + 1e-12, "mismatch {mismatch} at tilt {tilt}");
        }
    }

    #[test]
    fn desired_rates_examples() {
        let h = 1e-3;
        // Constant stream: zero rates.
        let x = exp_su2(&Vec3::new(0.1, -0.2, 0.3));
        let hist = [x, x, x, x];
        let (w, wd) = desired_rates(&hist, h).unwrap();
        // Differencing amplifies roundoff by 1/h and 1/h^2.
        assert!(w.norm() < 1e-11 && wd.norm() < 1e-8);
        // Uniform spin about e3 at rate c: w -> (0, 0, c) to O(h^2).
        let c = 2.0;
        let spin = |t: f64| exp_su2(&Vec3::new(0.0, 0.0, 0.5 * c * t));
        let hist = [spin(-3.0 * h), spin(-2.0 * h), spin(-h), spin(0.0)];
        let (w, wd) = desired_rates(&hist, h).unwrap();
        assert!((w - Vec3::new(0.0, 0.0, c)).norm() < 1e-6);
        assert!(wd.norm() < 1e-4);
        // Sign-flipped stream (raw double-cover flips) gives the same rates.
        let hist_flipped = [hist[0], -hist[1], hist[2], -hist[3]];
        let (w2, _) = desired_rates(&hist_flipped, h).unwrap();
        assert!((w2 - w).norm() < 1e-12);
        assert!(matches!(
            desired_rates(&hist[..2], h),
            Err(TrackingError::InsufficientHistory(2))
        ));
    }

    #[test]
    fn desired_rates_time_varying_oracle() {
        // Time-varying rotation with rates estimated from a much finer grid
        // as the oracle; the h-grid estimate must match to O(h^2).
        let h = 1e-3;
        let x = |t: f64| exp_su2(&(0.5 * Vec3::new(0.3 * t.sin(), 0.2 * t, 0.1)));
        let hist = [x(-3.0 * h), x(-2.0 * h), x(-h), x(0.0)];
        let (w, wd) = desired_rates(&hist, h).unwrap();
        let fine = 1e-6;
        let hist_fine = [x(-3.0 * fine), x(-2.0 * fine), x(-fine), x(0.0)];
        let (w_fine, _) = desired_rates(&hist_fine, fine).unwrap();
        assert!((w - w_fine).norm() < 1e-5, "rate error {}", (w - w_fine).norm());
        let hist_prev = [x(-4.0 * h), x(-3.0 * h), x(-2.0 * h), x(-h)];
        let (w_prev, _) = desired_rates(&hist_prev, h).unwrap();
        let wd_fd = (w - w_prev) / h;
        assert!((wd - wd_fd).norm() < 1e-2 * wd.norm().max(1.0));
    }

    #[test]
    fn continuity_enforcement() {
        let prev = exp_su2(&Vec3::new(0.1, 0.0, 0.2));
        assert_eq!(enforce_continuity(prev, &prev), prev);
        let flipped = -prev;
        let fixed = enforce_continuity(flipped, &prev);
        assert_eq!(fixed, prev);
        // A slow rotation sequence with an injected raw sign flip stays
        // continuous after enforcement.
        let mut prev_x = exp_su2(&Vec3::zeros());
        let mut max_step = 0.0f64;
        for k in 1..200 {
            let t = k as f64 * 0.01;
            let mut cand = exp_su2(&Vec3::new(0.0, 0.0, 0.5 * t));
            if k == 100 {
                cand = -cand;
            }
            let fixed = enforce_continuity(cand, &prev_x);
            max_step = max_step.max(dist_su2(&fixed, &prev_x));
            prev_x = fixed;
        }
        assert!(max_step < 0.1, "max continuity step {max_step}");
    }

    #[test]
    fn thrust_projection_examples() {
        assert!((thrust_projection(&Vec3::z(), &Su2Element::identity()) - 1.0).abs() < 1e-15);
        // Quarter turn about e1 tips body z into the horizontal plane.
        let x = exp_su2(&Vec3::new(FRAC_PI_4, 0.0, 0.0));
        assert!(thrust_projection(&Vec3::z(), &x).abs() < 1e-15);
        // Positive whenever Gamma(X_d, X) < 1 - 1/sqrt(2).
        let limit = 1.0 - 1.0 / 2f64.sqrt();
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..500 {
            let f = random_vec3(&mut rng, 2.0) + Vec3::new(0.0, 0.0, 3.0);
            let x_d = desired_attitude_case3(&f, rng.gen_range(-PI..PI)).unwrap();
            let angle = rng.gen_range(0.0..2.0 * (1.0f64 - limit).acos());
            let axis = random_vec3(&mut rng, 1.0).normalize();
            let x = x_d.compose(&exp_su2(&(0.5 * angle * axis)));
            if dist_su2(&x_d, &x) < limit {
                assert!(thrust_projection(&f, &x) > 0.0);
            }
        }
    }

    #[test]
    fn controller_hover_on_reference() {
        let p = params();
        let mut ctrl = TrackingController::new(
            TranslationGains::new(1.0, 1.0, 0.05),
            AttitudeGains::new(8.0, 2.0, 0.1),
            AttitudeCase::TiltYaw,
            1e-3,
        );
        let reference = FullReference::hover(Vec3::new(0.0, 0.0, 1.0), 0.0, &p);
        let state = RigidBodyState {
            position: reference.position,
            velocity: Vec3::zeros(),
            attitude: Su2Element::identity(),
            rate: Vec3::zeros(),
        };
        for _ in 0..10 {
            let out = ctrl.control(&state, &reference, &p).unwrap();
            assert!((out.thrust - p.weight()).abs() < 1e-12);
            assert!(out.torque.norm() < 1e-12);
            assert!(!out.held_previous);
        }
    }

    #[test]
    fn controller_tilts_toward_position_error() {
        // Pure position offset e_p = e1 at hover, case 3, psi = 0:
        // f_d = (-k_p, 0, m g); X_d tilts the thrust toward -e1.
        let p = params();
        let k_p = 2.0;
        let mut ctrl = TrackingController::new(
            TranslationGains::new(k_p, 1.0, 0.05),
            AttitudeGains::new(8.0, 2.0, 0.1),
            AttitudeCase::TiltYaw,
            1e-3,
        );
        let reference = FullReference::hover(Vec3::zeros(), 0.0, &p);
        let state = RigidBodyState {
            position: Vec3::x(),
            velocity: Vec3::zeros(),
            attitude: Su2Element::identity(),
            rate: Vec3::zeros(),
        };
        let out = ctrl.control(&state, &reference, &p).unwrap();
        assert!((out.force_desired - Vec3::new(-k_p, 0.0, p.weight())).norm() < 1e-14);
        let b3 = out.desired.attitude.rotate(&Vec3::z());
        assert!(b3.x < 0.0, "desired thrust axis should lean toward -e1");
        assert!((b3 - out.force_desired.normalize()).norm() < 1e-12);
    }

    #[test]
    fn controller_holds_previous_on_degenerate_force() {
        let p = params();
        let mut ctrl = TrackingController::new(
            TranslationGains::new(1.0, 1.0, 0.05),
            AttitudeGains::new(8.0, 2.0, 0.1),
            AttitudeCase::TiltYaw,
            1e-3,
        );
        let mut reference = FullReference::hover(Vec3::zeros(), 0.0, &p);
        let state = RigidBodyState {
            position: Vec3::zeros(),
            velocity: Vec3::zeros(),
            attitude: Su2Element::identity(),
            rate: Vec3::zeros(),
        };
        let first = ctrl.control(&state, &reference, &p).unwrap();
        assert!(!first.held_previous);
        // Cancel gravity exactly: f_d = 0.
        reference.acceleration = Vec3::new(0.0, 0.0, -p.gravity());
        let held = ctrl.control(&state, &reference, &p).unwrap();
        assert!(held.held_previous);
        assert!(dist_su2(&held.desired.attitude, &first.desired.attitude) < 1e-14);
        // Degenerate on the very first sample is an error.
        let mut fresh = TrackingController::new(
            TranslationGains::new(1.0, 1.0, 0.05),
            AttitudeGains::new(8.0, 2.0, 0.1),
            AttitudeCase::TiltYaw,
            1e-3,
        );
        assert!(matches!(
            fresh.control(&state, &reference, &p),
            Err(TrackingError::DegenerateForce { .. })
        ));
    }

    #[test]
    fn certificate_failure_modes() {
        let p = params();
        let attitude = AttitudeGains::new(8.0, 2.0, 0.1);
        let domain = DomainParams::new(0.01, 1.9, 1.0).unwrap();
        // c_p -> 0 collapses a row of W_pp.
        let translation = TranslationGains { k_p: 1.0, k_v: 1.0, c_p: 0.0 };
        let report = gain_certificate(&translation, &attitude, &p, &domain);
        assert!(!report.w_pp_pd);
        assert!(!report.pass);
        // alpha >= 1 (phi >= 1/8): W_pp diagonal goes nonpositive.
        let translation = TranslationGains::new(1.0, 1.0, 0.1);
        let domain_wide = DomainParams::new(0.2, 1.9, 1.0).unwrap();
        assert!(domain_wide.alpha() >= 1.0);
        let report = gain_certificate(&translation, &attitude, &p, &domain_wide);
        assert!(report.w_pp.d <= 0.0);
        assert!(!report.pass);
    }

    #[test]
    fn lyapunov_reduction_and_zero() {
        let p = params();
        let translation = TranslationGains::new(2.0, 1.5, 0.05);
        let attitude = AttitudeGains::new(8.0, 2.0, 0.1);
        let x = Su2Element::identity();
        let v = full_lyapunov(
            &Vec3::zeros(),
            &Vec3::zeros(),
            &x,
            &x,
            &Vec3::zeros(),
            &translation,
            &attitude,
            &p,
        );
        assert_eq!(v, 0.0);

        // c_p = c_a = 0 reduces to the pure quadratic/Gamma sum.
        let translation0 = TranslationGains { c_p: 0.0, ..translation };
        let attitude0 = AttitudeGains { c_a: 0.0, ..attitude };
        let mut rng = StdRng::seed_from_u64(37);
        for _ in 0..50 {
            let e_p = random_vec3(&mut rng, 2.0);
            let e_v = random_vec3(&mut rng, 2.0);
            let e_w = random_vec3(&mut rng, 2.0);
            let x_d = exp_su2(&random_vec3(&mut rng, 1.0));
            let x = exp_su2(&random_vec3(&mut rng, 1.0));
            let v = full_lyapunov(&e_p, &e_v, &x_d, &x, &e_w, &translation0, &attitude0, &p);
            let expect = 0.5 * translation.k_p * e_p.norm_squared()
                + 0.5 * p.mass() * e_v.norm_squared()
                + attitude.k_x * dist_su2(&x_d, &x)
                + 0.5 * e_w.dot(&(p.inertia() * e_w));
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_report_examples() {
        let p = params();
        let translation = TranslationGains::new(2.0, 1.5, 0.05);
        let attitude = AttitudeGains::new(8.0, 2.0, 0.1);
        let domain = DomainParams::new(0.01, 1.9, 1.0).unwrap();
        let x = Su2Element::identity();
        // Zero errors: member of both.
        let r = domain_check_full(
            &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &x, &x,
            &translation, &attitude, &p, &domain,
        );
        assert!(r.in_exponential && r.in_attractivity);
        // Large tilt (Gamma = 1), small rate error: outside D, inside the
        // attractivity set. Gamma(I, exp_su2(v)) = 1 - cos|v|.
        let half = (1.0f64 - 1.0).acos();
        let tilted = exp_su2(&Vec3::new(half, 0.0, 0.0));
        let r = domain_check_full(
            &Vec3::zeros(), &Vec3::zeros(), &Vec3::new(0.1, 0.0, 0.0), &x, &tilted,
            &translation, &attitude, &p, &domain,
        );
        assert!((r.gamma - 1.0).abs() < 1e-12);
        assert!(!r.in_exponential && r.in_attractivity);
        // Gamma = 1.99 with a rate error violating the budget: outside both.
        let half = (1.0f64 - 1.99).acos();
        let nearly_antipodal = exp_su2(&Vec3::new(half, 0.0, 0.0));
        let budget = (2.0 / p.inertia_max_eig() * attitude.k_x * (2.0 - 1.99)).sqrt();
        let r = domain_check_full(
            &Vec3::zeros(), &Vec3::zeros(), &Vec3::new(2.0 * budget, 0.0, 0.0),
            &x, &nearly_antipodal,
            &translation, &attitude, &p, &domain,
        );
        assert!(!r.in_exponential && !r.in_attractivity);
    }
}
