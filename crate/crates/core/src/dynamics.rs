//! Rigid-body dynamics, fixed-step RK4 integration with quaternion
//! renormalization, differential-flatness reference expansion, and the
//! reference trajectory generators with the random-realization sampler.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::attitude::InertialParams;
use crate::lie::{hat_so3, Mat3, RotationMatrix, Su2Element, UnitQuaternion, Vec3};
use crate::tracking::{
    desired_attitude_case2, desired_attitude_case3, enforce_continuity, FullReference,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("required thrust vector degenerate (|f| = {norm:.3e})")]
    DegenerateThrust { norm: f64 },
    #[error("heading undefined: {0}")]
    DegenerateHeading(String),
    #[error("repeated waypoint at index {0}")]
    DegenerateSegment(usize),
    #[error("flat samples must be a uniform, nonempty grid")]
    BadSampleGrid,
}

/// Full plant state `(p, v, X, omega)`: position and velocity in the global
/// frame, attitude on SU(2), body rates.
#[derive(Debug, Clone, Copy)]
pub struct RigidBodyState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: Su2Element,
    pub rate: Vec3,
}

impl RigidBodyState {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            attitude: Su2Element::identity(),
            rate: Vec3::zeros(),
        }
    }
}

/// Thrust magnitude and body torque driving the plant.
#[derive(Debug, Clone, Copy)]
pub struct ControlInput {
    pub thrust: f64,
    pub torque: Vec3,
}

/// Tangent of the 13-dimensional state coordinates.
#[derive(Debug, Clone, Copy)]
pub struct StateTangent {
    pub d_position: Vec3,
    pub d_velocity: Vec3,
    pub d_attitude: [f64; 4],
    pub d_rate: Vec3,
}

/// Raw coordinates used for the integrator stages; the quaternion entry may
/// drift off unit norm at stage points and is renormalized once per step.
#[derive(Debug, Clone, Copy)]
struct RawState {
    p: Vec3,
    v: Vec3,
    q: [f64; 4],
    w: Vec3,
}

impl RawState {
    fn from_state(s: &RigidBodyState) -> Self {
        Self {
            p: s.position,
            v: s.velocity,
            q: s.attitude.quaternion().as_array(),
            w: s.rate,
        }
    }

    fn add_scaled(&self, t: &StateTangent, h: f64) -> Self {
        Self {
            p: self.p + h * t.d_position,
            v: self.v + h * t.d_velocity,
            q: [
                self.q[0] + h * t.d_attitude[0],
                self.q[1] + h * t.d_attitude[1],
                self.q[2] + h * t.d_attitude[2],
                self.q[3] + h * t.d_attitude[3],
            ],
            w: self.w + h * t.d_rate,
        }
    }

    fn quaternion_norm(&self) -> f64 {
        self.q.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn state_renormalized(&self) -> RigidBodyState {
        let n = self.quaternion_norm();
        RigidBodyState {
            position: self.p,
            velocity: self.v,
            attitude: Su2Element::from_quaternion(UnitQuaternion::new_unchecked(
                self.q[0] / n,
                self.q[1] / n,
                self.q[2] / n,
                self.q[3] / n,
            )),
            rate: self.w,
        }
    }
}

fn raw_derivative(s: &RawState, u: &ControlInput, params: &InertialParams) -> StateTangent {
    // Rotation evaluated on the normalized quaternion so the right-hand side
    // is scale invariant at off-manifold stage points.
    let n = s.quaternion_norm();
    let q = [s.q[0] / n, s.q[1] / n, s.q[2] / n, s.q[3] / n];
    let body_z = Vec3::new(
        2.0 * (q[1] * q[3] + q[0] * q[2]),
        2.0 * (q[2] * q[3] - q[0] * q[1]),
        q[0] * q[0] - q[1] * q[1] - q[2] * q[2] + q[3] * q[3],
    );
    let d_velocity = (u.thrust * body_z - params.weight() * Vec3::z()) / params.mass();
    // dX = X [w/2]^ as a quaternion product with the raw (unnormalized) q.
    let hw = [0.0, 0.5 * s.w.x, 0.5 * s.w.y, 0.5 * s.w.z];
    let d_attitude = [
        s.q[0] * hw[0] - s.q[1] * hw[1] - s.q[2] * hw[2] - s.q[3] * hw[3],
        s.q[0] * hw[1] + s.q[1] * hw[0] + s.q[2] * hw[3] - s.q[3] * hw[2],
        s.q[0] * hw[2] - s.q[1] * hw[3] + s.q[2] * hw[0] + s.q[3] * hw[1],
        s.q[0] * hw[3] + s.q[1] * hw[2] - s.q[2] * hw[1] + s.q[3] * hw[0],
    ];
    let j_w = params.inertia() * s.w;
    let d_rate = params.inertia_inv() * (hat_so3(&j_w) * s.w + u.torque);
    StateTangent {
        d_position: s.v,
        d_velocity,
        d_attitude,
        d_rate,
    }
}

/// Right-hand sides of the rigid-body dynamics:
/// `dp = v`, `m dv = f R e3 - m g e3`, `dX = X [w/2]^`,
/// `J dw = S(J w) w + tau`.
pub fn state_derivative(
    s: &RigidBodyState,
    u: &ControlInput,
    params: &InertialParams,
) -> StateTangent {
    raw_derivative(&RawState::from_state(s), u, params)
}

/// Classical RK4 step with a time-varying right-hand side; `f` receives the
/// stage time offset from the step start. The quaternion is renormalized
/// once after the step.
pub fn rk4_step_with(
    s: &RigidBodyState,
    h: f64,
    f: impl Fn(f64, &RawStateView) -> StateTangent,
) -> RigidBodyState {
    let y0 = RawState::from_state(s);
    let k1 = f(0.0, &RawStateView(&y0));
    let y1 = y0.add_scaled(&k1, 0.5 * h);
    let k2 = f(0.5 * h, &RawStateView(&y1));
    let y2 = y0.add_scaled(&k2, 0.5 * h);
    let k3 = f(0.5 * h, &RawStateView(&y2));
    let y3 = y0.add_scaled(&k3, h);
    let k4 = f(h, &RawStateView(&y3));

    let sixth = h / 6.0;
    let mut q = y0.q;
    for (i, qi) in q.iter_mut().enumerate() {
        *qi += sixth
            * (k1.d_attitude[i]
                + 2.0 * k2.d_attitude[i]
                + 2.0 * k3.d_attitude[i]
                + k4.d_attitude[i]);
    }
    let combined = RawState {
        p: y0.p + sixth * (k1.d_position + 2.0 * k2.d_position + 2.0 * k3.d_position + k4.d_position),
        v: y0.v + sixth * (k1.d_velocity + 2.0 * k2.d_velocity + 2.0 * k3.d_velocity + k4.d_velocity),
        q,
        w: y0.w + sixth * (k1.d_rate + 2.0 * k2.d_rate + 2.0 * k3.d_rate + k4.d_rate),
    };
    combined.state_renormalized()
}

/// Read-only view of the raw integrator coordinates exposed to stage
/// callbacks.
pub struct RawStateView<'a>(&'a RawState);

impl RawStateView<'_> {
    pub fn derivative(&self, u: &ControlInput, params: &InertialParams) -> StateTangent {
        raw_derivative(self.0, u, params)
    }

    /// Materializes the stage state with a normalized attitude, for
    /// callbacks that need to evaluate feedback laws at stage points.
    pub fn state(&self) -> RigidBodyState {
        self.0.state_renormalized()
    }
}

/// One RK4 step under a zero-order-hold control input.
pub fn rk4_step(
    s: &RigidBodyState,
    u: &ControlInput,
    params: &InertialParams,
    h: f64,
) -> RigidBodyState {
    rk4_step_with(s, h, |_, view| view.derivative(u, params))
}

/// Norm deviation of the combined quaternion before renormalization; used by
/// the manifold-preservation checks.
pub fn rk4_norm_defect(s: &RigidBodyState, u: &ControlInput, params: &InertialParams, h: f64) -> f64 {
    let y0 = RawState::from_state(s);
    let k1 = raw_derivative(&y0, u, params);
    let k2 = raw_derivative(&y0.add_scaled(&k1, 0.5 * h), u, params);
    let k3 = raw_derivative(&y0.add_scaled(&k2, 0.5 * h), u, params);
    let k4 = raw_derivative(&y0.add_scaled(&k3, h), u, params);
    let sixth = h / 6.0;
    let mut q = y0.q;
    for (i, qi) in q.iter_mut().enumerate() {
        *qi += sixth
            * (k1.d_attitude[i]
                + 2.0 * k2.d_attitude[i]
                + 2.0 * k3.d_attitude[i]
                + k4.d_attitude[i]);
    }
    (q.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs()
}

/// One flat-output sample: position derivatives to fourth order, heading
/// angle to second order.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatSample {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub jerk: Vec3,
    pub snap: Vec3,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub yaw_accel: f64,
}

/// The simulation-study circle `p_r(t) = (3 sin t, 3 cos t, 0)` with heading
/// along the velocity (`psi = -t`, analytically unwrapped).
pub fn circle_reference(t: f64) -> FlatSample {
    let (s, c) = t.sin_cos();
    FlatSample {
        position: Vec3::new(3.0 * s, 3.0 * c, 0.0),
        velocity: Vec3::new(3.0 * c, -3.0 * s, 0.0),
        acceleration: Vec3::new(-3.0 * s, -3.0 * c, 0.0),
        jerk: Vec3::new(-3.0 * c, 3.0 * s, 0.0),
        snap: Vec3::new(3.0 * s, 3.0 * c, 0.0),
        yaw: -t,
        yaw_rate: -1.0,
        yaw_accel: 0.0,
    }
}

/// Yaw schedule of a spline path.
#[derive(Debug, Clone)]
pub enum YawPlan {
    /// Constant heading angle.
    Fixed(f64),
    /// One heading angle per waypoint, interpolated linearly in time across
    /// each segment.
    PerWaypoint(Vec<f64>),
}

/// Piecewise-linear position path traversed at constant speed; velocities
/// are discontinuous at the knots by construction.
#[derive(Debug, Clone)]
pub struct SplinePath {
    waypoints: Vec<Vec3>,
    knot_times: Vec<f64>,
    directions: Vec<Vec3>,
    speed: f64,
    yaw: YawPlan,
}

/// Builds a linear-spline reference through `waypoints` at constant `speed`.
pub fn spline_reference(
    waypoints: &[Vec3],
    speed: f64,
    yaw: YawPlan,
) -> Result<SplinePath, DynamicsError> {
    assert!(speed > 0.0, "speed must be positive");
    assert!(waypoints.len() >= 2, "need at least two waypoints");
    if let YawPlan::PerWaypoint(y) = &yaw {
        assert_eq!(y.len(), waypoints.len(), "one yaw value per waypoint");
    }
    let mut knot_times = vec![0.0];
    let mut directions = Vec::with_capacity(waypoints.len() - 1);
    for (i, pair) in waypoints.windows(2).enumerate() {
        let delta = pair[1] - pair[0];
        let len = delta.norm();
        if len < 1e-12 {
            return Err(DynamicsError::DegenerateSegment(i));
        }
        directions.push(delta / len);
        knot_times.push(knot_times[i] + len / speed);
    }
    Ok(SplinePath {
        waypoints: waypoints.to_vec(),
        knot_times,
        directions,
        speed,
        yaw,
    })
}

impl SplinePath {
    pub fn duration(&self) -> f64 {
        *self.knot_times.last().expect("nonempty")
    }

    /// Sample at time `t`; before the start holds the first waypoint, after
    /// the end holds the last one.
    pub fn sample(&self, t: f64) -> FlatSample {
        let n_seg = self.directions.len();
        if t < 0.0 {
            return FlatSample {
                position: self.waypoints[0],
                yaw: self.yaw_at(0, 0.0),
                ..Default::default()
            };
        }
        if t >= self.duration() {
            return FlatSample {
                position: *self.waypoints.last().expect("nonempty"),
                yaw: self.yaw_at(n_seg - 1, 1.0),
                ..Default::default()
            };
        }
        let seg = match self
            .knot_times
            .binary_search_by(|probe| probe.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => i.min(n_seg - 1),
            Err(i) => i - 1,
        };
        let t0 = self.knot_times[seg];
        let t1 = self.knot_times[seg + 1];
        let frac = (t - t0) / (t1 - t0);
        let (yaw, yaw_rate) = match &self.yaw {
            YawPlan::Fixed(y) => (*y, 0.0),
            YawPlan::PerWaypoint(y) => {
                let y0 = y[seg];
                let y1 = y[seg + 1];
                (y0 + frac * (y1 - y0), (y1 - y0) / (t1 - t0))
            }
        };
        FlatSample {
            position: self.waypoints[seg] + self.speed * (t - t0) * self.directions[seg],
            velocity: self.speed * self.directions[seg],
            acceleration: Vec3::zeros(),
            jerk: Vec3::zeros(),
            snap: Vec3::zeros(),
            yaw,
            yaw_rate,
            yaw_accel: 0.0,
        }
    }

    fn yaw_at(&self, seg: usize, frac: f64) -> f64 {
        match &self.yaw {
            YawPlan::Fixed(y) => *y,
            YawPlan::PerWaypoint(y) => y[seg] + frac * (y[seg + 1] - y[seg]),
        }
    }
}

/// Uniform-grid flat samples with linear interpolation on every field.
#[derive(Debug, Clone)]
pub struct SampledPath {
    t0: f64,
    dt: f64,
    samples: Vec<FlatSample>,
}

impl SampledPath {
    pub fn new(t0: f64, dt: f64, samples: Vec<FlatSample>) -> Result<Self, DynamicsError> {
        if samples.is_empty() || !(dt > 0.0) {
            return Err(DynamicsError::BadSampleGrid);
        }
        Ok(Self { t0, dt, samples })
    }

    pub fn sample(&self, t: f64) -> FlatSample {
        let idx = (t - self.t0) / self.dt;
        if idx <= 0.0 {
            return self.samples[0];
        }
        let last = self.samples.len() - 1;
        if idx >= last as f64 {
            return self.samples[last];
        }
        let i = idx.floor() as usize;
        let frac = idx - i as f64;
        let a = &self.samples[i];
        let b = &self.samples[i + 1];
        let lerp3 = |x: &Vec3, y: &Vec3| x + frac * (y - x);
        FlatSample {
            position: lerp3(&a.position, &b.position),
            velocity: lerp3(&a.velocity, &b.velocity),
            acceleration: lerp3(&a.acceleration, &b.acceleration),
            jerk: lerp3(&a.jerk, &b.jerk),
            snap: lerp3(&a.snap, &b.snap),
            yaw: a.yaw + frac * (b.yaw - a.yaw),
            yaw_rate: a.yaw_rate + frac * (b.yaw_rate - a.yaw_rate),
            yaw_accel: a.yaw_accel + frac * (b.yaw_accel - a.yaw_accel),
        }
    }
}

/// Flat-output trajectory source.
#[derive(Debug, Clone)]
pub enum FlatTrajectory {
    Hover { position: Vec3, yaw: f64 },
    Circle,
    Splines(SplinePath),
    Samples(SampledPath),
}

impl FlatTrajectory {
    pub fn sample(&self, t: f64) -> FlatSample {
        match self {
            FlatTrajectory::Hover { position, yaw } => FlatSample {
                position: *position,
                yaw: *yaw,
                ..Default::default()
            },
            FlatTrajectory::Circle => circle_reference(t),
            FlatTrajectory::Splines(path) => path.sample(t),
            FlatTrajectory::Samples(path) => path.sample(t),
        }
    }
}

/// How the flat heading is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadingMode {
    /// Heading along the reference velocity, `b_1r = v_r / |v_r|`.
    Velocity,
    /// Heading from the yaw-angle series of the flat output.
    Yaw,
}

/// How the in-plane frame freedom is completed, mirroring the controller's
/// desired-attitude cases so that the reference and desired attitudes
/// coincide at zero tracking error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameCompletion {
    /// Heading-vector projection (controller cases (i)/(ii)).
    Projection,
    /// Tilt-then-yaw composition (controller case (iii)).
    TiltYaw,
}

/// A value with its first and second time derivative.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Series {
    pub(crate) v: Vec3,
    pub(crate) d: Vec3,
    pub(crate) dd: Vec3,
}

impl Series {
    fn cross(&self, other: &Series) -> Series {
        Series {
            v: self.v.cross(&other.v),
            d: self.d.cross(&other.v) + self.v.cross(&other.d),
            dd: self.dd.cross(&other.v) + 2.0 * self.d.cross(&other.d) + self.v.cross(&other.dd),
        }
    }

    /// Unit-vector series `u = f / |f|` with exact derivative chains.
    fn normalized(&self) -> Series {
        let n = self.v.norm();
        let u = self.v / n;
        let n_dot = u.dot(&self.d);
        let u_dot = (self.d - n_dot * u) / n;
        let n_ddot = u_dot.dot(&self.d) + u.dot(&self.dd);
        let u_ddot = self.dd / n
            - self.d * (n_dot / (n * n))
            - u_dot * (n_dot / n)
            - u * (n_ddot / n - n_dot * n_dot / (n * n));
        Series { v: u, d: u_dot, dd: u_ddot }
    }
}


/// Heading input of a frame construction, with derivatives.
#[derive(Debug, Clone, Copy)]
pub(crate) enum HeadingSeries {
    /// Heading angle with rate and acceleration (tilt-then-yaw completion).
    Angle { yaw: f64, yaw_rate: f64, yaw_accel: f64 },
    /// Raw heading vector with derivatives (projection completion).
    Vector(Series),
}

/// Desired/reference frame with exact body rates: attitude (canonical
/// branch, continuity not yet applied), rate and rate derivative computed by
/// analytic differentiation of the frame columns.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FrameRates {
    pub(crate) attitude: Su2Element,
    pub(crate) rate: Vec3,
    pub(crate) rate_dot: Vec3,
    pub(crate) heading_vector: Vec3,
}

/// Builds the frame fixed by a force series and a heading series under the
/// selected completion, and differentiates its columns analytically.
pub(crate) fn frame_rates(
    force: &Series,
    heading: &HeadingSeries,
    completion: FrameCompletion,
) -> Result<FrameRates, DynamicsError> {
    let f_norm = force.v.norm();
    if f_norm < 1e-9 {
        return Err(DynamicsError::DegenerateThrust { norm: f_norm });
    }
    let u = force.normalized();
    if 1.0 + u.v.z < 1e-6 {
        return Err(DynamicsError::DegenerateThrust { norm: f_norm });
    }

    let heading_vec = match heading {
        HeadingSeries::Angle { yaw, yaw_rate, yaw_accel } => {
            let (sy, cy) = yaw.sin_cos();
            Series {
                v: Vec3::new(cy, sy, 0.0),
                d: *yaw_rate * Vec3::new(-sy, cy, 0.0),
                dd: *yaw_accel * Vec3::new(-sy, cy, 0.0)
                    + yaw_rate * yaw_rate * Vec3::new(-cy, -sy, 0.0),
            }
        }
        HeadingSeries::Vector(series) => *series,
    };

    let (b1, attitude) = match completion {
        FrameCompletion::Projection => {
            // b1 = normalize(h - u (u . h)).
            let uh = Series {
                v: u.v * u.v.dot(&heading_vec.v),
                d: u.d * u.v.dot(&heading_vec.v)
                    + u.v * (u.d.dot(&heading_vec.v) + u.v.dot(&heading_vec.d)),
                dd: u.dd * u.v.dot(&heading_vec.v)
                    + 2.0 * u.d * (u.d.dot(&heading_vec.v) + u.v.dot(&heading_vec.d))
                    + u.v
                        * (u.dd.dot(&heading_vec.v)
                            + 2.0 * u.d.dot(&heading_vec.d)
                            + u.v.dot(&heading_vec.dd)),
            };
            let c = Series {
                v: heading_vec.v - uh.v,
                d: heading_vec.d - uh.d,
                dd: heading_vec.dd - uh.dd,
            };
            if c.v.norm() < 1e-6 {
                return Err(DynamicsError::DegenerateHeading(
                    "heading parallel to thrust direction".into(),
                ));
            }
            let b1 = c.normalized();
            let attitude = desired_attitude_case2(&force.v, &heading_vec.v)
                .map_err(|_| DynamicsError::DegenerateHeading("projection singular".into()))?
                .to_su2();
            (b1, attitude)
        }
        FrameCompletion::TiltYaw => {
            // R = A(u) Rz(yaw) with the geodesic aligner
            // A = I + S(w) + S(w)^2 / (1 + c), w = e3 x u, c = u_z.
            let w = Series {
                v: Vec3::z().cross(&u.v),
                d: Vec3::z().cross(&u.d),
                dd: Vec3::z().cross(&u.dd),
            };
            let c = u.v.z;
            let c_dot = u.d.z;
            let c_ddot = u.dd.z;
            let g = 1.0 / (1.0 + c);
            let sw = hat_so3(&w.v);
            let swd = hat_so3(&w.d);
            let swdd = hat_so3(&w.dd);
            let p = swd * sw + sw * swd;
            let p_dot = swdd * sw + 2.0 * (swd * swd) + sw * swdd;
            let q = sw * sw;
            let a_mat = Mat3::identity() + sw + q * g;
            let a_dot = swd + p * g - q * (c_dot * g * g);
            let a_ddot = swdd + p_dot * g - 2.0 * p * (c_dot * g * g)
                - q * (c_ddot * g * g - 2.0 * c_dot * c_dot * g * g * g);
            let b1 = Series {
                v: a_mat * heading_vec.v,
                d: a_dot * heading_vec.v + a_mat * heading_vec.d,
                dd: a_ddot * heading_vec.v + 2.0 * a_dot * heading_vec.d + a_mat * heading_vec.dd,
            };
            let yaw_value = match heading {
                HeadingSeries::Angle { yaw, .. } => *yaw,
                HeadingSeries::Vector(series) => series.v.y.atan2(series.v.x),
            };
            let attitude = desired_attitude_case3(&force.v, yaw_value)
                .map_err(|_| DynamicsError::DegenerateThrust { norm: f_norm })?;
            (b1, attitude)
        }
    };
    let b2 = u.cross(&b1);
    let b3 = u;

    let rate = Vec3::new(b3.v.dot(&b2.d), b1.v.dot(&b3.d), b2.v.dot(&b1.d));
    let rate_dot = Vec3::new(
        b3.d.dot(&b2.d) + b3.v.dot(&b2.dd),
        b1.d.dot(&b3.d) + b1.v.dot(&b3.dd),
        b2.d.dot(&b1.d) + b2.v.dot(&b1.dd),
    );
    Ok(FrameRates {
        attitude,
        rate,
        rate_dot,
        heading_vector: heading_vec.v,
    })
}

/// Expands one flat sample into the full reference state: thrust magnitude
/// and direction from `F = m (a_r + g e3)`, frame completion per the
/// configured mode, body rates and accelerations from analytic
/// differentiation of the frame columns, and the reference torque closing
/// the rotational dynamics row.
///
/// `prev` feeds the continuity enforcement of the reference attitude on
/// SU(2); pass the previously expanded attitude when walking a trajectory.
pub fn flat_to_reference(
    sample: &FlatSample,
    params: &InertialParams,
    heading: HeadingMode,
    completion: FrameCompletion,
    prev: Option<&Su2Element>,
) -> Result<FullReference, DynamicsError> {
    let m = params.mass();
    let force = Series {
        v: m * (sample.acceleration + params.gravity() * Vec3::z()),
        d: m * sample.jerk,
        dd: m * sample.snap,
    };
    let f_norm = force.v.norm();
    if f_norm < 1e-6 * params.weight() {
        return Err(DynamicsError::DegenerateThrust { norm: f_norm });
    }

    // Heading angle series per mode.
    let (yaw, yaw_rate, yaw_accel) = match heading {
        HeadingMode::Yaw => (sample.yaw, sample.yaw_rate, sample.yaw_accel),
        HeadingMode::Velocity => {
            let v = sample.velocity;
            let planar_sq = v.x * v.x + v.y * v.y;
            if v.norm() < 1e-6 || planar_sq < 1e-12 {
                return Err(DynamicsError::DegenerateHeading(format!(
                    "velocity heading undefined (|v| = {:.3e})",
                    v.norm()
                )));
            }
            let a = sample.acceleration;
            let j = sample.jerk;
            let yaw = v.y.atan2(v.x);
            let num = v.x * a.y - v.y * a.x;
            let yaw_rate = num / planar_sq;
            let num_dot = v.x * j.y - v.y * j.x;
            let planar_dot = 2.0 * (v.x * a.x + v.y * a.y);
            let yaw_accel = (num_dot * planar_sq - num * planar_dot) / (planar_sq * planar_sq);
            (yaw, yaw_rate, yaw_accel)
        }
    };
    let heading_series = HeadingSeries::Angle { yaw, yaw_rate, yaw_accel };
    let frame = frame_rates(&force, &heading_series, completion)?;

    let attitude = match prev {
        Some(p) => enforce_continuity(frame.attitude, p),
        None => frame.attitude,
    };
    let j = params.inertia();
    let torque = j * frame.rate_dot - hat_so3(&(j * frame.rate)) * frame.rate;

    Ok(FullReference {
        position: sample.position,
        velocity: sample.velocity,
        acceleration: sample.acceleration,
        jerk: sample.jerk,
        snap: sample.snap,
        attitude,
        rate: frame.rate,
        rate_dot: frame.rate_dot,
        heading_vector: frame.heading_vector,
        yaw,
        yaw_rate,
        yaw_accel,
        thrust: f_norm,
        torque,
    })
}

/// Stateful wrapper walking a trajectory with reference-attitude continuity
/// enforced across successive samples.
#[derive(Debug, Clone)]
pub struct ReferenceExpander {
    pub trajectory: FlatTrajectory,
    pub heading: HeadingMode,
    pub completion: FrameCompletion,
    prev: Option<Su2Element>,
}

impl ReferenceExpander {
    pub fn new(trajectory: FlatTrajectory, heading: HeadingMode, completion: FrameCompletion) -> Self {
        Self {
            trajectory,
            heading,
            completion,
            prev: None,
        }
    }

    pub fn reset(&mut self) {
        self.prev = None;
    }

    pub fn at(&mut self, t: f64, params: &InertialParams) -> Result<FullReference, DynamicsError> {
        let sample = self.trajectory.sample(t);
        let reference =
            flat_to_reference(&sample, params, self.heading, self.completion, self.prev.as_ref())?;
        self.prev = Some(reference.attitude);
        Ok(reference)
    }
}

/// One Monte-Carlo realization: sampled inertia and initial state.
#[derive(Debug, Clone)]
pub struct RealizationSample {
    pub inertia: Mat3,
    pub state: RigidBodyState,
    pub seed: u64,
}

/// Samples a realization of the simulation study: inertia `Q' D Q` with `Q`
/// uniform on SO(3) and `D = diag(0.05, U(0.05, 0.1), 0.1)` (eigenvalues
/// pinned to the study's extremes), `p ~ N((0,0,-2), I)`,
/// `v, w ~ N(0, 5 I)`, attitude uniform on SU(2). Deterministic per seed.
pub fn sample_realization(seed: u64) -> RealizationSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid");

    let q_rot = random_rotation(&mut rng).matrix().to_owned();
    let middle = rng.gen_range(0.05..=0.1);
    let d = Mat3::from_diagonal(&Vec3::new(0.05, middle, 0.1));
    let inertia = q_rot.transpose() * d * q_rot;
    // Symmetrize exactly against roundoff in the triple product.
    let inertia = 0.5 * (inertia + inertia.transpose());

    let gauss3 = |rng: &mut ChaCha8Rng| {
        Vec3::new(
            std_normal.sample(rng),
            std_normal.sample(rng),
            std_normal.sample(rng),
        )
    };
    let position = Vec3::new(0.0, 0.0, -2.0) + gauss3(&mut rng);
    let velocity = 5f64.sqrt() * gauss3(&mut rng);
    let rate = 5f64.sqrt() * gauss3(&mut rng);
    let attitude = random_su2(&mut rng);

    RealizationSample {
        inertia,
        state: RigidBodyState {
            position,
            velocity,
            attitude,
            rate,
        },
        seed,
    }
}

/// Uniform random SU(2) element (normalized 4-dimensional Gaussian).
pub fn random_su2(rng: &mut impl Rng) -> Su2Element {
    let std_normal = Normal::new(0.0, 1.0).expect("valid");
    loop {
        let q: [f64; 4] = [
            std_normal.sample(rng),
            std_normal.sample(rng),
            std_normal.sample(rng),
            std_normal.sample(rng),
        ];
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-6 {
            return Su2Element::from_quaternion(UnitQuaternion::new_unchecked(
                q[0] / n,
                q[1] / n,
                q[2] / n,
                q[3] / n,
            ));
        }
    }
}

/// Uniform random rotation (via the uniform SU(2) sampler).
pub fn random_rotation(rng: &mut impl Rng) -> RotationMatrix {
    random_su2(rng).to_rotation()
}

/// The printed simulation-study realization with its exact initial values.
#[derive(Debug, Clone)]
pub struct PaperFixture {
    pub sample: RealizationSample,
    /// Frobenius distance between the printed 2-decimal rotation and its
    /// projection to the nearest rotation (recorded fixture adjustment).
    pub rotation_adjustment: f64,
}

/// Initial conditions of the printed simulation realization. The printed
/// rotation is only 2-decimal accurate and is projected to the nearest
/// rotation before conversion to SU(2); the adjustment size is recorded.
pub fn paper_fixture() -> PaperFixture {
    let r_printed = Mat3::new(
        0.51, -0.05, -0.86, //
        -0.78, 0.41, -0.48, //
        0.37, 0.91, 0.17,
    );
    let r = RotationMatrix::nearest(&r_printed);
    let rotation_adjustment = (r.matrix() - r_printed).norm();
    let inertia = Mat3::new(
        0.08, 0.01, 0.02, //
        0.01, 0.07, 0.01, //
        0.02, 0.01, 0.07,
    );
    let state = RigidBodyState {
        position: Vec3::new(0.08, -0.16, -1.63),
        velocity: Vec3::new(-0.59, 0.76, -0.95),
        attitude: r.to_su2(),
        rate: Vec3::new(-1.81, 1.80, 2.81),
    };
    PaperFixture {
        sample: RealizationSample {
            inertia,
            state,
            seed: 0,
        },
        rotation_adjustment,
    }
}
