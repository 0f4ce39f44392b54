//! IMU-driven multiplicative EKF on the 9-dimensional error state
//! `z = (p; v; delta)`: body-frame velocity mechanization, sequential scalar
//! position updates, a first-order attitude reset, and externalization into
//! the full rigid-body state.
//!
//! The attitude estimate is `R_hat(t) = R_anchor (I + S(delta))` to first
//! order; the anchor is the estimate at the most recent reset and `delta`
//! accumulates the rotation since. Externalization applies the exact
//! exponential of `delta`, the reset folds `(I + S(delta))` into the anchor
//! and re-orthonormalizes (the first-order reset), and position measurements
//! are fused axis by axis as scalar updates.

use std::io::{BufRead, Write};

use nalgebra::SMatrix;
use thiserror::Error;

use crate::dynamics::RigidBodyState;
use crate::lie::{exp_so3, exp_su2, hat_so3, RotationMatrix, Su2Element, Vec3};
use crate::linalg::nearest_rotation;

pub type Cov9 = SMatrix<f64, 9, 9>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("non-positive prediction interval dt = {0}")]
    NonPositiveDt(f64),
    #[error("no gyro samples buffered since the last externalization")]
    EmptyGyroBuffer,
    #[error("replay line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
}

/// Filter noise parameters and the attitude reset threshold. The defaults
/// are tunable stand-ins (the hardware-specific values are not published):
/// accel 0.5 m/s^2, gyro 0.05 rad/s, pose 0.02 m, reset at 0.1 rad.
#[derive(Debug, Clone, Copy)]
pub struct EkfConfig {
    pub accel_noise: f64,
    pub gyro_noise: f64,
    pub pose_noise: f64,
    pub reset_threshold: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            accel_noise: 0.5,
            gyro_noise: 0.05,
            pose_noise: 0.02,
            reset_threshold: 0.1,
        }
    }
}

impl EkfConfig {
    /// Per-step process noise `diag(0, sigma_a^2 dt I, sigma_g^2 dt I)`.
    pub fn process_noise(&self, dt: f64) -> Cov9 {
        let mut q = Cov9::zeros();
        for i in 3..6 {
            q[(i, i)] = self.accel_noise * self.accel_noise * dt;
        }
        for i in 6..9 {
            q[(i, i)] = self.gyro_noise * self.gyro_noise * dt;
        }
        q
    }
}

/// One IMU sample: specific force and angular rate in the body frame.
#[derive(Debug, Clone, Copy)]
pub struct ImuSample {
    pub accel: Vec3,
    pub gyro: Vec3,
    pub time: f64,
}

/// One position measurement with per-axis noise standard deviations.
#[derive(Debug, Clone, Copy)]
pub struct PoseMeasurement {
    pub position: Vec3,
    pub noise_std: Vec3,
    pub time: f64,
}

/// Filter state: position (global), velocity (body frame), small-angle
/// attitude error, the anchor rotation, and the 9x9 covariance.
///
/// The anchor is carried both as a rotation matrix and as its SU(2)
/// representative; the latter preserves the double-cover branch across
/// resets so the externalized attitude stream never flips sign (a raw
/// matrix-to-quaternion extraction would flip whenever the attitude crosses
/// the canonical-sign surface, and sign flips read as antipodal attitudes
/// downstream).
#[derive(Debug, Clone)]
pub struct EkfState {
    pub position: Vec3,
    pub velocity_body: Vec3,
    pub delta: Vec3,
    anchor: RotationMatrix,
    anchor_su2: Su2Element,
    pub covariance: Cov9,
    pub time: f64,
    pub rejected_measurements: usize,
    gravity: f64,
}

/// Per-axis innovation and position-gain log of a scalar update sweep.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarUpdateLog {
    pub innovations: [f64; 3],
    pub gains: [f64; 3],
}

/// Outcome of offering a measurement to the filter.
#[derive(Debug, Clone, Copy)]
pub enum UpdateOutcome {
    Applied(ScalarUpdateLog),
    /// Timestamp older than the filter clock; measurement dropped and
    /// counted.
    RejectedStale,
}

impl EkfState {
    /// Initializes at a known state with diagonal covariance
    /// `diag(sigma_p^2 I, sigma_v^2 I, sigma_delta^2 I)`.
    pub fn new(
        init: &RigidBodyState,
        time: f64,
        gravity: f64,
        sigma_p: f64,
        sigma_v: f64,
        sigma_delta: f64,
    ) -> Self {
        let anchor = init.attitude.to_rotation();
        let mut covariance = Cov9::zeros();
        for i in 0..3 {
            covariance[(i, i)] = sigma_p * sigma_p;
            covariance[(i + 3, i + 3)] = sigma_v * sigma_v;
            covariance[(i + 6, i + 6)] = sigma_delta * sigma_delta;
        }
        Self {
            position: init.position,
            velocity_body: anchor.transpose().apply(&init.velocity),
            delta: Vec3::zeros(),
            anchor,
            anchor_su2: init.attitude,
            covariance,
            time,
            rejected_measurements: 0,
            gravity,
        }
    }

    /// The anchor rotation (the estimate at the most recent reset).
    pub fn anchor(&self) -> &RotationMatrix {
        &self.anchor
    }

    /// Current attitude estimate with the exact exponential of `delta`,
    /// branch continuous across resets.
    pub fn attitude(&self) -> Su2Element {
        self.anchor_su2.compose(&exp_su2(&(0.5 * self.delta)))
    }

    fn rotation(&self) -> RotationMatrix {
        self.anchor.compose(&exp_so3(&self.delta))
    }
}

fn mean_derivative(
    s: &EkfState,
    delta: &Vec3,
    v_b: &Vec3,
    imu: &ImuSample,
    gravity: f64,
) -> (Vec3, Vec3, Vec3) {
    let r = s.anchor.compose(&exp_so3(delta));
    let d_p = r.apply(v_b);
    let d_v = imu.accel - imu.gyro.cross(v_b) - gravity * r.transpose().apply(&Vec3::z());
    let d_delta = imu.gyro + 0.5 * delta.cross(&imu.gyro);
    (d_p, d_v, d_delta)
}

/// Prediction: four-stage Runge-Kutta integration of the body-frame
/// mechanization under the zero-order-held IMU sample
///
/// `dp = R_hat v_b`, `dv_b = a_m - w_m x v_b - R_hat' g e3`,
/// `d delta = w_m + (delta x w_m) / 2`,
///
/// with the covariance propagated by the first-order transition Jacobian and
/// symmetrized.
pub fn ekf_predict(
    s: &mut EkfState,
    imu: &ImuSample,
    dt: f64,
    process_noise: &Cov9,
) -> Result<(), EstimatorError> {
    if !(dt > 0.0) {
        return Err(EstimatorError::NonPositiveDt(dt));
    }
    let g = s.gravity;

    let (k1_p, k1_v, k1_d) = mean_derivative(s, &s.delta, &s.velocity_body, imu, g);
    let (k2_p, k2_v, k2_d) = mean_derivative(
        s,
        &(s.delta + 0.5 * dt * k1_d),
        &(s.velocity_body + 0.5 * dt * k1_v),
        imu,
        g,
    );
    let (k3_p, k3_v, k3_d) = mean_derivative(
        s,
        &(s.delta + 0.5 * dt * k2_d),
        &(s.velocity_body + 0.5 * dt * k2_v),
        imu,
        g,
    );
    let (k4_p, k4_v, k4_d) = mean_derivative(
        s,
        &(s.delta + dt * k3_d),
        &(s.velocity_body + dt * k3_v),
        imu,
        g,
    );
    let sixth = dt / 6.0;
    s.position += sixth * (k1_p + 2.0 * k2_p + 2.0 * k3_p + k4_p);
    s.velocity_body += sixth * (k1_v + 2.0 * k2_v + 2.0 * k3_v + k4_v);
    s.delta += sixth * (k1_d + 2.0 * k2_d + 2.0 * k3_d + k4_d);

    // First-order transition Jacobian at the post-update estimate.
    let r = s.rotation();
    let r_m = *r.matrix();
    let mut a = Cov9::zeros();
    a.view_mut((0, 3), (3, 3)).copy_from(&r_m);
    a.view_mut((0, 6), (3, 3))
        .copy_from(&(-r_m * hat_so3(&s.velocity_body)));
    a.view_mut((3, 3), (3, 3)).copy_from(&(-hat_so3(&imu.gyro)));
    a.view_mut((3, 6), (3, 3))
        .copy_from(&(-hat_so3(&(g * r.transpose().apply(&Vec3::z())))));
    a.view_mut((6, 6), (3, 3))
        .copy_from(&(-0.5 * hat_so3(&imu.gyro)));
    let f = Cov9::identity() + a * dt;
    s.covariance = f * s.covariance * f.transpose() + process_noise;
    s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
    s.time = imu.time.max(s.time + dt);
    Ok(())
}

/// Sequential scalar position update: one Kalman update per axis with the
/// Joseph-form covariance, symmetrized after each axis. Measurements older
/// than the filter clock are rejected and counted.
pub fn ekf_update_scalar(s: &mut EkfState, meas: &PoseMeasurement) -> UpdateOutcome {
    if meas.time < s.time - 1e-9 {
        s.rejected_measurements += 1;
        return UpdateOutcome::RejectedStale;
    }
    let mut log = ScalarUpdateLog::default();
    for axis in 0..3 {
        let r = meas.noise_std[axis] * meas.noise_std[axis];
        let innovation = meas.position[axis] - s.position[axis];
        let s_var = s.covariance[(axis, axis)] + r;
        let gain = s.covariance.column(axis) / s_var;
        s.position += gain.fixed_rows::<3>(0) * innovation;
        s.velocity_body += gain.fixed_rows::<3>(3) * innovation;
        s.delta += gain.fixed_rows::<3>(6) * innovation;
        // Joseph form: (I - K H) P (I - K H)' + K r K'.
        let mut ikh = Cov9::identity();
        for row in 0..9 {
            ikh[(row, axis)] -= gain[row];
        }
        s.covariance = ikh * s.covariance * ikh.transpose() + gain * r * gain.transpose();
        s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
        log.innovations[axis] = innovation;
        log.gains[axis] = gain[axis];
    }
    UpdateOutcome::Applied(log)
}

/// Experimental: fuse a full attitude measurement through three scalar
/// updates on the small-angle error block. The operational filter fuses
/// position only (the upstream attitude estimate is deliberately not
/// incorporated); this entry point exists for experiments that want to
/// check what attitude aiding would add.
pub fn ekf_update_attitude_experimental(
    s: &mut EkfState,
    measured: &Su2Element,
    noise_std: f64,
    time: f64,
) -> UpdateOutcome {
    if time < s.time - 1e-9 {
        s.rejected_measurements += 1;
        return UpdateOutcome::RejectedStale;
    }
    // Innovation: the small-angle rotation from the estimate to the
    // measurement, expressed against the current delta parameterization.
    let estimate = s.attitude();
    let relative = estimate.star().compose(measured);
    let innovation = 2.0 * crate::lie::log_su2(&relative);
    let mut log = ScalarUpdateLog::default();
    for axis in 0..3 {
        let row = 6 + axis;
        let r = noise_std * noise_std;
        let y = innovation[axis];
        let s_var = s.covariance[(row, row)] + r;
        let gain = s.covariance.column(row) / s_var;
        s.position += gain.fixed_rows::<3>(0) * y;
        s.velocity_body += gain.fixed_rows::<3>(3) * y;
        s.delta += gain.fixed_rows::<3>(6) * y;
        let mut ikh = Cov9::identity();
        for r_i in 0..9 {
            ikh[(r_i, row)] -= gain[r_i];
        }
        s.covariance = ikh * s.covariance * ikh.transpose() + gain * r * gain.transpose();
        s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
        log.innovations[axis] = y;
        log.gains[axis] = gain[row];
    }
    UpdateOutcome::Applied(log)
}

/// First-order attitude reset: when `|delta|` exceeds the threshold, fold
/// `(I + S(delta))` into the anchor (re-orthonormalized), zero `delta`, and
/// rotate the delta covariance block by the reset Jacobian `I - S(delta)/2`.
pub fn attitude_reset(s: &mut EkfState, threshold: f64) -> bool {
    if s.delta.norm() <= threshold {
        return false;
    }
    let folded = s.anchor.matrix() * (crate::lie::Mat3::identity() + hat_so3(&s.delta));
    s.anchor = RotationMatrix::from_matrix_unchecked(nearest_rotation(&folded));
    // Keep the SU(2) representative on the branch continuous with the
    // pre-reset anchor.
    let raw = s.anchor.to_su2();
    let aligned = if raw.quaternion().dot(&s.anchor_su2.quaternion()) < 0.0 {
        -raw
    } else {
        raw
    };
    s.anchor_su2 = aligned;
    let mut g = Cov9::identity();
    g.view_mut((6, 6), (3, 3))
        .copy_from(&(crate::lie::Mat3::identity() - 0.5 * hat_so3(&s.delta)));
    s.covariance = g * s.covariance * g.transpose();
    s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
    s.delta = Vec3::zeros();
    true
}

/// Externalizes the filter into a full rigid-body state: exact-exponential
/// attitude, body rate as the mean of the buffered gyro samples, velocity
/// rotated into the global frame the controller expects.
pub fn externalize(s: &EkfState, recent_gyro: &[Vec3]) -> Result<RigidBodyState, EstimatorError> {
    if recent_gyro.is_empty() {
        return Err(EstimatorError::EmptyGyroBuffer);
    }
    let mut rate = Vec3::zeros();
    for g in recent_gyro {
        rate += g;
    }
    rate /= recent_gyro.len() as f64;
    let attitude = s.attitude();
    Ok(RigidBodyState {
        position: s.position,
        velocity: s.rotation().apply(&s.velocity_body),
        attitude,
        rate,
    })
}

/// One record of the line-oriented replay log.
#[derive(Debug, Clone, Copy)]
pub enum ReplayRecord {
    Imu(ImuSample),
    Pose(PoseMeasurement),
}

impl ReplayRecord {
    pub fn time(&self) -> f64 {
        match self {
            ReplayRecord::Imu(s) => s.time,
            ReplayRecord::Pose(p) => p.time,
        }
    }
}

/// Parses one replay line:
/// `IMU t ax ay az gx gy gz` or `POSE t px py pz sx sy sz`
/// (whitespace-separated decimal). Blank lines yield `None`.
pub fn parse_replay_line(line: &str, line_no: usize) -> Result<Option<ReplayRecord>, EstimatorError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.is_empty() {
        return Ok(None);
    }
    let bad = |reason: &str| EstimatorError::MalformedRecord {
        line: line_no,
        reason: reason.to_string(),
    };
    let parse = |s: &str| -> Result<f64, EstimatorError> {
        s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")))
    };
    match fields[0] {
        "IMU" => {
            if fields.len() != 8 {
                return Err(bad("IMU record needs 7 numbers"));
            }
            let v: Vec<f64> = fields[1..].iter().map(|s| parse(s)).collect::<Result<_, _>>()?;
            Ok(Some(ReplayRecord::Imu(ImuSample {
                time: v[0],
                accel: Vec3::new(v[1], v[2], v[3]),
                gyro: Vec3::new(v[4], v[5], v[6]),
            })))
        }
        "POSE" => {
            if fields.len() != 8 {
                return Err(bad("POSE record needs 7 numbers"));
            }
            let v: Vec<f64> = fields[1..].iter().map(|s| parse(s)).collect::<Result<_, _>>()?;
            Ok(Some(ReplayRecord::Pose(PoseMeasurement {
                time: v[0],
                position: Vec3::new(v[1], v[2], v[3]),
                noise_std: Vec3::new(v[4], v[5], v[6]),
            })))
        }
        other => Err(bad(&format!("unknown record kind {other:?}"))),
    }
}

/// Reads a whole replay log.
pub fn read_replay_log(reader: impl BufRead) -> Result<Vec<ReplayRecord>, EstimatorError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EstimatorError::MalformedRecord {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        if let Some(rec) = parse_replay_line(&line, idx + 1)? {
            records.push(rec);
        }
    }
    Ok(records)
}

/// Serializes records in the replay-log format.
pub fn write_replay_log(
    mut writer: impl Write,
    records: &[ReplayRecord],
) -> std::io::Result<()> {
    for rec in records {
        match rec {
            ReplayRecord::Imu(s) => writeln!(
                writer,
                "IMU {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                s.time, s.accel.x, s.accel.y, s.accel.z, s.gyro.x, s.gyro.y, s.gyro.z
            )?,
            ReplayRecord::Pose(p) => writeln!(
                writer,
                "POSE {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                p.time,
                p.position.x,
                p.position.y,
                p.position.z,
                p.noise_std.x,
                p.noise_std.y,
                p.noise_std.z
            )?,
        }
    }
    Ok(())
}

/// Replay driver: IMU records trigger predictions (and buffer gyro samples
/// for externalization), pose records trigger scalar updates, and the
/// attitude reset runs after every event.
#[derive(Debug, Clone)]
pub struct ReplayRunner {
    pub state: EkfState,
    pub config: EkfConfig,
    gyro_buffer: Vec<Vec3>,
}

impl ReplayRunner {
    pub fn new(state: EkfState, config: EkfConfig) -> Self {
        Self {
            state,
            config,
            gyro_buffer: Vec::new(),
        }
    }

    pub fn process(&mut self, record: &ReplayRecord) -> Result<(), EstimatorError> {
        match record {
            ReplayRecord::Imu(imu) => {
                let dt = imu.time - self.state.time;
                if dt > 0.0 {
                    let q = self.config.process_noise(dt);
                    ekf_predict(&mut self.state, imu, dt, &q)?;
                }
                if self.gyro_buffer.len() >= 16 {
                    self.gyro_buffer.remove(0);
                }
                self.gyro_buffer.push(imu.gyro);
            }
            ReplayRecord::Pose(pose) => {
                ekf_update_scalar(&mut self.state, pose);
            }
        }
        attitude_reset(&mut self.state, self.config.reset_threshold);
        Ok(())
    }

    pub fn externalized(&self) -> Result<RigidBodyState, EstimatorError> {
        externalize(&self.state, &self.gyro_buffer)
    }

    /// Runs a whole log, sampling the externalized state after each record.
    pub fn run(
        &mut self,
        records: &[ReplayRecord],
    ) -> Result<Vec<(f64, RigidBodyState)>, EstimatorError> {
        let mut out = Vec::with_capacity(records.len());
        for rec in records {
            self.process(rec)?;
            if !self.gyro_buffer.is_empty() {
                out.push((self.state.time, self.externalized()?));
            }
        }
        Ok(out)
    }
}
