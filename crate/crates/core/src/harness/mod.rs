//! Simulation harness: single runs (true-state or estimator-in-loop),
//! Monte-Carlo sweeps, gain certification, the Lyapunov monitor, trace files
//! and plot emission.

pub mod config;
pub mod plot;
pub mod trace;

use std::fmt::Write as _;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::attitude::{attitude_errors, AttitudeGains, AttitudeRef, InertialParams};
use crate::dynamics::{rk4_step, ControlInput, DynamicsError, ReferenceExpander, RigidBodyState};
use crate::estimator::{
    attitude_reset, ekf_predict, ekf_update_scalar, externalize, EkfConfig, EkfState,
    EstimatorError, ImuSample, PoseMeasurement, ReplayRecord,
};
use crate::lie::{dist_so3, dist_su2, Vec3};
use crate::tracking::{
    domain_check_with_report, full_lyapunov, gain_certificate, lyapunov_bounds, CertificateReport,
    ControlOutput, DomainParams, FullReference, LyapunovBounds, TrackingController, TrackingError,
    TranslationGains,
};

pub use config::{fixture_gains, rate_limited_gains, GainsConfig, SimConfig};
pub use trace::{SimTrace, TraceRow};

/// Divergence guard on every state component norm.
const DIVERGENCE_LIMIT: f64 = 1e6;
/// Convergence threshold on the terminal error norms.
const CONVERGENCE_TOL: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    ConfigError(String),
    #[error("simulation diverged at t = {time:.4} s (|state| > 1e6)")]
    SimulationDiverged { time: f64 },
    #[error("gain certificate failed; monitoring requires certified gains")]
    CertificateFailed,
    #[error("trace is empty")]
    EmptyTrace,
    #[error("parse error: {0}")]
    ParseError(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("tracking: {0}")]
    Tracking(#[from] TrackingError),
    #[error("dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("estimator: {0}")]
    Estimator(#[from] EstimatorError),
}

/// Scheduled event kinds of the estimator-in-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    ImuSample,
    EkfPredict,
    PoseUpdate,
    Control,
}

/// Aggregate results of one run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    /// Terminal `(|e_p|, |e_v|, |e_X|, |e_w|)`.
    pub terminal_errors: [f64; 4],
    /// All four terminal error norms below 1e-2.
    pub converged: bool,
    /// First trace time inside the exponential domain.
    pub entered_domain_at: Option<f64>,
    pub negative_thrust_samples: usize,
    pub held_samples: usize,
    pub rejected_measurements: usize,
    /// Scheduling log (estimator mode only).
    pub events: Vec<(f64, EventKind)>,
    pub certificate_pass: bool,
}

/// Runs one simulation per the configuration and returns the decimated
/// trace with a summary. Deterministic for a fixed configuration and seed.
pub fn run_single(cfg: &SimConfig) -> Result<(SimTrace, RunSummary), HarnessError> {
    cfg.validate()?;
    let (params, initial) = cfg.resolve_setup()?;
    let domain = cfg.resolve_domain(&params)?;
    let translation = cfg.gains.translation();
    let attitude = cfg.gains.attitude();
    let report = gain_certificate(&translation, &attitude, &params, &domain);
    let bounds = lyapunov_bounds(&report);

    let mut expander = ReferenceExpander::new(
        cfg.trajectory()?,
        cfg.heading_mode()?,
        cfg.frame_completion()?,
    );
    let mut controller = TrackingController::new(
        translation,
        attitude,
        cfg.attitude_case()?,
        controller_period(cfg),
    )
    .with_zero_rate_dot(cfg.sim.zero_rate_dot)
    .with_rates_source(cfg.rates_source()?);

    if cfg.sim.estimator {
        run_estimator_loop(
            cfg, &params, &domain, &report, &bounds, initial, &mut expander, &mut controller,
        )
    } else {
        run_true_state_loop(
            cfg, &params, &domain, &report, &bounds, initial, &mut expander, &mut controller,
        )
    }
}

/// Controller update period: every integrator step in true-state mode
/// (zero-order hold), the configured control rate in estimator mode.
fn controller_period(cfg: &SimConfig) -> f64 {
    if cfg.sim.estimator {
        1.0 / cfg.estimator.control_hz
    } else {
        cfg.sim.h
    }
}

struct SampleContext<'a> {
    translation: &'a TranslationGains,
    attitude: &'a AttitudeGains,
    params: &'a InertialParams,
    domain: &'a DomainParams,
    report: &'a CertificateReport,
    bounds: &'a LyapunovBounds,
}

fn make_row(
    ctx: &SampleContext,
    t: f64,
    state: &RigidBodyState,
    reference: &FullReference,
    out: &ControlOutput,
    thrust_applied: f64,
) -> TraceRow {
    let e_p = state.position - reference.position;
    let e_v = state.velocity - reference.velocity;
    let att_ref = AttitudeRef {
        attitude: out.desired.attitude,
        rate: out.desired.rate,
        rate_dot: out.desired.rate_dot,
    };
    let errs = attitude_errors(&state.attitude, &state.rate, &att_ref);
    let v = full_lyapunov(
        &e_p,
        &e_v,
        &out.desired.attitude,
        &state.attitude,
        &errs.e_omega,
        ctx.translation,
        ctx.attitude,
        ctx.params,
    );
    let dom = domain_check_with_report(
        &e_p,
        &e_v,
        &errs.e_omega,
        &out.desired.attitude,
        &state.attitude,
        ctx.report,
        ctx.translation,
        ctx.attitude,
        ctx.params,
        ctx.domain,
    );
    let zbar2 = e_p.norm_squared()
        + e_v.norm_squared()
        + errs.e_x.norm_squared()
        + errs.e_omega.norm_squared();
    TraceRow {
        t,
        position: state.position,
        velocity: state.velocity,
        attitude: state.attitude.quaternion().as_array(),
        rate: state.rate,
        ref_position: reference.position,
        ref_velocity: reference.velocity,
        ref_attitude: reference.attitude.quaternion().as_array(),
        ref_rate: reference.rate,
        desired_attitude: out.desired.attitude.quaternion().as_array(),
        desired_rate: out.desired.rate,
        desired_rate_dot: out.desired.rate_dot,
        thrust: out.thrust,
        thrust_applied,
        torque: out.torque,
        e_p,
        e_v,
        e_x: errs.e_x,
        e_omega: errs.e_omega,
        gamma_desired: dom.gamma,
        gamma_reference: dist_su2(&reference.attitude, &state.attitude),
        psi_reference: dist_so3(&reference.attitude.to_rotation(), &state.attitude.to_rotation()),
        lyapunov: v,
        lower_bound: ctx.bounds.c1 * zbar2,
        upper_bound: ctx.bounds.c2 * zbar2,
        in_exponential: dom.in_exponential,
        in_attractivity: dom.in_attractivity,
        held_previous: out.held_previous,
    }
}

fn check_divergence(state: &RigidBodyState, t: f64) -> Result<(), HarnessError> {
    if state.position.norm() > DIVERGENCE_LIMIT
        || state.velocity.norm() > DIVERGENCE_LIMIT
        || state.rate.norm() > DIVERGENCE_LIMIT
    {
        return Err(HarnessError::SimulationDiverged { time: t });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_true_state_loop(
    cfg: &SimConfig,
    params: &InertialParams,
    domain: &DomainParams,
    report: &CertificateReport,
    bounds: &LyapunovBounds,
    initial: RigidBodyState,
    expander: &mut ReferenceExpander,
    controller: &mut TrackingController,
) -> Result<(SimTrace, RunSummary), HarnessError> {
    let translation = cfg.gains.translation();
    let attitude = cfg.gains.attitude();
    let ctx = SampleContext {
        translation: &translation,
        attitude: &attitude,
        params,
        domain,
        report,
        bounds,
    };
    let h = cfg.sim.h;
    let steps = (cfg.sim.horizon / h).round() as usize;
    let mut state = initial;
    let mut rows = Vec::with_capacity(steps / cfg.sim.trace_every.min(steps + 1) + 2);
    let mut summary = RunSummary {
        terminal_errors: [0.0; 4],
        converged: false,
        entered_domain_at: None,
        negative_thrust_samples: 0,
        held_samples: 0,
        rejected_measurements: 0,
        events: Vec::new(),
        certificate_pass: report.pass,
    };

    for k in 0..=steps {
        let t = k as f64 * h;
        check_divergence(&state, t)?;
        let reference = expander.at(t, params)?;
        let out = controller.control(&state, &reference, params)?;
        let thrust_applied = if cfg.sim.clamp_thrust {
            out.thrust.max(0.0)
        } else {
            out.thrust
        };
        if out.thrust < 0.0 {
            summary.negative_thrust_samples += 1;
        }
        if out.held_previous {
            summary.held_samples += 1;
        }
        if k % cfg.sim.trace_every == 0 || k == steps {
            let row = make_row(&ctx, t, &state, &reference, &out, thrust_applied);
            if row.in_exponential && summary.entered_domain_at.is_none() {
                summary.entered_domain_at = Some(t);
            }
            if k == steps {
                summary.terminal_errors = row.error_norms();
            }
            rows.push(row);
        }
        if k < steps {
            state = rk4_step(
                &state,
                &ControlInput {
                    thrust: thrust_applied,
                    torque: out.torque,
                },
                params,
                h,
            );
        }
    }
    summary.converged = summary.terminal_errors.iter().all(|e| *e < CONVERGENCE_TOL);
    Ok((SimTrace { rows }, summary))
}

#[allow(clippy::too_many_arguments)]
fn run_estimator_loop(
    cfg: &SimConfig,
    params: &InertialParams,
    domain: &DomainParams,
    report: &CertificateReport,
    bounds: &LyapunovBounds,
    initial: RigidBodyState,
    expander: &mut ReferenceExpander,
    controller: &mut TrackingController,
) -> Result<(SimTrace, RunSummary), HarnessError> {
    let translation = cfg.gains.translation();
    let attitude = cfg.gains.attitude();
    let ctx = SampleContext {
        translation: &translation,
        attitude: &attitude,
        params,
        domain,
        report,
        bounds,
    };
    let h = cfg.sim.h;
    let est = &cfg.estimator;
    let control_every = rate_divisor(h, est.control_hz)?;
    let predict_every = rate_divisor(h, est.predict_hz)?;
    let pose_every = rate_divisor(h, est.pose_hz)?;

    let ekf_cfg = EkfConfig {
        accel_noise: est.accel_noise,
        gyro_noise: est.gyro_noise,
        pose_noise: est.pose_noise,
        reset_threshold: est.reset_threshold,
    };
    let mut truth = initial;
    let mut ekf = EkfState::new(
        &initial,
        0.0,
        params.gravity(),
        est.init_sigma_p,
        est.init_sigma_v,
        est.init_sigma_delta,
    );
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.setup.seed ^ 0x5eed_5eed_5eed_5eed);

    let steps = (cfg.sim.horizon / h).round() as usize;
    let mut rows = Vec::with_capacity(steps / cfg.sim.trace_every.min(steps + 1) + 2);
    let mut summary = RunSummary {
        terminal_errors: [0.0; 4],
        converged: false,
        entered_domain_at: None,
        negative_thrust_samples: 0,
        held_samples: 0,
        rejected_measurements: 0,
        events: Vec::new(),
        certificate_pass: report.pass,
    };

    let mut imu_window: Vec<ImuSample> = Vec::new();
    let mut gyro_buffer: Vec<Vec3> = Vec::new();
    let mut current = ControlInput {
        thrust: params.weight(),
        torque: Vec3::zeros(),
    };
    let mut last_row: Option<TraceRow> = None;
    let mut last_reference = expander.at(0.0, params)?;
    let mut last_out: Option<ControlOutput> = None;

    for k in 0..=steps {
        let t = k as f64 * h;
        check_divergence(&truth, t)?;

        // Sense at the control rate: the ideal specific force is (f/m) e3 in
        // the body frame, the gyro reads the body rate.
        if k % control_every == 0 {
            let accel = Vec3::new(0.0, 0.0, current.thrust / params.mass())
                + sensor_noise(&mut noise_rng, est.accel_noise, est.simulate_noise);
            let gyro = truth.rate + sensor_noise(&mut noise_rng, est.gyro_noise, est.simulate_noise);
            let imu = ImuSample { accel, gyro, time: t };
            imu_window.push(imu);
            gyro_buffer.push(gyro);
            summary.events.push((t, EventKind::ImuSample));
        }

        // Prediction at the filter rate, driven by the averaged IMU window.
        if k % predict_every == 0 && k > 0 && !imu_window.is_empty() {
            let n = imu_window.len() as f64;
            let mut accel = Vec3::zeros();
            let mut gyro = Vec3::zeros();
            for s in &imu_window {
                accel += s.accel;
                gyro += s.gyro;
            }
            let avg = ImuSample {
                accel: accel / n,
                gyro: gyro / n,
                time: t,
            };
            let dt = 1.0 / est.predict_hz;
            ekf_predict(&mut ekf, &avg, dt, &ekf_cfg.process_noise(dt))?;
            attitude_reset(&mut ekf, ekf_cfg.reset_threshold);
            imu_window.clear();
            summary.events.push((t, EventKind::EkfPredict));
        }

        // Position updates at the pose rate.
        if k % pose_every == 0 && k > 0 {
            let meas = PoseMeasurement {
                position: truth.position
                    + sensor_noise(&mut noise_rng, est.pose_noise, est.simulate_noise),
                noise_std: Vec3::new(est.pose_noise, est.pose_noise, est.pose_noise),
                time: t,
            };
            ekf_update_scalar(&mut ekf, &meas);
            attitude_reset(&mut ekf, ekf_cfg.reset_threshold);
            summary.events.push((t, EventKind::PoseUpdate));
        }

        // Control at the control rate on the externalized estimate. The
        // body rate averages the gyro samples since the previous control
        // tick; a stale average over the whole prediction window would put
        // destabilizing delay into the rate loop.
        if k % control_every == 0 {
            let estimate = externalize(&ekf, &gyro_buffer)?;
            gyro_buffer.clear();
            let reference = expander.at(t, params)?;
            let out = controller.control(&estimate, &reference, params)?;
            let thrust_applied = if cfg.sim.clamp_thrust {
                out.thrust.max(0.0)
            } else {
                out.thrust
            };
            if out.thrust < 0.0 {
                summary.negative_thrust_samples += 1;
            }
            if out.held_previous {
                summary.held_samples += 1;
            }
            current = ControlInput {
                thrust: thrust_applied,
                torque: out.torque,
            };
            last_reference = reference;
            last_out = Some(out);
            summary.events.push((t, EventKind::Control));
        }

        if let Some(out) = last_out.as_ref().filter(|_| k % cfg.sim.trace_every == 0 || k == steps) {
            let row = make_row(&ctx, t, &truth, &last_reference, out, current.thrust);
            if row.in_exponential && summary.entered_domain_at.is_none() {
                summary.entered_domain_at = Some(t);
            }
            last_row = Some(row);
            rows.push(row);
        }
        if k < steps {
            truth = rk4_step(&truth, &current, params, h);
        }
    }
    summary.rejected_measurements = ekf.rejected_measurements;
    if let Some(row) = last_row {
        summary.terminal_errors = row.error_norms();
    }
    summary.converged = summary.terminal_errors.iter().all(|e| *e < CONVERGENCE_TOL);
    Ok((SimTrace { rows }, summary))
}

fn sensor_noise(rng: &mut ChaCha8Rng, std: f64, on: bool) -> Vec3 {
    if !on {
        return Vec3::zeros();
    }
    let d = rand_distr::Normal::new(0.0, std).expect("std >= 0");
    Vec3::new(
        rand_distr::Distribution::sample(&d, rng),
        rand_distr::Distribution::sample(&d, rng),
        rand_distr::Distribution::sample(&d, rng),
    )
}

fn rate_divisor(h: f64, hz: f64) -> Result<usize, HarnessError> {
    if !(hz > 0.0) {
        return Err(HarnessError::ConfigError(format!("rate {hz} Hz must be positive")));
    }
    let period = 1.0 / hz;
    let steps = (period / h).round();
    if steps < 1.0 || (steps * h - period).abs() > 1e-9 * period.max(1.0) {
        return Err(HarnessError::ConfigError(format!(
            "step h = {h} does not divide the {hz} Hz period"
        )));
    }
    Ok(steps as usize)
}

/// One Monte-Carlo run record.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub seed: u64,
    pub terminal_errors: [f64; 4],
    pub converged: bool,
    pub entered_domain: bool,
    pub error: Option<String>,
}

/// Aggregate of a Monte-Carlo sweep, sorted by seed.
#[derive(Debug, Clone)]
pub struct MonteCarloSummary {
    pub requested: usize,
    pub records: Vec<RunRecord>,
    pub converged_count: usize,
    pub entered_domain_count: usize,
    pub failures: Vec<(u64, String)>,
}

impl MonteCarloSummary {
    pub fn all_converged(&self) -> bool {
        self.converged_count == self.requested
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "runs {}", self.requested);
        let _ = writeln!(out, "converged {}", self.converged_count);
        let _ = writeln!(out, "entered_domain {}", self.entered_domain_count);
        let _ = writeln!(out, "failures {}", self.failures.len());
        let _ = writeln!(out, "seed e_p e_v e_x e_w converged entered_d");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{} {:.16e} {:.16e} {:.16e} {:.16e} {} {}",
                r.seed,
                r.terminal_errors[0],
                r.terminal_errors[1],
                r.terminal_errors[2],
                r.terminal_errors[3],
                r.converged as u8,
                r.entered_domain as u8
            );
        }
        for (seed, err) in &self.failures {
            let _ = writeln!(out, "failure seed {seed}: {err}");
        }
        out
    }
}

/// Runs `n` independent realizations of the base configuration with seeds
/// `base_seed, base_seed + 1, ...` in parallel; the summary is ordered by
/// seed and independent of scheduling.
pub fn run_monte_carlo(n: usize, base: &SimConfig, base_seed: u64) -> MonteCarloSummary {
    assert!(n >= 1, "need at least one realization");
    let mut records: Vec<RunRecord> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cfg = base.clone();
            cfg.setup.source = "sample".into();
            cfg.setup.seed = base_seed.wrapping_add(i as u64);
            // Monte-Carlo sweeps keep summaries only.
            cfg.sim.trace_every = usize::MAX;
            match run_single(&cfg) {
                Ok((_, summary)) => RunRecord {
                    seed: cfg.setup.seed,
                    terminal_errors: summary.terminal_errors,
                    converged: summary.converged,
                    entered_domain: summary.entered_domain_at.is_some(),
                    error: None,
                },
                Err(e) => RunRecord {
                    seed: cfg.setup.seed,
                    terminal_errors: [f64::NAN; 4],
                    converged: false,
                    entered_domain: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    records.sort_by_key(|r| r.seed);
    let converged_count = records.iter().filter(|r| r.converged).count();
    let entered_domain_count = records.iter().filter(|r| r.entered_domain).count();
    let failures = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| (r.seed, e.clone())))
        .collect();
    MonteCarloSummary {
        requested: n,
        records,
        converged_count,
        entered_domain_count,
        failures,
    }
}

/// Kinds of Lyapunov-monitor violations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    SandwichLower,
    SandwichUpper,
    IncreaseInsideDomain,
    EnvelopeExceeded,
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub index: usize,
    pub time: f64,
    pub kind: ViolationKind,
    pub detail: String,
}

/// Monitor result; an empty violation list is a pass.
#[derive(Debug, Clone, Default)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
    pub entered_domain_at: Option<f64>,
}

impl ViolationReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a trace against the certificate: (i) the quadratic sandwich (lower
/// bound globally, upper bound inside the domain), (ii) Lyapunov decrease
/// between consecutive in-domain samples, (iii) the exponential envelope at
/// rate `c3 / c2` (5% tolerance) anchored where the trace enters the domain.
/// Fails fast when the gains are not certified.
pub fn lyapunov_monitor(
    trace: &SimTrace,
    translation: &TranslationGains,
    attitude: &AttitudeGains,
    params: &InertialParams,
    domain: &DomainParams,
) -> Result<ViolationReport, HarnessError> {
    if trace.is_empty() {
        return Err(HarnessError::EmptyTrace);
    }
    let report = gain_certificate(translation, attitude, params, domain);
    if !report.pass {
        return Err(HarnessError::CertificateFailed);
    }
    let bounds = lyapunov_bounds(&report);
    let v0 = trace.rows[0].lyapunov;
    // Absolute floor: the finite-difference desired rates leave a roundoff
    // floor of about 1e-12 in V once the errors have converged.
    let mono_slack = |v_prev: f64| 1e-11 + 1e-12 * v0.abs() + 1e-9 * v_prev.abs();

    let mut out = ViolationReport::default();
    let mut entry: Option<(f64, f64)> = None; // (t, V) at domain entry
    for (i, row) in trace.rows.iter().enumerate() {
        let zbar2 = row.zbar_squared();
        let slack = 1e-10 * (1.0 + bounds.c2 * zbar2);
        if row.lyapunov < bounds.c1 * zbar2 - slack {
            out.violations.push(Violation {
                index: i,
                time: row.t,
                kind: ViolationKind::SandwichLower,
                detail: format!("V = {} < c1 |z|^2 = {}", row.lyapunov, bounds.c1 * zbar2),
            });
        }
        if row.in_exponential {
            if row.lyapunov > bounds.c2 * zbar2 + slack {
                out.violations.push(Violation {
                    index: i,
                    time: row.t,
                    kind: ViolationKind::SandwichUpper,
                    detail: format!("V = {} > c2 |z|^2 = {}", row.lyapunov, bounds.c2 * zbar2),
                });
            }
            if entry.is_none() {
                entry = Some((row.t, row.lyapunov));
                out.entered_domain_at = Some(row.t);
            }
            if let Some((t_d, v_d)) = entry {
                let envelope = v_d * (-(bounds.c3 / bounds.c2) * (row.t - t_d)).exp() * 1.05;
                if row.lyapunov > envelope + mono_slack(v_d) {
                    out.violations.push(Violation {
                        index: i,
                        time: row.t,
                        kind: ViolationKind::EnvelopeExceeded,
                        detail: format!("V = {} above envelope {}", row.lyapunov, envelope),
                    });
                }
            }
            if i > 0 && trace.rows[i - 1].in_exponential {
                let v_prev = trace.rows[i - 1].lyapunov;
                if row.lyapunov > v_prev + mono_slack(v_prev) {
                    out.violations.push(Violation {
                        index: i,
                        time: row.t,
                        kind: ViolationKind::IncreaseInsideDomain,
                        detail: format!("V increased {} -> {}", v_prev, row.lyapunov),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Renders the certificate as a human-readable table.
pub fn render_certificate(
    report: &CertificateReport,
    translation: &TranslationGains,
    attitude: &AttitudeGains,
    params: &InertialParams,
    domain: &DomainParams,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "gain certificate");
    let _ = writeln!(
        s,
        "  gains: k_p={} k_v={} c_p={} k_x={} k_omega={} c_a={}",
        translation.k_p,
        translation.k_v,
        translation.c_p,
        attitude.k_x,
        attitude.k_omega,
        attitude.c_a
    );
    let _ = writeln!(
        s,
        "  params: m={} g={} jmin={:.6} jmax={:.6}",
        params.mass(),
        params.gravity(),
        params.inertia_min_eig(),
        params.inertia_max_eig()
    );
    let _ = writeln!(
        s,
        "  domain: phi={} (phi < 1/8: {}) alpha={:.6} b_f={} b_p={}",
        domain.phi,
        domain.phi < 0.125,
        report.alpha,
        domain.b_f,
        domain.b_p
    );
    let sym = |m: &crate::linalg::Sym2| {
        format!(
            "[{:+.6e} {:+.6e}; {:+.6e} {:+.6e}] eig [{:.6e}, {:.6e}]",
            m.a,
            m.b,
            m.b,
            m.d,
            m.eig_min(),
            m.eig_max()
        )
    };
    let _ = writeln!(s, "  M1_pp {} pd={}", sym(&report.m1_pp), report.m1_pp_pd);
    let _ = writeln!(s, "  M2_pp {} pd={}", sym(&report.m2_pp), report.m2_pp_pd);
    let _ = writeln!(s, "  W_pp  {} pd={}", sym(&report.w_pp), report.w_pp_pd);
    let _ = writeln!(s, "  M1_aa {} pd={}", sym(&report.m1_aa), report.m1_aa_pd);
    let _ = writeln!(s, "  M2_aa {} pd={}", sym(&report.m2_aa), report.m2_aa_pd);
    let _ = writeln!(s, "  W_aa  {} pd={}", sym(&report.w_aa), report.w_aa_pd);
    let _ = writeln!(
        s,
        "  |W_pa| = {:.6e} (W_pa = [{:+.6e} 0; {:+.6e} 0])",
        report.w_pa_norm,
        report.w_pa[(0, 0)],
        report.w_pa[(1, 0)]
    );
    let _ = writeln!(
        s,
        "  B_z = 4 min_eig(W_aa) min_eig(W_pp) - |W_pa|^2 = {:.6e} (> 0: {})",
        report.b_z,
        report.b_z > 0.0
    );
    let _ = writeln!(
        s,
        "  sufficient cross-weight bounds: c_a < {:.6e} ({}), c_p < {:.6e} ({})",
        report.c_a_sufficient,
        attitude.c_a < report.c_a_sufficient,
        report.c_p_sufficient,
        translation.c_p < report.c_p_sufficient
    );
    let _ = writeln!(
        s,
        "  secondary condition W_pp - W_pa W_aa^-1 W_pa' > 0: {}",
        report.schur_pass
    );
    if report.pass {
        let b = lyapunov_bounds(report);
        let _ = writeln!(
            s,
            "  bounds: c1={:.6e} c2={:.6e} c3={:.6e} (decay rate c3/c2 = {:.6e} 1/s)",
            b.c1,
            b.c2,
            b.c3,
            b.c3 / b.c2
        );
    }
    let _ = writeln!(s, "  PASS: {}", report.pass);
    s
}

/// Evaluates and renders the certificate for a configuration.
pub fn certify(cfg: &SimConfig) -> Result<(CertificateReport, String), HarnessError> {
    cfg.validate()?;
    let (params, _) = cfg.resolve_setup()?;
    let domain = cfg.resolve_domain(&params)?;
    let translation = cfg.gains.translation();
    let attitude = cfg.gains.attitude();
    let report = gain_certificate(&translation, &attitude, &params, &domain);
    let text = render_certificate(&report, &translation, &attitude, &params, &domain);
    Ok((report, text))
}

/// Sensor records plus the truth state at each record time.
pub type SensorLog = (Vec<ReplayRecord>, Vec<(f64, RigidBodyState)>);

/// Generates a sensor replay log (IMU at the control rate, poses at the pose
/// rate) from a true-state-feedback run, together with the truth states at
/// the record times.
pub fn sensor_log_from_run(cfg: &SimConfig) -> Result<SensorLog, HarnessError> {
    cfg.validate()?;
    let (params, initial) = cfg.resolve_setup()?;
    let mut expander = ReferenceExpander::new(
        cfg.trajectory()?,
        cfg.heading_mode()?,
        cfg.frame_completion()?,
    );
    let mut controller = TrackingController::new(
        cfg.gains.translation(),
        cfg.gains.attitude(),
        cfg.attitude_case()?,
        cfg.sim.h,
    )
    .with_zero_rate_dot(cfg.sim.zero_rate_dot)
    .with_rates_source(cfg.rates_source()?);

    let h = cfg.sim.h;
    let est = &cfg.estimator;
    let imu_every = rate_divisor(h, est.control_hz)?;
    let pose_every = rate_divisor(h, est.pose_hz)?;
    let steps = (cfg.sim.horizon / h).round() as usize;
    let mut state = initial;
    let mut records = Vec::new();
    let mut truth = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.setup.seed ^ 0x0bad_5eed);

    for k in 0..=steps {
        let t = k as f64 * h;
        let reference = expander.at(t, &params)?;
        let out = controller.control(&state, &reference, &params)?;
        let thrust_applied = if cfg.sim.clamp_thrust {
            out.thrust.max(0.0)
        } else {
            out.thrust
        };
        if k % imu_every == 0 {
            let accel = Vec3::new(0.0, 0.0, thrust_applied / params.mass())
                + sensor_noise(&mut rng, est.accel_noise, est.simulate_noise);
            let gyro = state.rate + sensor_noise(&mut rng, est.gyro_noise, est.simulate_noise);
            records.push(ReplayRecord::Imu(ImuSample { accel, gyro, time: t }));
            truth.push((t, state));
        }
        if k % pose_every == 0 && k > 0 {
            records.push(ReplayRecord::Pose(PoseMeasurement {
                position: state.position
                    + sensor_noise(&mut rng, est.pose_noise, est.simulate_noise),
                noise_std: Vec3::new(est.pose_noise, est.pose_noise, est.pose_noise),
                time: t,
            }));
            truth.push((t, state));
        }
        if k < steps {
            state = rk4_step(
                &state,
                &ControlInput {
                    thrust: thrust_applied,
                    torque: out.torque,
                },
                &params,
                h,
            );
        }
    }
    Ok((records, truth))
}

/// Emits the plot panels for a trace; see [`plot::emit_plots`].
pub fn emit_plots(
    trace: &SimTrace,
    dir: &std::path::Path,
) -> Result<Vec<std::path::PathBuf>, HarnessError> {
    plot::emit_plots(trace, dir)
}

/// The default configuration is the simulation-study fixture.
pub fn fixture_config() -> SimConfig {
    SimConfig::default()
}

/// A hover configuration starting exactly on the reference (zero errors).
pub fn hover_config() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.trajectory.kind = "hover".into();
    cfg.trajectory.position = [0.0, 0.0, 1.0];
    cfg.setup.source = "reference".into();
    cfg.sim.heading = "yaw".into();
    cfg
}
