//! Geometric tracking control for quadrotors configured on SU(2) x R^3.
//!
//! The crate provides the building blocks of a full simulation and
//! verification study:
//!
//! - [`lie`]: SU(2)/SO(3) representations, hat/vee/exp/log maps, the
//!   double-cover embedding, and the trace-based attitude distances.
//! - [`attitude`]: the SU(2) attitude tracking controller with its
//!   gain-matrix certificates, stability domain and Lyapunov function.
//! - [`tracking`]: the full-state tracking controller (desired force,
//!   desired-attitude constructions, continuity enforcement, thrust
//!   projection) together with the composite gain certificate.
//! - [`dynamics`]: rigid-body dynamics, a fixed-step RK4 integrator with
//!   quaternion renormalization, the differential-flatness reference
//!   expander and the reference trajectory generators.
//! - [`estimator`]: an IMU-driven multiplicative EKF with sequential
//!   scalar position updates and a first-order attitude reset.
//! - [`harness`]: simulation runner, Monte-Carlo sweeps, gain
//!   certification, Lyapunov monitoring, trace files and SVG plots.

pub mod attitude;
pub mod dynamics;
pub mod estimator;
pub mod harness;
pub mod lie;
pub(crate) mod linalg;
pub mod tracking;

pub use lie::{Mat3, Vec3};
