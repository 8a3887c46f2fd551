//! Comfort-oriented motion planning and run comparison.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! - [`route`]: the lane corridor the planner searches in and the mapping from
//!   lateral offsets to Cartesian waypoints,
//! - [`kinematics`]: waypoint/speed sequences to per-segment time steps and
//!   longitudinal/lateral accelerations,
//! - [`filter`]: the motion-sickness band-pass weighting `s / ((τ1 s + 1)(τ2 s + 1))`
//!   with exact zero-order-hold stepping,
//! - [`objectives`]: acceleration energy, frequency-weighted energy and the
//!   time-weighted planner cost, with analytic gradients,
//! - [`planner`]: the box-constrained planner, travel-time matching and weight sweeps,
//! - [`reconstruction`]: GPS + IMU motion reconstruction by nonlinear least squares,
//! - [`metrics`]: deficiency percentages, spectra band energies and
//!   iso-discomfort contours.
//!
//! File formats, spectral estimation and the command-line tool live in the
//! `comfortplan` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

mod error;
pub mod filter;
pub mod kinematics;
pub(crate) mod math;
pub mod metrics;
pub mod objectives;
pub mod optim;
pub mod planner;
pub mod reconstruction;
pub mod route;
pub mod scenario;

pub use error::{Error, Result};
pub use filter::{FilterSpec, FilterState, SicknessFilter};
pub use kinematics::MotionProfile;
pub use objectives::{ObjectiveConfig, Variant};
pub use planner::{PlanProblem, PlanResult, SolverSettings};
pub use route::{MotionPlan, Point, RouteCorridor, Station};
