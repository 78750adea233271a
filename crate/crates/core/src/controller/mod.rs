//! In-distribution controller: sine-head phase tracking and phase-to-torque spline.

mod spline;
mod tracker;

pub use spline::{torque_from_phase, SplineKnots, TorqueSpline, DEFAULT_PEAK_TORQUE};
pub use tracker::{track_phase, wrap_diff, PhaseEstimate, PhaseTracker, TrackerConfig};
