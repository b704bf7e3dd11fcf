//! Replicated experiments: rate sweeps, step responses and fits.

pub mod dynamic;
pub mod fit;
pub mod stats;
pub mod sweep;

pub use dynamic::{dynamic_response, DynamicResponse, DynamicSchedule, Metric, Transition};
pub use fit::{fit_linear, fit_power_law, fit_proportional, FitModel, FitResult};
pub use stats::{split_seed, Estimate, RunningStats};
pub use sweep::{estimate_threshold, sweep, SweepPoint, SweepSpec, Threshold, THRESHOLD_LEVEL};
