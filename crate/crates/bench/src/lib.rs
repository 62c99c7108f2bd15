//! Fixtures shared by the benchmarks.

use gausspt_core::{params_from_ratio, SystemParams, TrajectoryGrid};

/// `(s, G)` pairs of the figure presets.
pub const PRESETS: [(f64, f64); 4] = [(1.0, 1.5), (1.0, 0.7), (2.0, 2.3), (2.0, 1.3)];

pub fn preset(s: f64, g: f64) -> SystemParams {
    params_from_ratio(1.0, s, g, 0.0, 1.0).expect("preset parameters are valid")
}

/// The balanced preset horizon: `[0, 20]` in 4000 steps.
pub fn long_grid() -> TrajectoryGrid {
    TrajectoryGrid::new(0.0, 20.0, 4000).expect("valid grid")
}
