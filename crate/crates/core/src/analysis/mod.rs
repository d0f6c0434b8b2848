//! Trajectory recording, ensembles, fidelity metrics and sweeps.

mod ensemble;
mod fidelity;
mod parity;
mod regression;
mod sweep;
mod trajectory;

pub use ensemble::{
    run_ensemble, simulate, simulate_exact, simulate_markov, simulate_renewal, EngineSpec, RunSpec, Seeding,
};
pub use fidelity::{bootstrap_mean, fidelity, fidelity_with, Estimate, FidelityReport, FIDELITY_RESAMPLES};
pub use parity::{checkpoint_counts, parity_check, Divergence, ParityReport};
pub use regression::{least_squares, slope_regression, SlopeFit, SLOPE_RESAMPLES};
pub use sweep::{count_outside, epsilon_sweep, multi_topology_sweep, per_run_errors, SweepRow, TopologyCurve};
pub use trajectory::{
    ensemble_mean, quantile, quantile_band, uniform_grid, Recorder, RunSummary, TrajectoryRecord, DEFAULT_GRID_POINTS,
};
