//! Trajectories sampled onto a fixed time grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Compartment, ModelSpec};

/// Default number of grid points.
pub const DEFAULT_GRID_POINTS: usize = 501;

/// `points` equally spaced times on `[0, t_final]`.
pub fn uniform_grid(t_final: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![t_final],
        _ => (0..points).map(|k| t_final * k as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Largest infectious fraction observed on `[0, t_final]`.
    pub peak_infected: f64,
    pub peak_time: f64,
    /// Terminal-compartment fraction at `t_final` (absent for SIS).
    pub final_terminal: Option<f64>,
    pub step_count: u64,
    /// Seconds; informational only.
    pub wall_clock: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub compartments: Vec<String>,
    pub grid: Vec<f64>,
    /// `fractions[c][k]`: fraction of nodes in compartment `c` at `grid[k]`.
    pub fractions: Vec<Vec<f64>>,
    pub summary: RunSummary,
}

impl TrajectoryRecord {
    pub fn series(&self, label: &str) -> Option<&[f64]> {
        self.compartments.iter().position(|c| c == label).map(|i| self.fractions[i].as_slice())
    }

    pub fn t_final(&self) -> f64 {
        self.grid.last().copied().unwrap_or(0.0)
    }
}

/// Step-function sampler: the value at a grid point is the last observation
/// at or before it.
#[derive(Debug, Clone)]
pub struct Recorder {
    grid: Vec<f64>,
    num_nodes: f64,
    labels: Vec<String>,
    infectious: usize,
    terminal: Option<usize>,
    fractions: Vec<Vec<f64>>,
    current: Vec<u64>,
    next: usize,
    peak: u64,
    peak_time: f64,
}

impl Recorder {
    pub fn new(model: &ModelSpec, num_nodes: usize, grid: Vec<f64>, initial: &[u64]) -> Self {
        Self::with_labels(
            model.compartments.clone(),
            model.infectious_state,
            model.terminal_state(),
            num_nodes,
            grid,
            initial,
        )
    }

    pub fn with_labels(
        labels: Vec<String>,
        infectious: Compartment,
        terminal: Option<Compartment>,
        num_nodes: usize,
        grid: Vec<f64>,
        initial: &[u64],
    ) -> Self {
        let k = labels.len();
        let infectious = infectious as usize;
        Recorder {
            fractions: vec![Vec::with_capacity(grid.len()); k],
            grid,
            num_nodes: num_nodes.max(1) as f64,
            labels,
            infectious,
            terminal: terminal.map(|t| t as usize),
            current: initial.to_vec(),
            next: 0,
            peak: initial[infectious],
            peak_time: 0.0,
        }
    }

    fn emit_before(&mut self, t: f64) {
        while self.next < self.grid.len() && self.grid[self.next] < t {
            for (c, f) in self.fractions.iter_mut().enumerate() {
                f.push(self.current[c] as f64 / self.num_nodes);
            }
            self.next += 1;
        }
    }

    /// Counts after an event or step completing at time `t`.
    pub fn observe(&mut self, t: f64, counts: &[u64]) {
        self.emit_before(t);
        self.current.copy_from_slice(counts);
        let t_final = self.grid.last().copied().unwrap_or(f64::INFINITY);
        if t <= t_final && counts[self.infectious] > self.peak {
            self.peak = counts[self.infectious];
            self.peak_time = t;
        }
    }

    pub fn finish(mut self, step_count: u64, wall_clock: f64) -> TrajectoryRecord {
        self.emit_before(f64::INFINITY);
        let final_terminal = self.terminal.map(|t| *self.fractions[t].last().unwrap_or(&0.0));
        TrajectoryRecord {
            compartments: self.labels,
            grid: self.grid,
            fractions: self.fractions,
            summary: RunSummary {
                peak_infected: self.peak as f64 / self.num_nodes,
                peak_time: self.peak_time,
                final_terminal,
                step_count,
                wall_clock,
            },
        }
    }
}

/// Pointwise ensemble mean; all records must share a grid.
pub fn ensemble_mean(runs: &[TrajectoryRecord]) -> Result<Vec<Vec<f64>>> {
    let first = runs.first().ok_or_else(|| Error::InvalidParameter("empty ensemble".into()))?;
    check_grids(runs, first)?;
    let inv = 1.0 / runs.len() as f64;
    Ok((0..first.fractions.len())
        .map(|c| {
            (0..first.grid.len()).map(|k| runs.iter().map(|r| r.fractions[c][k]).sum::<f64>() * inv).collect()
        })
        .collect())
}

pub(crate) fn check_grids(runs: &[TrajectoryRecord], reference: &TrajectoryRecord) -> Result<()> {
    for r in runs {
        if r.grid != reference.grid || r.compartments != reference.compartments {
            return Err(Error::GridMismatch);
        }
    }
    Ok(())
}

/// Linear-interpolated quantile of unsorted data.
pub fn quantile(data: &mut [f64], q: f64) -> f64 {
    assert!(!data.is_empty());
    data.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (data.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    data[lo] + (data[hi] - data[lo]) * (pos - lo as f64)
}

/// Per-grid-point `(q_lo, q_hi)` band of compartment `c` across an ensemble.
pub fn quantile_band(runs: &[TrajectoryRecord], c: usize, q_lo: f64, q_hi: f64) -> Result<Vec<(f64, f64)>> {
    let first = runs.first().ok_or_else(|| Error::InvalidParameter("empty ensemble".into()))?;
    check_grids(runs, first)?;
    let mut col = vec![0.0; runs.len()];
    Ok((0..first.grid.len())
        .map(|k| {
            for (slot, r) in col.iter_mut().zip(runs) {
                *slot = r.fractions[c][k];
            }
            (quantile(&mut col, q_lo), quantile(&mut col, q_hi))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::sir;

    #[test]
    fn grid_shape() {
        let g = uniform_grid(50.0, 501);
        assert_eq!(g.len(), 501);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[500], 50.0);
        assert!((g[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn last_value_sampling() {
        let m = sir(0.1, 0.1).unwrap();
        let mut r = Recorder::new(&m, 10, vec![0.0, 1.0, 2.0, 3.0], &[9, 1, 0]);
        r.observe(0.5, &[8, 2, 0]);
        r.observe(1.0, &[7, 3, 0]);
        r.observe(2.7, &[7, 1, 2]);
        r.observe(3.5, &[7, 0, 3]);
        let rec = r.finish(4, 0.0);
        assert_eq!(rec.fractions[1], vec![0.1, 0.3, 0.3, 0.1]);
        assert_eq!(rec.summary.peak_infected, 0.3);
        assert_eq!(rec.summary.peak_time, 1.0);
        assert_eq!(rec.summary.final_terminal, Some(0.2));
        for k in 0..4 {
            let total: f64 = rec.fractions.iter().map(|f| f[k]).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quantiles() {
        let mut v = vec![4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&mut v, 0.0), 1.0);
        assert_eq!(quantile(&mut v, 1.0), 4.0);
        assert_eq!(quantile(&mut v, 0.5), 2.5);
        assert_eq!(quantile(&mut v, 0.25), 1.75);
    }
}
