//! Tolerance sweeps and multi-topology comparisons.

use serde::{Deserialize, Serialize};

use super::ensemble::{run_ensemble, EngineSpec, RunSpec};
use super::fidelity::{bootstrap_mean, fidelity, Estimate, FidelityReport, FIDELITY_RESAMPLES};
use super::trajectory::{ensemble_mean, quantile_band, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::graph::{CsrGraph, Topology};
use crate::rng::mix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub runs: usize,
    /// Mean per-run peak infectious fraction.
    pub peak_infected: Estimate,
    pub final_terminal: Option<Estimate>,
    pub mean_steps: f64,
    pub wall_clock: Estimate,
    /// Against the exact reference ensemble, when one was supplied.
    pub vs_exact: Option<FidelityReport>,
    /// Against the finest-ε ensemble of the same sweep.
    pub vs_finest: FidelityReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub peak_errors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_errors: Option<Vec<f64>>,
}

/// Per-run absolute errors of `a` against the ensemble means of `reference`.
pub fn per_run_errors(a: &[TrajectoryRecord], reference: &[TrajectoryRecord]) -> (Vec<f64>, Option<Vec<f64>>) {
    let inv = 1.0 / reference.len().max(1) as f64;
    let ref_peak = reference.iter().map(|r| r.summary.peak_infected).sum::<f64>() * inv;
    let peaks = a.iter().map(|r| (r.summary.peak_infected - ref_peak).abs()).collect();
    let finals = reference.first().and_then(|r0| r0.summary.final_terminal).map(|_| {
        let ref_fin = reference.iter().filter_map(|r| r.summary.final_terminal).sum::<f64>() * inv;
        a.iter().map(|r| (r.summary.final_terminal.unwrap_or(0.0) - ref_fin).abs()).collect()
    });
    (peaks, finals)
}

/// Renewal ensembles of `runs` trials at each tolerance in `eps_list`, all
/// sharing the trial seed family of `seed`.
pub fn epsilon_sweep(
    g: &CsrGraph,
    spec: &RunSpec,
    eps_list: &[f64],
    runs: usize,
    seed: u64,
    exact: Option<&[TrajectoryRecord]>,
) -> Result<Vec<SweepRow>> {
    let EngineSpec::Renewal(base) = spec.engine else {
        return Err(Error::InvalidConfig("epsilon sweep needs the renewal engine".into()));
    };
    if eps_list.is_empty() {
        return Ok(Vec::new());
    }
    let mut ensembles = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut s = spec.clone();
        s.engine = EngineSpec::Renewal(crate::renewal::RenewalConfig { epsilon: eps, ..base });
        ensembles.push(run_ensemble(g, &s, seed, runs)?);
    }
    let finest = eps_list
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap();

    let mut rows = Vec::with_capacity(eps_list.len());
    for (k, (&eps, runs_k)) in eps_list.iter().zip(&ensembles).enumerate() {
        let bseed = mix64(seed ^ k as u64);
        let peaks: Vec<f64> = runs_k.iter().map(|r| r.summary.peak_infected).collect();
        let finals: Option<Vec<f64>> = runs_k.iter().map(|r| r.summary.final_terminal).collect();
        let walls: Vec<f64> = runs_k.iter().map(|r| r.summary.wall_clock).collect();
        let (vs_exact, peak_errors, final_errors) = match exact {
            Some(ex) => {
                let (p, f) = per_run_errors(runs_k, ex);
                (Some(fidelity(runs_k, ex)?), Some(p), f)
            }
            None => (None, None, None),
        };
        rows.push(SweepRow {
            epsilon: eps,
            runs: runs_k.len(),
            peak_infected: bootstrap_mean(&peaks, FIDELITY_RESAMPLES, bseed),
            final_terminal: finals.map(|f| bootstrap_mean(&f, FIDELITY_RESAMPLES, bseed ^ 1)),
            mean_steps: runs_k.iter().map(|r| r.summary.step_count as f64).sum::<f64>() / runs_k.len() as f64,
            wall_clock: bootstrap_mean(&walls, FIDELITY_RESAMPLES, bseed ^ 2),
            vs_exact,
            vs_finest: fidelity(runs_k, &ensembles[finest])?,
            peak_errors,
            final_errors,
        });
    }
    Ok(rows)
}

/// Ensemble-mean infectious curve of one (topology, N, ε) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyCurve {
    pub topology: String,
    pub num_nodes: usize,
    /// `None` for the exact reference.
    pub epsilon: Option<f64>,
    pub grid: Vec<f64>,
    pub mean_infected: Vec<f64>,
    pub peak_infected: f64,
    pub peak_time: f64,
    /// 25-75% band of the infectious fraction; exact curves only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iqr: Option<Vec<(f64, f64)>>,
}

impl TopologyCurve {
    fn from_runs(topology: String, n: usize, epsilon: Option<f64>, runs: &[TrajectoryRecord]) -> Result<Self> {
        let mean = ensemble_mean(runs)?;
        let i = runs[0].compartments.iter().position(|c| c == "I").unwrap_or(1);
        let curve = mean[i].clone();
        let (k, &peak) = curve
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or(Error::GridMismatch)?;
        Ok(TopologyCurve {
            topology,
            num_nodes: n,
            epsilon,
            grid: runs[0].grid.clone(),
            mean_infected: curve,
            peak_infected: peak,
            peak_time: runs[0].grid[k],
            iqr: if epsilon.is_none() { Some(quantile_band(runs, i, 0.25, 0.75)?) } else { None },
        })
    }

    /// Grid points where this curve leaves `reference`'s IQR band.
    pub fn outside_band(&self, reference: &TopologyCurve) -> usize {
        reference.iqr.as_ref().map_or(0, |band| count_outside(&self.mean_infected, band))
    }

    /// Largest pointwise gap between two curves on the same grid.
    pub fn max_gap(&self, other: &TopologyCurve) -> f64 {
        self.mean_infected.iter().zip(&other.mean_infected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Slack for rounding in ensemble means of identical values.
pub const BAND_SLACK: f64 = 1e-12;

/// Points of `curve` outside `band`, with `BAND_SLACK` at both edges.
pub fn count_outside(curve: &[f64], band: &[(f64, f64)]) -> usize {
    curve.iter().zip(band).filter(|(x, (lo, hi))| **x < lo - BAND_SLACK || **x > hi + BAND_SLACK).count()
}

/// For every topology and size, one renewal curve per tolerance plus an
/// exact curve when `N <= exact_max_nodes`.
pub fn multi_topology_sweep(
    topologies: &[Topology],
    sizes: &[usize],
    eps_list: &[f64],
    runs: usize,
    seed: u64,
    spec: &RunSpec,
    exact_max_nodes: usize,
) -> Result<Vec<TopologyCurve>> {
    let EngineSpec::Renewal(base) = spec.engine else {
        return Err(Error::InvalidConfig("topology sweep needs the renewal engine".into()));
    };
    let mut out = Vec::new();
    if eps_list.is_empty() {
        return Ok(out);
    }
    for (ti, topo) in topologies.iter().enumerate() {
        for &n in sizes {
            let g = topo.generate(n, mix64(seed ^ ((ti as u64) << 48) ^ n as u64))?;
            for &eps in eps_list {
                let mut s = spec.clone();
                s.engine = EngineSpec::Renewal(crate::renewal::RenewalConfig { epsilon: eps, ..base });
                let ens = run_ensemble(&g, &s, seed, runs)?;
                out.push(TopologyCurve::from_runs(topo.label(), n, Some(eps), &ens)?);
            }
            if n <= exact_max_nodes {
                let mut s = spec.clone();
                s.engine = EngineSpec::Exact;
                let ens = run_ensemble(&g, &s, seed, runs)?;
                out.push(TopologyCurve::from_runs(topo.label(), n, None, &ens)?);
            }
        }
    }
    Ok(out)
}
