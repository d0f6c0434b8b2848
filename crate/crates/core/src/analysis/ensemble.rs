//! Single runs and seeded ensembles for every engine.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trajectory::{uniform_grid, Recorder, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::exact::{gillespie_markov, gillespie_renewal_seir};
use crate::graph::CsrGraph;
use crate::markov::{MarkovConfig, MarkovEngine};
use crate::models::{choose_seeds, default_seed_count, Compartment, ModelSpec};
use crate::renewal::{RenewalConfig, RenewalEngine};
use crate::rng::trial_seed;

/// Which nodes start infected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Seeding {
    /// Number of seeded nodes; `max(10, N/100)` when absent.
    pub count: Option<usize>,
    /// Compartment of the seeded nodes; the infection target when absent.
    pub state: Option<Compartment>,
}

impl Seeding {
    pub fn resolve(&self, m: &ModelSpec, n: usize, seed: u64) -> Result<(Vec<u32>, Compartment)> {
        let state = self.state.unwrap_or(m.infected_target);
        if state as usize >= m.num_compartments() {
            return Err(Error::InvalidConfig(format!("seed compartment {state} not in model")));
        }
        let k = self.count.unwrap_or_else(|| default_seed_count(n));
        Ok((choose_seeds(n, k, seed)?, state))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum EngineSpec {
    Renewal(RenewalConfig),
    Markov(MarkovConfig),
    Exact,
}

impl EngineSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EngineSpec::Renewal(_) => "renewal",
            EngineSpec::Markov(_) => "markov",
            EngineSpec::Exact => "exact",
        }
    }
}

/// Everything needed to reproduce one run given a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub model: ModelSpec,
    pub engine: EngineSpec,
    pub t_final: f64,
    pub grid_points: usize,
    pub seeding: Seeding,
}

pub fn simulate_renewal(
    g: &CsrGraph,
    m: &ModelSpec,
    cfg: RenewalConfig,
    seed: u64,
    t_final: f64,
    grid_points: usize,
    seeding: Seeding,
) -> Result<TrajectoryRecord> {
    let start = Instant::now();
    let mut eng = RenewalEngine::new(g, m, cfg, seed)?;
    let (ids, state) = seeding.resolve(m, g.num_nodes(), seed)?;
    eng.seed_nodes(&ids, state)?;
    let mut rec = Recorder::new(m, g.num_nodes(), uniform_grid(t_final, grid_points), eng.counts());
    let steps = eng.run_until(t_final, |t, c| rec.observe(t, c));
    Ok(rec.finish(steps, start.elapsed().as_secs_f64()))
}

pub fn simulate_markov(
    g: &CsrGraph,
    m: &ModelSpec,
    cfg: MarkovConfig,
    seed: u64,
    t_final: f64,
    grid_points: usize,
    seeding: Seeding,
) -> Result<TrajectoryRecord> {
    let start = Instant::now();
    let (ids, state) = seeding.resolve(m, g.num_nodes(), seed)?;
    let mut eng = MarkovEngine::new(g, m, cfg, seed)?;
    eng.seed_nodes(&ids, state)?;
    let mut rec = Recorder::new(m, g.num_nodes(), uniform_grid(t_final, grid_points), eng.counts());
    let steps = eng.run_until(t_final, |t, c| rec.observe(t, c));
    Ok(rec.finish(steps, start.elapsed().as_secs_f64()))
}

pub fn simulate_exact(
    g: &CsrGraph,
    m: &ModelSpec,
    seed: u64,
    t_final: f64,
    grid_points: usize,
    seeding: Seeding,
) -> Result<TrajectoryRecord> {
    let (ids, state) = seeding.resolve(m, g.num_nodes(), seed)?;
    let grid = uniform_grid(t_final, grid_points);
    if m.is_markovian() {
        gillespie_markov(g, m, seed, &ids, state, grid)
    } else {
        gillespie_renewal_seir(g, m, seed, &ids, state, grid)
    }
}

/// One run of `spec` with `seed`.
pub fn simulate(g: &CsrGraph, spec: &RunSpec, seed: u64) -> Result<TrajectoryRecord> {
    match spec.engine {
        EngineSpec::Renewal(cfg) => {
            simulate_renewal(g, &spec.model, cfg, seed, spec.t_final, spec.grid_points, spec.seeding)
        }
        EngineSpec::Markov(cfg) => simulate_markov(g, &spec.model, cfg, seed, spec.t_final, spec.grid_points, spec.seeding),
        EngineSpec::Exact => simulate_exact(g, &spec.model, seed, spec.t_final, spec.grid_points, spec.seeding),
    }
}

/// `runs` independent trials with seeds `trial_seed(seed, r)`, in trial order.
pub fn run_ensemble(g: &CsrGraph, spec: &RunSpec, seed: u64, runs: usize) -> Result<Vec<TrajectoryRecord>> {
    if runs == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    // Trials already saturate the pool; keep each run single-threaded.
    let mut spec = spec.clone();
    if let EngineSpec::Renewal(cfg) = &mut spec.engine {
        cfg.parallel = runs == 1 && cfg.parallel;
    }
    if let EngineSpec::Markov(cfg) = &mut spec.engine {
        cfg.parallel = runs == 1 && cfg.parallel;
    }
    (0..runs as u64).into_par_iter().map(|r| simulate(g, &spec, trial_seed(seed, r))).collect()
}
