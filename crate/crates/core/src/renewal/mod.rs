//! Synchronous Bernoulli tau-leaping for age-dependent (renewal) models.
//!
//! One step gathers pressure from the previous step's infectivity buffer,
//! evaluates every node's rate, draws one uniform per node, applies all
//! transitions at once, writes the next infectivity buffer and picks the
//! next step size from the largest rate.

mod active;
mod precision;
mod pressure;

pub use active::{refresh_active, ActiveSet, CHUNK};
pub use precision::{encode_weights, Cell, FullPrecision, MixedPrecision, NodeArrays, Precision, StateCell};
pub use pressure::{edge_owner, gather_into, gather_reference, GatherParams, MAX_LANES};

use half::bf16;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{degree_stats, select_strategy, CsrGraph, Strategy};
use crate::models::{counts, CompiledModel, Compartment, ModelSpec, S};
use crate::rng::RngKey;

/// Node count from which per-node loops use the thread pool.
pub const PARALLEL_MIN_NODES: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenewalConfig {
    pub epsilon: f64,
    pub tau_max: f64,
    pub delta: f64,
    pub steps_per_batch: usize,
    pub strategy: Strategy,
    pub compaction: bool,
    pub mixed_precision: bool,
    pub chunk_skip: bool,
    pub lanes_per_node: usize,
    pub edges_per_block: usize,
    /// Keep `tau_prev` across batches instead of resetting it to `tau_max`.
    pub carry_tau: bool,
    /// Allow intra-step parallel loops on large graphs.
    pub parallel: bool,
}

impl Default for RenewalConfig {
    fn default() -> Self {
        RenewalConfig {
            epsilon: 0.03,
            tau_max: 0.1,
            delta: 1e-9,
            steps_per_batch: 50,
            strategy: Strategy::Auto,
            compaction: false,
            mixed_precision: false,
            chunk_skip: true,
            lanes_per_node: 32,
            edges_per_block: 1024,
            carry_tau: false,
            parallel: true,
        }
    }
}

impl RenewalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.tau_max > 0.0 && self.tau_max.is_finite()) {
            return bad(format!("tau_max must be positive, got {}", self.tau_max));
        }
        if !(self.delta >= 0.0) {
            return bad(format!("delta must be >= 0, got {}", self.delta));
        }
        if self.steps_per_batch == 0 {
            return bad("steps_per_batch must be >= 1".into());
        }
        if !(1..=MAX_LANES).contains(&self.lanes_per_node) {
            return bad(format!("lanes_per_node must lie in 1..={MAX_LANES}"));
        }
        if self.edges_per_block == 0 {
            return bad("edges_per_block must be >= 1".into());
        }
        Ok(())
    }
}

/// Node arrays in one of the two storage formats.
#[derive(Debug, Clone)]
pub enum Storage {
    Full(NodeArrays<FullPrecision>),
    Mixed { arrays: NodeArrays<MixedPrecision>, weights: Vec<bf16> },
}

#[derive(Debug, Clone)]
pub struct RenewalState {
    pub clock: f64,
    pub step_counter: u64,
    pub tau_prev: f32,
    pub pressure: Vec<f32>,
    pub rates: Vec<f32>,
    pub counts: Vec<u64>,
    pub storage: Storage,
}

impl RenewalState {
    /// All nodes susceptible at age 0.
    pub fn new(n: usize, num_compartments: usize, tau_max: f64) -> Self {
        let mut counts = vec![0u64; num_compartments];
        counts[S as usize] = n as u64;
        RenewalState {
            clock: 0.0,
            step_counter: 0,
            tau_prev: f32_toward_zero(tau_max),
            pressure: vec![0.0; n],
            rates: vec![0.0; n],
            counts,
            storage: Storage::Full(NodeArrays::new(n)),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.pressure.len()
    }

    pub fn is_mixed(&self) -> bool {
        matches!(self.storage, Storage::Mixed { .. })
    }

    /// Switch storage format; only valid before the first step.
    pub fn set_mixed_precision(&mut self, on: bool, g: &CsrGraph) -> Result<()> {
        if self.step_counter > 0 {
            return Err(Error::ReconfigureAfterStart);
        }
        self.storage = match (&self.storage, on) {
            (Storage::Full(a), true) => {
                Storage::Mixed { arrays: a.convert(), weights: encode_weights(g.weights()) }
            }
            (Storage::Mixed { arrays, .. }, false) => Storage::Full(arrays.convert()),
            (s, _) => s.clone(),
        };
        Ok(())
    }

    #[inline]
    pub fn state(&self, i: usize) -> Compartment {
        match &self.storage {
            Storage::Full(a) => a.states[i].get(),
            Storage::Mixed { arrays, .. } => arrays.states[i].get(),
        }
    }

    #[inline]
    pub fn age(&self, i: usize) -> f32 {
        match &self.storage {
            Storage::Full(a) => a.ages[i].load(),
            Storage::Mixed { arrays, .. } => arrays.ages[i].load(),
        }
    }

    #[inline]
    pub fn infectivity(&self, i: usize) -> f32 {
        match &self.storage {
            Storage::Full(a) => a.infectivity[i].load(),
            Storage::Mixed { arrays, .. } => arrays.infectivity[i].load(),
        }
    }

    pub fn states(&self) -> Vec<Compartment> {
        (0..self.num_nodes()).map(|i| self.state(i)).collect()
    }

    /// Ages widened to `f32`.
    pub fn ages(&self) -> Vec<f32> {
        (0..self.num_nodes()).map(|i| self.age(i)).collect()
    }

    pub fn infectivities(&self) -> Vec<f32> {
        (0..self.num_nodes()).map(|i| self.infectivity(i)).collect()
    }

    /// Place nodes in `state` at age `age` and refresh their infectivity.
    pub fn assign(&mut self, nodes: &[u32], state: Compartment, age: f32, m: &CompiledModel) -> Result<()> {
        if self.step_counter > 0 {
            return Err(Error::ReconfigureAfterStart);
        }
        let n = self.num_nodes();
        for &v in nodes {
            let v = v as usize;
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v as u64, num_nodes: n });
            }
            if state as usize >= self.counts.len() {
                return Err(Error::InvalidConfig(format!("compartment {state} out of range")));
            }
            let old = self.state(v);
            self.counts[old as usize] -= 1;
            self.counts[state as usize] += 1;
            let inf = m.infectivity(state, age as f64) as f32;
            match &mut self.storage {
                Storage::Full(a) => put_node(a, v, state, age, inf),
                Storage::Mixed { arrays, .. } => put_node(arrays, v, state, age, inf),
            }
        }
        Ok(())
    }
}

fn put_node<P: Precision>(a: &mut NodeArrays<P>, v: usize, state: Compartment, age: f32, inf: f32) {
    a.states[v] = P::State::put(state);
    a.ages[v] = P::Age::store(age);
    a.infectivity[v] = P::Infectivity::store(inf);
}

/// Read-only per-step context shared by the node kernels.
struct StepCtx<'a> {
    model: &'a CompiledModel,
    tau: f32,
    seed: u64,
    step: u64,
    chunk_skip: bool,
}

#[inline]
fn nodal_active(m: &CompiledModel, st: Compartment) -> bool {
    st != S && !m.terminal[st as usize]
}

/// Rate, Bernoulli draw, age update and infectivity write-back for node `i`.
/// Returns `(lambda, previous state if fired)`.
#[inline(always)]
fn update_node<P: Precision>(
    ctx: &StepCtx<'_>,
    i: usize,
    st_cell: &mut P::State,
    age_cell: &mut P::Age,
    inf_cell: &mut P::Infectivity,
    rate: &mut f32,
    pressure: f32,
    skip_hazard: bool,
) -> (f32, Option<Compartment>) {
    let st = st_cell.get();
    let age = age_cell.load();
    let lam = if st == S {
        pressure
    } else if skip_hazard {
        0.0
    } else {
        ctx.model.rate(st, age as f64, 0.0) as f32
    };
    *rate = lam;
    let fired = lam > 0.0 && {
        let q = -(-(lam as f64) * ctx.tau as f64).exp_m1();
        RngKey::new(ctx.seed, ctx.step, i as u64).uniform() < q
    };
    let (st2, age2) = if fired { (ctx.model.next[st as usize], 0.0f32) } else { (st, age + ctx.tau) };
    if fired {
        *st_cell = P::State::put(st2);
    }
    *age_cell = P::Age::store(age2);
    if fired || st2 == ctx.model.infectious {
        *inf_cell = P::Infectivity::store(ctx.model.infectivity(st2, age2 as f64) as f32);
    }
    (lam, fired.then_some(st))
}

#[derive(Default)]
struct ChunkOut {
    max_rate: f32,
    moves: Vec<(Compartment, Compartment)>,
}

impl ChunkOut {
    fn merge(mut self, other: ChunkOut) -> ChunkOut {
        self.max_rate = self.max_rate.max(other.max_rate);
        self.moves.extend(other.moves);
        self
    }
}

fn dense_chunk<P: Precision>(
    ctx: &StepCtx<'_>,
    base: usize,
    states: &mut [P::State],
    ages: &mut [P::Age],
    inf: &mut [P::Infectivity],
    rates: &mut [f32],
    pressure: &[f32],
) -> ChunkOut {
    let skip = ctx.chunk_skip && !states.iter().any(|s| nodal_active(ctx.model, s.get()));
    let mut out = ChunkOut::default();
    for k in 0..states.len() {
        let (lam, fired) =
            update_node::<P>(ctx, base + k, &mut states[k], &mut ages[k], &mut inf[k], &mut rates[k], pressure[k], skip);
        out.max_rate = out.max_rate.max(lam);
        if let Some(from) = fired {
            out.moves.push((from, states[k].get()));
        }
    }
    out
}

/// Largest `f32` not above `x` (for positive finite `x`).
#[inline]
pub fn f32_toward_zero(x: f64) -> f32 {
    let t = x as f32;
    if (t as f64) > x {
        f32::from_bits(t.to_bits() - 1)
    } else {
        t
    }
}

/// `min(tau_max, epsilon / (max_rate + delta))`, never rounded upward.
pub fn next_tau(max_rate: f32, cfg: &RenewalConfig) -> f32 {
    let t = (cfg.epsilon / (max_rate as f64 + cfg.delta)).min(cfg.tau_max);
    f32_toward_zero(t)
}

#[allow(clippy::too_many_arguments)]
fn step_arrays<P: Precision>(
    g: &CsrGraph,
    weights: &[P::Weight],
    a: &mut NodeArrays<P>,
    pressure: &mut [f32],
    rates: &mut [f32],
    active: Option<&ActiveSet>,
    ctx: &StepCtx<'_>,
    gp: &GatherParams,
) -> ChunkOut {
    gather_into(g, &a.infectivity, weights, gp, active, pressure);
    match active {
        None if gp.parallel => a
            .states
            .par_chunks_mut(CHUNK)
            .zip(a.ages.par_chunks_mut(CHUNK))
            .zip(a.infectivity.par_chunks_mut(CHUNK))
            .zip(rates.par_chunks_mut(CHUNK))
            .zip(pressure.par_chunks(CHUNK))
            .enumerate()
            .map(|(c, ((((st, ag), inf), r), p))| dense_chunk::<P>(ctx, c * CHUNK, st, ag, inf, r, p))
            .reduce(ChunkOut::default, ChunkOut::merge),
        None => {
            let mut out = ChunkOut::default();
            let n = a.len();
            for c in 0..n.div_ceil(CHUNK) {
                let r = c * CHUNK..((c + 1) * CHUNK).min(n);
                let o = dense_chunk::<P>(
                    ctx,
                    r.start,
                    &mut a.states[r.clone()],
                    &mut a.ages[r.clone()],
                    &mut a.infectivity[r.clone()],
                    &mut rates[r.clone()],
                    &pressure[r],
                );
                out = out.merge(o);
            }
            out
        }
        Some(set) => {
            let mut out = ChunkOut::default();
            for chunk in set.ids().chunks(CHUNK) {
                let skip =
                    ctx.chunk_skip && !chunk.iter().any(|&i| nodal_active(ctx.model, a.states[i as usize].get()));
                for &i in chunk {
                    let i = i as usize;
                    let (lam, fired) = update_node::<P>(
                        ctx,
                        i,
                        &mut a.states[i],
                        &mut a.ages[i],
                        &mut a.infectivity[i],
                        &mut rates[i],
                        pressure[i],
                        skip,
                    );
                    out.max_rate = out.max_rate.max(lam);
                    if let Some(from) = fired {
                        out.moves.push((from, a.states[i].get()));
                    }
                }
            }
            // Inactive nodes are absorbed; only their ages move.
            let mut next = 0usize;
            let ids = set.ids();
            for &i in ids.iter().chain(std::iter::once(&(a.len() as u32))) {
                for age in &mut a.ages[next..i as usize] {
                    *age = P::Age::store(age.load() + ctx.tau);
                }
                next = i as usize + 1;
            }
            out
        }
    }
}

/// One simulation instance bound to a graph.
#[derive(Debug, Clone)]
pub struct RenewalEngine<'g> {
    graph: &'g CsrGraph,
    spec: ModelSpec,
    model: CompiledModel,
    cfg: RenewalConfig,
    strategy: Strategy,
    seed: u64,
    state: RenewalState,
    active: Option<ActiveSet>,
    batch_pos: usize,
}

impl<'g> RenewalEngine<'g> {
    pub fn new(graph: &'g CsrGraph, spec: &ModelSpec, cfg: RenewalConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        spec.validate()?;
        let strategy = match degree_stats(graph) {
            Ok(st) => select_strategy(&st, cfg.strategy),
            Err(_) if cfg.strategy == Strategy::Auto => Strategy::PerNode,
            Err(_) => cfg.strategy,
        };
        let n = graph.num_nodes();
        let mut state = RenewalState::new(n, spec.num_compartments(), cfg.tau_max);
        if cfg.mixed_precision {
            state.set_mixed_precision(true, graph)?;
        }
        let model = CompiledModel::new(spec);
        let mut eng =
            RenewalEngine { graph, spec: spec.clone(), model, cfg, strategy, seed, state, active: None, batch_pos: 0 };
        if cfg.compaction {
            eng.refresh();
        }
        Ok(eng)
    }

    /// Seed `nodes` into `state` at age 0 (before the first step).
    pub fn seed_nodes(&mut self, nodes: &[u32], state: Compartment) -> Result<()> {
        self.state.assign(nodes, state, 0.0, &self.model)?;
        if self.cfg.compaction {
            self.refresh();
        }
        Ok(())
    }

    pub fn set_mixed_precision(&mut self, on: bool) -> Result<()> {
        self.state.set_mixed_precision(on, self.graph)?;
        self.cfg.mixed_precision = on;
        Ok(())
    }

    pub fn state(&self) -> &RenewalState {
        &self.state
    }

    pub fn config(&self) -> &RenewalConfig {
        &self.cfg
    }

    pub fn model(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn graph(&self) -> &CsrGraph {
        self.graph
    }

    pub fn active(&self) -> Option<&ActiveSet> {
        self.active.as_ref()
    }

    pub fn counts(&self) -> &[u64] {
        &self.state.counts
    }

    pub fn clock(&self) -> f64 {
        self.state.clock
    }

    fn refresh(&mut self) {
        let terminal = self.model.terminal.clone();
        let is_terminal = |c: Compartment| terminal[c as usize];
        let set = self.active.get_or_insert_with(|| ActiveSet::with_capacity(self.graph.num_nodes()));
        match &self.state.storage {
            Storage::Full(a) => set.refresh(&a.states, is_terminal),
            Storage::Mixed { arrays, .. } => set.refresh(&arrays.states, is_terminal),
        }
        self.state.rates.fill(0.0);
        self.state.pressure.fill(0.0);
    }

    fn gather_params(&self) -> GatherParams {
        GatherParams {
            strategy: self.strategy,
            lanes_per_node: self.cfg.lanes_per_node,
            edges_per_block: self.cfg.edges_per_block,
            parallel: self.cfg.parallel && self.graph.num_nodes() >= PARALLEL_MIN_NODES && !self.cfg.compaction,
        }
    }

    /// One fused step; returns the elapsed time.
    pub fn step(&mut self) -> f64 {
        let tau = self.state.tau_prev;
        self.state.clock += tau as f64;
        let ctx = StepCtx {
            model: &self.model,
            tau,
            seed: self.seed,
            step: self.state.step_counter,
            chunk_skip: self.cfg.chunk_skip,
        };
        let gp = self.gather_params();
        let st = &mut self.state;
        let active = self.active.as_ref();
        let out = match &mut st.storage {
            Storage::Full(a) => {
                step_arrays(self.graph, self.graph.weights(), a, &mut st.pressure, &mut st.rates, active, &ctx, &gp)
            }
            Storage::Mixed { arrays, weights } => {
                step_arrays(self.graph, weights, arrays, &mut st.pressure, &mut st.rates, active, &ctx, &gp)
            }
        };
        for (from, to) in out.moves {
            st.counts[from as usize] -= 1;
            st.counts[to as usize] += 1;
        }
        debug_assert_eq!(st.counts.iter().sum::<u64>(), st.num_nodes() as u64);
        st.tau_prev = next_tau(out.max_rate, &self.cfg);
        st.step_counter += 1;
        tau as f64
    }

    fn begin_batch(&mut self) {
        if !self.cfg.carry_tau {
            self.state.tau_prev = f32_toward_zero(self.cfg.tau_max);
        }
        if self.cfg.compaction {
            self.refresh();
        }
    }

    /// `steps_per_batch` steps after a batch-boundary reset; returns the elapsed time.
    pub fn run_batch(&mut self) -> f64 {
        self.batch_pos = 0;
        (0..self.cfg.steps_per_batch).map(|_| self.advance()).sum()
    }

    /// One step, applying the batch-boundary reset first when a new batch
    /// starts. Returns the elapsed time.
    pub fn advance(&mut self) -> f64 {
        if self.batch_pos == 0 {
            self.begin_batch();
        }
        self.batch_pos = (self.batch_pos + 1) % self.cfg.steps_per_batch;
        self.step()
    }

    /// Advance until the clock reaches `t_final`. `observe` sees the clock
    /// and counts after every step. Returns the number of steps taken.
    pub fn run_until(&mut self, t_final: f64, mut observe: impl FnMut(f64, &[u64])) -> u64 {
        let start = self.state.step_counter;
        while self.state.clock < t_final {
            self.advance();
            observe(self.state.clock, &self.state.counts);
        }
        self.state.step_counter - start
    }

    /// Recount compartments from the state array.
    pub fn recount(&self) -> Vec<u64> {
        counts(self.state.states(), self.spec.num_compartments())
    }
}

/// Convenience wrapper computing pressure with the renewal contract.
pub fn pressure_gather(
    g: &CsrGraph,
    infectivity: &[f32],
    strategy: Strategy,
    cfg: &RenewalConfig,
    active: Option<&ActiveSet>,
) -> Vec<f32> {
    let strategy = match degree_stats(g) {
        Ok(st) => select_strategy(&st, strategy),
        Err(_) => Strategy::PerNode,
    };
    let gp = GatherParams {
        strategy,
        lanes_per_node: cfg.lanes_per_node,
        edges_per_block: cfg.edges_per_block,
        parallel: cfg.parallel && g.num_nodes() >= PARALLEL_MIN_NODES,
    };
    let mut out = vec![0.0f32; g.num_nodes()];
    gather_into(g, infectivity, g.weights(), &gp, active, &mut out);
    out
}
