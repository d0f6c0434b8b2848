//! Exact event-driven reference simulators.
//!
//! [`gillespie_markov`] is the direct method for all-exponential models.
//! [`gillespie_renewal_seir`] schedules nodal transitions at absolute fire
//! times drawn on state entry and races them against the susceptible
//! infection channel, which is exponential at fixed pressure and therefore
//! re-drawn after every event.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::analysis::{Recorder, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::markov::influence_gather;
use crate::models::{Compartment, HoldingTime, ModelSpec, TransmissionMode, S};
use crate::rng::CounterStream;

/// Events between exact pressure rebuilds in the renewal oracle.
pub const EXACT_REBUILD_EVERY: u64 = 10_000;

/// Binary sum tree over non-negative leaf weights. Internal nodes are always
/// recomputed from their children, so the total never drifts.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    tree: Vec<f64>,
}

impl SumTree {
    pub fn new(n: usize) -> Self {
        let leaves = n.max(1).next_power_of_two();
        SumTree { leaves, tree: vec![0.0; 2 * leaves] }
    }

    pub fn from_weights(w: &[f64]) -> Self {
        let mut t = SumTree::new(w.len());
        t.tree[t.leaves..t.leaves + w.len()].copy_from_slice(w);
        for k in (1..t.leaves).rev() {
            t.tree[k] = t.tree[2 * k] + t.tree[2 * k + 1];
        }
        t
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.tree[1]
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.tree[self.leaves + i]
    }

    pub fn set(&mut self, i: usize, w: f64) {
        let mut k = self.leaves + i;
        self.tree[k] = w;
        while k > 1 {
            k /= 2;
            self.tree[k] = self.tree[2 * k] + self.tree[2 * k + 1];
        }
    }

    /// Leaf `i` with `prefix(i) <= x < prefix(i) + w_i`, skipping zero leaves.
    pub fn find(&self, mut x: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.tree[2 * k];
            if x < left || self.tree[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                x -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}

fn check_target(g: &CsrGraph, m: &ModelSpec, seeds: &[u32], state: Compartment) -> Result<()> {
    m.validate()?;
    if state as usize >= m.num_compartments() {
        return Err(Error::InvalidConfig(format!("compartment {state} out of range")));
    }
    if let Some(&v) = seeds.iter().find(|&&v| v as usize >= g.num_nodes()) {
        return Err(Error::IndexOutOfRange { index: v as u64, num_nodes: g.num_nodes() });
    }
    Ok(())
}

fn initial_states(n: usize, seeds: &[u32], state: Compartment, k: usize) -> (Vec<Compartment>, Vec<u64>) {
    let mut states = vec![S; n];
    for &v in seeds {
        states[v as usize] = state;
    }
    let counts = crate::models::counts(states.iter().copied(), k);
    (states, counts)
}

const STREAM_MARKOV: u64 = 0xD00B;
const STREAM_RENEWAL: u64 = 0x5E1F;

/// Direct-method simulator state for all-exponential models.
#[derive(Debug, Clone)]
pub struct ExactMarkov<'g> {
    g: &'g CsrGraph,
    out: std::borrow::Cow<'g, crate::graph::OutgoingCsr>,
    m: &'g ModelSpec,
    pub states: Vec<Compartment>,
    pub influence: Vec<f64>,
    pub counts: Vec<u64>,
    pub clock: f64,
    pub events: u64,
    tree: SumTree,
    rng: CounterStream,
}

impl<'g> ExactMarkov<'g> {
    pub fn new(g: &'g CsrGraph, m: &'g ModelSpec, seed: u64, seeds: &[u32], state: Compartment) -> Result<Self> {
        check_target(g, m, seeds, state)?;
        if !m.is_markovian() {
            return Err(Error::InvalidConfig("direct method needs an all-exponential model".into()));
        }
        let (states, counts) = initial_states(g.num_nodes(), seeds, state, m.num_compartments());
        let influence = influence_gather(g, &states, m);
        let mut s = ExactMarkov {
            g,
            out: g.outgoing_or_build(),
            m,
            states,
            influence,
            counts,
            clock: 0.0,
            events: 0,
            tree: SumTree::new(g.num_nodes()),
            rng: CounterStream::new(seed, STREAM_MARKOV),
        };
        let w: Vec<f64> = (0..g.num_nodes()).map(|i| s.rate(i)).collect();
        s.tree = SumTree::from_weights(&w);
        Ok(s)
    }

    #[inline]
    fn rate(&self, i: usize) -> f64 {
        crate::models::nodal_rate(self.m, self.states[i], 0.0, self.m.beta * self.influence[i])
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// Fire the next event if it happens no later than `t_final`.
    pub fn next_event(&mut self, t_final: f64) -> Option<f64> {
        let total = self.tree.total();
        if !(total > 0.0) {
            return None;
        }
        let t = self.clock + self.rng.next_exponential(total);
        if t > t_final {
            return None;
        }
        let v = self.tree.find(self.rng.next_uniform() * total);
        self.clock = t;
        self.fire(v);
        Some(t)
    }

    fn fire(&mut self, v: usize) {
        let q = self.m.infectious_state;
        let old = self.states[v];
        let new = self.m.next_state(old);
        self.states[v] = new;
        self.counts[old as usize] -= 1;
        self.counts[new as usize] += 1;
        self.events += 1;
        self.tree.set(v, self.rate(v));
        if (old == q) != (new == q) {
            let sign = if new == q { 1.0 } else { -1.0 };
            let (ts, ws) = self.out.targets(v);
            for (&t, &w) in ts.iter().zip(ws) {
                self.influence[t as usize] += sign * w as f64;
                let r = self.rate(t as usize);
                self.tree.set(t as usize, r);
            }
        }
        let _ = self.g;
    }
}

/// Exact continuous-time run of an all-exponential model on `grid`.
pub fn gillespie_markov(
    g: &CsrGraph,
    m: &ModelSpec,
    seed: u64,
    seeds: &[u32],
    state: Compartment,
    grid: Vec<f64>,
) -> Result<TrajectoryRecord> {
    let start = Instant::now();
    let t_final = grid.last().copied().unwrap_or(0.0);
    let mut sim = ExactMarkov::new(g, m, seed, seeds, state)?;
    let mut rec = Recorder::new(m, g.num_nodes(), grid, &sim.counts);
    while let Some(t) = sim.next_event(t_final) {
        rec.observe(t, &sim.counts);
    }
    Ok(rec.finish(sim.events, start.elapsed().as_secs_f64()))
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct FireTime(f64);

impl Eq for FireTime {}

impl Ord for FireTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Next-reaction hybrid state for renewal models with constant transmission.
#[derive(Debug, Clone)]
pub struct ExactRenewal<'g> {
    g: &'g CsrGraph,
    out: std::borrow::Cow<'g, crate::graph::OutgoingCsr>,
    m: &'g ModelSpec,
    pub states: Vec<Compartment>,
    pub influence: Vec<f64>,
    pub counts: Vec<u64>,
    pub clock: f64,
    pub events: u64,
    /// Per-node infection rates of susceptibles.
    channel: SumTree,
    queue: BinaryHeap<Reverse<(FireTime, u32)>>,
    rng: CounterStream,
}

impl<'g> ExactRenewal<'g> {
    pub fn new(g: &'g CsrGraph, m: &'g ModelSpec, seed: u64, seeds: &[u32], state: Compartment) -> Result<Self> {
        check_target(g, m, seeds, state)?;
        if m.transmission != TransmissionMode::Constant {
            return Err(Error::InvalidConfig("the exact oracle supports constant transmission only".into()));
        }
        let (states, counts) = initial_states(g.num_nodes(), seeds, state, m.num_compartments());
        let mut s = ExactRenewal {
            g,
            out: g.outgoing_or_build(),
            m,
            influence: Vec::new(),
            states,
            counts,
            clock: 0.0,
            events: 0,
            channel: SumTree::new(g.num_nodes()),
            queue: BinaryHeap::new(),
            rng: CounterStream::new(seed, STREAM_RENEWAL),
        };
        s.rebuild();
        for &v in seeds {
            s.schedule(v as usize);
        }
        Ok(s)
    }

    fn rebuild(&mut self) {
        self.influence = influence_gather(self.g, &self.states, self.m);
        let w: Vec<f64> = (0..self.states.len()).map(|i| self.channel_rate(i)).collect();
        self.channel = SumTree::from_weights(&w);
    }

    #[inline]
    fn channel_rate(&self, i: usize) -> f64 {
        if self.states[i] == S {
            self.m.beta * self.influence[i]
        } else {
            0.0
        }
    }

    fn sample_holding(&mut self, h: HoldingTime) -> f64 {
        match h {
            HoldingTime::Exponential { rate } if rate > 0.0 => self.rng.next_exponential(rate),
            HoldingTime::Exponential { .. } => f64::INFINITY,
            HoldingTime::LogNormal(p) => self.rng.next_lognormal(p.mu, p.sigma),
        }
    }

    fn schedule(&mut self, v: usize) {
        if let Some(t) = self.m.transition_from(self.states[v]) {
            let dt = self.sample_holding(t.holding);
            if dt.is_finite() {
                self.queue.push(Reverse((FireTime(self.clock + dt), v as u32)));
            }
        }
    }

    /// Total infection rate of the susceptible channel.
    pub fn lambda_s(&self) -> f64 {
        self.channel.total()
    }

    /// Brute-force recomputation of the channel rate.
    pub fn lambda_s_reference(&self) -> f64 {
        let inf = influence_gather(self.g, &self.states, self.m);
        (0..self.states.len()).filter(|&i| self.states[i] == S).map(|i| self.m.beta * inf[i]).sum()
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Fire the sooner of the next scheduled nodal event and the next
    /// infection, if it happens no later than `t_final`.
    pub fn next_event(&mut self, t_final: f64) -> Option<f64> {
        let lam = self.channel.total();
        let t_inf = if lam > 0.0 { self.clock + self.rng.next_exponential(lam) } else { f64::INFINITY };
        let t_nodal = self.queue.peek().map_or(f64::INFINITY, |Reverse((t, _))| t.0);
        let t = t_inf.min(t_nodal);
        if !t.is_finite() || t > t_final {
            return None;
        }
        self.clock = t;
        let v = if t_nodal <= t_inf {
            self.queue.pop().unwrap().0 .1 as usize
        } else {
            self.channel.find(self.rng.next_uniform() * lam)
        };
        self.fire(v);
        self.events += 1;
        if self.events % EXACT_REBUILD_EVERY == 0 {
            self.rebuild();
        }
        Some(t)
    }

    fn fire(&mut self, v: usize) {
        let q = self.m.infectious_state;
        let old = self.states[v];
        let new = self.m.next_state(old);
        self.states[v] = new;
        self.counts[old as usize] -= 1;
        self.counts[new as usize] += 1;
        let r = self.channel_rate(v);
        self.channel.set(v, r);
        if (old == q) != (new == q) {
            let sign = if new == q { 1.0 } else { -1.0 };
            let (ts, ws) = self.out.targets(v);
            for (&t, &w) in ts.iter().zip(ws) {
                let t = t as usize;
                self.influence[t] += sign * w as f64;
                if self.states[t] == S {
                    let r = self.channel_rate(t);
                    self.channel.set(t, r);
                }
            }
        }
        self.schedule(v);
    }
}

/// Exact run of a renewal model (constant transmission) on `grid`.
pub fn gillespie_renewal_seir(
    g: &CsrGraph,
    m: &ModelSpec,
    seed: u64,
    seeds: &[u32],
    state: Compartment,
    grid: Vec<f64>,
) -> Result<TrajectoryRecord> {
    let start = Instant::now();
    let t_final = grid.last().copied().unwrap_or(0.0);
    let mut sim = ExactRenewal::new(g, m, seed, seeds, state)?;
    let mut rec = Recorder::new(m, g.num_nodes(), grid, &sim.counts);
    while let Some(t) = sim.next_event(t_final) {
        rec.observe(t, &sim.counts);
    }
    Ok(rec.finish(sim.events, start.elapsed().as_secs_f64()))
}
