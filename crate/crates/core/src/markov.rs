//! Tau-leaping for memoryless models.
//!
//! Each step draws one Bernoulli per node with probability `1 - exp(-lambda tau)`.
//! Influence is then either patched along the outgoing edges of the nodes that
//! changed (inertial mode) or rebuilt by a full gather (control mode).

use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, OutgoingCsr};
use crate::models::{CompiledModel, Compartment, ModelSpec, S};
use crate::rng::RngKey;

const PARALLEL_MIN_NODES: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarkovConfig {
    pub theta: f64,
    pub p_max: f64,
    pub tau_max: f64,
    /// Forced full rebuild after this many transitions.
    pub rebuild_every: u64,
    /// Inertial mode when `|T| * d_avg < (N + E) / inertial_factor`.
    pub inertial_factor: f64,
    pub parallel: bool,
}

impl Default for MarkovConfig {
    fn default() -> Self {
        MarkovConfig { theta: 0.01, p_max: 0.1, tau_max: 0.1, rebuild_every: 200, inertial_factor: 8.0, parallel: true }
    }
}

impl MarkovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_max > 0.0 && self.p_max < 1.0) {
            return Err(Error::InvalidConfig(format!("p_max must lie in (0, 1), got {}", self.p_max)));
        }
        if !(self.theta > 0.0) || !(self.tau_max > 0.0) || !self.tau_max.is_finite() {
            return Err(Error::InvalidConfig("theta and tau_max must be positive".into()));
        }
        if self.rebuild_every == 0 || !(self.inertial_factor > 0.0) {
            return Err(Error::InvalidConfig("rebuild_every and inertial_factor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateMode {
    Inertial,
    Control,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovState {
    pub states: Vec<Compartment>,
    pub influence: Vec<f64>,
    pub rates: Vec<f64>,
    pub counts: Vec<u64>,
    pub clock: f64,
    pub step_counter: u64,
    pub events_since_rebuild: u64,
}

/// Weighted count of infectious in-neighbours, summed in CSR order.
pub fn influence_gather(g: &CsrGraph, states: &[Compartment], m: &ModelSpec) -> Vec<f64> {
    let q = m.infectious_state;
    (0..g.num_nodes())
        .map(|i| {
            let (srcs, ws) = g.incoming(i);
            let mut acc = 0.0f64;
            for (&s, &w) in srcs.iter().zip(ws) {
                if states[s as usize] == q {
                    acc += w as f64;
                }
            }
            acc
        })
        .collect()
}

/// Outcome of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub tau: f64,
    pub transitioned: Vec<u32>,
    pub mode: UpdateMode,
}

#[derive(Debug, Clone)]
pub struct MarkovEngine<'g> {
    graph: &'g CsrGraph,
    outgoing: Cow<'g, OutgoingCsr>,
    spec: ModelSpec,
    model: CompiledModel,
    cfg: MarkovConfig,
    seed: u64,
    state: MarkovState,
    d_avg: f64,
}

impl<'g> MarkovEngine<'g> {
    pub fn new(graph: &'g CsrGraph, spec: &ModelSpec, cfg: MarkovConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        spec.validate()?;
        if !spec.is_markovian() {
            return Err(Error::InvalidConfig(
                "the markov engine needs exponential holding times and constant transmission".into(),
            ));
        }
        let n = graph.num_nodes();
        let mut counts = vec![0u64; spec.num_compartments()];
        counts[S as usize] = n as u64;
        let state = MarkovState {
            states: vec![S; n],
            influence: vec![0.0; n],
            rates: vec![0.0; n],
            counts,
            clock: 0.0,
            step_counter: 0,
            events_since_rebuild: 0,
        };
        let mut eng = MarkovEngine {
            graph,
            outgoing: graph.outgoing_or_build(),
            spec: spec.clone(),
            model: CompiledModel::new(spec),
            cfg,
            seed,
            state,
            d_avg: graph.num_edges() as f64 / n as f64,
        };
        eng.rebuild();
        Ok(eng)
    }

    pub fn seed_nodes(&mut self, nodes: &[u32], state: Compartment) -> Result<()> {
        if self.state.step_counter > 0 {
            return Err(Error::ReconfigureAfterStart);
        }
        let n = self.graph.num_nodes();
        if state as usize >= self.spec.num_compartments() {
            return Err(Error::InvalidConfig(format!("compartment {state} out of range")));
        }
        for &v in nodes {
            let v = v as usize;
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v as u64, num_nodes: n });
            }
            let old = self.state.states[v];
            self.state.counts[old as usize] -= 1;
            self.state.counts[state as usize] += 1;
            self.state.states[v] = state;
        }
        self.rebuild();
        Ok(())
    }

    pub fn state(&self) -> &MarkovState {
        &self.state
    }

    pub fn counts(&self) -> &[u64] {
        &self.state.counts
    }

    pub fn clock(&self) -> f64 {
        self.state.clock
    }

    #[inline]
    fn rate_of(&self, i: usize) -> f64 {
        let st = self.state.states[i];
        self.model.rate(st, 0.0, self.model.beta * self.state.influence[i])
    }

    /// Full influence gather and rate recompute.
    fn rebuild(&mut self) {
        self.state.influence = influence_gather(self.graph, &self.state.states, &self.spec);
        let rates: Vec<f64> = (0..self.graph.num_nodes()).map(|i| self.rate_of(i)).collect();
        self.state.rates = rates;
        self.state.events_since_rebuild = 0;
    }

    /// Patch influence along outgoing edges of the nodes in `changed`
    /// (`(node, was_infectious)`), then refresh the touched rates.
    pub fn inertial_update(&mut self, changed: &[(u32, bool)]) {
        let q = self.model.infectious;
        let mut touched: Vec<u32> = Vec::new();
        for &(v, was_inf) in changed {
            touched.push(v);
            let now_inf = self.state.states[v as usize] == q;
            if was_inf == now_inf {
                continue;
            }
            let sign = if now_inf { 1.0 } else { -1.0 };
            let (ts, ws) = self.outgoing.targets(v as usize);
            for (&t, &w) in ts.iter().zip(ws) {
                self.state.influence[t as usize] += sign * w as f64;
                touched.push(t);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for t in touched {
            self.state.rates[t as usize] = self.rate_of(t as usize);
        }
    }

    /// Step size `min(theta N / Lambda, p_max / max lambda, tau_max)`.
    pub fn step_size(&self) -> f64 {
        let total: f64 = self.state.rates.iter().sum();
        let max = self.state.rates.iter().cloned().fold(0.0f64, f64::max);
        if total <= 0.0 || max <= 0.0 {
            return self.cfg.tau_max;
        }
        let n = self.graph.num_nodes() as f64;
        (self.cfg.theta * n / total).min(self.cfg.p_max / max).min(self.cfg.tau_max)
    }

    pub fn step(&mut self) -> StepReport {
        let tau = self.step_size();
        let (seed, step) = (self.seed, self.state.step_counter);
        let fire = |i: usize, lam: f64| lam > 0.0 && RngKey::new(seed, step, i as u64).uniform() < -(-lam * tau).exp_m1();
        let rates = &self.state.rates;
        let transitioned: Vec<u32> = if self.cfg.parallel && rates.len() >= PARALLEL_MIN_NODES {
            rates.par_iter().enumerate().filter(|&(i, &l)| fire(i, l)).map(|(i, _)| i as u32).collect()
        } else {
            rates.iter().enumerate().filter(|&(i, &l)| fire(i, l)).map(|(i, _)| i as u32).collect()
        };
        let q = self.model.infectious;
        let mut changed = Vec::with_capacity(transitioned.len());
        for &v in &transitioned {
            let old = self.state.states[v as usize];
            let new = self.model.next[old as usize];
            self.state.states[v as usize] = new;
            self.state.counts[old as usize] -= 1;
            self.state.counts[new as usize] += 1;
            changed.push((v, old == q));
        }
        let n = self.graph.num_nodes() as f64;
        let e = self.graph.num_edges() as f64;
        self.state.events_since_rebuild += transitioned.len() as u64;
        let sparse = (transitioned.len() as f64) * self.d_avg < (n + e) / self.cfg.inertial_factor;
        let mode = if sparse && self.state.events_since_rebuild < self.cfg.rebuild_every {
            self.inertial_update(&changed);
            UpdateMode::Inertial
        } else {
            self.rebuild();
            UpdateMode::Control
        };
        self.state.clock += tau;
        self.state.step_counter += 1;
        StepReport { tau, transitioned, mode }
    }

    /// Step until the clock reaches `t_final`; `observe` sees every step.
    pub fn run_until(&mut self, t_final: f64, mut observe: impl FnMut(f64, &[u64])) -> u64 {
        let start = self.state.step_counter;
        while self.state.clock < t_final {
            self.step();
            observe(self.state.clock, &self.state.counts);
        }
        self.state.step_counter - start
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_csr, gen_erdos_renyi};
    use crate::models::{choose_seeds, seir_standard, sir, sis};

    #[test]
    fn gather_examples() {
        let m = sis(0.25, 0.15).unwrap();
        let g = gen_erdos_renyi(100, 6.0, 1).unwrap();
        assert!(influence_gather(&g, &vec![S; 100], &m).iter().all(|&x| x == 0.0));
        let star = build_csr(&(1..=5).flat_map(|s| [(0, s, 1.0), (s, 0, 1.0)]).collect::<Vec<_>>(), 6).unwrap();
        let mut st = vec![S; 6];
        st[0] = 1;
        assert_eq!(influence_gather(&star, &st, &m), vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn gather_matches_double_loop() {
        let m = sis(0.25, 0.15).unwrap();
        let g = gen_erdos_renyi(100, 6.0, 2).unwrap();
        let states: Vec<u8> = (0..100u64).map(|i| (RngKey::new(3, 0, i).uniform() < 0.4) as u8).collect();
        let got = influence_gather(&g, &states, &m);
        let edges = g.decompose();
        for i in 0..100u32 {
            let want: f64 = edges.iter().filter(|e| e.1 == i && states[e.0 as usize] == 1).map(|e| e.2 as f64).sum();
            assert_eq!(got[i as usize], want);
        }
    }

    #[test]
    fn absorbed_network_takes_tau_max() {
        let g = gen_erdos_renyi(50, 4.0, 1).unwrap();
        let mut e = MarkovEngine::new(&g, &sir(0.25, 0.15).unwrap(), MarkovConfig::default(), 1).unwrap();
        e.seed_nodes(&(0..50).collect::<Vec<_>>(), 2).unwrap();
        let r = e.step();
        assert_eq!(r.tau, 0.1);
        assert!(r.transitioned.is_empty());
        assert_eq!(e.counts(), &[0, 0, 50]);
    }

    #[test]
    fn single_node_step_size() {
        let g = build_csr(&[], 1).unwrap();
        let m = sis(0.25, 0.3).unwrap();
        let engine = |cfg: MarkovConfig| {
            let mut e = MarkovEngine::new(&g, &m, cfg, 1).unwrap();
            e.seed_nodes(&[0], 1).unwrap();
            e
        };
        let cfg = MarkovConfig { theta: 1.0, ..MarkovConfig::default() };
        assert!((engine(cfg).step_size() - 0.1).abs() < 1e-15);
        let p = -(-0.3f64 * 0.1).exp_m1();
        assert!((p - 0.029554).abs() < 1e-6);
        let cfg = MarkovConfig { theta: 1.0, tau_max: 10.0, ..MarkovConfig::default() };
        assert!((engine(cfg).step_size() - 0.1 / 0.3).abs() < 1e-15);
        let e = engine(MarkovConfig::default());
        assert!((e.step_size() - 0.01 / 0.3).abs() < 1e-15);
    }

    #[test]
    fn inertial_star_hub_enters() {
        let star = build_csr(&(1..=5).flat_map(|s| [(0, s, 2.0), (s, 0, 2.0)]).collect::<Vec<_>>(), 6).unwrap();
        let m = sis(0.25, 0.15).unwrap();
        let mut e = MarkovEngine::new(&star, &m, MarkovConfig::default(), 1).unwrap();
        let before = e.state().clone();
        e.inertial_update(&[]);
        assert_eq!(&before, e.state());
        e.state.states[0] = 1;
        e.inertial_update(&[(0, false)]);
        assert_eq!(e.state().influence, vec![0.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
        assert!((e.state().rates[3] - 0.5).abs() < 1e-15);
        assert_eq!(e.state().rates[0], 0.15);
    }

    #[test]
    fn inertial_matches_rebuild() {
        let g = gen_erdos_renyi(200, 6.0, 5).unwrap();
        let m = sis(0.25, 0.15).unwrap();
        let mut e = MarkovEngine::new(&g, &m, MarkovConfig::default(), 1).unwrap();
        for k in 0..50u64 {
            let v = (RngKey::new(8, k, 0).uniform() * 200.0) as usize;
            let was = e.state.states[v] == 1;
            e.state.states[v] = 1 - e.state.states[v];
            e.inertial_update(&[(v as u32, was)]);
        }
        let full = influence_gather(&g, &e.state.states, &m);
        assert_eq!(full, e.state.influence);
    }

    #[test]
    fn rejects_age_dependent_models() {
        let g = gen_erdos_renyi(50, 4.0, 1).unwrap();
        let m = seir_standard(0.25, 5.0, 4.0, 7.5, 5.0).unwrap();
        assert!(MarkovEngine::new(&g, &m, MarkovConfig::default(), 1).is_err());
    }

    #[test]
    fn consistent_along_run_and_deterministic() {
        let g = gen_erdos_renyi(1000, 8.0, 3).unwrap();
        let m = sis(0.25, 0.15).unwrap();
        let seeds = choose_seeds(1000, 10, 4).unwrap();
        let run = |parallel: bool| {
            let cfg = MarkovConfig { parallel, ..MarkovConfig::default() };
            let mut e = MarkovEngine::new(&g, &m, cfg, 4).unwrap();
            e.seed_nodes(&seeds, 1).unwrap();
            let mut modes = [0usize; 2];
            for _ in 0..300 {
                let r = e.step();
                modes[(r.mode == UpdateMode::Control) as usize] += 1;
                assert_eq!(e.counts().iter().sum::<u64>(), 1000);
                let full = influence_gather(&g, &e.state().states, &m);
                assert_eq!(full, e.state().influence);
            }
            (e.state().clone(), modes)
        };
        let (a, modes) = run(false);
        let (b, _) = run(true);
        assert_eq!(a, b);
        assert!(modes[0] > 0 && modes[1] > 0, "{modes:?}");
        let late_i = a.counts[1] as f64 / 1000.0;
        assert!(late_i > 0.2, "endemic fraction {late_i}");
    }
}
