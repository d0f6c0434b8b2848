//! Compartment models: SIS, SIR and SEIR on one shared vocabulary.
//!
//! States are small integer indices into [`ModelSpec::compartments`]. The
//! susceptible compartment is always index 0 and infection moves a node to
//! [`ModelSpec::infected_target`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hazards::{lognormal_from_mean_median, lognormal_hazard, shedding, LogNormalParams, SheddingProfile};

pub type Compartment = u8;

pub const S: Compartment = 0;

/// Holding-time law of a nodal transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HoldingTime {
    Exponential { rate: f64 },
    LogNormal(LogNormalParams),
}

impl HoldingTime {
    #[inline]
    pub fn hazard(&self, age: f64) -> f64 {
        match *self {
            HoldingTime::Exponential { rate } => rate,
            HoldingTime::LogNormal(p) => lognormal_hazard(age, p),
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, HoldingTime::Exponential { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransmissionMode {
    Constant,
    AgeDependent { profile: SheddingProfile },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodalTransition {
    pub from: Compartment,
    pub to: Compartment,
    pub holding: HoldingTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub compartments: Vec<String>,
    pub beta: f64,
    /// Compartment a susceptible enters on infection.
    pub infected_target: Compartment,
    pub infectious_state: Compartment,
    pub nodal: Vec<NodalTransition>,
    pub transmission: TransmissionMode,
}

fn labels(ls: &[&str]) -> Vec<String> {
    ls.iter().map(|s| s.to_string()).collect()
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

fn check_rate(name: &str, r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {r}")));
    }
    Ok(())
}

/// S -> I -> S with exponential recovery.
pub fn sis(beta: f64, recovery: f64) -> Result<ModelSpec> {
    check_beta(beta)?;
    check_rate("recovery rate", recovery)?;
    Ok(ModelSpec {
        name: "sis".into(),
        compartments: labels(&["S", "I"]),
        beta,
        infected_target: 1,
        infectious_state: 1,
        nodal: vec![NodalTransition { from: 1, to: 0, holding: HoldingTime::Exponential { rate: recovery } }],
        transmission: TransmissionMode::Constant,
    })
}

/// S -> I -> R with exponential recovery.
pub fn sir(beta: f64, recovery: f64) -> Result<ModelSpec> {
    check_beta(beta)?;
    check_rate("recovery rate", recovery)?;
    Ok(ModelSpec {
        name: "sir".into(),
        compartments: labels(&["S", "I", "R"]),
        beta,
        infected_target: 1,
        infectious_state: 1,
        nodal: vec![NodalTransition { from: 1, to: 2, holding: HoldingTime::Exponential { rate: recovery } }],
        transmission: TransmissionMode::Constant,
    })
}

/// S -> E -> I -> R with arbitrary holding times.
pub fn seir(beta: f64, ei: HoldingTime, ir: HoldingTime, transmission: TransmissionMode) -> Result<ModelSpec> {
    check_beta(beta)?;
    Ok(ModelSpec {
        name: "seir".into(),
        compartments: labels(&["S", "E", "I", "R"]),
        beta,
        infected_target: 1,
        infectious_state: 2,
        nodal: vec![
            NodalTransition { from: 1, to: 2, holding: ei },
            NodalTransition { from: 2, to: 3, holding: ir },
        ],
        transmission,
    })
}

/// SEIR with log-normal E->I and I->R given by (mean, median) pairs, constant transmission.
pub fn seir_standard(beta: f64, mean_ei: f64, median_ei: f64, mean_ir: f64, median_ir: f64) -> Result<ModelSpec> {
    let ei = lognormal_from_mean_median(mean_ei, median_ei)?;
    let ir = lognormal_from_mean_median(mean_ir, median_ir)?;
    seir(beta, HoldingTime::LogNormal(ei), HoldingTime::LogNormal(ir), TransmissionMode::Constant)
}

/// SEIR with exponential E->I (`sigma`) and I->R (`gamma`) rates.
pub fn seir_exponential(beta: f64, sigma: f64, gamma: f64) -> Result<ModelSpec> {
    check_rate("E->I rate", sigma)?;
    check_rate("I->R rate", gamma)?;
    seir(
        beta,
        HoldingTime::Exponential { rate: sigma },
        HoldingTime::Exponential { rate: gamma },
        TransmissionMode::Constant,
    )
}

impl ModelSpec {
    pub fn num_compartments(&self) -> usize {
        self.compartments.len()
    }

    pub fn transition_from(&self, state: Compartment) -> Option<&NodalTransition> {
        self.nodal.iter().find(|t| t.from == state)
    }

    /// Next compartment when a node in `state` transitions.
    #[inline]
    pub fn next_state(&self, state: Compartment) -> Compartment {
        if state == S {
            self.infected_target
        } else {
            self.transition_from(state).map_or(state, |t| t.to)
        }
    }

    /// Absorbing compartments: not susceptible and no nodal exit.
    #[inline]
    pub fn is_terminal(&self, state: Compartment) -> bool {
        state != S && self.transition_from(state).is_none()
    }

    pub fn terminal_state(&self) -> Option<Compartment> {
        (0..self.num_compartments() as Compartment).find(|&c| self.is_terminal(c))
    }

    /// Whether the nodal hazard of `state` varies with age.
    pub fn is_age_dependent(&self, state: Compartment) -> bool {
        self.transition_from(state).is_some_and(|t| !t.holding.is_exponential())
    }

    pub fn is_markovian(&self) -> bool {
        self.nodal.iter().all(|t| t.holding.is_exponential()) && self.transmission == TransmissionMode::Constant
    }

    /// Switch to age-dependent transmission with the default shedding
    /// profile: the hazard of the infectious compartment's exit law.
    pub fn with_age_dependent_default(mut self) -> Result<Self> {
        let profile = match self.transition_from(self.infectious_state).map(|t| t.holding) {
            Some(HoldingTime::LogNormal(p)) => SheddingProfile::LogNormalHazard(p),
            _ => {
                return Err(Error::InvalidConfig(
                    "age-dependent transmission needs a log-normal infectious period".into(),
                ))
            }
        };
        self.transmission = TransmissionMode::AgeDependent { profile };
        Ok(self)
    }

    /// Check structural invariants of the transition map.
    pub fn validate(&self) -> Result<()> {
        let k = self.num_compartments();
        if !(2..=i8::MAX as usize).contains(&k) {
            return Err(Error::InvalidConfig(format!("model needs 2..127 compartments, got {k}")));
        }
        check_beta(self.beta)?;
        for t in &self.nodal {
            if t.from as usize >= k || t.to as usize >= k || t.from == S {
                return Err(Error::InvalidConfig(format!("bad nodal transition {} -> {}", t.from, t.to)));
            }
        }
        for (i, t) in self.nodal.iter().enumerate() {
            if self.nodal[..i].iter().any(|u| u.from == t.from) {
                return Err(Error::InvalidConfig(format!("compartment {} has two exits", t.from)));
            }
        }
        if self.infected_target == S || self.infected_target as usize >= k || self.infectious_state as usize >= k {
            return Err(Error::InvalidConfig("bad infection target or infectious state".into()));
        }
        Ok(())
    }
}

/// Transition rate of a node: pressure for S, nodal hazard otherwise, zero
/// for absorbing compartments.
#[inline]
pub fn nodal_rate(m: &ModelSpec, state: Compartment, age: f64, pressure: f64) -> f64 {
    if state == S {
        return pressure;
    }
    match m.transition_from(state) {
        Some(t) => t.holding.hazard(age),
        None => 0.0,
    }
}

/// `beta * s(age) * 1{state = infectious}`.
#[inline]
pub fn infectivity_value(m: &ModelSpec, state: Compartment, age: f64) -> f64 {
    if state != m.infectious_state {
        return 0.0;
    }
    match m.transmission {
        TransmissionMode::Constant => m.beta,
        TransmissionMode::AgeDependent { profile } => m.beta * shedding(profile, age),
    }
}

/// Precomputed per-compartment dispatch used inside the engines' hot loops.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub next: Vec<Compartment>,
    pub terminal: Vec<bool>,
    pub holding: Vec<Option<HoldingTime>>,
    pub infectious: Compartment,
    pub beta: f64,
    pub transmission: TransmissionMode,
}

impl CompiledModel {
    pub fn new(m: &ModelSpec) -> Self {
        let k = m.num_compartments() as Compartment;
        CompiledModel {
            next: (0..k).map(|c| m.next_state(c)).collect(),
            terminal: (0..k).map(|c| m.is_terminal(c)).collect(),
            holding: (0..k).map(|c| m.transition_from(c).map(|t| t.holding)).collect(),
            infectious: m.infectious_state,
            beta: m.beta,
            transmission: m.transmission,
        }
    }

    #[inline]
    pub fn rate(&self, state: Compartment, age: f64, pressure: f64) -> f64 {
        if state == S {
            return pressure;
        }
        match self.holding[state as usize] {
            Some(h) => h.hazard(age),
            None => 0.0,
        }
    }

    #[inline]
    pub fn infectivity(&self, state: Compartment, age: f64) -> f64 {
        if state != self.infectious {
            return 0.0;
        }
        match self.transmission {
            TransmissionMode::Constant => self.beta,
            TransmissionMode::AgeDependent { profile } => self.beta * shedding(profile, age),
        }
    }
}

/// Default number of initially infected nodes: `max(10, N / 100)`, capped at N.
pub fn default_seed_count(n: usize) -> usize {
    (n / 100).max(10).min(n)
}

/// `k` distinct node ids drawn deterministically from `seed`, ascending.
pub fn choose_seeds(n: usize, k: usize, seed: u64) -> Result<Vec<u32>> {
    if k > n {
        return Err(Error::InvalidConfig(format!("cannot seed {k} of {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(crate::rng::mix64(seed ^ SEEDING_SALT));
    let mut ids: Vec<u32> = rand::seq::index::sample(&mut rng, n, k).into_iter().map(|i| i as u32).collect();
    ids.sort_unstable();
    Ok(ids)
}

const SEEDING_SALT: u64 = 0x5EED_0F1E_C7ED_0001;

/// Per-compartment counts of a state vector.
pub fn counts(states: impl IntoIterator<Item = Compartment>, k: usize) -> Vec<u64> {
    let mut c = vec![0u64; k];
    for s in states {
        c[s as usize] += 1;
    }
    c
}
