//! Command-line front end: run configuration, subcommands and output files.
//!
//! A [`RunConfig`] is read from an optional TOML file and then overridden by
//! flags. Output files contain no timing data, so identical configs and
//! seeds give byte-identical files; wall-clock figures go to stdout only.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    ensemble_mean, epsilon_sweep, fidelity, parity_check, run_ensemble, slope_regression, EngineSpec, FidelityReport,
    RunSpec, RunSummary, Seeding, SweepRow, TrajectoryRecord, SLOPE_RESAMPLES,
};
use crate::error::{Error, Result};
use crate::graph::{degree_stats, read_graph, select_strategy, CsrGraph, Strategy, Topology};
use crate::hazards::SheddingProfile;
use crate::markov::MarkovConfig;
use crate::models::{seir_exponential, seir_standard, sir, sis, Compartment, HoldingTime, ModelSpec, TransmissionMode};
use crate::renewal::{RenewalConfig, RenewalEngine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Markov,
    #[default]
    Renewal,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Sis,
    Sir,
    #[default]
    Seir,
    SeirExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Transmission {
    #[default]
    Constant,
    AgeDependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ShedKind {
    /// Hazard of the infectious period.
    #[default]
    Hazard,
    /// Peak-normalised density of the infectious period.
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    Er,
    Ba,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub name: ModelName,
    pub beta: f64,
    pub mean_ei: f64,
    pub median_ei: f64,
    pub mean_ir: f64,
    pub median_ir: f64,
    /// SIS recovery rate.
    pub delta_rate: f64,
    /// SIR recovery rate, and I->R rate of exponential SEIR.
    pub gamma_rate: f64,
    /// E->I rate of exponential SEIR.
    pub sigma_rate: f64,
    pub transmission: Transmission,
    pub shedding: ShedKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            name: ModelName::Seir,
            beta: 0.25,
            mean_ei: 5.0,
            median_ei: 4.0,
            mean_ir: 7.5,
            median_ir: 5.0,
            delta_rate: 0.15,
            gamma_rate: 0.15,
            sigma_rate: 0.2,
            transmission: Transmission::Constant,
            shedding: ShedKind::Hazard,
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        let mut m = match self.name {
            ModelName::Sis => sis(self.beta, self.delta_rate)?,
            ModelName::Sir => sir(self.beta, self.gamma_rate)?,
            ModelName::Seir => seir_standard(self.beta, self.mean_ei, self.median_ei, self.mean_ir, self.median_ir)?,
            ModelName::SeirExponential => seir_exponential(self.beta, self.sigma_rate, self.gamma_rate)?,
        };
        if self.transmission == Transmission::AgeDependent {
            m = match self.shedding {
                ShedKind::Hazard => m.with_age_dependent_default()?,
                ShedKind::Density => {
                    let Some(HoldingTime::LogNormal(p)) = m.transition_from(m.infectious_state).map(|t| t.holding)
                    else {
                        return Err(Error::InvalidConfig("density shedding needs a log-normal infectious period".into()));
                    };
                    m.transmission = TransmissionMode::AgeDependent {
                        profile: SheddingProfile::LogNormalDensityPeakNormalized(p),
                    };
                    m
                }
            };
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    /// Binary or edge-list file; overrides the generator when set.
    pub file: Option<PathBuf>,
    pub family: Family,
    pub nodes: usize,
    /// Mean degree (ER) or exact degree (fixed).
    pub degree: f64,
    /// Edges per new node (BA).
    pub m: usize,
    /// Generator seed; the run seed when absent.
    pub seed: Option<u64>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { file: None, family: Family::Er, nodes: 1000, degree: 8.0, m: 4, seed: None }
    }
}

impl GraphConfig {
    pub fn topology(&self) -> Result<Topology> {
        Ok(match self.family {
            Family::Er => Topology::ErdosRenyi { d_avg: self.degree },
            Family::Ba => Topology::BarabasiAlbert { m: self.m },
            Family::Fixed => {
                if self.degree.fract() != 0.0 || self.degree < 0.0 {
                    return Err(Error::InvalidConfig(format!("fixed degree must be a whole number, got {}", self.degree)));
                }
                Topology::FixedDegree { d: self.degree as usize }
            }
        })
    }

    pub fn load(&self, run_seed: u64) -> Result<CsrGraph> {
        match &self.file {
            Some(p) => read_graph(p),
            None => self.topology()?.generate(self.nodes, self.seed.unwrap_or(run_seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SeedingConfig {
    pub count: Option<usize>,
    /// Compartment label (`E`, `I`, ...) or index.
    pub state: Option<String>,
}

impl SeedingConfig {
    pub fn resolve(&self, m: &ModelSpec) -> Result<Seeding> {
        let state = match &self.state {
            None => None,
            Some(s) => Some(compartment_index(m, s)?),
        };
        Ok(Seeding { count: self.count, state })
    }
}

fn compartment_index(m: &ModelSpec, s: &str) -> Result<Compartment> {
    if let Some(i) = m.compartments.iter().position(|c| c.eq_ignore_ascii_case(s)) {
        return Ok(i as Compartment);
    }
    match s.parse::<Compartment>() {
        Ok(i) if (i as usize) < m.num_compartments() => Ok(i),
        _ => Err(Error::InvalidConfig(format!("unknown compartment {s:?} for model {}", m.name))),
    }
}

/// Full description of a run; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub engine: EngineKind,
    pub t_final: f64,
    pub trials: usize,
    pub seed: u64,
    pub grid: usize,
    /// Output path prefix; files get `.csv` and `.json` appended.
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub model: ModelConfig,
    pub graph: GraphConfig,
    pub seeding: SeedingConfig,
    pub renewal: RenewalConfig,
    pub markov: MarkovConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            engine: EngineKind::Renewal,
            t_final: 50.0,
            trials: 1,
            seed: 12345,
            grid: 501,
            out: None,
            workers: None,
            model: ModelConfig::default(),
            graph: GraphConfig::default(),
            seeding: SeedingConfig::default(),
            renewal: RenewalConfig::default(),
            markov: MarkovConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(format!("t_final must be positive, got {}", self.t_final)));
        }
        if self.grid < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 points".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        self.renewal.validate()?;
        self.markov.validate()
    }

    pub fn engine_spec(&self) -> EngineSpec {
        match self.engine {
            EngineKind::Renewal => EngineSpec::Renewal(self.renewal),
            EngineKind::Markov => EngineSpec::Markov(self.markov),
            EngineKind::Exact => EngineSpec::Exact,
        }
    }

    pub fn run_spec(&self) -> Result<RunSpec> {
        self.validate()?;
        let model = self.model.build()?;
        let seeding = self.seeding.resolve(&model)?;
        Ok(RunSpec { model, engine: self.engine_spec(), t_final: self.t_final, grid_points: self.grid, seeding })
    }
}

/// Flags shared by every run-like subcommand; each one overrides the config file.
#[derive(Debug, Clone, Args, Default)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineKind>,
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Graph file (binary or edge list).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long = "gen", value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub degree: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub graph_seed: Option<u64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub mean_ei: Option<f64>,
    #[arg(long)]
    pub median_ei: Option<f64>,
    #[arg(long)]
    pub mean_ir: Option<f64>,
    #[arg(long)]
    pub median_ir: Option<f64>,
    #[arg(long)]
    pub delta_rate: Option<f64>,
    #[arg(long)]
    pub gamma_rate: Option<f64>,
    #[arg(long)]
    pub sigma_rate: Option<f64>,
    #[arg(long, value_enum)]
    pub transmission: Option<Transmission>,
    #[arg(long, value_enum)]
    pub shedding: Option<ShedKind>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    /// auto, per-node, lane or merge.
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Steps per batch.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub compaction: bool,
    #[arg(long)]
    pub mixed_precision: bool,
    #[arg(long)]
    pub carry_tau: bool,
    /// Final time in days.
    #[arg(long)]
    pub tf: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub seed_infected: Option<usize>,
    #[arg(long)]
    pub seed_state: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v;
        }
    };
}

impl RunArgs {
    /// The config file (or defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        set!(c.engine, self.engine);
        set!(c.model.name, self.model);
        if self.graph.is_some() {
            c.graph.file = self.graph.clone();
        }
        if self.family.is_some() {
            c.graph.file = None;
        }
        set!(c.graph.family, self.family);
        set!(c.graph.nodes, self.nodes);
        set!(c.graph.degree, self.degree);
        set!(c.graph.m, self.m);
        if self.graph_seed.is_some() {
            c.graph.seed = self.graph_seed;
        }
        set!(c.model.beta, self.beta);
        set!(c.model.mean_ei, self.mean_ei);
        set!(c.model.median_ei, self.median_ei);
        set!(c.model.mean_ir, self.mean_ir);
        set!(c.model.median_ir, self.median_ir);
        set!(c.model.delta_rate, self.delta_rate);
        set!(c.model.gamma_rate, self.gamma_rate);
        set!(c.model.sigma_rate, self.sigma_rate);
        set!(c.model.transmission, self.transmission);
        set!(c.model.shedding, self.shedding);
        set!(c.renewal.epsilon, self.epsilon);
        if let Some(t) = self.tau_max {
            c.renewal.tau_max = t;
            c.markov.tau_max = t;
        }
        set!(c.renewal.strategy, self.strategy);
        set!(c.renewal.steps_per_batch, self.batch);
        c.renewal.compaction |= self.compaction;
        c.renewal.mixed_precision |= self.mixed_precision;
        c.renewal.carry_tau |= self.carry_tau;
        set!(c.t_final, self.tf);
        set!(c.trials, self.trials);
        set!(c.seed, self.seed);
        if self.seed_infected.is_some() {
            c.seeding.count = self.seed_infected;
        }
        if self.seed_state.is_some() {
            c.seeding.state = self.seed_state.clone();
        }
        set!(c.grid, self.grid);
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Parser)]
#[command(name = "spreadsim", version, about = "Stochastic spreading on contact networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random graph and write it in the binary format.
    Generate {
        #[arg(long = "gen", value_enum, default_value = "er")]
        family: Family,
        #[arg(long, default_value_t = 1000)]
        nodes: usize,
        #[arg(long, default_value_t = 8.0)]
        degree: f64,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 12345)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an ensemble; writes the mean trajectory CSV and a summary JSON.
    Run(RunArgs),
    /// Renewal tolerance sweep.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated tolerances.
        #[arg(long, value_delimiter = ',', default_value = "0.005,0.01,0.03,0.05,0.1")]
        eps: Vec<f64>,
        /// Also run the exact oracle and report errors against it.
        #[arg(long)]
        exact: bool,
    },
    /// Fidelity of one configuration against a reference configuration.
    Validate {
        #[command(flatten)]
        run: RunArgs,
        /// Reference config file; the same config with this engine when absent.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "exact")]
        reference_engine: EngineKind,
    },
    /// Step-by-step bit comparison of renewal variants.
    Parity {
        #[command(flatten)]
        run: RunArgs,
        /// Strategies to compare against the first one.
        #[arg(long, value_delimiter = ',', default_value = "per-node,lane,merge")]
        strategies: Vec<Strategy>,
        /// Also compare compaction and chunk-skip toggles.
        #[arg(long)]
        flags: bool,
        #[arg(long, default_value_t = 50)]
        steps: u64,
    },
    /// Informational CPU throughput of the renewal engine.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 500)]
        steps: u64,
    },
}

/// Process exit code for an error category.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidParameter(_)
        | Error::InvalidMoments { .. }
        | Error::ReconfigureAfterStart => 2,
        Error::Io(_) | Error::Format(_) => 3,
        Error::InfeasibleDegreeSequence(_)
        | Error::TooManyNodes(_)
        | Error::EmptyGraph
        | Error::IndexOutOfRange { .. }
        | Error::DuplicateEdge { .. }
        | Error::NegativeWeight { .. }
        | Error::SelfLoop(_) => 4,
        Error::GridMismatch | Error::DegenerateFit(_) => 1,
    }
}

/// Machine-readable error record.
pub fn error_json(e: &Error) -> String {
    let kind = match e {
        Error::IndexOutOfRange { .. } => "IndexOutOfRange",
        Error::DuplicateEdge { .. } => "DuplicateEdge",
        Error::NegativeWeight { .. } => "NegativeWeight",
        Error::SelfLoop(_) => "SelfLoop",
        Error::EmptyGraph => "EmptyGraph",
        Error::TooManyNodes(_) => "TooManyNodes",
        Error::InfeasibleDegreeSequence(_) => "InfeasibleDegreeSequence",
        Error::InvalidMoments { .. } => "InvalidMoments",
        Error::InvalidParameter(_) => "InvalidParameter",
        Error::ReconfigureAfterStart => "ReconfigureAfterStart",
        Error::GridMismatch => "GridMismatch",
        Error::DegenerateFit(_) => "DegenerateFit",
        Error::InvalidConfig(_) => "InvalidConfig",
        Error::Format(_) => "Format",
        Error::Io(_) => "Io",
    };
    serde_json::json!({ "error": kind, "message": e.to_string(), "exit_code": exit_code(e) }).to_string()
}

/// Wide CSV: `t` then one column per compartment.
pub fn trajectory_csv(compartments: &[String], grid: &[f64], fractions: &[Vec<f64>]) -> String {
    let mut s = String::from("t");
    for c in compartments {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for (k, t) in grid.iter().enumerate() {
        let _ = write!(s, "{t}");
        for f in fractions {
            let _ = write!(s, ",{}", f[k]);
        }
        s.push('\n');
    }
    s
}

fn timeless(s: &RunSummary) -> RunSummary {
    RunSummary { wall_clock: 0.0, ..*s }
}

#[derive(Debug, Serialize)]
struct RunOutput<'a> {
    config: &'a RunConfig,
    strategy: Option<&'static str>,
    num_nodes: usize,
    num_edges: usize,
    mean_final: Vec<f64>,
    mean_peak_infected: f64,
    mean_final_terminal: Option<f64>,
    mean_steps: f64,
    runs: Vec<RunSummary>,
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn emit(out: Option<&Path>, ext: &str, contents: &str) -> Result<()> {
    match out {
        Some(p) => write_file(&with_ext(p, ext), contents),
        None => {
            std::io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}

fn resolved_strategy(g: &CsrGraph, cfg: &RunConfig) -> Option<&'static str> {
    (cfg.engine == EngineKind::Renewal).then(|| match degree_stats(g) {
        Ok(st) => select_strategy(&st, cfg.renewal.strategy).name(),
        Err(_) => Strategy::PerNode.name(),
    })
}

/// Result of `run` kept in memory; also what the files are made of.
pub struct RunResult {
    pub config: RunConfig,
    pub records: Vec<TrajectoryRecord>,
    pub csv: String,
    pub json: String,
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunResult> {
    let spec = cfg.run_spec()?;
    let g = cfg.graph.load(cfg.seed)?;
    let records = run_ensemble(&g, &spec, cfg.seed, cfg.trials)?;
    let mean = ensemble_mean(&records)?;
    let n = records.len() as f64;
    let out = RunOutput {
        config: cfg,
        strategy: resolved_strategy(&g, cfg),
        num_nodes: g.num_nodes(),
        num_edges: g.num_edges(),
        mean_final: mean.iter().map(|c| *c.last().unwrap()).collect(),
        mean_peak_infected: records.iter().map(|r| r.summary.peak_infected).sum::<f64>() / n,
        mean_final_terminal: spec
            .model
            .terminal_state()
            .map(|_| records.iter().filter_map(|r| r.summary.final_terminal).sum::<f64>() / n),
        mean_steps: records.iter().map(|r| r.summary.step_count as f64).sum::<f64>() / n,
        runs: records.iter().map(|r| timeless(&r.summary)).collect(),
    };
    let csv = trajectory_csv(&records[0].compartments, &records[0].grid, &mean);
    let json = serde_json::to_string_pretty(&out).expect("serializable") + "\n";
    Ok(RunResult { config: cfg.clone(), records, csv, json })
}

/// One CSV row per tolerance of a sweep.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(
        "epsilon,runs,peak_infected,peak_lo,peak_hi,final_terminal,final_lo,final_hi,mean_steps,\
         err_peak_exact,err_peak_exact_lo,err_peak_exact_hi,err_final_exact,linf_finest,l2_finest\n",
    );
    let na = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for r in rows {
        let f = r.final_terminal;
        let ex = r.vs_exact.as_ref();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.epsilon,
            r.runs,
            r.peak_infected.value,
            r.peak_infected.lo,
            r.peak_infected.hi,
            na(f.map(|e| e.value)),
            na(f.map(|e| e.lo)),
            na(f.map(|e| e.hi)),
            r.mean_steps,
            na(ex.map(|e| e.per_run_peak_error.value)),
            na(ex.map(|e| e.per_run_peak_error.lo)),
            na(ex.map(|e| e.per_run_peak_error.hi)),
            na(ex.and_then(|e| e.per_run_final_error.map(|x| x.value))),
            r.vs_finest.l_inf.value,
            r.vs_finest.l_2.value,
        );
    }
    s
}

pub fn cmd_sweep(cfg: &RunConfig, eps: &[f64], with_exact: bool) -> Result<(Vec<SweepRow>, String, String)> {
    if cfg.engine != EngineKind::Renewal {
        return Err(Error::InvalidConfig("sweep runs the renewal engine".into()));
    }
    let spec = cfg.run_spec()?;
    let g = cfg.graph.load(cfg.seed)?;
    let exact = if with_exact {
        let s = RunSpec { engine: EngineSpec::Exact, ..spec.clone() };
        Some(run_ensemble(&g, &s, cfg.seed, cfg.trials)?)
    } else {
        None
    };
    let mut rows = epsilon_sweep(&g, &spec, eps, cfg.trials, cfg.seed, exact.as_deref())?;
    let slope = match rows.iter().map(|r| r.peak_errors.clone()).collect::<Option<Vec<_>>>() {
        Some(errs) if eps.len() >= 3 => slope_regression(eps, &errs, SLOPE_RESAMPLES, cfg.seed).ok(),
        _ => None,
    };
    let csv = sweep_csv(&rows);
    for r in &mut rows {
        r.wall_clock = crate::analysis::Estimate { value: 0.0, lo: 0.0, hi: 0.0 };
    }
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "config": cfg,
        "rows": rows,
        "peak_error_slope": slope,
    }))
    .expect("serializable")
        + "\n";
    Ok((rows, csv, json))
}

pub fn cmd_validate(cfg: &RunConfig, reference: &RunConfig) -> Result<(FidelityReport, String)> {
    let spec = cfg.run_spec()?;
    let ref_spec = reference.run_spec()?;
    let g = cfg.graph.load(cfg.seed)?;
    let rg = if reference.graph == cfg.graph && reference.seed == cfg.seed { None } else { Some(reference.graph.load(reference.seed)?) };
    let a = run_ensemble(&g, &spec, cfg.seed, cfg.trials)?;
    let b = run_ensemble(rg.as_ref().unwrap_or(&g), &ref_spec, reference.seed, reference.trials)?;
    let rep = fidelity(&a, &b)?;
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "config": cfg,
        "reference": reference,
        "fidelity": rep,
    }))
    .expect("serializable")
        + "\n";
    Ok((rep, json))
}

pub fn cmd_parity(cfg: &RunConfig, strategies: &[Strategy], flags: bool, steps: u64) -> Result<String> {
    let spec = cfg.run_spec()?;
    let g = cfg.graph.load(cfg.seed)?;
    let base = RenewalConfig { strategy: *strategies.first().unwrap_or(&Strategy::PerNode), ..cfg.renewal };
    let mut variants: Vec<(String, RenewalConfig)> = strategies
        .iter()
        .skip(1)
        .map(|&s| (format!("strategy={}", s.name()), RenewalConfig { strategy: s, ..base }))
        .collect();
    if flags {
        variants.push((format!("compaction={}", !base.compaction), RenewalConfig { compaction: !base.compaction, ..base }));
        variants.push((format!("chunk_skip={}", !base.chunk_skip), RenewalConfig { chunk_skip: !base.chunk_skip, ..base }));
    }
    let mut reports = Vec::new();
    for (label, v) in variants {
        let r = parity_check(&g, &spec.model, (base, cfg.seed), (v, cfg.seed), steps, spec.seeding, cfg.seed)?;
        reports.push(serde_json::json!({ "variant": label, "report": r }));
    }
    Ok(serde_json::to_string_pretty(&serde_json::json!({
        "baseline": base.strategy.name(),
        "steps": steps,
        "comparisons": reports,
    }))
    .expect("serializable")
        + "\n")
}

pub fn cmd_bench(cfg: &RunConfig, steps: u64) -> Result<String> {
    let spec = cfg.run_spec()?;
    let g = cfg.graph.load(cfg.seed)?;
    let mut e = RenewalEngine::new(&g, &spec.model, cfg.renewal, cfg.seed)?;
    let (ids, st) = spec.seeding.resolve(&spec.model, g.num_nodes(), cfg.seed)?;
    e.seed_nodes(&ids, st)?;
    let start = Instant::now();
    for _ in 0..steps {
        e.advance();
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(serde_json::to_string_pretty(&serde_json::json!({
        "strategy": e.strategy().name(),
        "num_nodes": g.num_nodes(),
        "num_edges": g.num_edges(),
        "steps": steps,
        "seconds": secs,
        "steps_per_sec": steps as f64 / secs,
        "node_updates_per_sec": steps as f64 * g.num_nodes() as f64 / secs,
        "simulated_days": e.clock(),
    }))
    .expect("serializable")
        + "\n")
}

fn install_workers(workers: Option<usize>) {
    if let Some(w) = workers {
        // Fails only if a pool already exists, which keeps the earlier one.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
}

/// Execute a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { family, nodes, degree, m, seed, out } => {
            let gc = GraphConfig { file: None, family, nodes, degree, m, seed: Some(seed) };
            let g = gc.load(seed)?;
            g.save(&out)?;
            println!("{}", serde_json::json!({ "nodes": g.num_nodes(), "edges": g.num_edges(), "out": out }));
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            install_workers(cfg.workers);
            let start = Instant::now();
            let r = cmd_run(&cfg)?;
            match &cfg.out {
                Some(p) => {
                    write_file(&with_ext(p, "csv"), &r.csv)?;
                    write_file(&with_ext(p, "json"), &r.json)?;
                    eprintln!("{} trials in {:.3} s", cfg.trials, start.elapsed().as_secs_f64());
                }
                None => print!("{}", r.json),
            }
        }
        Command::Sweep { run, eps, exact } => {
            let cfg = run.resolve()?;
            install_workers(cfg.workers);
            let (rows, csv, json) = cmd_sweep(&cfg, &eps, exact)?;
            match &cfg.out {
                Some(p) => {
                    write_file(&with_ext(p, "csv"), &csv)?;
                    write_file(&with_ext(p, "json"), &json)?;
                }
                None => print!("{csv}"),
            }
            for r in rows {
                eprintln!("eps {}: {:.0} steps", r.epsilon, r.mean_steps);
            }
        }
        Command::Validate { run, reference, reference_engine } => {
            let cfg = run.resolve()?;
            install_workers(cfg.workers);
            let rc = match reference {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig { engine: reference_engine, ..cfg.clone() },
            };
            let (_, json) = cmd_validate(&cfg, &rc)?;
            emit(cfg.out.as_deref(), "json", &json)?;
        }
        Command::Parity { run, strategies, flags, steps } => {
            let cfg = run.resolve()?;
            install_workers(cfg.workers);
            emit(cfg.out.as_deref(), "json", &cmd_parity(&cfg, &strategies, flags, steps)?)?;
        }
        Command::Bench { run, steps } => {
            let cfg = run.resolve()?;
            install_workers(cfg.workers);
            print!("{}", cmd_bench(&cfg, steps)?);
        }
    }
    Ok(())
}
