//! Acceptance criteria. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILING` are reported but do not fail the run;
//! any other FAIL exits non-zero. `cargo test --test acceptance -- ac04`
//! runs only the criteria whose names contain the filter.

use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use spreadsim::analysis::{
    checkpoint_counts, count_outside, ensemble_mean, epsilon_sweep, multi_topology_sweep, parity_check,
    quantile_band, run_ensemble, slope_regression, EngineSpec, RunSpec, Seeding, SweepRow, TopologyCurve,
    TrajectoryRecord, SLOPE_RESAMPLES,
};
use spreadsim::cli::{cmd_run, GraphConfig, ModelConfig, RunConfig, Transmission};
use spreadsim::graph::{
    degree_stats, gen_barabasi_albert, gen_erdos_renyi, gen_fixed_degree, select_strategy, DegreeStats, Strategy,
    Topology,
};
use spreadsim::hazards::{erfcx_stable, lognormal_from_mean_median, lognormal_hazard, LogNormalParams, ERFCX_BRANCH};
use spreadsim::markov::MarkovConfig;
use spreadsim::models::{seir_standard, sir, sis, ModelSpec};
use spreadsim::renewal::{Cell, MixedPrecision, Precision, RenewalConfig};

const KNOWN_FAILING: &[u32] = &[1, 2, 3, 4, 11, 12];

const BENCH_GRAPH_SEED: u64 = 2024;
const BENCH_EPS: [f64; 5] = [0.005, 0.01, 0.03, 0.05, 0.1];
// (peak I, final R, steps)
const BENCH_TARGETS: [(f64, f64, f64); 5] =
    [(0.379, 0.935, 5912.0), (0.383, 0.934, 2912.0), (0.378, 0.925, 995.0), (0.380, 0.925, 696.0), (0.379, 0.923, 523.0)];
const EXACT_PEAK: f64 = 0.314;
const EXACT_FINAL: f64 = 0.863;

fn record(id: u32, pass: bool, detail: String) {
    let known = KNOWN_FAILING.contains(&id);
    let note = match (pass, known) {
        (false, true) => " [known deviation]",
        (true, true) => " [listed as known deviation]",
        _ => "",
    };
    println!("AC{id:<2} {}{note}  {detail}", if pass { "PASS" } else { "FAIL" });
    if !pass && !known {
        UNEXPECTED.lock().unwrap().push(id);
    }
}

static UNEXPECTED: Mutex<Vec<u32>> = Mutex::new(Vec::new());

fn benchmark_model() -> ModelSpec {
    seir_standard(0.25, 5.0, 4.0, 7.5, 5.0).unwrap()
}

fn benchmark_spec(engine: EngineSpec) -> RunSpec {
    RunSpec { model: benchmark_model(), engine, t_final: 50.0, grid_points: 501, seeding: Seeding::default() }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_peak(runs: &[TrajectoryRecord]) -> f64 {
    mean(runs.iter().map(|r| r.summary.peak_infected))
}

fn mean_final(runs: &[TrajectoryRecord]) -> f64 {
    mean(runs.iter().filter_map(|r| r.summary.final_terminal))
}

struct Benchmark {
    exact_peak: f64,
    exact_final: f64,
    eps: Vec<f64>,
    rows: Vec<SweepRow>,
}

fn benchmark() -> &'static Benchmark {
    static CELL: OnceLock<Benchmark> = OnceLock::new();
    CELL.get_or_init(|| {
        let g = gen_erdos_renyi(1000, 8.0, BENCH_GRAPH_SEED).unwrap();
        let exact = run_ensemble(&g, &benchmark_spec(EngineSpec::Exact), 7, 100).unwrap();
        let eps = vec![0.005, 0.01, 0.03, 0.05, 0.1, 0.2];
        let spec = benchmark_spec(EngineSpec::Renewal(RenewalConfig::default()));
        let rows = epsilon_sweep(&g, &spec, &eps, 100, 11, Some(&exact)).unwrap();
        Benchmark { exact_peak: mean_peak(&exact), exact_final: mean_final(&exact), eps, rows }
    })
}

fn ac01_benchmark_sweep() {
    let b = benchmark();
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, &e) in BENCH_EPS.iter().enumerate() {
        let r = b.rows.iter().find(|r| r.epsilon == e).unwrap();
        let (tp, tf, ts) = BENCH_TARGETS[k];
        let p = r.peak_infected.value;
        let f = r.final_terminal.unwrap().value;
        let s = r.mean_steps;
        let cell_ok = (p - tp).abs() <= 0.02 && (f - tf).abs() <= 0.03 && ((s - ts) / ts).abs() <= 0.15;
        ok &= cell_ok;
        detail.push(format!(
            "eps {e}: peak {p:.3}/{tp} final {f:.3}/{tf} steps {s:.0}/{ts:.0}{}",
            if cell_ok { "" } else { " x" }
        ));
    }
    record(1, ok, detail.join("; "));
}

fn ac02_exact_oracle_anchor() {
    let (ep, ef) = (benchmark().exact_peak, benchmark().exact_final);
    record(
        2,
        (ep - EXACT_PEAK).abs() <= 0.02 && (ef - EXACT_FINAL).abs() <= 0.02,
        format!("exact oracle peak I {ep:.4} (target {EXACT_PEAK} +/- 0.02), final R {ef:.4} (target {EXACT_FINAL} +/- 0.02)"),
    );
}

fn ac03_structural_bias_floor() {
    let b = benchmark();
    let errs: Vec<Vec<f64>> = b.rows.iter().map(|r| r.peak_errors.clone().unwrap()).collect();
    let per_eps: Vec<f64> = errs.iter().map(|e| mean(e.iter().copied())).collect();
    let in_band = per_eps.iter().all(|&x| (0.055..=0.075).contains(&x));
    let (slope_ok, slope_txt) = match slope_regression(&b.eps, &errs, SLOPE_RESAMPLES, 5) {
        Ok(f) => (f.alpha.contains(0.0), format!("alpha {:+.3} [{:+.3}, {:+.3}]", f.alpha.value, f.alpha.lo, f.alpha.hi)),
        Err(e) => (false, format!("fit failed: {e}")),
    };
    let errs_txt: Vec<String> = b.eps.iter().zip(&per_eps).map(|(e, x)| format!("{e}:{x:.4}")).collect();
    record(
        3,
        in_band && slope_ok,
        format!("per-run peak error vs exact [{}] (band 0.055-0.075); {slope_txt}", errs_txt.join(" ")),
    );
}

fn ac04_markov_validation() {
    let g = gen_erdos_renyi(1000, 8.0, BENCH_GRAPH_SEED).unwrap();
    let seeding = Seeding { count: Some(10), state: None };
    let mut parts = Vec::new();
    let mut ok = true;
    for m in [sis(0.25, 0.15).unwrap(), sir(0.25, 0.15).unwrap()] {
        let mk = |engine| RunSpec { model: m.clone(), engine, t_final: 50.0, grid_points: 100, seeding };
        let exact = run_ensemble(&g, &mk(EngineSpec::Exact), 3, 100).unwrap();
        let tau = run_ensemble(&g, &mk(EngineSpec::Markov(MarkovConfig::default())), 4, 100).unwrap();
        let band = quantile_band(&exact, 1, 0.25, 0.75).unwrap();
        let mean = ensemble_mean(&tau).unwrap();
        let outside = count_outside(&mean[1], &band);
        ok &= outside == 0;
        parts.push(format!("{}: {outside}/100 grid points outside exact IQR", m.name));
    }
    record(4, ok, parts.join("; "));
}

fn ac05_strategy_parity() {
    let m = benchmark_model();
    let graphs = [("regular", gen_fixed_degree(10_000, 8, 1).unwrap()), ("ba", gen_barabasi_albert(10_000, 4, 1).unwrap())];
    let seeding = Seeding { count: Some(100), state: Some(2) };
    let mut mismatches = 0;
    let mut compared = 0;
    for (_, g) in &graphs {
        for seed in [1u64, 2, 3] {
            let base = RenewalConfig { strategy: Strategy::PerNode, ..Default::default() };
            for s in [Strategy::LaneChunked, Strategy::EdgeMerge] {
                let other = RenewalConfig { strategy: s, ..base };
                let r = parity_check(g, &m, (base, seed), (other, seed), 50, seeding, seed).unwrap();
                mismatches += r.state_mismatches + r.count_mismatches;
                compared += 1;
            }
        }
    }
    record(
        5,
        mismatches == 0,
        format!("{compared} comparisons (regular + BA, N=1e4, 50 steps, 3 seeds): {mismatches} mismatches"),
    );
}

fn ac06_compaction_neutrality() {
    let m = benchmark_model();
    let checkpoints = [1.0, 5.0, 15.0, 30.0, 50.0];
    let mut diffs = 0;
    let mut cells = 0;
    for g in [gen_barabasi_albert(10_000, 4, 5).unwrap(), gen_erdos_renyi(10_000, 8.0, 5).unwrap()] {
        for seed in [1u64, 2, 3] {
            let off = RenewalConfig::default();
            let on = RenewalConfig { compaction: true, ..off };
            let a = checkpoint_counts(&g, &m, off, seed, Seeding::default(), &checkpoints).unwrap();
            let b = checkpoint_counts(&g, &m, on, seed, Seeding::default(), &checkpoints).unwrap();
            cells += a.len();
            diffs += a.iter().zip(&b).filter(|(x, y)| x != y).count();
        }
    }
    record(6, diffs == 0, format!("{cells} checkpoint counts compared (BA + ER, N=1e4, 3 seeds): {diffs} differ"));
}

fn ac07_mixed_precision() {
    let g = gen_erdos_renyi(10_000, 8.0, 9).unwrap();
    let full = benchmark_spec(EngineSpec::Renewal(RenewalConfig::default()));
    let mixed = benchmark_spec(EngineSpec::Renewal(RenewalConfig { mixed_precision: true, ..Default::default() }));
    let a = run_ensemble(&g, &full, 21, 10).unwrap();
    let b = run_ensemble(&g, &mixed, 21, 10).unwrap();
    let (fa, fb) = (mean_final(&a), mean_final(&b));
    let rel = (fb - fa).abs() / fa;
    let worst_pair = a
        .iter()
        .zip(&b)
        .map(|(x, y)| {
            let (x, y) = (x.summary.final_terminal.unwrap(), y.summary.final_terminal.unwrap());
            (x - y).abs() / x
        })
        .fold(0.0, f64::max);
    let mut worst_age = 0.0f64;
    for k in 1..=50_000 {
        let age = k as f32 * 1e-3;
        let back = <<MixedPrecision as Precision>::Age as Cell>::store(age).load();
        worst_age = worst_age.max(((back - age) / age).abs() as f64);
    }
    let age_ok = worst_age <= 2f64.powi(-10);
    record(
        7,
        rel <= 0.005 && age_ok,
        format!(
            "final R fp32 {fa:.4} mixed {fb:.4}: rel dev {:.3}% (worst pair {:.3}%); age round-trip max rel {worst_age:.2e}",
            rel * 100.0,
            worst_pair * 100.0
        ),
    );
}

/// erfcx(z) = 2/sqrt(pi) * integral_0^inf exp(-t^2 - 2 z t) dt by composite Simpson.
fn erfcx_quadrature(z: f64) -> f64 {
    let (lo, hi, h) = if z >= 0.0 {
        let scale = 1.0 / (1.0 + z);
        (0.0, 40.0 * scale, scale / 400.0)
    } else {
        (0.0, -z + 10.0, 2.5e-3)
    };
    let n = (((hi - lo) / h).ceil() as usize).max(2) & !1;
    let h = (hi - lo) / n as f64;
    // Factor out the peak for negative z so the sum stays in range.
    let shift = if z < 0.0 { z * z } else { 0.0 };
    let f = |t: f64| (-t * t - 2.0 * z * t - shift).exp();
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        s += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 / PI.sqrt() * s * h / 3.0 * shift.exp()
}

fn ac08_erfcx_accuracy() {
    let (mut near, mut away) = (0.0f64, 0.0f64);
    for k in 0..10_001 {
        let z = -9.0 + 39.0 * k as f64 / 10_000.0;
        let reference = erfcx_quadrature(z);
        let err = ((erfcx_stable(z) - reference) / reference).abs();
        if (z.abs() - ERFCX_BRANCH).abs() <= 0.25 {
            near = near.max(err);
        } else {
            away = away.max(err);
        }
    }
    let zero = erfcx_stable(0.0) == 1.0;
    record(
        8,
        near <= 5e-2 && away <= 1e-2 && zero,
        format!("max rel error near branch {near:.2e} (<= 5e-2), elsewhere {away:.2e} (<= 1e-2), erfcx(0)==1: {zero}"),
    );
}

/// S(tau) = integral over x > ln tau of the normal density, by Simpson in log space.
fn survival_quadrature(tau: f64, p: LogNormalParams) -> f64 {
    let lo = tau.ln();
    let hi = p.mu + 40.0 * p.sigma;
    if lo >= hi {
        return 0.0;
    }
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let phi = |x: f64| {
        let u = (x - p.mu) / p.sigma;
        (-0.5 * u * u).exp() / (p.sigma * (2.0 * PI).sqrt())
    };
    let mut s = phi(lo) + phi(hi);
    for k in 1..n {
        s += phi(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn ac09_hazard_consistency() {
    let params = [lognormal_from_mean_median(5.0, 4.0).unwrap(), lognormal_from_mean_median(7.5, 5.0).unwrap()];
    let (mut near, mut away) = (0.0f64, 0.0f64);
    for p in params {
        for k in 1..=2000 {
            let tau = 50.0 * k as f64 / 2000.0;
            let reference = p.density(tau) / survival_quadrature(tau, p);
            let err = ((lognormal_hazard(tau, p) - reference) / reference).abs();
            let z = (tau.ln() - p.mu) / (p.sigma * 2f64.sqrt());
            if (z.abs() - ERFCX_BRANCH).abs() <= 0.25 {
                near = near.max(err);
            } else {
                away = away.max(err);
            }
        }
    }
    let zero = params.iter().all(|&p| lognormal_hazard(0.0, p) == 0.0);
    record(
        9,
        away <= 1e-2 && near <= 1e-1 && zero,
        format!("max rel error vs f/S quadrature {away:.2e} (<= 1e-2), near branch {near:.2e} (<= 1e-1), h(0)==0: {zero}"),
    );
}

fn ac10_dispatch_rule() {
    let st = |rho: f64| DegreeStats { d_avg: 8.0, d_max: (8.0 * rho) as u64, rho };
    let thresholds = select_strategy(&st(3.99), Strategy::Auto) == Strategy::PerNode
        && select_strategy(&st(4.0), Strategy::Auto) == Strategy::LaneChunked
        && select_strategy(&st(49.9), Strategy::Auto) == Strategy::LaneChunked
        && select_strategy(&st(50.0), Strategy::Auto) == Strategy::EdgeMerge
        && select_strategy(&st(1.0), Strategy::EdgeMerge) == Strategy::EdgeMerge;
    let ba = degree_stats(&gen_barabasi_albert(100_000, 4, 1).unwrap()).unwrap();
    let fixed = degree_stats(&gen_fixed_degree(100_000, 8, 1).unwrap()).unwrap();
    let ba_s = select_strategy(&ba, Strategy::Auto);
    let fx_s = select_strategy(&fixed, Strategy::Auto);
    record(
        10,
        thresholds && ba_s == Strategy::EdgeMerge && fx_s == Strategy::PerNode,
        format!(
            "thresholds {thresholds}; BA N=1e5 rho {:.1} -> {}; fixed-degree rho {:.1} -> {}",
            ba.rho,
            ba_s.name(),
            fixed.rho,
            fx_s.name()
        ),
    );
}

fn ac11_fixed_degree_sanity() {
    let target = [0.04, 0.02, 0.05, 0.89];
    let cfg = RunConfig {
        trials: 10,
        seed: 12345,
        t_final: 50.0,
        graph: GraphConfig {
            family: spreadsim::cli::Family::Fixed,
            nodes: 10_000,
            degree: 8.0,
            ..Default::default()
        },
        model: ModelConfig { transmission: Transmission::AgeDependent, ..Default::default() },
        ..Default::default()
    };
    let r = cmd_run(&cfg).unwrap();
    let mean = ensemble_mean(&r.records).unwrap();
    let fin: Vec<f64> = mean.iter().map(|c| *c.last().unwrap()).collect();
    let ok = fin.iter().zip(&target).all(|(a, b)| (a - b).abs() <= 0.05);
    let txt: Vec<String> = fin.iter().map(|x| format!("{x:.3}")).collect();
    record(11, ok, format!("final [S, E, I, R] = [{}] vs [0.04, 0.02, 0.05, 0.89] +/- 0.05", txt.join(", ")));
}

fn ac12_multi_topology() {
    let topologies =
        [Topology::ErdosRenyi { d_avg: 8.0 }, Topology::BarabasiAlbert { m: 4 }, Topology::FixedDegree { d: 8 }];
    let spec = benchmark_spec(EngineSpec::Renewal(RenewalConfig::default()));
    let curves = multi_topology_sweep(&topologies, &[1000, 10_000], &[0.005, 0.1], 20, 31, &spec, 10_000).unwrap();
    let find = |t: &str, n: usize, e: Option<f64>| -> &TopologyCurve {
        curves.iter().find(|c| c.topology == t && c.num_nodes == n && c.epsilon == e).unwrap()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for t in &topologies {
        for n in [1000, 10_000] {
            let fine = find(&t.label(), n, Some(0.005));
            let coarse = find(&t.label(), n, Some(0.1));
            let gap = coarse.max_gap(fine);
            let exact = find(&t.label(), n, None);
            let outside = coarse.outside_band(exact);
            ok &= gap <= 0.02 && outside == 0;
            parts.push(format!("{} N={n}: gap {gap:.4}, outside exact IQR {outside}", t.label()));
        }
    }
    record(12, ok, parts.join("; "));
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn()); 12] = [
        ("ac01_benchmark_sweep", ac01_benchmark_sweep),
        ("ac02_exact_oracle_anchor", ac02_exact_oracle_anchor),
        ("ac03_structural_bias_floor", ac03_structural_bias_floor),
        ("ac04_markov_validation", ac04_markov_validation),
        ("ac05_strategy_parity", ac05_strategy_parity),
        ("ac06_compaction_neutrality", ac06_compaction_neutrality),
        ("ac07_mixed_precision", ac07_mixed_precision),
        ("ac08_erfcx_accuracy", ac08_erfcx_accuracy),
        ("ac09_hazard_consistency", ac09_hazard_consistency),
        ("ac10_dispatch_rule", ac10_dispatch_rule),
        ("ac11_fixed_degree_sanity", ac11_fixed_degree_sanity),
        ("ac12_multi_topology", ac12_multi_topology),
    ];
    for (name, f) in criteria {
        if filters.is_empty() || filters.iter().any(|x| name.contains(x.as_str())) {
            f();
        }
    }
    let unexpected = UNEXPECTED.lock().unwrap();
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance failures: {:?}", *unexpected);
        std::process::exit(1);
    }
}
