//! Tolerance sweep of the renewal engine on the SEIR benchmark, against the
//! exact next-reaction oracle.
//!
//! cargo run --release --example epsilon_sweep -- [runs] [N]

use spreadsim::analysis::{
    ensemble_mean, epsilon_sweep, run_ensemble, slope_regression, EngineSpec, RunSpec, Seeding, SLOPE_RESAMPLES,
};
use spreadsim::graph::gen_erdos_renyi;
use spreadsim::models::seir_standard;
use spreadsim::renewal::RenewalConfig;

fn main() -> spreadsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let runs: usize = args.next().map_or(100, |s| s.parse().expect("runs"));
    let n: usize = args.next().map_or(1000, |s| s.parse().expect("N"));
    let g = gen_erdos_renyi(n, 8.0, 2024)?;
    let spec = RunSpec {
        model: seir_standard(0.25, 5.0, 4.0, 7.5, 5.0)?,
        engine: EngineSpec::Renewal(RenewalConfig::default()),
        t_final: 50.0,
        grid_points: 501,
        seeding: Seeding::default(),
    };

    let exact = run_ensemble(&g, &RunSpec { engine: EngineSpec::Exact, ..spec.clone() }, 7, runs)?;
    let mean = ensemble_mean(&exact)?;
    let peak_of_mean = mean[2].iter().copied().fold(0.0, f64::max);
    let mean_peak = exact.iter().map(|r| r.summary.peak_infected).sum::<f64>() / runs as f64;
    let mean_final = exact.iter().filter_map(|r| r.summary.final_terminal).sum::<f64>() / runs as f64;
    println!("exact: mean peak {mean_peak:.4}  peak of mean {peak_of_mean:.4}  final R {mean_final:.4}");

    let eps = [0.005, 0.01, 0.03, 0.05, 0.1, 0.2];
    let rows = epsilon_sweep(&g, &spec, &eps, runs, 11, Some(&exact))?;
    println!("eps     peak  [95% CI]           final R  steps   err_peak  L_inf(finest)");
    for r in &rows {
        let f = r.final_terminal.unwrap();
        let ex = r.vs_exact.as_ref().unwrap();
        println!(
            "{:<6} {:.4} [{:.4}, {:.4}]  {:.4}  {:>7.1}  {:.4}    {:.4}",
            r.epsilon,
            r.peak_infected.value,
            r.peak_infected.lo,
            r.peak_infected.hi,
            f.value,
            r.mean_steps,
            ex.per_run_peak_error.value,
            r.vs_finest.l_inf.value
        );
    }
    let errs: Vec<Vec<f64>> = rows.iter().map(|r| r.peak_errors.clone().unwrap()).collect();
    let fit = slope_regression(&eps, &errs, SLOPE_RESAMPLES, 3)?;
    println!("peak error slope {:+.3} [{:+.3}, {:+.3}]", fit.alpha.value, fit.alpha.lo, fit.alpha.hi);
    Ok(())
}
