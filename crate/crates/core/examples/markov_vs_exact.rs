//! Markovian SIS and SIR: tau-leaping ensemble mean against the interquartile
//! band of the exact direct-method ensemble.
//!
//! cargo run --release --example markov_vs_exact -- [runs]

use spreadsim::analysis::{count_outside, ensemble_mean, quantile_band, run_ensemble, EngineSpec, RunSpec, Seeding};
use spreadsim::graph::gen_erdos_renyi;
use spreadsim::markov::MarkovConfig;
use spreadsim::models::{sir, sis};

fn main() -> spreadsim::Result<()> {
    let runs: usize = std::env::args().nth(1).map_or(100, |s| s.parse().expect("runs"));
    let g = gen_erdos_renyi(1000, 8.0, 2024)?;
    for m in [sis(0.25, 0.15)?, sir(0.25, 0.15)?] {
        let spec = |engine| RunSpec {
            model: m.clone(),
            engine,
            t_final: 50.0,
            grid_points: 100,
            seeding: Seeding { count: Some(10), state: None },
        };
        let exact = run_ensemble(&g, &spec(EngineSpec::Exact), 3, runs)?;
        let tau = run_ensemble(&g, &spec(EngineSpec::Markov(MarkovConfig::default())), 4, runs)?;
        let band = quantile_band(&exact, 1, 0.25, 0.75)?;
        let mean = ensemble_mean(&tau)?;
        let outside = count_outside(&mean[1], &band);
        println!("{}: tau-leaping mean I outside exact IQR at {outside}/100 points", m.name);
        for k in (0..100).step_by(11) {
            println!("  t {:>5.2}  I {:.4}  band [{:.4}, {:.4}]", exact[0].grid[k], mean[1][k], band[k].0, band[k].1);
        }
    }
    Ok(())
}
