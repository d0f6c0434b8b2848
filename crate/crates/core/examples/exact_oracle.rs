//! Event-by-event use of the exact renewal oracle, then a comparison of its
//! summary statistics with the tau-leaping engine.

use spreadsim::analysis::{run_ensemble, EngineSpec, RunSpec, Seeding};
use spreadsim::exact::ExactRenewal;
use spreadsim::graph::gen_erdos_renyi;
use spreadsim::models::{choose_seeds, seir_standard};
use spreadsim::renewal::RenewalConfig;

fn main() -> spreadsim::Result<()> {
    let g = gen_erdos_renyi(1000, 8.0, 2024)?;
    let model = seir_standard(0.25, 5.0, 4.0, 7.5, 5.0)?;

    let seeds = choose_seeds(1000, 10, 1)?;
    let mut ex = ExactRenewal::new(&g, &model, 1, &seeds, model.infected_target)?;
    let mut shown = 0;
    while let Some(t) = ex.next_event(50.0) {
        if ex.events % 500 == 0 && shown < 8 {
            println!("event {:>5}  t {t:>6.2}  counts {:?}  pending {}", ex.events, ex.counts, ex.pending());
            shown += 1;
        }
    }
    println!("{} events, final counts {:?}", ex.events, ex.counts);

    let spec = RunSpec {
        model,
        engine: EngineSpec::Exact,
        t_final: 50.0,
        grid_points: 501,
        seeding: Seeding::default(),
    };
    for engine in [EngineSpec::Exact, EngineSpec::Renewal(RenewalConfig::default())] {
        let runs = run_ensemble(&g, &RunSpec { engine, ..spec.clone() }, 7, 50)?;
        let peak = runs.iter().map(|r| r.summary.peak_infected).sum::<f64>() / 50.0;
        let fin = runs.iter().filter_map(|r| r.summary.final_terminal).sum::<f64>() / 50.0;
        println!("{:<8} mean peak I {peak:.4}  mean final R {fin:.4}", engine.name());
    }
    Ok(())
}
