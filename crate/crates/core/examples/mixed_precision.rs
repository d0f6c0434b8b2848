//! Paired full and reduced-precision storage runs on the same seeds.

use spreadsim::analysis::{run_ensemble, EngineSpec, RunSpec, Seeding};
use spreadsim::graph::gen_erdos_renyi;
use spreadsim::models::seir_standard;
use spreadsim::renewal::RenewalConfig;

fn main() -> spreadsim::Result<()> {
    let g = gen_erdos_renyi(10_000, 8.0, 9)?;
    let spec = |mixed| RunSpec {
        model: seir_standard(0.25, 5.0, 4.0, 7.5, 5.0).unwrap(),
        engine: EngineSpec::Renewal(RenewalConfig { mixed_precision: mixed, ..Default::default() }),
        t_final: 50.0,
        grid_points: 501,
        seeding: Seeding::default(),
    };
    let full = run_ensemble(&g, &spec(false), 21, 10)?;
    let mixed = run_ensemble(&g, &spec(true), 21, 10)?;
    println!("trial  final R fp32  final R mixed  rel dev");
    for (k, (a, b)) in full.iter().zip(&mixed).enumerate() {
        let (a, b) = (a.summary.final_terminal.unwrap(), b.summary.final_terminal.unwrap());
        println!("{k:>5}  {a:.4}        {b:.4}         {:.3}%", 100.0 * (b - a).abs() / a);
    }
    Ok(())
}
