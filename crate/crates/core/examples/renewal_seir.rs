//! Drive the renewal engine by hand on a log-normal SEIR model and print the
//! compartment counts as the clock advances.

use spreadsim::graph::gen_erdos_renyi;
use spreadsim::models::{choose_seeds, seir_standard};
use spreadsim::renewal::{RenewalConfig, RenewalEngine};

fn main() -> spreadsim::Result<()> {
    let g = gen_erdos_renyi(10_000, 8.0, 3)?;
    let model = seir_standard(0.25, 5.0, 4.0, 7.5, 5.0)?;
    let mut eng = RenewalEngine::new(&g, &model, RenewalConfig::default(), 42)?;
    eng.seed_nodes(&choose_seeds(g.num_nodes(), 100, 42)?, model.infected_target)?;
    println!("strategy {}", eng.strategy().name());

    let mut next = 0.0;
    let steps = eng.run_until(60.0, |t, c| {
        if t >= next {
            println!("t {t:>6.2}  S {:>5}  E {:>5}  I {:>5}  R {:>5}", c[0], c[1], c[2], c[3]);
            next += 5.0;
        }
    });
    println!("{steps} steps to t = {:.2}", eng.clock());
    Ok(())
}
