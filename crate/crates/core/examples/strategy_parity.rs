//! Bit-level agreement of the three pressure kernels, and of compaction and
//! chunk skipping, on a heavy-tailed graph.

use spreadsim::analysis::{parity_check, Seeding};
use spreadsim::graph::{gen_barabasi_albert, Strategy};
use spreadsim::models::seir_standard;
use spreadsim::renewal::RenewalConfig;

fn main() -> spreadsim::Result<()> {
    let g = gen_barabasi_albert(20_000, 4, 11)?;
    let m = seir_standard(0.25, 5.0, 4.0, 7.5, 5.0)?;
    let base = RenewalConfig { strategy: Strategy::PerNode, ..Default::default() };
    let variants = [
        ("lane", RenewalConfig { strategy: Strategy::LaneChunked, ..base }),
        ("merge", RenewalConfig { strategy: Strategy::EdgeMerge, ..base }),
        ("compaction", RenewalConfig { compaction: true, ..base }),
        ("no chunk skip", RenewalConfig { chunk_skip: false, ..base }),
    ];
    let seeding = Seeding { count: Some(200), state: Some(2) };
    for (name, cfg) in variants {
        let r = parity_check(&g, &m, (base, 5), (cfg, 5), 100, seeding, 5)?;
        println!(
            "per-node vs {name:<14} {} steps: {} node mismatches, {} count mismatches",
            r.steps, r.state_mismatches, r.count_mismatches
        );
    }
    let r = parity_check(&g, &m, (base, 5), (base, 6), 20, seeding, 5)?;
    println!("different trial seeds diverge at {:?}", r.first_divergence);
    Ok(())
}
