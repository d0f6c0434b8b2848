//! Log-normal holding-time hazards and the scaled complementary error
//! function they are built on.

use spreadsim::hazards::{erfcx_stable, lognormal_from_mean_median, shedding, SheddingProfile};

fn main() -> spreadsim::Result<()> {
    println!("    z      erfcx(z)");
    for z in [-3.0, -1.0, 0.0, 1.0, 3.4, 3.6, 10.0, 20.0] {
        println!("{z:>6.1}  {:.7e}", erfcx_stable(z));
    }

    let ei = lognormal_from_mean_median(5.0, 4.0)?;
    let ir = lognormal_from_mean_median(7.5, 5.0)?;
    println!("\nE->I: mu {:.4} sigma {:.4} mode {:.3}", ei.mu, ei.sigma, ei.mode());
    println!("I->R: mu {:.4} sigma {:.4} mode {:.3}", ir.mu, ir.sigma, ir.mode());
    println!("\n  tau   h_EI     h_IR     s(tau) hazard  s(tau) density");
    for tau in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 50.0] {
        println!(
            "{tau:>5.1}  {:.5}  {:.5}  {:.5}         {:.5}",
            ei.hazard(tau),
            ir.hazard(tau),
            shedding(SheddingProfile::LogNormalHazard(ir), tau),
            shedding(SheddingProfile::LogNormalDensityPeakNormalized(ir), tau)
        );
    }
    Ok(())
}
