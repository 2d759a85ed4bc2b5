//! Prints the bounds at the default operating point for a few combiner seeds.

use nfcrb::experiment::{evaluate_full_array, seed_list};
use nfcrb::{compression_gap, evaluate, FimCache, Scenario};

fn main() -> nfcrb::Result<()> {
    let scn = Scenario::default();
    let cache = FimCache::new();
    let full = evaluate_full_array(&scn, Some(&cache))?;
    println!("full-array  sqrt CRB_r = {:.3} um", full.paths[0].range_std_m() * 1e6);
    println!("seed  NB sqrtCRB_r(mm)  WB sqrtCRB_r(um)  gd_r(dB)  gd_theta(dB)  gap_r(dB)");
    for seed in seed_list(1, 10) {
        let op = evaluate(&scn, seed, Some(&cache))?;
        let gap = compression_gap(&op.wideband, &full)?;
        println!(
            "{seed:>4}  {:>16.4}  {:>16.3}  {:>8.3}  {:>12.4}  {:>9.3}",
            op.narrowband.paths[0].range_std_m() * 1e3,
            op.wideband.paths[0].range_std_m() * 1e6,
            op.decomposition.delta_gd_r[0],
            op.decomposition.delta_gd_theta[0],
            gap.range_db[0],
        );
    }
    Ok(())
}
