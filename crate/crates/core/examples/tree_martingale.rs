//! Polymer martingale on the (ell-1)-ary tree and the sign of the dichotomy
//! function.

use saw_quench::environment::DistributionSpec;
use saw_quench::tree::{dichotomy_f, dichotomy_root, simulate_ensemble, TreeConfig};

fn main() -> saw_quench::error::Result<()> {
    let dist = DistributionSpec::gaussian(0.0, 1.0)?;
    let root = dichotomy_root(3, &dist, 0.0, 3.0, 1e-10)?;
    println!("f changes sign at beta = {root:?}");

    for beta in [0.3, 1.0, 2.0] {
        let cfg = TreeConfig::new(3, dist, beta, 14, 0)?;
        let seeds: Vec<u64> = (0..50).collect();
        let e = simulate_ensemble(&cfg, &seeds, 0.01)?;
        println!(
            "beta={beta}: f = {:+.4}, mean Z(14) = {:.4} +/- {:.4}, P(Z(14) > 0.01) = {:.2}",
            dichotomy_f(3, &dist, beta)?,
            e.summary.mean_z_final,
            e.summary.std_error_z_final,
            e.summary.frac_above_cut
        );
    }
    Ok(())
}
