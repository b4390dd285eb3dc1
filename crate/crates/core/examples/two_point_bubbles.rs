//! Truncated two-point function and the bubble quantities built from it.

use saw_quench::diagnostics::bubble_estimates;
use saw_quench::enumeration::EnumerationConfig;
use saw_quench::environment::{DistributionSpec, Environment};
use saw_quench::lattice::Point;
use saw_quench::observables::{quenched_susceptibility, two_point_table};

fn main() -> saw_quench::error::Result<()> {
    let dist = DistributionSpec::gaussian(0.0, 1.0)?;
    let (h, beta) = (1.6, 0.4);
    let cfg = EnumerationConfig::parallel(2, 8)?;
    let env = Environment::new(dist, 3, 2)?;
    let origin = Point::origin(2);

    let g = two_point_table(&cfg, &env, h, beta, &origin)?;
    println!("G(0, y) on {} sites, sum {:.6}", g.len(), g.total());
    for y in [[1i64, 0], [0, 1], [2, 0], [1, 1]] {
        println!("  G(0, {:?}) = {:.6}", y, g.get(&Point::new(y.to_vec())));
    }
    let chi = quenched_susceptibility(&cfg, &env, h, beta, &origin)?;
    println!("chi = {:.6}, tail ratio {:.2e}", chi.partial_sum, chi.tail_ratio);

    let b = bubble_estimates(&dist, beta, h, 2, 4, 8, 0, 1e8)?;
    println!(
        "B1 = {:.5} +/- {:.5}, B2 = {:.5} +/- {:.5}",
        b.b1, b.std_error_b1, b.b2, b.std_error_b2
    );
    Ok(())
}
