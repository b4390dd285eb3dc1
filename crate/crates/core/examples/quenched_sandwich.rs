//! Quenched growth rate of disorder-weighted SAW counts, compared against the
//! annealed upper and Jensen lower bounds.

use saw_quench::enumeration::EnumerationConfig;
use saw_quench::environment::{DistributionSpec, Environment};
use saw_quench::estimators::{quenched_growth_rate, sandwich_report, SandwichConfig};
use saw_quench::lattice::Point;

fn main() -> saw_quench::error::Result<()> {
    let dist = DistributionSpec::gaussian(0.0, 1.0)?;

    // d = 1: the growth rate is exactly -beta E[X]
    let cfg = EnumerationConfig::parallel(1, 4000)?;
    let env = Environment::new(dist, 1, 1)?;
    let g = quenched_growth_rate(&cfg, &env, 0.8, &Point::origin(1), None)?;
    println!("d=1 beta=0.8: slope {:.4} (se {:.4})", g.slope, g.slope_std_error);

    let cfg = SandwichConfig::new(2, 12, dist, 0.5, (0..6).collect());
    let r = sandwich_report(&cfg)?;
    println!("d=2 beta=0.5: bounds [{:.4}, {:.4}], tol {:.4}", r.lower, r.upper, r.tol);
    for e in &r.estimates {
        println!("  seed {} x {}: {:.4}", e.seed, e.x, e.slope);
    }
    println!("verdict: {:?}", r.verdict);
    Ok(())
}
