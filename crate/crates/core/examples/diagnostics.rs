//! Numerical checks: the neighbour inequality on concrete environments, a
//! Paley-Zygmund bound on good-walk fractions, and variance-ratio scaling.

use saw_quench::diagnostics::{
    good_walk_trend, random_neighbor_instances, variance_ratio, verify_neighbor_inequality,
    VarianceRatioConfig,
};
use saw_quench::enumeration::EnumerationConfig;
use saw_quench::environment::{DistributionSpec, Environment};
use saw_quench::estimators::h0_reference;

fn main() -> saw_quench::error::Result<()> {
    let dist = DistributionSpec::gaussian(0.0, 1.0)?;

    let cfg = EnumerationConfig::parallel(2, 7)?;
    for inst in random_neighbor_instances(2, 5, 11, 3, (0.5, 2.0), (0.0, 1.0)) {
        let env = Environment::new(dist, inst.seed, 2)?;
        let r = verify_neighbor_inequality(&cfg, &env, inst.h, inst.beta, &inst.u, &inst.v)?;
        println!(
            "u={} v={} h={:.3} beta={:.3}: log lhs {:.4} <= log rhs {:.4} ({:?})",
            inst.u,
            inst.v,
            inst.h,
            inst.beta,
            r.get("log_lhs").unwrap_or(f64::NAN),
            r.get("log_rhs").unwrap_or(f64::NAN),
            r.verdict
        );
    }

    let r = good_walk_trend(&dist, 2, 4, 10, 0.5, 40, 0, 0.5, 0.5)?;
    println!("good walks: {}", serde_json::to_string_pretty(&r).expect("serializable"));

    let h = h0_reference(3, 8)?.value + 0.6;
    let cfg = VarianceRatioConfig::new(dist, vec![0.0, 0.1, 0.2, 0.4], h, 3, 4, 100, 0);
    let r = variance_ratio(&cfg)?;
    println!(
        "variance ratio at h={h:.3}: log-log slope {:?}, verdict {:?}",
        r.get("loglog_slope"),
        r.verdict
    );
    Ok(())
}
