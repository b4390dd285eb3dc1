//! Sample the lazy bond environment. The same seed always yields the same
//! conductances, independent of query order.

use saw_quench::environment::{DistributionSpec, Environment};

fn main() -> saw_quench::error::Result<()> {
    println!("dist,seed,x,y,axis,value");
    for dist in [
        DistributionSpec::gaussian(0.0, 1.0)?,
        DistributionSpec::bernoulli(0.5, 1.0)?,
        DistributionSpec::exponential(1.0)?,
        DistributionSpec::uniform(-1.0, 1.0)?,
    ] {
        for seed in [0u64, 7] {
            let env = Environment::new(dist, seed, 2)?;
            for base in [[0i64, 0], [1, -2], [-3, 5]] {
                for axis in 0..2 {
                    let x = env.conductance_at(&base, axis);
                    println!("\"{dist}\",{seed},{},{},{axis},{x:?}", base[0], base[1]);
                }
            }
        }
    }
    Ok(())
}
