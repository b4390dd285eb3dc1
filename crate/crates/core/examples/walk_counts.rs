//! Exact SAW counts and connective-constant estimates on Z^2 and Z^3.

use saw_quench::enumeration::{count_walks, EnumerationConfig};
use saw_quench::estimators::connective_constant;

fn main() -> saw_quench::error::Result<()> {
    let counts = count_walks(&EnumerationConfig::parallel(2, 12)?)?;
    print!("{}", counts.to_csv("c"));

    for (dim, n_max) in [(2, 14), (3, 9)] {
        let cc = connective_constant(dim, n_max)?;
        println!(
            "d={dim}: inf_n c(n)^(1/n) over n<={n_max} = {:.5}, log mu ~ {:.5}",
            cc.inf, cc.h0_est
        );
    }
    Ok(())
}
