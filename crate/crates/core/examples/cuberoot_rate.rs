//! Normalized log probabilities for a band widening like k^{1/3}.

use rwre::tube_estimates::{cuberoot_rate_experiment, Effort};
use rwre::EnvDistribution;

fn main() -> rwre::Result<()> {
    let dist = EnvDistribution::plus_minus_one(0.5)?;
    let rows = cuberoot_rate_experiment(&dist, 0.0, 5.0, &[125, 1000, 3375], Effort { population: 500, replicates: 20 }, 3)?;
    for r in rows {
        println!(
            "n={:>5}: ln P / n^(1/3) = {:.5} +- {:.5} (exact {:.5}, continuum {:.5})",
            r.n,
            r.normalized,
            r.stderr / (r.n as f64).cbrt(),
            r.exact_normalized.unwrap_or(f64::NAN),
            r.predicted
        );
    }
    Ok(())
}
