//! Fraction of environments with a path above the small-probability threshold.

use rwre::critical_constants::small_prob_experiment;
use rwre::seed::derive_seed;
use rwre::{push_profile, EnvDistribution, TreeSpec};

fn main() -> rwre::Result<()> {
    let dist = EnvDistribution::plus_minus_one(0.3)?;
    let c = 0.1;
    let spec = TreeSpec::growth_target(push_profile(&dist)?.beta, c, 64)?;
    let seeds: Vec<u64> = (0..100).map(|i| derive_seed(5, &[i])).collect();
    for r in small_prob_experiment(&spec, &dist, c, &[8, 27, 64], &seeds, 10_000_000)? {
        println!("n={:>3}: threshold {:.3}, fraction {:.3} over {} environments", r.n, r.threshold, r.fraction, r.seeds);
    }
    Ok(())
}
