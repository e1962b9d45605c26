//! Survivor counts in the cube-root band and the second-moment bound.

use rwre::critical_constants::{default_band_start, second_moment_bound, survivor_counts};
use rwre::seed::derive_seed;
use rwre::{push_profile, EnvDistribution, TreeSpec};

fn main() -> rwre::Result<()> {
    let dist = EnvDistribution::plus_minus_one(0.3)?;
    let c = 4.0;
    let spec = TreeSpec::growth_target(push_profile(&dist)?.beta, c, 60)?;
    let l = default_band_start(&dist, c);
    let seeds: Vec<u64> = (0..30).map(|i| derive_seed(9, &[i])).collect();
    for n in [10, 20, 30] {
        let counts = survivor_counts(&spec, &dist, c, l, n, &seeds)?;
        let sm = second_moment_bound(&counts)?;
        println!("n={n}: band from L={l}, mean survivors {:.1}, P(W_n nonempty) >= {:.3} +- {:.3}, observed {:.3}",
            counts.iter().sum::<u64>() as f64 / counts.len() as f64, sm.bound, sm.stderr, sm.nonempty);
    }
    Ok(())
}
