//! Rare tube probabilities: exact lattice recursion, splitting and naive sampling.

use rwre::tube_estimates::{theoretical_tube_rate, tube_ln_prob_exact, tube_prob_mc, Effort, TubeMethod, TubeSpec};
use rwre::EnvDistribution;

fn main() -> rwre::Result<()> {
    let dist = EnvDistribution::plus_minus_one(0.5)?;
    let spec = TubeSpec::symmetric(3.0)?;
    let effort = Effort { population: 1000, replicates: 20 };
    for n in [10, 50, 150] {
        let exact = tube_ln_prob_exact(&dist, &spec, n)?;
        let split = tube_prob_mc(&dist, &spec, n, effort, TubeMethod::Splitting, 7)?;
        let naive = tube_prob_mc(&dist, &spec, n, effort, TubeMethod::Naive, 7);
        let naive = naive.map(|e| format!("{:.4}", e.ln_estimate)).unwrap_or_else(|_| "no hits".into());
        println!(
            "n={n:>3}: exact ln P {exact:.4}, splitting {:.4} +- {:.4} ({} stages), naive {naive}, continuum {:.4}",
            split.ln_estimate,
            split.stderr,
            split.stages,
            theoretical_tube_rate(&spec, 1.0, n)?
        );
    }
    Ok(())
}
