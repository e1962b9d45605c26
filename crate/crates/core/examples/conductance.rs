//! Effective conductance and the bottleneck statistic on one environment.

use rwre::{push_profile, EnvDistribution, EnvSample, Tree, TreeSpec};

fn main() -> rwre::Result<()> {
    let dist = EnvDistribution::plus_minus_one(0.3)?;
    let beta = push_profile(&dist)?.beta;
    let tree = Tree::new(TreeSpec::growth_target(beta, 1.0, 60)?, 60, u64::MAX)?;
    let env = EnvSample::new(tree, dist, 42);
    let levels = [10, 20, 30, 40, 50, 60];
    let c = env.ln_effective_conductances(&levels)?;
    let u = env.ln_bottleneck_stats(&levels)?;
    println!("{:>4} {:>14} {:>14}", "n", "ln C_eff", "ln U_n");
    for ((n, c), u) in levels.iter().zip(&c).zip(&u) {
        println!("{n:>4} {c:>14.6} {u:>14.6}");
    }
    Ok(())
}
