//! Walk simulation against the electrical prediction for escape to level n.

use rwre::walk_sim::{escape_prediction, escape_probability_mc};
use rwre::{EnvDistribution, EnvSample, Tree, TreeSpec};

fn main() -> rwre::Result<()> {
    let tree = Tree::new(TreeSpec::bary(2, 6)?, 6, u64::MAX)?;
    for seed in 0..5 {
        let env = EnvSample::new(tree.clone(), EnvDistribution::plus_minus_one(0.4)?, seed);
        let est = escape_probability_mc(&env, 6, 100_000, seed + 100)?;
        let pred = escape_prediction(&env, 6)?;
        println!("env {seed}: simulated {:.5} +- {:.5}, network {:.5}, z = {:+.2}", est.estimate, est.stderr, pred, (est.estimate - pred) / est.stderr);
    }
    Ok(())
}
