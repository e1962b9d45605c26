//! Level sizes of growth-target trees and lazy vertex addressing.

use rwre::{Tree, TreeSpec};

fn main() -> rwre::Result<()> {
    let spec = TreeSpec::growth_target(0.0871767, 1.0, 40)?;
    let tree = Tree::new(spec.clone(), 40, 10_000_000)?;
    for n in [0, 1, 5, 10, 20, 40] {
        println!("level {n:>2}: {:>8} vertices (target ln {:.3})", tree.level_size(n), spec.ln_growth_count(n)?);
    }
    let v = tree.vertex(20, tree.level_size(20) / 2);
    println!("middle vertex of level 20 has path {:?}", v.path());
    println!("its index round-trips to {}", tree.index_of(&v)?);
    Ok(())
}
