//! Finite capacity, the spherical series test and the dimension estimate.

use rwre::gauge_capacity::{dimension_estimate, finite_capacity, spherical_capacity_series, Gauge};
use rwre::TreeSpec;

fn main() -> rwre::Result<()> {
    let spec = TreeSpec::bary(2, 200)?;
    for k in [0.3, 2f64.ln(), 1.0] {
        let g = Gauge::Exponential { k };
        let caps: Vec<String> = [4, 8, 12, 16].iter().map(|&n| Ok(format!("{:.5}", finite_capacity(&spec, &g, n)?.capacity))).collect::<rwre::Result<_>>()?;
        let s = spherical_capacity_series(&spec, &g, 200)?;
        println!("k={k:.4}: capacity at depth 4/8/12/16 = {}; series {} (partial {:.4})", caps.join(", "), s.verdict.as_str(), s.partial_sum);
    }
    println!("binary tree dimension estimate: {:.6} (ln 2 = {:.6})", dimension_estimate(&spec, 16)?, 2f64.ln());
    Ok(())
}
