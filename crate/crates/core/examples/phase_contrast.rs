//! Diagnostics below and above the critical constant on small trees.

use rwre::experiments::phase_run;
use rwre::EnvDistribution;

fn main() -> rwre::Result<()> {
    let dist = EnvDistribution::plus_minus_one(0.3)?;
    let (rows, summary) = phase_run(&dist, &[0.1, 0.5], &[8, 27, 40], 10, 2024, u64::MAX)?;
    for s in &summary {
        println!(
            "c={:.2} n={:>3}: median ln U_n {:>9.4}, median ln C_eff {:>9.4}, median survivors {}",
            s.c, s.n, s.median_ln_bottleneck, s.median_ln_conductance, s.median_survivors
        );
    }
    for r in rows.iter().filter(|r| r.metric == "c1" || r.metric == "c2") {
        println!("{} = {:.4} ({})", r.metric, r.value, r.params.encode());
    }
    Ok(())
}
