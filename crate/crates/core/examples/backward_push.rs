//! Backward push and tilting for a few environment laws.

use rwre::{push_profile, tilt, EnvDistribution};

fn main() -> rwre::Result<()> {
    let laws = [
        EnvDistribution::plus_minus_one(0.3)?,
        EnvDistribution::plus_minus_one(0.1)?,
        EnvDistribution::gaussian(-1.0, 2.0)?,
        EnvDistribution::lattice(&[(-2.0, 0.5), (0.0, 0.2), (1.0, 0.3)])?,
    ];
    for d in &laws {
        let p = push_profile(d)?;
        print!("{:<32} beta={:.7} lambda0={:.7} top_heavy={}", d.describe(), p.beta, p.lambda0, p.top_heavy);
        if p.top_heavy {
            let t = tilt(d)?;
            print!(" tilted mean={:.1e} var={:.5}", t.mean(), t.variance());
        }
        println!();
    }
    Ok(())
}
