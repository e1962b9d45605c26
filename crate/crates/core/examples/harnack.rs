//! Empirical Harnack constant for the tilted walk in a cube-root band.

use rwre::critical_constants::{harnack_grid, ratio_harnack, HarnackMethod};
use rwre::{tilt, EnvDistribution};

fn main() -> rwre::Result<()> {
    let dist = tilt(&EnvDistribution::plus_minus_one(0.3)?)?;
    for k in [8, 27, 64] {
        let grid = harnack_grid(&dist, 2.0, k, 5);
        let h = ratio_harnack(&dist, 2.0, k, 4 * k, &grid, HarnackMethod::Exact, 1)?;
        println!("k={k:>3}, n={:>3}: M_emp = {:.4} over {} start points", 4 * k, h.m_emp, h.points.len());
    }
    Ok(())
}
