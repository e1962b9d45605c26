//! Critical constants and the large-deviation bounds for a ±1 law.

use rwre::critical_constants::{c1_closed_form, critical_report, ld_bounds, smallness_margin};
use rwre::EnvDistribution;

fn main() -> rwre::Result<()> {
    let dist = EnvDistribution::plus_minus_one(0.3)?;
    let r = critical_report(&dist, 1.0)?;
    println!("c1 = {:.7} (closed form {:.7})", r.c1, c1_closed_form(&r.profile)?);
    for f in [0.5, 0.99, 1.01, 2.0] {
        println!("smallness margin at {f:.2} c1: {:+.5}", smallness_margin(&r.profile, f * r.c1));
    }
    for m in [0.0, 1.0, 3.0] {
        println!("c2(c = 1, M = {m}) = {:.4}", r.c2(1.0, m)?);
    }
    let b = ld_bounds(&r.profile, 10, 0.0, 2.0);
    println!("n = 10: P(S >= 0) <= {:.5}; E e^S 1{{S <= 2}} <= {:.5}", b.tail, b.truncated_mgf);
    for note in &r.notes {
        println!("note: {note}");
    }
    Ok(())
}
