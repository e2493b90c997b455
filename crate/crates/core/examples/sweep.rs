//! Random pairs near a point where the local condition holds are totally
//! skew; the halving search reports an empirical radius.

use skewjet::constructions::skew_cubic;
use skewjet::skewness::{empirical_skew_radius, sweep_neighborhood, DEFAULT_RANK_TOL};

fn main() -> skewjet::Result<()> {
    let f = skew_cubic(2)?;
    let r = sweep_neighborhood(&f, &[0.0, 0.0], 0.05, 10_000, DEFAULT_RANK_TOL, 7)?;
    println!(
        "r=0.05: pass={} non_skew={} min_sigma={:.3e} cross_checks={} disagreements={}",
        r.pass, r.non_skew, r.min_sigma, r.cross_checks, r.oracle_disagreements
    );
    println!("  worst pair {:?}", r.worst_pair);

    let search = empirical_skew_radius(&f, &[0.0, 0.0], 1000, DEFAULT_RANK_TOL, 7)?;
    for (radius, pass) in &search.attempts {
        println!("  radius {radius:.4}: {}", if *pass { "all skew" } else { "non-skew pair found" });
    }
    println!("empirical radius: {:?}", search.radius);
    Ok(())
}
