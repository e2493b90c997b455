//! Certified local condition on a covering net of the sphere, and what an
//! inconclusive net looks like.

use skewjet::constructions::skew_cubic;
use skewjet::local_condition::{certify_local_condition, LocalOptions};

fn main() -> skewjet::Result<()> {
    let opts = LocalOptions::default();
    for (n, mesh) in [(1, 1e-3), (2, 1e-3), (3, 0.5)] {
        let r = certify_local_condition(&skew_cubic(n)?, &vec![0.0; n], mesh, &opts)?;
        println!(
            "n={n} mesh={mesh:e}: holds={} net_min={:.4e} L={:.3} points={}",
            r.holds.as_str(),
            r.min_sigma,
            r.lipschitz_bound.unwrap_or(f64::NAN),
            r.net_points.unwrap_or(0),
        );
        if let Some(region) = &r.failing_region {
            println!("  {} net points inside the Lipschitz slack, e.g. {:?}", region.len(), region[0]);
        }
    }
    Ok(())
}
