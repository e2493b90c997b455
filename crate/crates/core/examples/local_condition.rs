//! Decide the third-order local condition at the origin for the skew cubic
//! and for the counterexample triple.

use skewjet::constructions::{appendix_triple, skew_cubic};
use skewjet::local_condition::{check_local_condition, kernel_witness, LocalOptions};

fn main() -> skewjet::Result<()> {
    let opts = LocalOptions::default();
    for n in 1..=4 {
        let r = check_local_condition(&skew_cubic(n)?, &vec![0.0; n], &opts)?;
        println!("skew cubic n={n}: holds={} min_sigma={:.4e}", r.holds.as_str(), r.min_sigma);
    }

    let f = appendix_triple(2, 6)?;
    let r = check_local_condition(&f, &[0.0, 0.0], &opts)?;
    println!("counterexample: holds={} argmin_y={:?}", r.holds.as_str(), r.argmin_y);
    if let Some(w) = kernel_witness(&f, &[0.0, 0.0], &[1.0, 0.0], opts.tol)? {
        println!("  kernel at y=e1: v1={:?} v2={:?} lambda={:.1e}", w.v1, w.v2, w.lambda);
    }
    Ok(())
}
