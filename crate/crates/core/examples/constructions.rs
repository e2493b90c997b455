//! The explicit maps: convolution, the skew cubic and its nonsingularity
//! arguments, and the degenerate convolution of the counterexample.

use skewjet::constructions::*;
use skewjet::sampling::{gaussian_vec, trial_rng, unit_sphere};

fn main() -> skewjet::Result<()> {
    let f = skew_cubic(2)?;
    println!("skew cubic n=2 at (0.3, -0.7): {:?}", f.eval(&[0.3, -0.7])?);

    for mode in [CheckMode::Exact, CheckMode::Sampled] {
        let r = conv_nonsingular_check(3, mode, NONSINGULAR_SAMPLES, 1)?;
        println!("convolution n=3 {mode:?}: nonsingular={} {}", r.nonsingular, serde_json::to_string(&r).unwrap());
    }
    println!("degenerate convolution n=3 lacks a certificate at {:?}", lowest_index_certificate(&appendix_bbar(3)?)?);

    let mut rng = trial_rng(3, 0);
    let x = gaussian_vec(&mut rng, 3);
    let y = unit_sphere(&mut rng, 3);
    println!("forward substitution on y={y:.3?}: {:?}", triangular_oracle(&x, 1.0, &y)?);
    println!("residual |B(x,y) + C(y,y,y)| = {:.3e}", triangular_residual(&x, 1.0, &y)?);

    let g = appendix_triple(2, 6)?;
    println!("counterexample as JSON:\n{}", g.to_json());
    Ok(())
}
