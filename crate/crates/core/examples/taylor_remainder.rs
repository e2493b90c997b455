//! The Taylor remainder against its derivative bound, and the linear decay
//! of `R(a, x) / |x|^3` for quartic maps.

use skewjet::blowup::remainder_scaling_check;
use skewjet::jets::taylor_remainder;
use skewjet::sampling::{gaussian_vec, random_polymap, trial_rng};

fn main() -> skewjet::Result<()> {
    let mut rng = trial_rng(5, 0);
    let f = random_polymap(&mut rng, 2, 5, 4)?;
    let a = gaussian_vec(&mut rng, 2);
    for scale in [1.0, 0.1, 0.01] {
        let x: Vec<f64> = gaussian_vec(&mut rng, 2).iter().map(|v| v * scale).collect();
        let r = taylor_remainder(&f, &a, &x, 3)?;
        println!("|x|~{scale:<5} |R|={:.3e} bound={:.3e} within={}", r.norm, r.bound, r.within_bound);
    }

    let report = remainder_scaling_check(&f, &a, 3, 5, 1)?;
    println!("slopes in [{:.4}, {:.4}], linear within factor 10: {}", report.min_slope.unwrap(), report.max_slope.unwrap(), report.pass);
    for (t, ratio) in report.steps.iter().zip(&report.series[0].ratios) {
        println!("  t={t:.0e}  R/|x|^3={ratio:.4e}");
    }
    Ok(())
}
