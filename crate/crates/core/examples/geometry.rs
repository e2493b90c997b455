//! The geometric form of the local condition: second fundamental form,
//! third derivatives of curves and torsion.

use skewjet::constructions::{appendix_triple, skew_cubic};
use skewjet::geometry::*;

fn main() -> skewjet::Result<()> {
    let opts = GeometryOptions::for_dim(2, 1e-8, 0);
    let ii = second_fundamental_form(&skew_cubic(2)?, &[0.0, 0.0])?;
    let ns = ii_nonsingular(&ii, &opts);
    println!("skew cubic: II nonsingular={} min |II(x,y)|={:.4}", ns.nonsingular, ns.min_norm);
    let cc = curve_third_derivative_condition(&skew_cubic(2)?, &[0.0, 0.0], &opts)?;
    println!("skew cubic: curve condition={} min residual={:.4}", cc.holds, cc.min_residual);

    let jet = CurveJet::of_curve(&skew_cubic(1)?, 0.0)?;
    println!("twisted cubic torsion: {}", torsion(&jet, 1e-12)?);
    let jet = CurveJet::new(0.0, vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0])?;
    println!("planar jet torsion: {}", torsion(&jet, 1e-12)?);

    for (name, f) in [("skew cubic", skew_cubic(2)?), ("counterexample", appendix_triple(2, 6)?)] {
        let r = equivalence_check(&f, &[0.0, 0.0], 1e-8, 0)?;
        println!(
            "{name}: local={} II={} curve={} consistent={}",
            r.local, r.ii_nonsingular, r.curve_condition, r.consistent
        );
    }
    Ok(())
}
