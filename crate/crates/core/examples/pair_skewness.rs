//! Total skewness of two tangent lines, decided by the pair matrix and
//! cross-checked with plain line geometry.

use nalgebra::DVector;
use skewjet::constructions::skew_cubic;
use skewjet::skewness::{classify_failure, is_pair_skew, line_pair_oracle, pair_matrix, DEFAULT_RANK_TOL};
use skewjet::{PolyMap, SymMultiMap};

fn curve(c2: f64, c3: f64) -> skewjet::Result<PolyMap> {
    PolyMap::from_derivatives(
        vec![0.0; 3],
        vec![
            SymMultiMap::from_fn(1, 3, 1, |_| vec![1.0, 0.0, 0.0])?,
            SymMultiMap::from_fn(1, 3, 2, |_| vec![0.0, 2.0 * c2, 0.0])?,
            SymMultiMap::from_fn(1, 3, 3, |_| vec![0.0, 0.0, 6.0 * c3])?,
        ],
    )
}

fn main() -> skewjet::Result<()> {
    let cases = [
        ("twisted cubic", skew_cubic(1)?, 0.0, 1.0),
        ("parabola", curve(1.0, 0.0)?, 0.0, 1.0),
        ("(t, 0, t^3)", curve(0.0, 1.0)?, -1.0, 1.0),
    ];
    for (name, f, p, q) in cases {
        let s = is_pair_skew(&f, &[p], &[q], DEFAULT_RANK_TOL)?;
        let c = classify_failure(&f, &[p], &[q], DEFAULT_RANK_TOL)?;
        println!("{name}: skew={} sigma_min={:.3e} kind={:?}", s.skew, s.sigma_min, c.kind);

        let (fp, fq) = (f.eval(&[p])?, f.eval(&[q])?);
        let (dp, dq) = (f.jacobian(&[p])? * DVector::from_element(1, 1.0), f.jacobian(&[q])? * DVector::from_element(1, 1.0));
        let lines = line_pair_oracle(&fp, dp.as_slice(), &fq, dq.as_slice(), 1e-12)?;
        println!("  tangent lines: {:?}", lines.kind);
    }

    let pm = pair_matrix(&skew_cubic(1)?, &[0.0], &[1.0])?;
    println!("F(0, 1) for the twisted cubic:{}", pm.matrix);
    Ok(())
}
