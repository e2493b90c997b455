//! Spherical blow-up of the diagonal and the modified pair map.
//!
//! Points of the blow-up are triples `(a, y, t)` with `y` a unit vector and
//! `t >= 0`, mapped to pairs by `(a, y, t) -> (a, a + t y)`. The modified map
//! `F~(a, y, t)` has the same rank as `F(a, a + t y)` for `t > 0` and extends
//! continuously to `t = 0` by `[Df_a | D^2 f_a(y, .) | D^3 f_a(y, y, y)]`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dd::{self, Dd};
use crate::error::{check_dim, Error, Result};
use crate::jets::{self, Jet3, PolyMap, Scalar};
use crate::linalg;
use crate::sampling;

/// Unit-norm tolerance for blow-up directions.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupPoint {
    a: Vec<f64>,
    y: Vec<f64>,
    t: f64,
}

impl BlowupPoint {
    pub fn new(a: Vec<f64>, y: Vec<f64>, t: f64) -> Result<Self> {
        check_dim("direction", y.len(), a.len())?;
        check_unit(&y)?;
        if !(t >= 0.0) {
            return Err(Error::Input(format!("blow-up parameter t must be >= 0, got {t}")));
        }
        Ok(BlowupPoint { a, y, t })
    }

    /// Inverse of [`phi`] off the diagonal.
    pub fn from_pair(p: &[f64], q: &[f64]) -> Result<Self> {
        check_dim("point q", q.len(), p.len())?;
        let d = linalg::sub(q, p);
        let t = linalg::norm(&d);
        if t == 0.0 {
            return Err(Error::Domain("pair lies on the diagonal".into()));
        }
        Ok(BlowupPoint { a: p.to_vec(), y: d.iter().map(|x| x / t).collect(), t })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

pub(crate) fn check_unit(y: &[f64]) -> Result<()> {
    let nrm = linalg::norm(y);
    if (nrm - 1.0).abs() > UNIT_TOL {
        return Err(Error::Input(format!("direction must be a unit vector, |y| = {nrm}")));
    }
    Ok(())
}

/// `(a, a + t y)`.
pub fn phi(bp: &BlowupPoint) -> (Vec<f64>, Vec<f64>) {
    let q = bp.a.iter().zip(&bp.y).map(|(a, y)| a + bp.t * y).collect();
    (bp.a.clone(), q)
}

/// `[Df_a | D^2 f_a(y, .) | D^3 f_a(y, y, y)]` from a precomputed jet.
pub fn boundary_value(jet: &Jet3, y: &[f64]) -> DMatrix<f64> {
    let (n, nn) = (jet.d1.dim_in(), jet.d1.dim_out());
    let mut m = DMatrix::zeros(nn, 2 * n + 1);
    m.view_mut((0, 0), (nn, n)).copy_from(&jet.d1.as_matrix());
    m.view_mut((0, n), (nn, n)).copy_from(&jet.d2.partial_matrix(&[y]));
    let last = jet.d3.apply_with(&[y, y, y]);
    m.column_mut(2 * n).copy_from_slice(&last);
    m
}

/// Row-major `F~(a, y, t)` for `t > 0` using the difference-quotient formula
/// `(Df_a, (Df_{a+ty} - Df_a)/t, (6(Df_{a+ty}(ty) + Df_a(ty)) - 12(f(a+ty) - f(a)))/t^3)`.
pub fn f_tilde_with<T: Scalar>(f: &PolyMap, a: &[T], y: &[T], t: T) -> Vec<T> {
    let (n, nn) = (f.dim_in(), f.dim_out());
    let cols = 2 * n + 1;
    let ty: Vec<T> = y.iter().map(|&v| t * v).collect();
    let q: Vec<T> = a.iter().zip(&ty).map(|(&x, &v)| x + v).collect();
    let ja = f.jacobian_with(a);
    let jq = f.jacobian_with(&q);
    let fa = f.eval_with(a);
    let fq = f.eval_with(&q);
    let (six, twelve) = (T::from(6.0), T::from(12.0));
    let t3 = t * t * t;
    let mut out = vec![T::zero(); nn * cols];
    for r in 0..nn {
        let mut dq_ty = T::zero();
        let mut da_ty = T::zero();
        for c in 0..n {
            out[r * cols + c] = ja[r * n + c];
            out[r * cols + n + c] = (jq[r * n + c] - ja[r * n + c]).quot(t);
            dq_ty = dq_ty + jq[r * n + c] * ty[c];
            da_ty = da_ty + ja[r * n + c] * ty[c];
        }
        out[r * cols + 2 * n] = (six * (dq_ty + da_ty) - twelve * (fq[r] - fa[r])).quot(t3);
    }
    out
}

/// `F~(a, y, t)` as an `N x (2n+1)` matrix.
///
/// For `t > 0` the difference-quotient formula is evaluated in double-double
/// arithmetic (the third column cancels to order `t^3`); for `t = 0` the
/// boundary formula from exact derivatives is used.
pub fn f_tilde(f: &PolyMap, bp: &BlowupPoint) -> Result<DMatrix<f64>> {
    check_dim("base point", bp.a.len(), f.dim_in())?;
    let (n, nn) = (f.dim_in(), f.dim_out());
    if bp.t == 0.0 {
        return Ok(boundary_value(&f.jet3(&bp.a)?, &bp.y));
    }
    let raw = f_tilde_with::<Dd>(f, &dd::lift(&bp.a), &dd::lift(&bp.y), Dd::from(bp.t));
    Ok(DMatrix::from_row_slice(nn, 2 * n + 1, &dd::round_all(&raw)))
}

/// Row-major `(2n+1) x (2n+1)` change of basis `B` with `F~ = (F o Phi) B`.
pub fn lemma2_matrix_with<T: Scalar>(y: &[T], t: T) -> Vec<T> {
    let n = y.len();
    let m = 2 * n + 1;
    let mut b = vec![T::zero(); m * m];
    let (inv_t, six_t2) = (T::one().quot(t), T::from(6.0).quot(t * t));
    for i in 0..n {
        b[i * m + i] = T::one();
        b[i * m + n + i] = T::zero() - inv_t;
        b[(n + i) * m + n + i] = inv_t;
        b[i * m + 2 * n] = six_t2 * y[i];
        b[(n + i) * m + 2 * n] = six_t2 * y[i];
    }
    b[(2 * n) * m + 2 * n] = T::zero() - T::from(12.0).quot(t * t * t);
    b
}

/// The block matrix `[[I, -I/t, 6y/t^2], [0, I/t, 6y/t^2], [0, 0, -12/t^3]]`.
/// Its determinant is `-12 / t^{n+3}`.
pub fn lemma2_matrix(y: &[f64], t: f64) -> Result<DMatrix<f64>> {
    check_unit(y)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("the change of basis needs t > 0, got {t}")));
    }
    let m = 2 * y.len() + 1;
    Ok(DMatrix::from_row_slice(m, m, &lemma2_matrix_with(y, t)))
}

/// Closed-form determinant of [`lemma2_matrix`].
pub fn lemma2_determinant(n: usize, t: f64) -> f64 {
    -12.0 / t.powi(n as i32 + 3)
}

/// Ratios `||R(a, t y)|| / t^k` along one direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingSeries {
    pub direction: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Least-squares slope of `log ratio` against `log t`; absent when the
    /// remainder vanishes identically along this direction.
    pub slope: Option<f64>,
    pub linear_within_factor: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemainderScalingReport {
    pub kind: &'static str,
    pub pass: bool,
    pub order: usize,
    pub steps: Vec<f64>,
    pub identically_zero: bool,
    pub min_slope: Option<f64>,
    pub max_slope: Option<f64>,
    pub series: Vec<ScalingSeries>,
}

/// Step sizes `1e-1, ..., 1e-6`.
pub const SCALING_STEPS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
const LINEAR_FACTOR: f64 = 10.0;

/// Check that `R(a, x)/|x|^k` decays linearly as `x = t y -> 0` for
/// `trials` random unit directions `y`.
pub fn remainder_scaling_check(f: &PolyMap, a: &[f64], k: usize, trials: usize, seed: u64) -> Result<RemainderScalingReport> {
    check_dim("base point", a.len(), f.dim_in())?;
    if trials == 0 {
        return Err(Error::Input("trials must be at least 1".into()));
    }
    let mut series = Vec::with_capacity(trials);
    for i in 0..trials {
        let mut rng = sampling::trial_rng(seed, i as u64);
        let y = if f.dim_in() == 1 { vec![1.0] } else { sampling::unit_sphere(&mut rng, f.dim_in()) };
        let ratios = SCALING_STEPS
            .iter()
            .map(|&t| {
                let x: Vec<f64> = y.iter().map(|v| v * t).collect();
                jets::taylor_remainder(f, a, &x, k).map(|r| r.norm / t.powi(k as i32))
            })
            .collect::<Result<Vec<_>>>()?;
        series.push(scaling_series(y, ratios));
    }
    let identically_zero = series.iter().all(|s| s.ratios.iter().all(|&r| r == 0.0));
    let slopes: Vec<f64> = series.iter().filter_map(|s| s.slope).collect();
    let min_slope = slopes.iter().copied().reduce(f64::min);
    let max_slope = slopes.iter().copied().reduce(f64::max);
    let pass = series.iter().all(|s| s.linear_within_factor);
    Ok(RemainderScalingReport {
        kind: "remainder-scaling",
        pass,
        order: k,
        steps: SCALING_STEPS.to_vec(),
        identically_zero,
        min_slope,
        max_slope,
        series,
    })
}

fn scaling_series(direction: Vec<f64>, ratios: Vec<f64>) -> ScalingSeries {
    if ratios.iter().all(|&r| r == 0.0) {
        return ScalingSeries { direction, ratios, slope: None, linear_within_factor: true };
    }
    if ratios.iter().any(|&r| !(r > 0.0)) {
        return ScalingSeries { direction, ratios, slope: None, linear_within_factor: false };
    }
    let pts: Vec<(f64, f64)> = SCALING_STEPS.iter().zip(&ratios).map(|(t, r)| (t.ln(), r.ln())).collect();
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let reference = ratios[0] / SCALING_STEPS[0];
    let linear_within_factor = SCALING_STEPS.iter().zip(&ratios).all(|(t, r)| {
        let c = r / t;
        c <= reference * LINEAR_FACTOR && c >= reference / LINEAR_FACTOR
    });
    ScalingSeries { direction, ratios, slope: Some(slope), linear_within_factor }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_zero_rejected_by_change_of_basis() {
        assert!(matches!(lemma2_matrix(&[1.0], 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn non_unit_direction_rejected() {
        assert!(matches!(BlowupPoint::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.5), Err(Error::Input(_))));
        assert!(matches!(BlowupPoint::new(vec![0.0], vec![1.0], -1.0), Err(Error::Input(_))));
    }

    #[test]
    fn phi_examples() {
        let bp = BlowupPoint::new(vec![0.0, 0.0], vec![1.0, 0.0], 2.0).unwrap();
        assert_eq!(phi(&bp), (vec![0.0, 0.0], vec![2.0, 0.0]));
        let bp = BlowupPoint::new(vec![0.3, -1.0], vec![0.0, 1.0], 0.0).unwrap();
        let (p, q) = phi(&bp);
        assert_eq!(p, q);
    }
}
