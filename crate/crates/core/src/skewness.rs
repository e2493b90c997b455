//! Total skewness of a pair of tangent spaces.
//!
//! For `p != q` the pair matrix `F(p,q) = [Df_p | Df_q | f(q) - f(p)]` acts
//! on `(v1, v2, lambda)` by `Df_p(v1) + Df_q(v2) + lambda (f(q) - f(p))`.
//! The tangent spaces at `f(p)` and `f(q)` are totally skew exactly when this
//! matrix has full column rank `2n + 1`. A kernel vector with `lambda = 0`
//! gives parallel tangent lines; one with `lambda != 0` gives intersecting ones.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dd::{self, Dd};
use crate::error::{check_dim, Error, Result};
use crate::jets::{PolyMap, Scalar};
use crate::linalg::{self, SvdSummary};
use crate::sampling;

/// Default relative threshold on `sigma_min / sigma_max`.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Row-major `N x (2n+1)` pair matrix in any scalar type.
pub fn pair_matrix_with<T: Scalar>(f: &PolyMap, p: &[T], q: &[T]) -> Vec<T> {
    let (n, nn) = (f.dim_in(), f.dim_out());
    let cols = 2 * n + 1;
    let jp = f.jacobian_with(p);
    let jq = f.jacobian_with(q);
    let fp = f.eval_with(p);
    let fq = f.eval_with(q);
    let mut out = vec![T::zero(); nn * cols];
    for r in 0..nn {
        for c in 0..n {
            out[r * cols + c] = jp[r * n + c];
            out[r * cols + n + c] = jq[r * n + c];
        }
        out[r * cols + 2 * n] = fq[r] - fp[r];
    }
    out
}

/// `F(p,q)` with cached singular values of its column-equilibrated form.
#[derive(Clone, Debug)]
pub struct PairMatrix {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub matrix: DMatrix<f64>,
    col_scales: Vec<f64>,
    summary: SvdSummary,
}

impl PairMatrix {
    pub fn dim_in(&self) -> usize {
        self.p.len()
    }

    /// `Df_p(v1) + Df_q(v2) + lambda (f(q) - f(p))`.
    pub fn apply(&self, v1: &[f64], v2: &[f64], lambda: f64) -> Vec<f64> {
        let mut z = v1.to_vec();
        z.extend_from_slice(v2);
        z.push(lambda);
        linalg::to_vec(&(&self.matrix * DVector::from_vec(z)))
    }

    /// Smallest singular value after scaling every column to unit norm.
    ///
    /// Column scaling does not change the rank, and it keeps the
    /// `f(q) - f(p)` column, whose norm is of order `|q - p|`, from
    /// dominating the rank decision for nearby points.
    pub fn sigma_min(&self) -> f64 {
        self.summary.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.summary.sigma_max
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.summary.singular_values
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.summary.singular_values.iter().filter(|&&s| s > tol * self.summary.sigma_max).count()
    }

    pub fn is_full_rank(&self, tol: f64) -> bool {
        self.matrix.nrows() >= self.matrix.ncols() && self.summary.sigma_min > tol * self.summary.sigma_max
    }

    /// Unit-norm approximate kernel vector `(v1, v2, lambda)` of the raw matrix.
    pub fn kernel_vector(&self) -> (Vec<f64>, Vec<f64>, f64) {
        let n = self.dim_in();
        let z: Vec<f64> = self.summary.right_vector.iter().zip(&self.col_scales).map(|(v, s)| v / s).collect();
        let z = linalg::normalized(&z);
        (z[..n].to_vec(), z[n..2 * n].to_vec(), z[2 * n])
    }
}

/// Assemble `F(p, q)`. Entries are evaluated in double-double and rounded,
/// so the difference column is accurate even when `q` is close to `p`.
pub fn pair_matrix(f: &PolyMap, p: &[f64], q: &[f64]) -> Result<PairMatrix> {
    check_dim("point p", p.len(), f.dim_in())?;
    check_dim("point q", q.len(), f.dim_in())?;
    if p == q {
        return Err(Error::Domain("F(p,q) is undefined on the diagonal p = q".into()));
    }
    let raw = pair_matrix_with::<Dd>(f, &dd::lift(p), &dd::lift(q));
    let matrix = DMatrix::from_row_slice(f.dim_out(), 2 * f.dim_in() + 1, &dd::round_all(&raw));
    Ok(PairMatrix::from_matrix(p.to_vec(), q.to_vec(), matrix))
}

impl PairMatrix {
    pub(crate) fn from_matrix(p: Vec<f64>, q: Vec<f64>, matrix: DMatrix<f64>) -> Self {
        let (scaled, col_scales) = linalg::equilibrate_columns(&matrix);
        let summary = linalg::svd_summary(&scaled);
        PairMatrix { p, q, matrix, col_scales, summary }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairSkewness {
    pub skew: bool,
    pub sigma_min: f64,
    pub sigma_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Decide total skewness at `f(p)`, `f(q)`: `sigma_min > tol * sigma_max`.
pub fn is_pair_skew(f: &PolyMap, p: &[f64], q: &[f64], tol: f64) -> Result<PairSkewness> {
    let pm = pair_matrix(f, p, q)?;
    Ok(skewness_of(&pm, tol))
}

fn skewness_of(pm: &PairMatrix, tol: f64) -> PairSkewness {
    let (rows, cols) = pm.matrix.shape();
    if rows < cols {
        return PairSkewness {
            skew: false,
            sigma_min: 0.0,
            sigma_max: pm.sigma_max(),
            reason: Some(format!("dimension too small: N = {rows} < 2n+1 = {cols}")),
        };
    }
    PairSkewness { skew: pm.is_full_rank(tol), sigma_min: pm.sigma_min(), sigma_max: pm.sigma_max(), reason: None }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Parallel,
    Intersecting,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairWitness {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureClass {
    pub kind: FailureKind,
    pub sigma_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<PairWitness>,
}

/// Classify why a pair fails to be skew, with a kernel witness.
pub fn classify_failure(f: &PolyMap, p: &[f64], q: &[f64], tol: f64) -> Result<FailureClass> {
    let pm = pair_matrix(f, p, q)?;
    Ok(classify_matrix(&pm, tol))
}

pub(crate) fn classify_matrix(pm: &PairMatrix, tol: f64) -> FailureClass {
    if skewness_of(pm, tol).skew {
        return FailureClass { kind: FailureKind::None, sigma_min: pm.sigma_min(), witness: None };
    }
    let (v1, v2, lambda) = pm.kernel_vector();
    let tangent = (linalg::norm(&v1).powi(2) + linalg::norm(&v2).powi(2)).sqrt();
    let kind = if lambda.abs() <= tol * tangent { FailureKind::Parallel } else { FailureKind::Intersecting };
    FailureClass { kind, sigma_min: pm.sigma_min(), witness: Some(PairWitness { v1, v2, lambda }) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Skew,
    Parallel,
    Intersecting,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineRelation {
    pub skew: bool,
    pub kind: LineKind,
    /// Third singular value of `[d1 | d2 | p2 - p1]` after normalizing columns.
    pub margin: f64,
}

/// Relative position of the lines `p1 + s d1` and `p2 + s d2` in `R^N`,
/// decided from ranks of small matrices (independent of pair matrices).
pub fn line_pair_oracle(p1: &[f64], d1: &[f64], p2: &[f64], d2: &[f64], tol: f64) -> Result<LineRelation> {
    let nn = p1.len();
    if nn < 2 {
        return Err(Error::Input("ambient dimension must be at least 2".into()));
    }
    for (name, v) in [("d1", d1), ("p2", p2), ("d2", d2)] {
        check_dim(name, v.len(), nn)?;
    }
    if linalg::norm(d1) == 0.0 || linalg::norm(d2) == 0.0 {
        return Err(Error::Input("line direction must be nonzero".into()));
    }
    let (u1, u2) = (linalg::normalized(d1), linalg::normalized(d2));
    let dirs = DMatrix::from_fn(nn, 2, |r, c| if c == 0 { u1[r] } else { u2[r] });
    let sv2 = dirs.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
    if sv2 <= tol {
        return Ok(LineRelation { skew: false, kind: LineKind::Parallel, margin: 0.0 });
    }
    let w = linalg::sub(p2, p1);
    if linalg::norm(&w) == 0.0 || nn < 3 {
        return Ok(LineRelation { skew: false, kind: LineKind::Intersecting, margin: 0.0 });
    }
    let w = linalg::normalized(&w);
    let m = DMatrix::from_fn(nn, 3, |r, c| match c {
        0 => u1[r],
        1 => u2[r],
        _ => w[r],
    });
    let sv3 = m.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
    if sv3 > tol {
        Ok(LineRelation { skew: true, kind: LineKind::Skew, margin: sv3 })
    } else {
        Ok(LineRelation { skew: false, kind: LineKind::Intersecting, margin: sv3 })
    }
}

/// One non-skew pair found by a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepFailure {
    pub kind: FailureKind,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub sigma_min: f64,
}

/// Outcome of [`sweep_neighborhood`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub kind: &'static str,
    pub pass: bool,
    pub min_sigma: f64,
    pub worst_pair: [Vec<f64>; 2],
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub radius: f64,
    pub non_skew: usize,
    pub cross_checks: usize,
    pub oracle_disagreements: usize,
    /// First few failing pairs, in trial order.
    pub failures: Vec<SweepFailure>,
    pub margin_note: &'static str,
}

const SWEEP_FAILURES_KEPT: usize = 8;
const CROSS_CHECK_EVERY: usize = 100;

struct TrialOutcome {
    p: Vec<f64>,
    q: Vec<f64>,
    skew: PairSkewness,
    failure: Option<FailureKind>,
    checked: bool,
    disagreement: bool,
}

/// Sample pairs uniformly in `B_r(a)` and test each with [`is_pair_skew`].
///
/// Every 100th trial is cross-checked with [`line_pair_oracle`] on a random
/// pair of tangent lines (and, for non-skew pairs, on the witness lines).
pub fn sweep_neighborhood(f: &PolyMap, a: &[f64], r: f64, trials: usize, tol: f64, seed: u64) -> Result<SweepReport> {
    check_dim("center", a.len(), f.dim_in())?;
    if !(r > 0.0) {
        return Err(Error::Input(format!("radius must be positive, got {r}")));
    }
    if trials == 0 {
        return Err(Error::Input("trials must be at least 1".into()));
    }
    let outcomes: Vec<TrialOutcome> =
        (0..trials).into_par_iter().map(|i| sweep_trial(f, a, r, tol, seed, i)).collect::<Result<_>>()?;

    let mut min_sigma = f64::INFINITY;
    let mut worst = 0;
    let (mut non_skew, mut checks, mut disagreements) = (0, 0, 0);
    let mut failures = Vec::new();
    for (i, o) in outcomes.iter().enumerate() {
        if o.skew.sigma_min < min_sigma {
            min_sigma = o.skew.sigma_min;
            worst = i;
        }
        if !o.skew.skew {
            non_skew += 1;
            if failures.len() < SWEEP_FAILURES_KEPT {
                failures.push(SweepFailure {
                    kind: o.failure.unwrap_or(FailureKind::None),
                    p: o.p.clone(),
                    q: o.q.clone(),
                    sigma_min: o.skew.sigma_min,
                });
            }
        }
        checks += o.checked as usize;
        disagreements += o.disagreement as usize;
    }
    Ok(SweepReport {
        kind: "sweep",
        pass: non_skew == 0 && disagreements == 0,
        min_sigma,
        worst_pair: [outcomes[worst].p.clone(), outcomes[worst].q.clone()],
        trials,
        seed,
        tol,
        radius: r,
        non_skew,
        cross_checks: checks,
        oracle_disagreements: disagreements,
        failures,
        margin_note: "min_sigma is the smallest singular value of the column-normalized pair matrix; it depends on the domain coordinates",
    })
}

fn sweep_trial(f: &PolyMap, a: &[f64], r: f64, tol: f64, seed: u64, i: usize) -> Result<TrialOutcome> {
    let mut rng = sampling::trial_rng(seed, i as u64);
    let p = sampling::uniform_ball(&mut rng, a, r);
    let q = loop {
        let q = sampling::uniform_ball(&mut rng, a, r);
        if linalg::norm(&linalg::sub(&p, &q)) > r * 1e-6 {
            break q;
        }
    };
    let pm = pair_matrix(f, &p, &q)?;
    let skew = skewness_of(&pm, tol);
    let failure = (!skew.skew).then(|| classify_matrix(&pm, tol));
    let mut checked = false;
    let mut disagreement = false;
    if i % CROSS_CHECK_EVERY == 0 {
        checked = true;
        let n = f.dim_in();
        let (fp, fq) = (f.eval(&p)?, f.eval(&q)?);
        let (jp, jq) = (f.jacobian(&p)?, f.jacobian(&q)?);
        let u = DVector::from_vec(sampling::unit_sphere(&mut rng, n));
        let w = DVector::from_vec(sampling::unit_sphere(&mut rng, n));
        let lines = line_pair_oracle(&fp, linalg::to_vec(&(&jp * &u)).as_slice(), &fq, linalg::to_vec(&(&jq * &w)).as_slice(), tol)?;
        if skew.skew && !lines.skew {
            disagreement = true;
        }
        if let Some(FailureClass { witness: Some(wit), .. }) = &failure {
            if let Some(rel) = witness_lines(f, &p, &q, wit, &mut rng, tol)? {
                disagreement |= rel.skew;
            }
        }
    }
    Ok(TrialOutcome { p, q, skew, failure: failure.map(|c| c.kind), checked, disagreement })
}

/// Radii tried by [`empirical_skew_radius`] and whether each sweep passed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusSearch {
    pub radius: Option<f64>,
    pub attempts: Vec<(f64, bool)>,
}

pub const RADIUS_START: f64 = 0.5;
pub const RADIUS_FLOOR: f64 = 1e-6;

/// Halve `r` from 0.5 until a sweep of `B_r(a)` passes. Gives up below 1e-6;
/// the result is an empirical radius, not a proven one.
pub fn empirical_skew_radius(f: &PolyMap, a: &[f64], trials: usize, tol: f64, seed: u64) -> Result<RadiusSearch> {
    let mut attempts = Vec::new();
    let mut r = RADIUS_START;
    while r >= RADIUS_FLOOR {
        let pass = sweep_neighborhood(f, a, r, trials, tol, seed)?.pass;
        attempts.push((r, pass));
        if pass {
            return Ok(RadiusSearch { radius: Some(r), attempts });
        }
        r /= 2.0;
    }
    Ok(RadiusSearch { radius: None, attempts })
}

/// Tangent lines realizing a kernel witness, checked with the line oracle.
///
/// With `lambda != 0` the lines through `f(p)` along `Df_p(v1)` and through
/// `f(q)` along `Df_q(v2)` meet; with `lambda = 0` they are parallel. A zero
/// direction is replaced by a random tangent direction at that point, since
/// the other line then passes through the point itself.
pub fn witness_lines<R: rand::Rng + ?Sized>(
    f: &PolyMap,
    p: &[f64],
    q: &[f64],
    wit: &PairWitness,
    rng: &mut R,
    tol: f64,
) -> Result<Option<LineRelation>> {
    let n = f.dim_in();
    let (jp, jq) = (f.jacobian(p)?, f.jacobian(q)?);
    let mut d1 = linalg::to_vec(&(&jp * DVector::from_column_slice(&wit.v1)));
    let mut d2 = linalg::to_vec(&(&jq * DVector::from_column_slice(&wit.v2)));
    let scale = linalg::norm(&d1).max(linalg::norm(&d2));
    if scale == 0.0 {
        return Ok(None);
    }
    if linalg::norm(&d1) <= 1e-8 * scale {
        d1 = linalg::to_vec(&(&jp * DVector::from_vec(sampling::unit_sphere(rng, n))));
    }
    if linalg::norm(&d2) <= 1e-8 * scale {
        d2 = linalg::to_vec(&(&jq * DVector::from_vec(sampling::unit_sphere(rng, n))));
    }
    let (fp, fq) = (f.eval(p)?, f.eval(q)?);
    line_pair_oracle(&fp, &d1, &fq, &d2, tol.max(1e-7)).map(Some)
}
