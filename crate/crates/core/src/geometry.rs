//! Geometric form of the local condition.
//!
//! At an immersion point the local condition splits into two requirements:
//! the second fundamental form is a nonsingular bilinear map, and no regular
//! curve through the point has an image whose third derivative lies in the
//! span of the lower-order data. For curves in `R^3` the two together mean
//! nonzero torsion.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::jets::{Jet3, PolyMap, SymMultiMap};
use crate::linalg;
use crate::local_condition::{self, BoundaryEvaluator, LocalOptions, Verdict};
use crate::sphere::{self, SearchOptions};

/// `Df_a` must have `sigma_min` above this to count as an immersion.
pub const IMMERSION_TOL: f64 = 1e-10;

/// Relative singular-value cutoff when projecting onto a column span.
const SPAN_RTOL: f64 = 1e-12;

const ALTERNATING_SWEEPS: usize = 50;

/// First three derivatives of a curve at `t0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveJet {
    pub t0: f64,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
}

impl CurveJet {
    pub fn new(t0: f64, g1: Vec<f64>, g2: Vec<f64>, g3: Vec<f64>) -> Result<Self> {
        check_dim("second derivative", g2.len(), g1.len())?;
        check_dim("third derivative", g3.len(), g1.len())?;
        Ok(CurveJet { t0, g1, g2, g3 })
    }

    /// Jet of the image curve `t -> f(t)` of a map with one-dimensional domain.
    pub fn of_curve(f: &PolyMap, t0: f64) -> Result<Self> {
        check_dim("curve domain", f.dim_in(), 1)?;
        let jet = f.jet3(&[t0])?;
        Ok(CurveJet {
            t0,
            g1: jet.d1.apply_with(&[&[1.0]]),
            g2: jet.d2.apply_diag_with(&[1.0]),
            g3: jet.d3.apply_diag_with(&[1.0]),
        })
    }

    /// The cubic model curve `gamma(t0 + s) = a + g1 s + g2 s^2/2 + g3 s^3/6`.
    pub fn model_point(&self, a: &[f64], s: f64) -> Vec<f64> {
        (0..a.len()).map(|i| a[i] + self.g1[i] * s + self.g2[i] * s * s / 2.0 + self.g3[i] * s * s * s / 6.0).collect()
    }

    /// Jet after the reparameterization `t = t0 + c s + b s^2/2 + d s^3/6`.
    pub fn reparameterized(&self, c: f64, b: f64, d: f64) -> CurveJet {
        let g1 = self.g1.iter().map(|x| c * x).collect();
        let g2 = self.g2.iter().zip(&self.g1).map(|(x2, x1)| c * c * x2 + b * x1).collect();
        let g3 = (0..self.g1.len())
            .map(|i| c * c * c * self.g3[i] + 3.0 * b * c * self.g2[i] + d * self.g1[i])
            .collect();
        CurveJet { t0: 0.0, g1, g2, g3 }
    }
}

/// `II(u, v) = P_perp D^2 f_a(u, v)`, with `P_perp` the orthogonal projector
/// onto the complement of `Im Df_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondFundamentalForm {
    pub a: Vec<f64>,
    pub form: SymMultiMap,
    /// Orthonormal basis of `Im Df_a` (Gram-Schmidt in column order).
    pub tangent_basis: DMatrix<f64>,
}

impl SecondFundamentalForm {
    pub fn apply(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.form.apply(&[u, v])
    }

    /// Largest `|<t, II(e_i, e_j)>|` over tangent basis vectors `t`.
    pub fn max_tangential_component(&self) -> f64 {
        let n = self.form.dim_in();
        let mut worst: f64 = 0.0;
        for idx in crate::jets::multi_indices(n, 2) {
            let v = DVector::from_column_slice(self.form.coeff(&idx).expect("own index"));
            let proj = self.tangent_basis.transpose() * v;
            worst = worst.max(proj.amax());
        }
        worst
    }
}

fn immersion_basis(d1: &SymMultiMap) -> Result<DMatrix<f64>> {
    let df = d1.as_matrix();
    let s = linalg::sigma_min(&df);
    if !(s > IMMERSION_TOL) {
        return Err(Error::NotImmersion { sigma_min: s });
    }
    Ok(linalg::orthonormal_columns(&df, 0.0))
}

pub fn second_fundamental_form(f: &PolyMap, a: &[f64]) -> Result<SecondFundamentalForm> {
    check_dim("base point", a.len(), f.dim_in())?;
    let jet = f.jet3(a)?;
    form_from_jet(&jet, a)
}

pub(crate) fn form_from_jet(jet: &Jet3, a: &[f64]) -> Result<SecondFundamentalForm> {
    let q = immersion_basis(&jet.d1)?;
    let nn = jet.d1.dim_out();
    let proj = DMatrix::identity(nn, nn) - &q * q.transpose();
    Ok(SecondFundamentalForm { a: a.to_vec(), form: jet.d2.map_output(&proj)?, tangent_basis: q })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryOptions {
    pub tol: f64,
    pub search: SearchOptions,
}

impl GeometryOptions {
    pub fn for_dim(n: usize, tol: f64, seed: u64) -> Self {
        GeometryOptions { tol, search: SearchOptions::for_dim(n, seed) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonsingularResult {
    pub nonsingular: bool,
    pub min_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// `min |II(x, y)|` over unit `x`, `y`.
///
/// For fixed `x` the inner minimum is `sigma_min` of `II(x, .)`, so this is
/// a minimization over one sphere, followed by alternating refinement of `x`
/// and `y`.
pub fn ii_nonsingular(form: &SecondFundamentalForm, opts: &GeometryOptions) -> NonsingularResult {
    bilinear_min(&form.form, opts)
}

pub fn bilinear_min(b: &SymMultiMap, opts: &GeometryOptions) -> NonsingularResult {
    let n = b.dim_in();
    let inner = |x: &[f64]| linalg::svd_summary(&b.partial_matrix(&[x]));
    let found = sphere::minimize(n, |x| inner(x).sigma_min, &opts.search);
    let mut x = found.argmin;
    let mut y = linalg::to_vec(&inner(&x).right_vector);
    let mut value = found.value;
    for _ in 0..ALTERNATING_SWEEPS {
        let s = inner(&y);
        let before = value;
        if s.sigma_min < value {
            value = s.sigma_min;
            x = linalg::to_vec(&s.right_vector);
        }
        let s = inner(&x);
        if s.sigma_min < value {
            value = s.sigma_min;
            y = linalg::to_vec(&s.right_vector);
        }
        if !(value < before * (1.0 - 1e-12)) {
            break;
        }
    }
    let nonsingular = value > opts.tol;
    NonsingularResult { nonsingular, min_norm: value, witness: (!nonsingular).then_some((x, y)) }
}

/// `(f o gamma)'''(t0) = Df_a(g3) + D^2f_a(3 g2, g1) + D^3f_a(g1, g1, g1)`
/// for a curve with `gamma(t0) = a`.
pub fn faa_di_bruno_third(f: &PolyMap, a: &[f64], jet: &CurveJet) -> Result<Vec<f64>> {
    check_dim("base point", a.len(), f.dim_in())?;
    check_dim("curve jet", jet.g1.len(), f.dim_in())?;
    Ok(third_from_jet(&f.jet3(a)?, jet))
}

pub(crate) fn third_from_jet(j: &Jet3, c: &CurveJet) -> Vec<f64> {
    let g2x3: Vec<f64> = c.g2.iter().map(|x| 3.0 * x).collect();
    let a = j.d1.apply_with(&[&c.g3]);
    let b = j.d2.apply_with(&[&g2x3, &c.g1]);
    let d = j.d3.apply_diag_with(&c.g1);
    a.iter().zip(&b).zip(&d).map(|((x, y), z)| x + y + z).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveConditionResult {
    pub holds: bool,
    pub min_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_y: Option<Vec<f64>>,
}

/// Distance from `D^3f_a(y, y, y)` to the span of `[Df_a | D^2f_a(y, .)]`.
pub fn curve_residual(jet: &Jet3, y: &[f64]) -> f64 {
    let n = y.len();
    let nn = jet.d1.dim_out();
    let mut m = DMatrix::zeros(nn, 2 * n);
    m.view_mut((0, 0), (nn, n)).copy_from(&jet.d1.as_matrix());
    m.view_mut((0, n), (nn, n)).copy_from(&jet.d2.partial_matrix(&[y]));
    let q = linalg::range_basis(&m, SPAN_RTOL);
    let c = DVector::from_vec(jet.d3.apply_diag_with(y));
    linalg::orthogonal_residual(&q, &c).norm()
}

/// No unit `y` has `D^3f_a(y,y,y)` in the span of `[Df_a | D^2f_a(y, .)]`.
///
/// A solution with `lambda != 0` of the third-order equation rescales (by the
/// real cube root of `lambda`) to one with `lambda = 1`, which is exactly such
/// a `y`.
pub fn curve_third_derivative_condition(f: &PolyMap, a: &[f64], opts: &GeometryOptions) -> Result<CurveConditionResult> {
    check_dim("base point", a.len(), f.dim_in())?;
    let jet = f.jet3(a)?;
    immersion_basis(&jet.d1)?;
    Ok(curve_condition_from_jet(&jet, opts))
}

pub(crate) fn curve_condition_from_jet(jet: &Jet3, opts: &GeometryOptions) -> CurveConditionResult {
    let found = sphere::minimize(jet.d1.dim_in(), |y| curve_residual(jet, y), &opts.search);
    let holds = found.value > opts.tol;
    CurveConditionResult { holds, min_residual: found.value, witness_y: (!holds).then_some(found.argmin) }
}

/// `det[g1, g2, g3] / |g1 x g2|^2` for a curve in `R^3`.
pub fn torsion(jet: &CurveJet, tol: f64) -> Result<f64> {
    check_dim("curve in R^3", jet.g1.len(), 3)?;
    let (u, v, w) = (&jet.g1, &jet.g2, &jet.g3);
    let cross = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let cn = linalg::norm(&cross);
    if !(cn > tol) {
        return Err(Error::UndefinedTorsion { cross_norm: cn });
    }
    Ok(linalg::dot(&cross, w) / (cn * cn))
}

/// Three-way comparison of the local condition with its geometric form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub kind: &'static str,
    pub local: bool,
    pub local_margin: f64,
    pub ii_nonsingular: bool,
    pub ii_margin: f64,
    pub curve_condition: bool,
    pub curve_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub torsion: Option<f64>,
    /// `local == (ii_nonsingular && curve_condition)`.
    pub consistent: bool,
    /// Some margin is within a factor 10 of the tolerance.
    pub borderline: bool,
    /// No disagreement outside the borderline band.
    pub pass: bool,
    pub tol: f64,
}

impl EquivalenceReport {
    /// A disagreement outside the borderline band.
    pub fn is_violation(&self) -> bool {
        !self.consistent && !self.borderline
    }
}

pub const BORDERLINE_FACTOR: f64 = 10.0;

/// `margin` lies within a factor [`BORDERLINE_FACTOR`] of `tol` on either side.
pub fn is_borderline(margin: f64, tol: f64) -> bool {
    margin > tol / BORDERLINE_FACTOR && margin < tol * BORDERLINE_FACTOR
}

pub fn equivalence_check(f: &PolyMap, a: &[f64], tol: f64, seed: u64) -> Result<EquivalenceReport> {
    check_dim("base point", a.len(), f.dim_in())?;
    let jet = f.jet3(a)?;
    let n = f.dim_in();
    let form = form_from_jet(&jet, a)?;
    let gopts = GeometryOptions::for_dim(n, tol, seed);
    let lopts = LocalOptions { tol, seed, ..LocalOptions::default() };
    let local = local_condition::check_with_evaluator(&BoundaryEvaluator::from_jet(jet.clone()), &lopts);
    let ii = ii_nonsingular(&form, &gopts);
    let curve = curve_condition_from_jet(&jet, &gopts);
    let torsion = if n == 1 && f.dim_out() == 3 {
        torsion(&CurveJet::of_curve(f, a[0])?, IMMERSION_TOL).ok()
    } else {
        None
    };
    let local_holds = local.holds == Verdict::True;
    let borderline = [local.min_sigma, ii.min_norm, curve.min_residual].iter().any(|&m| is_borderline(m, tol));
    let consistent = local_holds == (ii.nonsingular && curve.holds);
    Ok(EquivalenceReport {
        kind: "geometry",
        local: local_holds,
        local_margin: local.min_sigma,
        ii_nonsingular: ii.nonsingular,
        ii_margin: ii.min_norm,
        curve_condition: curve.holds,
        curve_margin: curve.min_residual,
        torsion,
        consistent,
        borderline,
        pass: consistent || borderline,
        tol,
    })
}
