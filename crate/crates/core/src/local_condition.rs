//! The third-order local condition at a point.
//!
//! The condition holds at `a` when `Df_a(v1) + D^2f_a(v2, v3) + lambda
//! D^3f_a(v3, v3, v3) = 0` with `v3 != 0` forces `v1 = v2 = 0` and
//! `lambda = 0`. Rescaling `v3` to unit length (`v2 -> |v3| v2`,
//! `lambda -> |v3|^3 lambda`) turns this into injectivity of the boundary
//! matrix `[Df_a | D^2f_a(y, .) | D^3f_a(y, y, y)]` for every unit `y`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::blowup::{self, check_unit};
use crate::error::{check_dim, Error, Result};
use crate::jets::{Jet3, PolyMap};
use crate::linalg;
use crate::sphere::{self, SearchOptions};

/// Default absolute threshold on `sigma_min`.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMatrix {
    pub a: Vec<f64>,
    pub y: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

/// `[Df_a | D^2f_a(y, .) | D^3f_a(y, y, y)]` for a unit `y`.
pub fn boundary_matrix(f: &PolyMap, a: &[f64], y: &[f64]) -> Result<BoundaryMatrix> {
    check_dim("base point", a.len(), f.dim_in())?;
    check_dim("direction", y.len(), f.dim_in())?;
    check_unit(y)?;
    let jet = f.jet3(a)?;
    Ok(BoundaryMatrix { a: a.to_vec(), y: y.to_vec(), matrix: blowup::boundary_value(&jet, y) })
}

/// Residual `Df_a(v1) + D^2f_a(v2, v3) + lambda D^3f_a(v3, v3, v3)`.
pub fn condition_residual(jet: &Jet3, v1: &[f64], v2: &[f64], v3: &[f64], lambda: f64) -> Vec<f64> {
    let a = jet.d1.apply_with(&[v1]);
    let b = jet.d2.apply_with(&[v2, v3]);
    let c = jet.d3.apply_with(&[v3, v3, v3]);
    a.iter().zip(&b).zip(&c).map(|((x, y), z)| x + y + lambda * z).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn is_true(self) -> bool {
        self == Verdict::True
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Unknown => "unknown",
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Heuristic,
    Certified,
}

/// Kernel vector `(v1, v2, lambda)` of a boundary matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelWitness {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub lambda: f64,
    #[serde(skip)]
    pub residual: f64,
    #[serde(skip)]
    pub sigma_min: f64,
}

impl KernelWitness {
    pub fn as_vector(&self) -> Vec<f64> {
        let mut z = self.v1.clone();
        z.extend_from_slice(&self.v2);
        z.push(self.lambda);
        z
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalConditionReport {
    pub holds: Verdict,
    pub min_sigma: f64,
    pub argmin_y: Vec<f64>,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<f64>,
    #[serde(rename = "lipschitz", skip_serializing_if = "Option::is_none")]
    pub lipschitz_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<KernelWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub net_points: Option<usize>,
    /// Net points whose margin does not exceed the Lipschitz slack (capped).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_region: Option<Vec<Vec<f64>>>,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalOptions {
    pub tol: f64,
    /// Samples per domain dimension (total `samples_per_dim * n`).
    pub samples_per_dim: usize,
    pub starts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions { tol: DEFAULT_TOL, samples_per_dim: 2048, starts: 8, steps: 200, seed: 0 }
    }
}

impl LocalOptions {
    pub fn search(&self, n: usize) -> SearchOptions {
        SearchOptions { samples: self.samples_per_dim * n, starts: self.starts, steps: self.steps, seed: self.seed }
    }
}

/// Evaluates boundary matrices at many directions for one base point.
#[derive(Clone, Debug)]
pub struct BoundaryEvaluator {
    jet: Jet3,
}

impl BoundaryEvaluator {
    pub fn new(f: &PolyMap, a: &[f64]) -> Result<Self> {
        check_dim("base point", a.len(), f.dim_in())?;
        Ok(BoundaryEvaluator { jet: f.jet3(a)? })
    }

    pub fn from_jet(jet: Jet3) -> Self {
        BoundaryEvaluator { jet }
    }

    pub fn jet(&self) -> &Jet3 {
        &self.jet
    }

    pub fn dim_in(&self) -> usize {
        self.jet.d1.dim_in()
    }

    pub fn dim_out(&self) -> usize {
        self.jet.d1.dim_out()
    }

    pub fn matrix(&self, y: &[f64]) -> DMatrix<f64> {
        blowup::boundary_value(&self.jet, y)
    }

    pub fn sigma_min(&self, y: &[f64]) -> f64 {
        linalg::sigma_min(&self.matrix(y))
    }

    /// Right singular vector of the smallest singular value, split into
    /// blocks, with the residual `|M z|`.
    pub fn smallest_pair(&self, y: &[f64]) -> (KernelWitness, f64) {
        let m = self.matrix(y);
        let s = linalg::svd_summary(&m);
        let n = self.dim_in();
        let z = &s.right_vector;
        let residual = (&m * z).norm();
        let w = KernelWitness {
            v1: z.rows(0, n).iter().copied().collect(),
            v2: z.rows(n, n).iter().copied().collect(),
            lambda: z[2 * n],
            residual,
            sigma_min: s.sigma_min,
        };
        (w, s.sigma_max)
    }

    /// `||D^2 f_a||_est + 3 ||D^3 f_a||_est`, a Lipschitz constant of
    /// `y -> boundary matrix` in spectral norm on the sphere.
    pub fn lipschitz_bound(&self) -> f64 {
        self.jet.d2.operator_norm_estimate() + 3.0 * self.jet.d3.operator_norm_estimate()
    }
}

/// Kernel witness at `y` when `sigma_min <= tol * sigma_max`.
pub fn kernel_witness(f: &PolyMap, a: &[f64], y: &[f64], tol: f64) -> Result<Option<KernelWitness>> {
    check_unit(y)?;
    let ev = BoundaryEvaluator::new(f, a)?;
    check_dim("direction", y.len(), f.dim_in())?;
    Ok(witness_at(&ev, y, tol))
}

fn witness_at(ev: &BoundaryEvaluator, y: &[f64], tol: f64) -> Option<KernelWitness> {
    let (w, smax) = ev.smallest_pair(y);
    (w.sigma_min <= tol * smax).then_some(w)
}

fn structural_failure(ev: &BoundaryEvaluator, mode: Mode, tol: f64) -> LocalConditionReport {
    let (n, nn) = (ev.dim_in(), ev.dim_out());
    let mut y = vec![0.0; n];
    y[0] = 1.0;
    let (w, _) = ev.smallest_pair(&y);
    LocalConditionReport {
        holds: Verdict::False,
        min_sigma: 0.0,
        argmin_y: y,
        mode,
        mesh: None,
        lipschitz_bound: None,
        witness: Some(w),
        reason: Some(format!("N < 2n+1 ({nn} < {})", 2 * n + 1)),
        net_points: None,
        failing_region: None,
        tol,
    }
}

/// Heuristic decision: minimize `sigma_min` of the boundary matrix over the
/// sphere and compare with `opts.tol`.
pub fn check_local_condition(f: &PolyMap, a: &[f64], opts: &LocalOptions) -> Result<LocalConditionReport> {
    let ev = BoundaryEvaluator::new(f, a)?;
    Ok(check_with_evaluator(&ev, opts))
}

pub fn check_with_evaluator(ev: &BoundaryEvaluator, opts: &LocalOptions) -> LocalConditionReport {
    let (n, nn) = (ev.dim_in(), ev.dim_out());
    if nn < 2 * n + 1 {
        return structural_failure(ev, Mode::Heuristic, opts.tol);
    }
    let found = sphere::minimize(n, |y| ev.sigma_min(y), &opts.search(n));
    let holds = found.value > opts.tol;
    let witness = (!holds).then(|| ev.smallest_pair(&found.argmin).0);
    LocalConditionReport {
        holds: if holds { Verdict::True } else { Verdict::False },
        min_sigma: found.value,
        argmin_y: found.argmin,
        mode: Mode::Heuristic,
        mesh: None,
        lipschitz_bound: None,
        witness,
        reason: None,
        net_points: None,
        failing_region: None,
        tol: opts.tol,
    }
}

const REGION_POINTS_KEPT: usize = 32;

/// Certified decision on a covering net of the sphere.
///
/// `holds = true` is returned only when the net minimum exceeds the Lipschitz
/// slack `L * mesh` by more than `tol`. A failure needs a kernel witness (from
/// the net or a heuristic search); otherwise the verdict is `unknown` and the
/// under-margin net points are reported.
pub fn certify_local_condition(f: &PolyMap, a: &[f64], mesh: f64, opts: &LocalOptions) -> Result<LocalConditionReport> {
    certify_with_budget(f, a, mesh, opts, sphere::NET_BUDGET)
}

pub fn certify_with_budget(f: &PolyMap, a: &[f64], mesh: f64, opts: &LocalOptions, budget: u64) -> Result<LocalConditionReport> {
    let n = f.dim_in();
    if n > 4 {
        return Err(Error::Input(format!("certified mode supports n <= 4, got n = {n}")));
    }
    if !(mesh > 0.0) {
        return Err(Error::Input(format!("mesh must be positive, got {mesh}")));
    }
    let ev = BoundaryEvaluator::new(f, a)?;
    if f.dim_out() < 2 * n + 1 {
        return Ok(structural_failure(&ev, Mode::Certified, opts.tol));
    }
    let net = sphere::sphere_net(n, mesh, budget)?;
    let lipschitz = ev.lipschitz_bound();
    let sigmas: Vec<f64> = net.points.par_iter().map(|y| ev.sigma_min(y)).collect();
    let (imin, min_sigma) =
        sigmas.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let slack = lipschitz * net.mesh;
    let mut report = LocalConditionReport {
        holds: Verdict::Unknown,
        min_sigma,
        argmin_y: net.points[imin].clone(),
        mode: Mode::Certified,
        mesh: Some(net.mesh),
        lipschitz_bound: Some(lipschitz),
        witness: None,
        reason: None,
        net_points: Some(net.points.len()),
        failing_region: None,
        tol: opts.tol,
    };
    if min_sigma - slack > opts.tol {
        report.holds = Verdict::True;
        return Ok(report);
    }
    if let Some(w) = witness_at(&ev, &net.points[imin], opts.tol).filter(|_| min_sigma <= opts.tol) {
        report.holds = Verdict::False;
        report.witness = Some(w);
        return Ok(report);
    }
    let heuristic = check_with_evaluator(&ev, opts);
    if heuristic.holds == Verdict::False {
        report.holds = Verdict::False;
        report.min_sigma = heuristic.min_sigma;
        report.argmin_y = heuristic.argmin_y;
        report.witness = heuristic.witness;
        return Ok(report);
    }
    let region: Vec<Vec<f64>> = net
        .points
        .iter()
        .zip(&sigmas)
        .filter(|(_, &s)| s - slack <= opts.tol)
        .take(REGION_POINTS_KEPT)
        .map(|(y, _)| y.clone())
        .collect();
    report.reason = Some(format!("net minimum {min_sigma:e} does not exceed Lipschitz slack {slack:e}"));
    report.failing_region = Some(region);
    Ok(report)
}

/// Boundary-matrix rank deficiency realized as a solution of the
/// third-order equation: `(v1, v2, v3 = y, lambda)`.
pub fn witness_residual(ev: &BoundaryEvaluator, y: &[f64], w: &KernelWitness) -> f64 {
    let z = DVector::from_vec(w.as_vector());
    (ev.matrix(y) * z).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_unit_direction_is_input_error() {
        let f = PolyMap::linear(&DMatrix::identity(3, 1)).unwrap();
        assert!(matches!(boundary_matrix(&f, &[0.0], &[2.0]), Err(Error::Input(_))));
    }

    #[test]
    fn certified_mode_rejects_large_n() {
        let f = PolyMap::linear(&DMatrix::identity(11, 5)).unwrap();
        let r = certify_local_condition(&f, &[0.0; 5], 0.1, &LocalOptions::default());
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn small_codomain_fails_structurally() {
        let f = PolyMap::linear(&DMatrix::identity(4, 2)).unwrap();
        let r = check_local_condition(&f, &[0.0, 0.0], &LocalOptions::default()).unwrap();
        assert_eq!(r.holds, Verdict::False);
        assert!(r.reason.unwrap().starts_with("N < 2n+1"));
        assert!(r.witness.unwrap().residual < 1e-12);
    }
}
