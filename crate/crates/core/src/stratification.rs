//! Jet triples `(L, B, T)` and the set where the local condition fails.
//!
//! A triple defines the cubic `x -> L(x) + B(x,x)/2 + T(x,x,x)/6`; the failure
//! set consists of the triples whose cubic fails the local condition at `0`.
//! For `N >= 3n` it has codimension `N - 3n + 1`, so random triples satisfy
//! the condition with probability one. This module samples that claim and
//! checks the transversality computation behind the codimension count at the
//! counterexample point.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::constructions;
use crate::error::{Error, Result};
use crate::jets::{PolyMap, SymMultiMap};
use crate::linalg;
use crate::local_condition::{self, BoundaryEvaluator, LocalOptions};
use crate::sampling;

/// A point of `hom(R^n + sym^2 R^n + sym^3 R^n, R^N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetTriple {
    pub n: usize,
    pub big_n: usize,
    pub l: SymMultiMap,
    pub b: SymMultiMap,
    pub t: SymMultiMap,
}

impl JetTriple {
    pub fn new(l: SymMultiMap, b: SymMultiMap, t: SymMultiMap) -> Result<Self> {
        let (n, big_n) = (l.dim_in(), l.dim_out());
        let shapes = [(l.degree(), 1), (b.degree(), 2), (t.degree(), 3)];
        if shapes.iter().any(|(got, want)| got != want)
            || [&b, &t].iter().any(|m| m.dim_in() != n || m.dim_out() != big_n)
        {
            return Err(Error::Input("triple parts must have degrees 1, 2, 3 and equal dimensions".into()));
        }
        Ok(JetTriple { n, big_n, l, b, t })
    }

    pub fn to_polymap(&self) -> PolyMap {
        PolyMap::new(self.n, self.big_n, vec![0.0; self.big_n], vec![self.l.clone(), self.b.clone(), self.t.clone()])
            .expect("shapes validated on construction")
    }

    pub fn scaled(&self, c: f64) -> JetTriple {
        JetTriple { l: self.l.scaled(c), b: self.b.scaled(c), t: self.t.scaled(c), ..self.clone() }
    }

    pub fn evaluator(&self) -> BoundaryEvaluator {
        BoundaryEvaluator::from_jet(crate::jets::Jet3 { d1: self.l.clone(), d2: self.b.clone(), d3: self.t.clone() })
    }
}

/// Triple with i.i.d. standard Gaussian coefficients in the graded-lex basis.
pub fn sample_triple(n: usize, big_n: usize, seed: u64) -> Result<JetTriple> {
    sample_triple_stream(n, big_n, seed, 0)
}

/// Same as [`sample_triple`] on an independent random stream.
pub fn sample_triple_stream(n: usize, big_n: usize, seed: u64, stream: u64) -> Result<JetTriple> {
    if n == 0 || big_n == 0 {
        return Err(Error::Input("triple dimensions must be positive".into()));
    }
    let mut rng = sampling::trial_rng(seed, stream);
    let mut part = |k: usize| {
        let len = crate::jets::multi_indices(n, k).len() * big_n;
        SymMultiMap::from_coeffs(n, big_n, k, sampling::gaussian_vec(&mut rng, len))
    };
    let (l, b, t) = (part(1)?, part(2)?, part(3)?);
    JetTriple::new(l, b, t)
}

/// Modify `L` by a rank-one term so that `(v1, v2, lambda)` with `v3 = y`
/// solves the third-order equation exactly. `B` and `T` are unchanged and
/// `v1` must be nonzero.
pub fn plant_failure(triple: &JetTriple, y: &[f64], v1: &[f64], v2: &[f64], lambda: f64) -> Result<JetTriple> {
    let n = triple.n;
    for (name, v) in [("y", y), ("v1", v1), ("v2", v2)] {
        crate::error::check_dim(name, v.len(), n)?;
    }
    let vv = linalg::dot(v1, v1);
    if vv == 0.0 {
        return Err(Error::Input("v1 must be nonzero".into()));
    }
    let r = local_condition::condition_residual(triple.evaluator().jet(), v1, v2, y, lambda);
    let l = SymMultiMap::from_fn(n, triple.big_n, 1, |idx| {
        let col = triple.l.coeff(idx).expect("own index");
        col.iter().zip(&r).map(|(c, ri)| c - ri * v1[idx[0]] / vv).collect()
    })?;
    JetTriple::new(l, triple.b.clone(), triple.t.clone())
}

/// A trial is a confirmed failure when its `min_sigma` is below
/// `FAILURE_SIGMA` and the kernel witness has residual below `FAILURE_RESIDUAL`.
pub const FAILURE_SIGMA: f64 = 1e-10;
pub const FAILURE_RESIDUAL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    /// `N >= 3n`: failures have probability zero.
    None,
    /// `N < 2n + 1`: the boundary matrix is wide, so every trial fails.
    All,
    /// `2n + 1 <= N < 3n`: no prediction.
    Unspecified,
}

impl Expectation {
    pub fn for_dims(n: usize, big_n: usize) -> Self {
        if big_n < 2 * n + 1 {
            Expectation::All
        } else if big_n >= 3 * n {
            Expectation::None
        } else {
            Expectation::Unspecified
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericityReport {
    pub kind: &'static str,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub trials: usize,
    pub failures: usize,
    pub min_sigma_min: f64,
    /// First quartile, median and third quartile of the per-trial `min_sigma`.
    pub min_sigma_quartiles: [f64; 3],
    pub expected_failures: Expectation,
    pub pass: bool,
    pub seed: u64,
    /// Per-trial `min_sigma`, in trial order.
    #[serde(skip)]
    pub min_sigmas: Vec<f64>,
}

/// Quartiles by linear interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> [f64; 3] {
    if values.is_empty() {
        return [f64::NAN; 3];
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    [at(0.25), at(0.5), at(0.75)]
}

/// Outcome of one genericity trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub min_sigma: f64,
    pub witness_residual: Option<f64>,
    pub confirmed_failure: bool,
}

pub fn run_trial(triple: &JetTriple, opts: &LocalOptions) -> TrialOutcome {
    let ev = triple.evaluator();
    let report = local_condition::check_with_evaluator(&ev, opts);
    let mut out = TrialOutcome { min_sigma: report.min_sigma, witness_residual: None, confirmed_failure: false };
    if report.min_sigma < FAILURE_SIGMA {
        let (w, _) = ev.smallest_pair(&report.argmin_y);
        out.witness_residual = Some(w.residual);
        out.confirmed_failure = w.residual < FAILURE_RESIDUAL;
    }
    out
}

/// Runs the local condition at `0` on `trials` random triples. Trial `i`
/// samples from stream `i` of the root seed.
pub fn genericity_experiment(n: usize, big_n: usize, trials: usize, seed: u64, opts: &LocalOptions) -> Result<GenericityReport> {
    if trials == 0 {
        return Err(Error::Input("trials must be at least 1".into()));
    }
    let outcomes: Vec<TrialOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let triple = sample_triple_stream(n, big_n, seed, i)?;
            let trial_opts = LocalOptions { seed: seed.wrapping_add(i), ..opts.clone() };
            Ok(run_trial(&triple, &trial_opts))
        })
        .collect::<Result<_>>()?;
    let failures = outcomes.iter().filter(|o| o.confirmed_failure).count();
    let min_sigmas: Vec<f64> = outcomes.iter().map(|o| o.min_sigma).collect();
    let expected = Expectation::for_dims(n, big_n);
    let pass = match expected {
        Expectation::None => failures == 0,
        Expectation::All => failures == trials,
        Expectation::Unspecified => true,
    };
    Ok(GenericityReport {
        kind: "genericity",
        n,
        big_n,
        trials,
        failures,
        min_sigma_min: min_sigmas.iter().copied().fold(f64::INFINITY, f64::min),
        min_sigma_quartiles: quartiles(&min_sigmas),
        expected_failures: expected,
        pass,
        seed,
        min_sigmas,
    })
}

/// The counterexample point: `(v1, v2, lambda) = (0, e_n, 0)` and `v3 = e_1`
/// for the triple of [`constructions::appendix_triple`].
#[derive(Clone, Debug)]
pub struct TangentPoint {
    pub triple: JetTriple,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub lambda: f64,
    pub v3: Vec<f64>,
}

impl TangentPoint {
    pub fn appendix(n: usize, big_n: usize) -> Result<Self> {
        let f = constructions::appendix_triple(n, big_n)?;
        let jet = f.jet3(&vec![0.0; n])?;
        let triple = JetTriple::new(jet.d1, jet.d2, jet.d3)?;
        let mut v2 = vec![0.0; n];
        v2[n - 1] = 1.0;
        let mut v3 = vec![0.0; n];
        v3[0] = 1.0;
        Ok(TangentPoint { triple, v1: vec![0.0; n], v2, lambda: 0.0, v3 })
    }

    /// `L(w1) + B(w2, v3) + B(v2, w3) + nu T(v3, v3, v3) + 3 lambda T(w3, v3, v3)`.
    pub fn tangent_map(&self, w1: &[f64], w2: &[f64], nu: f64, w3: &[f64]) -> Vec<f64> {
        let tr = &self.triple;
        let v3 = &self.v3;
        let terms = [
            tr.l.apply_with(&[w1]),
            tr.b.apply_with(&[w2, v3]),
            tr.b.apply_with(&[&self.v2, w3]),
            tr.t.apply_diag_with(v3).into_iter().map(|x| nu * x).collect(),
            tr.t.apply_with(&[w3, v3, v3]).into_iter().map(|x| 3.0 * self.lambda * x).collect(),
        ];
        (0..tr.big_n).map(|r| terms.iter().map(|t| t[r]).sum()).collect()
    }

    /// `N x (3n+1)` matrix of [`TangentPoint::tangent_map`] in the variable
    /// order `(w1, w2, nu, w3)`, assembled from blocks.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let (n, nn) = (self.triple.n, self.triple.big_n);
        let tr = &self.triple;
        let mut m = DMatrix::zeros(nn, 3 * n + 1);
        m.view_mut((0, 0), (nn, n)).copy_from(&tr.l.as_matrix());
        m.view_mut((0, n), (nn, n)).copy_from(&tr.b.partial_matrix(&[&self.v3]));
        m.column_mut(2 * n).copy_from_slice(&tr.t.apply_diag_with(&self.v3));
        let w3_block = tr.b.partial_matrix(&[&self.v2]) + tr.t.partial_matrix(&[&self.v3, &self.v3]) * (3.0 * self.lambda);
        m.view_mut((0, 2 * n + 1), (nn, n)).copy_from(&w3_block);
        m
    }

    /// Normals of the constraints `(w1, w2, nu) . (v1, v2, lambda) = 0` and
    /// `w3 . v3 = 0`, as columns in `R^{3n+1}`.
    pub fn constraint_normals(&self) -> DMatrix<f64> {
        let n = self.triple.n;
        let mut c = DMatrix::zeros(3 * n + 1, 2);
        for i in 0..n {
            c[(i, 0)] = self.v1[i];
            c[(n + i, 0)] = self.v2[i];
            c[(2 * n + 1 + i, 1)] = self.v3[i];
        }
        c[(2 * n, 0)] = self.lambda;
        c
    }

    /// Orthonormal basis of the `(3n-1)`-dimensional constraint subspace:
    /// Gram-Schmidt on the normals followed by the coordinate vectors, keeping
    /// the vectors produced after the normals.
    pub fn constraint_basis(&self) -> DMatrix<f64> {
        let dim = 3 * self.triple.n + 1;
        let normals = self.constraint_normals();
        let mut m = DMatrix::zeros(dim, dim + 2);
        m.view_mut((0, 0), (dim, 2)).copy_from(&normals);
        m.view_mut((0, 2), (dim, dim)).fill_with_identity();
        let q = linalg::orthonormal_columns(&m, 1e-10);
        q.columns(2, q.ncols() - 2).into_owned()
    }
}

/// The tangent-space system at the counterexample point, restricted to the
/// constraint subspace: an `N x (3n-1)` matrix.
pub fn appendix_tangent_system(n: usize, big_n: usize) -> Result<DMatrix<f64>> {
    let pt = TangentPoint::appendix(n, big_n)?;
    Ok(pt.full_matrix() * pt.constraint_basis())
}

pub const TRANSVERSALITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransversalityReport {
    pub kind: &'static str,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub injective: bool,
    pub sigma_min: f64,
    /// Kernel dimension of the system without the constraints.
    pub unconstrained_kernel_dim: usize,
    pub tol: f64,
}

pub fn transversality_check(n: usize, big_n: usize, tol: f64) -> Result<TransversalityReport> {
    let pt = TangentPoint::appendix(n, big_n)?;
    let restricted = pt.full_matrix() * pt.constraint_basis();
    let sigma_min = linalg::sigma_min(&restricted);
    let full = pt.full_matrix();
    let rank = full.clone().singular_values().iter().filter(|&&s| s > tol).count();
    Ok(TransversalityReport {
        kind: "transversality",
        n,
        big_n,
        injective: sigma_min > tol,
        sigma_min,
        unconstrained_kernel_dim: full.ncols() - rank,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]), [2.0, 3.0, 4.0]);
    }

    #[test]
    fn expectation_by_dimension() {
        assert_eq!(Expectation::for_dims(2, 4), Expectation::All);
        assert_eq!(Expectation::for_dims(2, 5), Expectation::Unspecified);
        assert_eq!(Expectation::for_dims(2, 6), Expectation::None);
    }

    #[test]
    fn constraint_basis_has_expected_size() {
        let pt = TangentPoint::appendix(3, 9).unwrap();
        let q = pt.constraint_basis();
        assert_eq!(q.shape(), (10, 8));
        assert!((pt.constraint_normals().transpose() * q).amax() < 1e-14);
    }
}
