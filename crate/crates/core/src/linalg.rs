//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

/// Singular-value summary of a matrix, including a right singular vector
/// for the smallest singular value.
///
/// Wide matrices (more columns than rows) are padded with zero rows, so the
/// reported `sigma_min` is zero and `right_vector` lies in the kernel.
#[derive(Debug, Clone)]
pub struct SvdSummary {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub singular_values: Vec<f64>,
    pub right_vector: DVector<f64>,
}

pub fn svd_summary(m: &DMatrix<f64>) -> SvdSummary {
    let (rows, cols) = m.shape();
    let padded;
    let mat = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded = p;
        &padded
    } else {
        m
    };
    let svd = mat.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let (imin, _) = sv
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let right_vector = vt.row(imin).transpose();
    let sigma_min = sv[imin];
    sv.sort_by(|a, b| b.total_cmp(a));
    SvdSummary { sigma_min, sigma_max: sv.first().copied().unwrap_or(0.0), singular_values: sv, right_vector }
}

/// Smallest singular value (zero for wide matrices).
pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Number of singular values above `tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Scale every nonzero column to unit Euclidean norm. Returns the scaled
/// matrix and the per-column divisors (1 for zero columns).
pub fn equilibrate_columns(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let mut out = m.clone();
    let mut scales = Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        let nrm = m.column(j).norm();
        let s = if nrm > 0.0 { nrm } else { 1.0 };
        out.column_mut(j).scale_mut(1.0 / s);
        scales.push(s);
    }
    (out, scales)
}

/// Orthonormal basis of the column span, built by modified Gram-Schmidt in
/// column order. Columns whose residual norm falls below `tol` times their
/// original norm are dropped.
pub fn orthonormal_columns(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for j in 0..m.ncols() {
        let col = m.column(j).into_owned();
        let orig = col.norm();
        if orig == 0.0 {
            continue;
        }
        let mut v = col;
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let nrm = v.norm();
        if nrm > tol * orig {
            basis.push(v / nrm);
        }
    }
    if basis.is_empty() {
        return DMatrix::zeros(m.nrows(), 0);
    }
    DMatrix::from_columns(&basis)
}

/// Component of `v` orthogonal to the columns of the orthonormal matrix `q`.
pub fn orthogonal_residual(q: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    if q.ncols() == 0 {
        return v.clone();
    }
    let mut r = v - q * (q.transpose() * v);
    // second pass for stability
    let corr = q.transpose() * &r;
    r -= q * corr;
    r
}

/// Orthonormal basis of the column span using SVD with relative rank
/// threshold `tol`.
pub fn range_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax > 0.0 && s > tol * smax)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    if keep.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&keep)
    }
}

pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn normalized(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}
