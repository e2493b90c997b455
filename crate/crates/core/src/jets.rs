//! Symmetric multilinear maps and polynomial maps with exact derivatives.
//!
//! A [`SymMultiMap`] of degree `k` stores one output vector per sorted
//! multi-index `i_1 <= ... <= i_k`, so symmetry holds by construction. The
//! stored vector is the value on basis arguments, `m(e_{i_1}, ..., e_{i_k})`.
//! Multi-indices are kept in graded lexicographic order.
//!
//! A [`PolyMap`] is stored by homogeneous parts, where part `k` is the
//! symmetric map `D^k f_0`; evaluation is `f(x) = c + sum_k part_k(x,..,x)/k!`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::sampling;

/// Highest supported multilinear degree.
pub const MAX_DEGREE: usize = 4;

/// Random unit tuples drawn by [`SymMultiMap::operator_norm_estimate`].
pub const NORM_SAMPLES: usize = 4096;
/// Multiplier applied to sampled operator-norm estimates.
pub const NORM_SAFETY: f64 = 1.25;
const NORM_POWER_SWEEPS: usize = 30;
const NORM_SEED: u64 = 0x6e6f_726d;

/// Arithmetic the generic evaluators run in (`f64`, or double-double when
/// cancellation matters).
pub trait Scalar: Copy + num_traits::Num + From<f64> {
    /// Division correctly rounded to the working precision.
    fn quot(self, rhs: Self) -> Self {
        self / rhs
    }
}

impl Scalar for f64 {}

impl Scalar for crate::dd::Dd {
    fn quot(self, rhs: Self) -> Self {
        crate::dd::div(self, rhs)
    }
}

#[derive(Debug)]
struct IndexTable {
    n: usize,
    k: usize,
    indices: Vec<Vec<usize>>,
    ordered_to_sorted: Vec<usize>,
    multiplicity: Vec<f64>,
}

impl IndexTable {
    fn build(n: usize, k: usize) -> Self {
        let indices = multi_indices(n, k);
        let lookup: HashMap<&[usize], usize> =
            indices.iter().enumerate().map(|(i, v)| (v.as_slice(), i)).collect();
        let total = n.pow(k as u32);
        let mut ordered_to_sorted = Vec::with_capacity(total);
        let mut tuple = vec![0usize; k];
        for _ in 0..total {
            let mut s = tuple.clone();
            s.sort_unstable();
            ordered_to_sorted.push(lookup[s.as_slice()]);
            odometer(&mut tuple, n);
        }
        let multiplicity = indices.iter().map(|idx| permutation_count(idx) as f64).collect();
        IndexTable { n, k, indices, ordered_to_sorted, multiplicity }
    }

    fn position(&self, sorted: &[usize]) -> Option<usize> {
        if sorted.len() != self.k || sorted.iter().any(|&i| i >= self.n) {
            return None;
        }
        let ord = sorted.iter().fold(0usize, |acc, &i| acc * self.n + i);
        Some(self.ordered_to_sorted[ord])
    }
}

fn table(n: usize, k: usize) -> Arc<IndexTable> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<IndexTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("index table cache poisoned");
    guard.entry((n, k)).or_insert_with(|| Arc::new(IndexTable::build(n, k))).clone()
}

fn odometer(tuple: &mut [usize], n: usize) {
    for j in (0..tuple.len()).rev() {
        tuple[j] += 1;
        if tuple[j] < n {
            return;
        }
        tuple[j] = 0;
    }
}

/// Distinct orderings of a sorted multi-index, in lexicographic order.
fn distinct_arrangements(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut current = sorted.to_vec();
    let mut all = vec![current.clone()];
    // Standard next-permutation step; it visits each distinct ordering once.
    loop {
        let Some(i) = (1..current.len()).rev().find(|&i| current[i - 1] < current[i]) else {
            return all;
        };
        let j = (i..current.len()).rev().find(|&j| current[j] > current[i - 1]).expect("pivot has a successor");
        current.swap(i - 1, j);
        current[i..].reverse();
        all.push(current.clone());
    }
}

fn permutation_count(sorted: &[usize]) -> u64 {
    let mut count = factorial(sorted.len()) as u64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        count /= factorial(j - i) as u64;
        i = j;
    }
    count
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// All sorted multi-indices of degree `k` over `n` variables, in graded
/// lexicographic order.
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Symmetric `k`-linear map `R^n x ... x R^n -> R^N`.
///
/// Degree 0 is allowed and holds a single vector; it shows up as the result
/// of fully contracting a map with a direction.
#[derive(Clone, Debug)]
pub struct SymMultiMap {
    dim_in: usize,
    dim_out: usize,
    degree: usize,
    coeffs: Vec<f64>,
    table: Arc<IndexTable>,
}

impl PartialEq for SymMultiMap {
    fn eq(&self, other: &Self) -> bool {
        self.dim_in == other.dim_in
            && self.dim_out == other.dim_out
            && self.degree == other.degree
            && self.coeffs == other.coeffs
    }
}

impl SymMultiMap {
    pub fn zeros(n: usize, big_n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("domain dimension must be at least 1".into()));
        }
        if k > MAX_DEGREE {
            return Err(Error::Input(format!("degree {k} exceeds the supported maximum {MAX_DEGREE}")));
        }
        let table = table(n, k);
        let coeffs = vec![0.0; table.indices.len() * big_n];
        Ok(SymMultiMap { dim_in: n, dim_out: big_n, degree: k, coeffs, table })
    }

    /// Build from a flat coefficient array: one row of length `N` per
    /// multi-index, in graded lexicographic order.
    pub fn from_coeffs(n: usize, big_n: usize, k: usize, coeffs: Vec<f64>) -> Result<Self> {
        let mut m = Self::zeros(n, big_n, k)?;
        check_dim("coefficient array", coeffs.len(), m.coeffs.len())?;
        m.coeffs = coeffs;
        Ok(m)
    }

    /// Build by evaluating `value` on every sorted multi-index.
    pub fn from_fn<F>(n: usize, big_n: usize, k: usize, mut value: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        let mut m = Self::zeros(n, big_n, k)?;
        let table = m.table.clone();
        for (pos, idx) in table.indices.iter().enumerate() {
            let v = value(idx);
            check_dim("multi-index value", v.len(), big_n)?;
            m.coeffs[pos * big_n..(pos + 1) * big_n].copy_from_slice(&v);
        }
        Ok(m)
    }

    /// The linear map with the given `N x n` matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        Self::from_fn(m.ncols(), m.nrows(), 1, |idx| m.column(idx[0]).iter().copied().collect())
    }

    /// Degree-0 map holding the vector `v`.
    pub fn constant(n: usize, v: Vec<f64>) -> Result<Self> {
        let big_n = v.len();
        Self::from_coeffs(n, big_n, 0, v)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn multi_indices(&self) -> &[Vec<usize>] {
        &self.table.indices
    }

    fn position(&self, idx: &[usize]) -> Result<usize> {
        let mut s = idx.to_vec();
        s.sort_unstable();
        self.table
            .position(&s)
            .ok_or_else(|| Error::Input(format!("multi-index {idx:?} invalid for degree {} over {} variables", self.degree, self.dim_in)))
    }

    /// Stored value `m(e_{i_1}, ..., e_{i_k})`; the index need not be sorted.
    pub fn coeff(&self, idx: &[usize]) -> Result<&[f64]> {
        let p = self.position(idx)?;
        Ok(&self.coeffs[p * self.dim_out..(p + 1) * self.dim_out])
    }

    pub fn set_coeff(&mut self, idx: &[usize], value: &[f64]) -> Result<()> {
        check_dim("coefficient value", value.len(), self.dim_out)?;
        let p = self.position(idx)?;
        self.coeffs[p * self.dim_out..(p + 1) * self.dim_out].copy_from_slice(value);
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Multilinear evaluation `m(v_1, ..., v_k)`.
    pub fn apply(&self, args: &[&[f64]]) -> Result<Vec<f64>> {
        check_dim("number of arguments", args.len(), self.degree)?;
        for a in args {
            check_dim("argument", a.len(), self.dim_in)?;
        }
        Ok(self.apply_symmetric(args))
    }

    /// Evaluation whose result is bitwise invariant under permutations of
    /// `args`.
    ///
    /// Each stored multi-index is weighted by the sum over its distinct
    /// arrangements of the products `args[0][i_0] ... args[k-1][i_{k-1}]`.
    /// Factors within a product and the products themselves are combined in
    /// sorted order, so permuting the arguments only permutes multisets that
    /// are then reduced identically.
    fn apply_symmetric(&self, args: &[&[f64]]) -> Vec<f64> {
        let nn = self.dim_out;
        let mut out = vec![0.0; nn];
        let mut factors = Vec::with_capacity(self.degree);
        let mut terms = Vec::new();
        for (p, idx) in self.table.indices.iter().enumerate() {
            let row = &self.coeffs[p * nn..(p + 1) * nn];
            if row.iter().all(|&c| c == 0.0) {
                continue;
            }
            terms.clear();
            for arrangement in distinct_arrangements(idx) {
                factors.clear();
                factors.extend(arrangement.iter().zip(args).map(|(&i, a)| a[i]));
                factors.sort_by(f64::total_cmp);
                terms.push(factors.iter().product::<f64>());
            }
            terms.sort_by(f64::total_cmp);
            let w: f64 = terms.iter().sum();
            if w != 0.0 {
                for (o, &c) in out.iter_mut().zip(row) {
                    *o += w * c;
                }
            }
        }
        out
    }

    /// Unchecked multilinear evaluation in any [`Scalar`] type.
    pub fn apply_with<T: Scalar>(&self, args: &[&[T]]) -> Vec<T> {
        let (n, k, nn) = (self.dim_in, self.degree, self.dim_out);
        debug_assert_eq!(args.len(), k);
        let mut out = vec![T::zero(); nn];
        let total = n.pow(k as u32);
        let mut tuple = vec![0usize; k];
        for ord in 0..total {
            let mut w = T::one();
            for (j, &t) in tuple.iter().enumerate() {
                w = w * args[j][t];
            }
            if w != T::zero() {
                let p = self.table.ordered_to_sorted[ord];
                let row = &self.coeffs[p * nn..(p + 1) * nn];
                for (o, &c) in out.iter_mut().zip(row) {
                    if c != 0.0 {
                        *o = *o + w * T::from(c);
                    }
                }
            }
            odometer(&mut tuple, n);
        }
        out
    }

    /// `m(x, ..., x)`.
    pub fn apply_diag(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("argument", x.len(), self.dim_in)?;
        Ok(self.apply_diag_with(x))
    }

    pub fn apply_diag_with<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let nn = self.dim_out;
        let mut out = vec![T::zero(); nn];
        for (p, idx) in self.table.indices.iter().enumerate() {
            let mut w = T::from(self.table.multiplicity[p]);
            for &i in idx {
                w = w * x[i];
            }
            if w == T::zero() {
                continue;
            }
            let row = &self.coeffs[p * nn..(p + 1) * nn];
            for (o, &c) in out.iter_mut().zip(row) {
                if c != 0.0 {
                    *o = *o + w * T::from(c);
                }
            }
        }
        out
    }

    /// Partial evaluation `m(y, ., ..., .)`, a symmetric map of degree `k - 1`.
    pub fn contract(&self, y: &[f64]) -> Result<SymMultiMap> {
        if self.degree == 0 {
            return Err(Error::Input("cannot contract a degree-0 map".into()));
        }
        check_dim("contraction direction", y.len(), self.dim_in)?;
        let (n, nn) = (self.dim_in, self.dim_out);
        let mut out = SymMultiMap::zeros(n, nn, self.degree - 1)?;
        let lower = out.table.clone();
        for (q, beta) in lower.indices.iter().enumerate() {
            let base = beta.iter().fold(0usize, |acc, &i| acc * n + i) * n;
            let dst = &mut out.coeffs[q * nn..(q + 1) * nn];
            for (i, &yi) in y.iter().enumerate() {
                if yi == 0.0 {
                    continue;
                }
                let p = self.table.ordered_to_sorted[base + i];
                for (d, &c) in dst.iter_mut().zip(&self.coeffs[p * nn..(p + 1) * nn]) {
                    *d += yi * c;
                }
            }
        }
        Ok(out)
    }

    /// Contract with the same direction `times` times.
    pub fn contract_repeat(&self, y: &[f64], times: usize) -> Result<SymMultiMap> {
        let mut m = self.clone();
        for _ in 0..times {
            m = m.contract(y)?;
        }
        Ok(m)
    }

    /// `N x n` matrix of a degree-1 map, or the `N x 1` column of a degree-0 map.
    pub fn as_matrix(&self) -> DMatrix<f64> {
        match self.degree {
            0 => DMatrix::from_column_slice(self.dim_out, 1, &self.coeffs),
            1 => DMatrix::from_fn(self.dim_out, self.dim_in, |r, c| self.coeffs[c * self.dim_out + r]),
            _ => panic!("as_matrix needs degree 0 or 1, got {}", self.degree),
        }
    }

    pub fn scaled(&self, c: f64) -> SymMultiMap {
        let mut m = self.clone();
        m.coeffs.iter_mut().for_each(|x| *x *= c);
        m
    }

    pub fn add(&self, other: &SymMultiMap) -> Result<SymMultiMap> {
        if (self.dim_in, self.dim_out, self.degree) != (other.dim_in, other.dim_out, other.degree) {
            return Err(Error::Input("adding maps of different shapes".into()));
        }
        let mut m = self.clone();
        m.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += b);
        Ok(m)
    }

    /// Place the outputs at coordinates `offset..offset+N` of `R^total`.
    pub fn embed_output(&self, offset: usize, total: usize) -> Result<SymMultiMap> {
        if offset + self.dim_out > total {
            return Err(Error::Input(format!("cannot embed R^{} at offset {offset} into R^{total}", self.dim_out)));
        }
        SymMultiMap::from_fn(self.dim_in, total, self.degree, |idx| {
            let mut v = vec![0.0; total];
            v[offset..offset + self.dim_out].copy_from_slice(self.coeff(idx).expect("own index"));
            v
        })
    }

    /// Post-compose with a linear map `P: R^N -> R^M`.
    pub fn map_output(&self, p: &DMatrix<f64>) -> Result<SymMultiMap> {
        check_dim("output map columns", p.ncols(), self.dim_out)?;
        SymMultiMap::from_fn(self.dim_in, p.nrows(), self.degree, |idx| {
            let c = nalgebra::DVector::from_column_slice(self.coeff(idx).expect("own index"));
            (p * c).iter().copied().collect()
        })
    }

    /// Matrix of `v -> m(fixed..., v)` where all but the last argument are given.
    pub fn partial_matrix(&self, fixed: &[&[f64]]) -> DMatrix<f64> {
        let n = self.dim_in;
        let mut e = vec![0.0; n];
        let mut out = DMatrix::zeros(self.dim_out, n);
        for j in 0..n {
            e[j] = 1.0;
            let mut args: Vec<&[f64]> = fixed.to_vec();
            args.push(&e);
            let col = self.apply_with(&args);
            out.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        out
    }

    /// Estimate of `sup ||m(x_1, ..., x_k)||` over unit arguments.
    ///
    /// Degrees 0 and 1 are exact. Higher degrees take the best of
    /// [`NORM_SAMPLES`] random unit tuples, refine it by alternating
    /// maximization over one argument at a time, and multiply by
    /// [`NORM_SAFETY`]. The result is an estimate, not a proven bound.
    pub fn operator_norm_estimate(&self) -> f64 {
        self.operator_norm_estimate_seeded(NORM_SEED)
    }

    pub fn operator_norm_estimate_seeded(&self, seed: u64) -> f64 {
        match self.degree {
            0 => linalg::norm(&self.coeffs),
            1 => self.as_matrix().singular_values().iter().copied().fold(0.0, f64::max),
            _ => NORM_SAFETY * self.operator_norm_lower(seed),
        }
    }

    /// Best value found by sampling plus alternating refinement (a lower
    /// bound on the true operator norm).
    pub fn operator_norm_lower(&self, seed: u64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let (n, k) = (self.dim_in, self.degree);
        let mut rng = sampling::trial_rng(seed, 0);
        let mut best = (-1.0, Vec::new());
        for _ in 0..NORM_SAMPLES {
            let tuple: Vec<Vec<f64>> = (0..k).map(|_| sampling::unit_sphere(&mut rng, n)).collect();
            let refs: Vec<&[f64]> = tuple.iter().map(|v| v.as_slice()).collect();
            let val = linalg::norm(&self.apply_with(&refs));
            if val > best.0 {
                best = (val, tuple);
            }
        }
        let (mut value, mut tuple) = best;
        for _ in 0..NORM_POWER_SWEEPS {
            let before = value;
            for j in 0..k {
                let mut others: Vec<&[f64]> = Vec::with_capacity(k - 1);
                for (i, v) in tuple.iter().enumerate() {
                    if i != j {
                        others.push(v);
                    }
                }
                // symmetric: the free argument can go last
                let a = self.partial_matrix(&others);
                let svd = a.svd(false, true);
                let vt = svd.v_t.expect("requested V^T");
                let (imax, smax) = svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
                tuple[j] = vt.row(imax).iter().copied().collect();
                value = value.max(smax);
            }
            if value - before <= 1e-15 * value {
                break;
            }
        }
        value
    }
}

/// Polynomial map `R^n -> R^N` of degree at most [`MAX_DEGREE`], stored by
/// homogeneous parts: `f(x) = constant + sum_k parts[k-1](x, ..., x) / k!`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap {
    dim_in: usize,
    dim_out: usize,
    constant: Vec<f64>,
    parts: Vec<SymMultiMap>,
}

impl PolyMap {
    /// `parts[k-1]` must have degree `k`.
    pub fn new(n: usize, big_n: usize, constant: Vec<f64>, parts: Vec<SymMultiMap>) -> Result<Self> {
        if n == 0 || big_n == 0 {
            return Err(Error::Input("polynomial map dimensions must be positive".into()));
        }
        check_dim("constant term", constant.len(), big_n)?;
        if parts.len() > MAX_DEGREE {
            return Err(Error::Input(format!("degree {} exceeds the supported maximum {MAX_DEGREE}", parts.len())));
        }
        for (i, p) in parts.iter().enumerate() {
            if p.degree() != i + 1 || p.dim_in() != n || p.dim_out() != big_n {
                return Err(Error::Input(format!(
                    "part {} has shape (k={}, n={}, N={}), expected (k={}, n={n}, N={big_n})",
                    i,
                    p.degree(),
                    p.dim_in(),
                    p.dim_out(),
                    i + 1
                )));
            }
        }
        Ok(PolyMap { dim_in: n, dim_out: big_n, constant, parts })
    }

    pub fn zero(n: usize, big_n: usize, degree: usize) -> Result<Self> {
        let parts = (1..=degree).map(|k| SymMultiMap::zeros(n, big_n, k)).collect::<Result<Vec<_>>>()?;
        Self::new(n, big_n, vec![0.0; big_n], parts)
    }

    /// Polynomial with the given derivatives at the origin.
    pub fn from_derivatives(constant: Vec<f64>, parts: Vec<SymMultiMap>) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Input("need at least a linear part".into()))?;
        let (n, big_n) = (first.dim_in(), first.dim_out());
        Self::new(n, big_n, constant, parts)
    }

    pub fn linear(m: &DMatrix<f64>) -> Result<Self> {
        Self::from_derivatives(vec![0.0; m.nrows()], vec![SymMultiMap::from_matrix(m)?])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn degree(&self) -> usize {
        self.parts.len()
    }

    pub fn constant(&self) -> &[f64] {
        &self.constant
    }

    pub fn parts(&self) -> &[SymMultiMap] {
        &self.parts
    }

    /// Homogeneous part of degree `k` (`D^k f_0`), if present.
    pub fn part(&self, k: usize) -> Option<&SymMultiMap> {
        if k == 0 {
            return None;
        }
        self.parts.get(k - 1)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("evaluation point", x.len(), self.dim_in)?;
        Ok(self.eval_with(x))
    }

    pub fn eval_with<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut out: Vec<T> = self.constant.iter().map(|&c| T::from(c)).collect();
        for (i, p) in self.parts.iter().enumerate() {
            let fact = T::from(factorial(i + 1));
            for (o, v) in out.iter_mut().zip(p.apply_diag_with(x)) {
                *o = *o + v.quot(fact);
            }
        }
        out
    }

    /// `Df_x` as an `N x n` matrix.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim("evaluation point", x.len(), self.dim_in)?;
        let j = self.jacobian_with(x);
        Ok(DMatrix::from_row_slice(self.dim_out, self.dim_in, &j))
    }

    /// Row-major `N x n` Jacobian in any [`Scalar`] type.
    pub fn jacobian_with<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let (n, nn) = (self.dim_in, self.dim_out);
        let mut out = vec![T::zero(); nn * n];
        let mut e = vec![T::zero(); n];
        for col in 0..n {
            e[col] = T::one();
            for (i, p) in self.parts.iter().enumerate() {
                let k = i + 1;
                let mut args: Vec<&[T]> = vec![x; k - 1];
                args.push(&e);
                let fact = T::from(factorial(k - 1));
                for (r, v) in p.apply_with(&args).into_iter().enumerate() {
                    out[r * n + col] = out[r * n + col] + v.quot(fact);
                }
            }
            e[col] = T::zero();
        }
        out
    }

    /// The polynomial `x -> f(a + x)`, whose part `k` is `D^k f_a`.
    pub fn shift(&self, a: &[f64]) -> Result<PolyMap> {
        check_dim("shift point", a.len(), self.dim_in)?;
        let (n, nn) = (self.dim_in, self.dim_out);
        let mut constant = self.constant.clone();
        let mut parts: Vec<SymMultiMap> = (1..=self.degree()).map(|k| SymMultiMap::zeros(n, nn, k)).collect::<Result<_>>()?;
        for (i, p) in self.parts.iter().enumerate() {
            let s = i + 1;
            let mut c = p.clone();
            for m in 0..=s {
                if m > 0 {
                    c = c.contract(a)?;
                }
                let w = 1.0 / factorial(m);
                if m == s {
                    let scale = 1.0 / factorial(s);
                    for (o, v) in constant.iter_mut().zip(c.coeffs()) {
                        *o += v * scale;
                    }
                } else {
                    parts[s - m - 1] = parts[s - m - 1].add(&c.scaled(w))?;
                }
            }
        }
        PolyMap::new(n, nn, constant, parts)
    }

    /// Exact `D^k f_a`. Returns the zero map when `k` exceeds the degree.
    pub fn derivative(&self, a: &[f64], k: usize) -> Result<SymMultiMap> {
        if k == 0 || k > MAX_DEGREE {
            return Err(Error::Input(format!("derivative order must be in 1..={MAX_DEGREE}, got {k}")));
        }
        check_dim("base point", a.len(), self.dim_in)?;
        if k > self.degree() {
            return SymMultiMap::zeros(self.dim_in, self.dim_out, k);
        }
        Ok(self.shift(a)?.parts.swap_remove(k - 1))
    }

    /// First three derivatives at `a`.
    pub fn jet3(&self, a: &[f64]) -> Result<Jet3> {
        let s = self.shift(a)?;
        let get = |k: usize| match s.part(k) {
            Some(p) => Ok(p.clone()),
            None => SymMultiMap::zeros(self.dim_in, self.dim_out, k),
        };
        Ok(Jet3 { d1: get(1)?, d2: get(2)?, d3: get(3)? })
    }

    pub fn to_json_value(&self) -> PolyMapJson {
        let parts = self
            .parts
            .iter()
            .map(|p| PartJson {
                k: p.degree(),
                coeffs: p
                    .multi_indices()
                    .iter()
                    .filter_map(|idx| {
                        let v = p.coeff(idx).expect("own index");
                        (v.iter().any(|&x| x != 0.0)).then(|| CoeffJson { index: idx.clone(), value: v.to_vec() })
                    })
                    .collect(),
            })
            .collect();
        PolyMapJson { n: self.dim_in, big_n: self.dim_out, degree: self.degree(), constant: self.constant.clone(), parts }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("PolyMap serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: PolyMapJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json_value(&raw)
    }

    pub fn from_json_value(raw: &PolyMapJson) -> Result<Self> {
        let (n, nn, d) = (raw.n, raw.big_n, raw.degree);
        if n == 0 || nn == 0 {
            return Err(Error::Parse("\"n\" and \"N\" must be positive".into()));
        }
        if d == 0 || d > MAX_DEGREE {
            return Err(Error::Parse(format!("\"degree\" must be in 1..={MAX_DEGREE}, got {d}")));
        }
        if raw.constant.len() != nn {
            return Err(Error::Parse(format!("\"constant\" has length {}, expected N = {nn}", raw.constant.len())));
        }
        let mut parts: Vec<SymMultiMap> = (1..=d).map(|k| SymMultiMap::zeros(n, nn, k)).collect::<Result<_>>()?;
        let mut seen_k = vec![false; d + 1];
        for part in &raw.parts {
            if part.k == 0 || part.k > d {
                return Err(Error::Parse(format!("part with k = {} outside 1..={d}", part.k)));
            }
            if std::mem::replace(&mut seen_k[part.k], true) {
                return Err(Error::Parse(format!("duplicate part k = {}", part.k)));
            }
            let target = &mut parts[part.k - 1];
            let mut seen = std::collections::HashSet::new();
            for c in &part.coeffs {
                if c.index.len() != part.k {
                    return Err(Error::Parse(format!("index {:?} has length {}, expected {}", c.index, c.index.len(), part.k)));
                }
                if c.index.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::Parse(format!("index {:?} is not sorted", c.index)));
                }
                if c.index.iter().any(|&i| i >= n) {
                    return Err(Error::Parse(format!("index {:?} out of range for n = {n}", c.index)));
                }
                if c.value.len() != nn {
                    return Err(Error::Parse(format!("value for index {:?} has length {}, expected N = {nn}", c.index, c.value.len())));
                }
                if !seen.insert(c.index.clone()) {
                    return Err(Error::Parse(format!("duplicate index {:?} in part k = {}", c.index, part.k)));
                }
                target.set_coeff(&c.index, &c.value)?;
            }
        }
        PolyMap::new(n, nn, raw.constant.clone(), parts)
    }
}

/// On-disk PolyMap schema. Omitted multi-indices are zero.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PolyMapJson {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub degree: usize,
    pub constant: Vec<f64>,
    pub parts: Vec<PartJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PartJson {
    pub k: usize,
    pub coeffs: Vec<CoeffJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoeffJson {
    pub index: Vec<usize>,
    pub value: Vec<f64>,
}

/// `(Df_a, D^2f_a, D^3f_a)` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet3 {
    pub d1: SymMultiMap,
    pub d2: SymMultiMap,
    pub d3: SymMultiMap,
}

impl Jet3 {
    pub fn df_matrix(&self) -> DMatrix<f64> {
        self.d1.as_matrix()
    }

    /// Jet of `f o phi` at `a`, given this jet of `f` at `phi(a)` and the jet of
    /// `phi: R^n -> R^n` at `a` (chain rule up to third order).
    pub fn precompose(&self, phi: &Jet3) -> Result<Jet3> {
        let (n, nn) = (phi.d1.dim_in(), self.d1.dim_out());
        check_dim("inner map codomain", phi.d1.dim_out(), self.d1.dim_in())?;
        let p1 = |u: &[f64]| phi.d1.apply_with(&[u]);
        let basis = |i: usize| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        };
        let d1 = SymMultiMap::from_fn(n, nn, 1, |idx| self.d1.apply_with(&[&p1(&basis(idx[0]))]))?;
        let d2 = SymMultiMap::from_fn(n, nn, 2, |idx| {
            let (u, v) = (basis(idx[0]), basis(idx[1]));
            let a = self.d2.apply_with(&[&p1(&u), &p1(&v)]);
            let b = self.d1.apply_with(&[&phi.d2.apply_with(&[&u, &v])]);
            a.iter().zip(b).map(|(x, y)| x + y).collect()
        })?;
        let d3 = SymMultiMap::from_fn(n, nn, 3, |idx| {
            let (u, v, w) = (basis(idx[0]), basis(idx[1]), basis(idx[2]));
            let (pu, pv, pw) = (p1(&u), p1(&v), p1(&w));
            let mut acc = self.d3.apply_with(&[&pu, &pv, &pw]);
            for (x, y, z) in [(&u, &v, &pw), (&u, &w, &pv), (&v, &w, &pu)] {
                let inner = phi.d2.apply_with(&[x.as_slice(), y.as_slice()]);
                let t = self.d2.apply_with(&[&inner, z.as_slice()]);
                acc.iter_mut().zip(t).for_each(|(a, b)| *a += b);
            }
            let t = self.d1.apply_with(&[&phi.d3.apply_with(&[&u, &v, &w])]);
            acc.iter_mut().zip(t).for_each(|(a, b)| *a += b);
            acc
        })?;
        Ok(Jet3 { d1, d2, d3 })
    }

    /// Cubic Taylor polynomial `x -> value + d1(x-a) + d2(x-a,x-a)/2 + d3(x-a,..)/6`.
    pub fn taylor_polynomial(&self, value: Vec<f64>, a: &[f64]) -> Result<PolyMap> {
        let centered = PolyMap::from_derivatives(value, vec![self.d1.clone(), self.d2.clone(), self.d3.clone()])?;
        let minus: Vec<f64> = a.iter().map(|x| -x).collect();
        centered.shift(&minus)
    }
}

/// Taylor remainder of order `k` at `a` in direction `x`, with the
/// right-hand side of the classical remainder estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorRemainder {
    pub remainder: Vec<f64>,
    pub norm: f64,
    /// `||x||^{k+1}/(k+1)! * sup_s ||D^{k+1} f_{a+sx}||` with the operator
    /// norm estimated (see [`SymMultiMap::operator_norm_estimate`]).
    pub bound: f64,
    pub within_bound: bool,
}

const SUP_SAMPLES: usize = 17;

/// `R(a,x) = f(a+x) - sum_{j<=k} D^j f_a(x,..,x)/j!`.
///
/// The remainder is read off the higher homogeneous parts of the polynomial
/// shifted to `a`, so it is exactly zero when `deg f <= k`.
pub fn taylor_remainder(f: &PolyMap, a: &[f64], x: &[f64], k: usize) -> Result<TaylorRemainder> {
    if k + 1 > MAX_DEGREE {
        return Err(Error::Input(format!("order k = {k} needs k + 1 <= {MAX_DEGREE}")));
    }
    check_dim("base point", a.len(), f.dim_in())?;
    check_dim("increment", x.len(), f.dim_in())?;
    let shifted = f.shift(a)?;
    let mut remainder = vec![0.0; f.dim_out()];
    for j in (k + 1)..=f.degree() {
        let part = shifted.part(j).expect("degree checked");
        let fact = factorial(j);
        for (r, v) in remainder.iter_mut().zip(part.apply_diag_with(x)) {
            *r += v / fact;
        }
    }
    let norm = linalg::norm(&remainder);
    let sup = if f.degree() <= k {
        0.0
    } else if f.degree() == k + 1 {
        // D^{k+1} f is constant
        shifted.part(k + 1).expect("degree checked").operator_norm_estimate()
    } else {
        (0..SUP_SAMPLES)
            .map(|i| {
                let s = i as f64 / (SUP_SAMPLES - 1) as f64;
                let p: Vec<f64> = a.iter().zip(x).map(|(ai, xi)| ai + s * xi).collect();
                f.derivative(&p, k + 1).map(|d| d.operator_norm_estimate())
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max)
    };
    let bound = linalg::norm(x).powi(k as i32 + 1) / factorial(k + 1) * sup;
    Ok(TaylorRemainder { remainder, norm, bound, within_bound: norm <= bound })
}
