//! Explicit maps: the convolution form `B`, the diagonal cubic form `C`, the
//! totally skew cubic `R^n -> R^{3n}`, and the counterexample triple.
//!
//! `B` and `C` use 0-based coordinates `x_0, ..., x_{n-1}`. The counterexample
//! maps ([`appendix_bbar`], [`appendix_triple`]) are described with 1-based
//! basis vectors `e_1, ..., e_n`; internally `e_i` is coordinate `i - 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::{PolyMap, SymMultiMap};
use crate::linalg;
use crate::sampling;

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Input("n must be at least 1".into()));
    }
    Ok(())
}

fn unit(len: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; len];
    e[i] = 1.0;
    e
}

/// `B(x, y) = (0, sum_{i+j=0} x_i y_j, ..., sum_{i+j=2n-2} x_i y_j)` in `R^{2n}`.
pub fn conv_bilinear(n: usize) -> Result<SymMultiMap> {
    check_n(n)?;
    SymMultiMap::from_fn(n, 2 * n, 2, |idx| unit(2 * n, idx[0] + idx[1] + 1))
}

/// `C(x, y, z) = (x_0 y_0 z_0, ..., x_{n-1} y_{n-1} z_{n-1}, 0, ..., 0)` in `R^{2n}`.
pub fn diag_trilinear(n: usize) -> Result<SymMultiMap> {
    check_n(n)?;
    SymMultiMap::from_fn(n, 2 * n, 3, |idx| {
        if idx[0] == idx[2] {
            unit(2 * n, idx[0])
        } else {
            vec![0.0; 2 * n]
        }
    })
}

fn identity_part(n: usize, big_n: usize) -> Result<SymMultiMap> {
    SymMultiMap::from_fn(n, big_n, 1, |idx| unit(big_n, idx[0]))
}

/// `f(x) = (x, B(x,x)/2 + C(x,x,x)/6)`, so that `D^2 f_0 = (0, B)` and
/// `D^3 f_0 = (0, C)`.
pub fn skew_cubic(n: usize) -> Result<PolyMap> {
    check_n(n)?;
    let big_n = 3 * n;
    let b = conv_bilinear(n)?.embed_output(n, big_n)?;
    let c = diag_trilinear(n)?.embed_output(n, big_n)?;
    PolyMap::new(n, big_n, vec![0.0; big_n], vec![identity_part(n, big_n)?, b, c])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    Exact,
    Sampled,
}

/// Outcome of [`conv_nonsingular_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonsingularReport {
    pub kind: &'static str,
    pub n: usize,
    pub mode: CheckMode,
    pub nonsingular: bool,
    /// Exact mode: number of lowest-index pairs `(i0, j0)` certified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certified_pairs: Option<usize>,
    /// Exact mode: first lowest-index pair without a certificate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncertified_pair: Option<(usize, usize)>,
    /// Sampled mode: smallest `|B(x, y)|` over unit pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Lowest-index certificate for a bilinear map.
///
/// If `x` and `y` have lowest nonzero coordinates `i0` and `j0`, then
/// `B(x, y)` in a component `c` equals `x_{i0} y_{j0} B(e_{i0}, e_{j0})_c`
/// whenever `B(e_i, e_j)_c = 0` for all other `i >= i0`, `j >= j0`. Finding such
/// a `c` with `B(e_{i0}, e_{j0})_c != 0` for every `(i0, j0)` proves that
/// `B(x, y) = 0` forces `x = 0` or `y = 0`. Returns the first pair without
/// a certificate.
pub fn lowest_index_certificate(b: &SymMultiMap) -> Result<Option<(usize, usize)>> {
    if b.degree() != 2 {
        return Err(Error::Input(format!("expected a bilinear map, got degree {}", b.degree())));
    }
    let n = b.dim_in();
    let entry = |i: usize, j: usize| b.coeff(&[i.min(j), i.max(j)]).map(|c| c.to_vec());
    for i0 in 0..n {
        for j0 in 0..n {
            let lead = entry(i0, j0)?;
            let mut certified = false;
            'component: for (c, &lead_c) in lead.iter().enumerate() {
                if lead_c == 0.0 {
                    continue;
                }
                for i in i0..n {
                    for j in j0..n {
                        if (i, j) != (i0, j0) && entry(i, j)?[c] != 0.0 {
                            continue 'component;
                        }
                    }
                }
                certified = true;
                break;
            }
            if !certified {
                return Ok(Some((i0, j0)));
            }
        }
    }
    Ok(None)
}

/// Default number of random unit pairs in sampled mode.
pub const NONSINGULAR_SAMPLES: usize = 100_000;

/// Nonsingularity of [`conv_bilinear`], either by the lowest-index argument
/// or by sampling `|B(x, y)|` over random unit pairs.
pub fn conv_nonsingular_check(n: usize, mode: CheckMode, samples: usize, seed: u64) -> Result<NonsingularReport> {
    let b = conv_bilinear(n)?;
    let mut report = NonsingularReport {
        kind: "conv-nonsingular",
        n,
        mode,
        nonsingular: false,
        certified_pairs: None,
        uncertified_pair: None,
        min_norm: None,
        samples: None,
        seed: None,
    };
    match mode {
        CheckMode::Exact => {
            let missing = lowest_index_certificate(&b)?;
            report.nonsingular = missing.is_none();
            report.uncertified_pair = missing;
            report.certified_pairs = Some(match missing {
                None => n * n,
                Some((i, j)) => i * n + j,
            });
        }
        CheckMode::Sampled => {
            let mut rng = sampling::trial_rng(seed, 0);
            let mut min = f64::INFINITY;
            for _ in 0..samples {
                let x = sampling::unit_sphere(&mut rng, n);
                let y = sampling::unit_sphere(&mut rng, n);
                min = min.min(linalg::norm(&b.apply_with(&[&x, &y])));
            }
            report.nonsingular = min > 0.0;
            report.min_norm = Some(min);
            report.samples = Some(samples);
            report.seed = Some(seed);
        }
    }
    Ok(report)
}

/// Result of the forward substitution for `B(x, y) + lambda C(y, y, y) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "forced_y", rename_all = "snake_case")]
pub enum TriangularOutcome {
    /// The substitution forced `y = 0` and the given `y` is zero.
    Zero,
    /// Component `index` of the equation reads `lambda y_index^3 = 0` but the
    /// given `y_index` is nonzero; `residual` is that component.
    Contradiction { index: usize, residual: f64 },
}

/// Runs the substitution in order `k = 0, 1, ..., n-1`.
///
/// Once `y_0 = ... = y_{k-1} = 0`, component `k` of `B(x, y)` only involves
/// `y_j` with `j < k` and vanishes, so component `k` of the equation reduces
/// to `lambda y_k^3 = 0`, forcing `y_k = 0`.
pub fn triangular_oracle(x: &[f64], lambda: f64, y: &[f64]) -> Result<TriangularOutcome> {
    let n = x.len();
    check_n(n)?;
    crate::error::check_dim("y", y.len(), n)?;
    if lambda == 0.0 {
        return Err(Error::Domain("lambda must be nonzero; the lambda = 0 case is the nonsingularity of B".into()));
    }
    for k in 0..n {
        if y[k] != 0.0 {
            let conv: f64 = (0..k).map(|i| x[i] * y[k - 1 - i]).sum();
            return Ok(TriangularOutcome::Contradiction { index: k, residual: conv + lambda * y[k].powi(3) });
        }
    }
    Ok(TriangularOutcome::Zero)
}

/// `|B(x, y) + lambda C(y, y, y)|`.
pub fn triangular_residual(x: &[f64], lambda: f64, y: &[f64]) -> Result<f64> {
    let n = x.len();
    let b = conv_bilinear(n)?;
    let c = diag_trilinear(n)?;
    crate::error::check_dim("y", y.len(), n)?;
    let r: Vec<f64> = b.apply_with(&[x, y]).iter().zip(c.apply_diag_with(y)).map(|(u, v)| u + lambda * v).collect();
    Ok(linalg::norm(&r))
}

/// The degenerate convolution: `Bbar(e_i, e_j) = e'_{i+j}` for `i <= j`
/// except `Bbar(e_1, e_n) = 0` (1-based). Needs `n >= 2`.
pub fn appendix_bbar(n: usize) -> Result<SymMultiMap> {
    if n < 2 {
        return Err(Error::Input(format!("the degenerate convolution needs n >= 2, got {n}")));
    }
    SymMultiMap::from_fn(n, 2 * n, 2, |idx| {
        // 1-based (i, j) = (idx[0] + 1, idx[1] + 1); e'_{i+j} is index i + j - 1
        if (idx[0], idx[1]) == (0, n - 1) {
            vec![0.0; 2 * n]
        } else {
            unit(2 * n, idx[0] + idx[1] + 1)
        }
    })
}

/// `x -> L(x) + B(x,x)/2 + T(x,x,x)/6` into `R^N` with `L(x) = (x, 0, 0)`,
/// `B = (0, Bbar, 0)` and `T = (0, C, 0)`; coordinates past `3n` are zero.
///
/// The local condition fails at `0` for `v3 = e_1` with kernel vector
/// `(v1, v2, lambda) = (0, e_n, 0)`.
pub fn appendix_triple(n: usize, big_n: usize) -> Result<PolyMap> {
    if big_n < 3 * n {
        return Err(Error::Input(format!("the counterexample needs N >= 3n = {}, got {big_n}", 3 * n)));
    }
    let b = appendix_bbar(n)?.embed_output(n, big_n)?;
    let t = diag_trilinear(n)?.embed_output(n, big_n)?;
    PolyMap::new(n, big_n, vec![0.0; big_n], vec![identity_part(n, big_n)?, b, t])
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 2] = ["skew-cubic", "appendix-triple"];

/// Named constructor; `big_n` defaults to `3n`.
pub fn by_name(name: &str, n: usize, big_n: Option<usize>) -> Result<PolyMap> {
    match name {
        "skew-cubic" => {
            if let Some(m) = big_n.filter(|&m| m != 3 * n) {
                return Err(Error::Input(format!("skew-cubic has N = 3n = {}, got N = {m}", 3 * n)));
            }
            skew_cubic(n)
        }
        "appendix-triple" => appendix_triple(n, big_n.unwrap_or(3 * n)),
        other => Err(Error::Input(format!("unknown construction {other:?}; expected one of {NAMES:?}"))),
    }
}
