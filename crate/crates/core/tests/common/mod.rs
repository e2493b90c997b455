#![allow(dead_code)]

use nalgebra::DMatrix;
use skewjet::{PolyMap, SymMultiMap};

/// `x -> (x, x^3/6, x^2/2)`, the one-dimensional skew cubic.
pub fn twisted_cubic() -> PolyMap {
    skewjet::constructions::skew_cubic(1).unwrap()
}

/// Curve `t -> (t, c2 t^2, c3 t^3)` in R^3.
pub fn space_curve(c2: f64, c3: f64) -> PolyMap {
    let d1 = SymMultiMap::from_fn(1, 3, 1, |_| vec![1.0, 0.0, 0.0]).unwrap();
    let d2 = SymMultiMap::from_fn(1, 3, 2, |_| vec![0.0, 2.0 * c2, 0.0]).unwrap();
    let d3 = SymMultiMap::from_fn(1, 3, 3, |_| vec![0.0, 0.0, 6.0 * c3]).unwrap();
    PolyMap::from_derivatives(vec![0.0; 3], vec![d1, d2, d3]).unwrap()
}

/// `t -> (t, t^2, 0)`.
pub fn parabola() -> PolyMap {
    space_curve(1.0, 0.0)
}

pub fn linear_map(big_n: usize, n: usize) -> PolyMap {
    PolyMap::linear(&DMatrix::from_fn(big_n, n, |r, c| if r == c { 1.0 } else { 0.5 * (r + c) as f64 })).unwrap()
}

/// `x -> L x + B(x, x)/2` with `L = [I; 0]` and a random symmetric `B`.
pub fn quadratic_graph(n: usize, big_n: usize, seed: u64) -> PolyMap {
    let mut rng = skewjet::sampling::trial_rng(seed, 0);
    let l = SymMultiMap::from_fn(n, big_n, 1, |idx| (0..big_n).map(|r| (r == idx[0]) as u8 as f64).collect()).unwrap();
    let b = SymMultiMap::from_fn(n, big_n, 2, |_| {
        let mut v = skewjet::sampling::gaussian_vec(&mut rng, big_n);
        v[..n].iter_mut().for_each(|x| *x = 0.0);
        v
    })
    .unwrap();
    PolyMap::from_derivatives(vec![0.0; big_n], vec![l, b]).unwrap()
}

pub fn e(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}
