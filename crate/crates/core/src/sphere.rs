//! Minimization over the unit sphere and covering nets for certification.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling;

/// Values at or below this are treated as ties; the earlier sample wins.
/// This keeps the reported minimizer stable when several exact zeros exist.
pub const TIE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions {
    /// Total samples (coordinate vectors, then a quasi-uniform set, then random).
    pub samples: usize,
    /// Number of samples refined by descent.
    pub starts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl SearchOptions {
    /// `2048 n` samples, 8 starts, 200 descent steps.
    pub fn for_dim(n: usize, seed: u64) -> Self {
        SearchOptions { samples: 2048 * n, starts: 8, steps: 200, seed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SphereMin {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub evaluations: usize,
}

/// Initial sample set: `+-e_i`, then quasi-uniform points, then random points.
pub fn sample_points(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(count.max(2 * n));
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            pts.push(e);
        }
    }
    if n == 1 {
        return pts;
    }
    let quasi = count.saturating_sub(pts.len()) / 2;
    match n {
        2 => pts.extend((0..quasi).map(|j| {
            let th = 2.0 * PI * (j as f64 + 0.5) / quasi as f64;
            vec![th.cos(), th.sin()]
        })),
        3 => {
            // Fibonacci lattice
            let golden = PI * (3.0 - 5f64.sqrt());
            pts.extend((0..quasi).map(|j| {
                let z = 1.0 - 2.0 * (j as f64 + 0.5) / quasi as f64;
                let r = (1.0 - z * z).sqrt();
                let th = golden * j as f64;
                vec![r * th.cos(), r * th.sin(), z]
            }))
        }
        _ => {}
    }
    let mut rng = sampling::trial_rng(seed, 0x5a4d);
    while pts.len() < count {
        pts.push(sampling::unit_sphere(&mut rng, n));
    }
    pts
}

/// Minimize a nonnegative objective over `S^{n-1}`.
///
/// Samples are ranked, the best `starts` well-separated ones are refined by
/// projected descent on `objective^2` with a central finite-difference
/// gradient in the tangent space and backtracking step control.
pub fn minimize<F>(n: usize, objective: F, opts: &SearchOptions) -> SphereMin
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let pts = sample_points(n, opts.samples, opts.seed);
    let values: Vec<f64> = pts.par_iter().map(|y| objective(y)).collect();
    let mut evaluations = pts.len();
    if n == 1 {
        let (v, y) = pick_first_min(values.iter().copied().zip(pts.iter().cloned()));
        return SphereMin { value: v, argmin: y, evaluations };
    }

    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| values[i].max(TIE_FLOOR).total_cmp(&values[j].max(TIE_FLOOR)));
    let mut starts: Vec<usize> = Vec::with_capacity(opts.starts);
    for &i in &order {
        if starts.len() == opts.starts {
            break;
        }
        if starts.iter().all(|&j| linalg::norm(&linalg::sub(&pts[i], &pts[j])) > 1e-2) {
            starts.push(i);
        }
    }
    let refined: Vec<(f64, Vec<f64>, usize)> =
        starts.par_iter().map(|&i| descend(&objective, pts[i].clone(), values[i], opts.steps)).collect();
    evaluations += refined.iter().map(|r| r.2).sum::<usize>();
    let (value, argmin) = pick_first_min(refined.into_iter().map(|(v, y, _)| (v, y)));
    SphereMin { value, argmin, evaluations }
}

fn pick_first_min(items: impl Iterator<Item = (f64, Vec<f64>)>) -> (f64, Vec<f64>) {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (v, y) in items {
        match &best {
            Some((b, _)) if !(v < b - TIE_FLOOR) => {}
            _ => best = Some((v, y)),
        }
    }
    best.expect("nonempty sample set")
}

/// Orthonormal basis of the tangent space `y^perp`.
pub fn tangent_basis(y: &[f64]) -> Vec<Vec<f64>> {
    let n = y.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    let mut frame = vec![y.to_vec()];
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for _ in 0..2 {
            for q in &frame {
                let c = linalg::dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nrm = linalg::norm(&v);
        if nrm > 1e-6 {
            let v: Vec<f64> = v.iter().map(|x| x / nrm).collect();
            frame.push(v.clone());
            basis.push(v);
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    basis
}

const FD_STEP: f64 = 1e-6;

fn descend<F>(objective: &F, mut y: Vec<f64>, mut g: f64, steps: usize) -> (f64, Vec<f64>, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let mut evals = 0;
    let mut h = g * g;
    let mut alpha = f64::NAN;
    for _ in 0..steps {
        let basis = tangent_basis(&y);
        let mut dir = vec![0.0; y.len()];
        for b in &basis {
            let plus = retract(&y, b, FD_STEP);
            let minus = retract(&y, b, -FD_STEP);
            let d = (objective(&plus).powi(2) - objective(&minus).powi(2)) / (2.0 * FD_STEP);
            evals += 2;
            dir.iter_mut().zip(b).for_each(|(s, bi)| *s -= d * bi);
        }
        let dnorm = linalg::norm(&dir);
        if !(dnorm > 0.0) {
            break;
        }
        // first step moves at most 0.1 rad
        let cap = 0.1 / dnorm;
        alpha = if alpha.is_nan() { cap } else { (2.0 * alpha).min(cap) };
        let mut accepted = false;
        for _ in 0..40 {
            let cand = retract(&y, &dir, alpha);
            let gc = objective(&cand);
            evals += 1;
            if gc * gc < h {
                y = cand;
                g = gc;
                h = gc * gc;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (g, y, evals)
}

fn retract(y: &[f64], d: &[f64], s: f64) -> Vec<f64> {
    let v: Vec<f64> = y.iter().zip(d).map(|(a, b)| a + s * b).collect();
    linalg::normalized(&v)
}

/// Default point budget for covering nets.
pub const NET_BUDGET: u64 = 4_000_000;
/// Multiplier applied to computed covering radii.
pub const MESH_SAFETY: f64 = 1.1;

/// Finite point set on `S^{n-1}` with a bound on its geodesic covering radius.
#[derive(Clone, Debug)]
pub struct SphereNet {
    pub points: Vec<Vec<f64>>,
    /// Covering-radius bound, already multiplied by [`MESH_SAFETY`].
    pub mesh: f64,
}

/// Net with mesh at most `delta`: `{+1, -1}` for `n = 1`, an icosahedral
/// refinement for `n = 3`, and a product grid in hyperspherical angles for
/// other `n`.
pub fn sphere_net(n: usize, delta: f64, budget: u64) -> Result<SphereNet> {
    if !(delta > 0.0) {
        return Err(Error::Input(format!("mesh must be positive, got {delta}")));
    }
    match n {
        0 => Err(Error::Input("sphere dimension must be at least 1".into())),
        1 => Ok(SphereNet { points: vec![vec![1.0], vec![-1.0]], mesh: 0.0 }),
        3 => icosphere_net(delta, budget),
        _ => angle_grid_net(n, delta, budget),
    }
}

fn angle_grid_net(n: usize, delta: f64, budget: u64) -> Result<SphereNet> {
    // radius <= sqrt(sum (s_i/2)^2) for spacings s_i <= h, because the
    // round metric is dominated by the flat metric in these angles
    let h = 2.0 * delta / (MESH_SAFETY * ((n - 1) as f64).sqrt());
    let polar = ((PI / h).ceil() as u64).max(1) + 1;
    let azimuth = ((2.0 * PI / h).ceil() as u64).max(3);
    let total = (polar as f64).powi(n as i32 - 2) * azimuth as f64;
    if total > budget as f64 {
        return Err(Error::Resource { requested: total.min(u64::MAX as f64) as u64, budget });
    }
    let sp = PI / (polar - 1) as f64;
    let sa = 2.0 * PI / azimuth as f64;
    let radius = ((n - 2) as f64 * (sp / 2.0).powi(2) + (sa / 2.0).powi(2)).sqrt();
    let mut points = Vec::with_capacity(total as usize);
    let mut idx = vec![0u64; n - 1];
    'outer: loop {
        let mut angles: Vec<f64> = idx[..n - 2].iter().map(|&j| j as f64 * sp).collect();
        angles.push(idx[n - 2] as f64 * sa);
        points.push(from_angles(&angles));
        for d in (0..n - 1).rev() {
            idx[d] += 1;
            let lim = if d == n - 2 { azimuth } else { polar };
            if idx[d] < lim {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    Ok(SphereNet { points, mesh: MESH_SAFETY * radius })
}

fn from_angles(angles: &[f64]) -> Vec<f64> {
    let n = angles.len() + 1;
    let mut x = vec![0.0; n];
    let mut s = 1.0;
    for (i, &a) in angles.iter().enumerate() {
        x[i] = s * a.cos();
        s *= a.sin();
    }
    x[n - 1] = s;
    x
}

fn icosphere_net(delta: f64, budget: u64) -> Result<SphereNet> {
    let (mut verts, mut faces) = icosahedron();
    loop {
        let radius = faces.iter().map(|f| circumradius(&verts[f[0]], &verts[f[1]], &verts[f[2]])).fold(0.0, f64::max);
        if MESH_SAFETY * radius <= delta {
            return Ok(SphereNet { points: verts, mesh: MESH_SAFETY * radius });
        }
        let next_vertices = verts.len() as u64 + 3 * faces.len() as u64 / 2;
        if next_vertices > budget {
            // estimate for the level that would meet the mesh
            let levels = (MESH_SAFETY * radius / delta).log2().ceil() as i32;
            let est = (verts.len() as f64) * 4f64.powi(levels);
            return Err(Error::Resource { requested: est.min(u64::MAX as f64) as u64, budget });
        }
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec<f64>>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m: Vec<f64> = verts[a].iter().zip(&verts[b]).map(|(x, y)| x + y).collect();
                verts.push(linalg::normalized(&m));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let ab = mid(f[0], f[1], &mut verts);
            let bc = mid(f[1], f[2], &mut verts);
            let ca = mid(f[2], f[0], &mut verts);
            next.extend([[f[0], ab, ca], [f[1], bc, ab], [f[2], ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
}

fn circumradius(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let u = linalg::sub(b, a);
    let v = linalg::sub(c, a);
    let mut n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let centroid: f64 = (0..3).map(|i| n[i] * (a[i] + b[i] + c[i])).sum();
    if centroid < 0.0 {
        n.iter_mut().for_each(|x| *x = -*x);
    }
    let n = linalg::normalized(&n);
    linalg::dot(&n, a).clamp(-1.0, 1.0).acos()
}

fn icosahedron() -> (Vec<Vec<f64>>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let verts = raw.iter().map(|v| linalg::normalized(v)).collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (verts, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geodesic(a: &[f64], b: &[f64]) -> f64 {
        linalg::dot(a, b).clamp(-1.0, 1.0).acos()
    }

    fn check_cover(net: &SphereNet, n: usize, probes: usize) {
        let mut rng = sampling::trial_rng(99, n as u64);
        for _ in 0..probes {
            let x = sampling::unit_sphere(&mut rng, n);
            let d = net.points.iter().map(|p| geodesic(p, &x)).fold(f64::INFINITY, f64::min);
            assert!(d <= net.mesh, "probe at distance {d} > mesh {}", net.mesh);
        }
    }

    #[test]
    fn nets_cover_the_sphere() {
        for n in [2, 3, 4] {
            let net = sphere_net(n, 0.2, NET_BUDGET).unwrap();
            assert!(net.mesh <= 0.2);
            check_cover(&net, n, 500);
        }
    }

    #[test]
    fn oversized_net_is_resource_error() {
        assert!(matches!(sphere_net(4, 1e-4, 1000), Err(Error::Resource { .. })));
        assert!(matches!(sphere_net(3, 1e-4, 1000), Err(Error::Resource { .. })));
    }

    #[test]
    fn minimizes_a_quadratic_form() {
        // min of y^T diag(3,2,1) y over S^2 is 1 at +-e3
        let obj = |y: &[f64]| (3.0 * y[0] * y[0] + 2.0 * y[1] * y[1] + y[2] * y[2]).sqrt();
        let r = minimize(3, obj, &SearchOptions { samples: 200, starts: 4, steps: 200, seed: 1 });
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
        assert!(r.argmin[2].abs() > 1.0 - 1e-6);
    }

    #[test]
    fn earliest_exact_zero_wins_ties() {
        // zeros at e1 and e2 directions; e1 is sampled first
        let obj = |y: &[f64]| (y[0] * y[1]).abs();
        let r = minimize(2, obj, &SearchOptions::for_dim(2, 0));
        assert!(r.value <= TIE_FLOOR);
        assert!((r.argmin[0].abs() - 1.0).abs() < 1e-12, "{:?}", r.argmin);
    }
}
