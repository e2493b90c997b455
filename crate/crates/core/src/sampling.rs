//! Seeded random sampling on spheres and balls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::jets::{PolyMap, SymMultiMap};

/// Independent stream `stream` of the generator rooted at `seed`.
///
/// Parallel trials draw from `trial_rng(seed, i)`, so results do not depend
/// on scheduling.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform point on the unit sphere `S^{n-1}` (normalized Gaussian).
pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, n);
        let nrm = crate::linalg::norm(&v);
        if nrm > 1e-300 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

/// Uniform point in the closed ball `B_r(center)`.
pub fn uniform_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], r: f64) -> Vec<f64> {
    let n = center.len();
    let dir = unit_sphere(rng, n);
    let u: f64 = rng.random();
    let rad = r * u.powf(1.0 / n as f64);
    center.iter().zip(dir).map(|(c, d)| c + rad * d).collect()
}

/// Polynomial map with standard Gaussian constant and coefficients in
/// every homogeneous part up to `degree`.
pub fn random_polymap<R: Rng + ?Sized>(rng: &mut R, n: usize, big_n: usize, degree: usize) -> crate::Result<PolyMap> {
    let constant = gaussian_vec(rng, big_n);
    let parts = (1..=degree)
        .map(|k| {
            let len = crate::jets::multi_indices(n, k).len() * big_n;
            SymMultiMap::from_coeffs(n, big_n, k, gaussian_vec(rng, len))
        })
        .collect::<crate::Result<Vec<_>>>()?;
    PolyMap::new(n, big_n, constant, parts)
}
