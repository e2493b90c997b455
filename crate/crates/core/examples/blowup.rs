//! The blown-up pair matrix: its factorization through the pair matrix and
//! its limit on the diagonal.

use skewjet::blowup::{f_tilde, lemma2_determinant, lemma2_matrix, phi, BlowupPoint};
use skewjet::sampling::{gaussian_vec, random_polymap, trial_rng, unit_sphere};
use skewjet::skewness::pair_matrix;

fn main() -> skewjet::Result<()> {
    let mut rng = trial_rng(2024, 0);
    let f = random_polymap(&mut rng, 2, 6, 3)?;
    let a = gaussian_vec(&mut rng, 2);
    let y = unit_sphere(&mut rng, 2);

    let boundary = f_tilde(&f, &BlowupPoint::new(a.clone(), y.clone(), 0.0)?)?;
    println!("{:>8}  {:>12}  {:>12}", "t", "factor err", "dist to t=0");
    for t in [1.0, 1e-1, 1e-2, 1e-3, 1e-4] {
        let bp = BlowupPoint::new(a.clone(), y.clone(), t)?;
        let ft = f_tilde(&f, &bp)?;
        let (p, q) = phi(&bp);
        let product = &pair_matrix(&f, &p, &q)?.matrix * lemma2_matrix(&y, t)?;
        let factor = (&ft - &product).norm() / ft.norm();
        let drift = (&ft - &boundary).norm() / boundary.norm();
        println!("{t:>8.0e}  {factor:>12.2e}  {drift:>12.2e}");
    }
    println!("det B at t=0.5: {:.4e} (expected {:.4e})", lemma2_matrix(&y, 0.5)?.determinant(), lemma2_determinant(2, 0.5));
    Ok(())
}
