//! The tangent system at the counterexample point is injective on the
//! constraint subspace, and has a two-dimensional kernel without it.

use skewjet::stratification::{appendix_tangent_system, transversality_check, TRANSVERSALITY_TOL};

fn main() -> skewjet::Result<()> {
    for (n, big_n) in [(2, 6), (2, 8), (3, 9), (4, 12)] {
        let r = transversality_check(n, big_n, TRANSVERSALITY_TOL)?;
        println!(
            "n={n} N={big_n}: injective={} sigma_min={:.4} unconstrained kernel dim={}",
            r.injective, r.sigma_min, r.unconstrained_kernel_dim
        );
    }
    println!("restricted system for n=2, N=6:{:.4}", appendix_tangent_system(2, 6)?);
    Ok(())
}
