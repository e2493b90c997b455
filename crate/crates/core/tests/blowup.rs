mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use skewjet::blowup::*;
use skewjet::sampling::{gaussian_vec, random_polymap, trial_rng, unit_sphere};
use skewjet::skewness::pair_matrix;
use skewjet::{linalg, PolyMap, SymMultiMap};

#[test]
fn phi_reference_values() {
    let bp = BlowupPoint::new(vec![1.0, 2.0], vec![0.6, 0.8], 0.0).unwrap();
    assert_eq!(phi(&bp), (vec![1.0, 2.0], vec![1.0, 2.0]));
    let bp = BlowupPoint::new(vec![0.0, 0.0], vec![1.0, 0.0], 2.0).unwrap();
    assert_eq!(phi(&bp).1, vec![2.0, 0.0]);
}

#[test]
fn blowup_point_validation() {
    assert!(BlowupPoint::new(vec![0.0], vec![2.0], 1.0).is_err());
    assert!(BlowupPoint::new(vec![0.0], vec![1.0], -1.0).is_err());
    assert!(BlowupPoint::new(vec![0.0, 0.0], vec![1.0], 1.0).is_err());
}

#[test]
fn boundary_value_of_twisted_cubic() {
    let bp = BlowupPoint::new(vec![0.0], vec![1.0], 0.0).unwrap();
    let m = f_tilde(&twisted_cubic(), &bp).unwrap();
    let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    assert_eq!(m, expected);
}

#[test]
fn first_block_is_jacobian() {
    let mut rng = trial_rng(4, 0);
    let f = random_polymap(&mut rng, 2, 5, 3).unwrap();
    let a = gaussian_vec(&mut rng, 2);
    let y = unit_sphere(&mut rng, 2);
    let j = f.jacobian(&a).unwrap();
    for t in [0.0, 0.3] {
        let m = f_tilde(&f, &BlowupPoint::new(a.clone(), y.clone(), t).unwrap()).unwrap();
        assert!(rel_err(&m.columns(0, 2).into_owned(), &j) < 1e-15);
    }
}

#[test]
fn continuous_at_the_boundary() {
    for seed in 0..20 {
        let mut rng = trial_rng(12, seed);
        let n = 1 + seed as usize % 3;
        let f = random_polymap(&mut rng, n, 3 * n, 3).unwrap();
        let a = gaussian_vec(&mut rng, n);
        let y = unit_sphere(&mut rng, n);
        let at = |t: f64| f_tilde(&f, &BlowupPoint::new(a.clone(), y.clone(), t).unwrap()).unwrap();
        let m0 = at(0.0);
        assert!(rel_err(&at(1e-4), &m0) < 1e-3);
        let (e1, e2) = (rel_err(&at(1e-3), &m0), rel_err(&at(1e-4), &m0));
        assert!(e2 < e1 / 5.0, "seed {seed}: {e1:e} -> {e2:e}");
    }
}

#[test]
fn change_of_basis_reference_value() {
    let b = lemma2_matrix(&[1.0], 1.0).unwrap();
    assert_eq!(b, DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 6.0, 0.0, 1.0, 6.0, 0.0, 0.0, -12.0]));
    assert_eq!(b.determinant(), -12.0);
    assert!(lemma2_matrix(&[1.0], 0.0).is_err());
}

#[test]
fn change_of_basis_determinant() {
    let mut rng = trial_rng(8, 0);
    for n in 1..=3 {
        let y = unit_sphere(&mut rng, n);
        for t in [0.5, 0.1, 2.0] {
            let det = lemma2_matrix(&y, t).unwrap().determinant();
            let expected = lemma2_determinant(n, t);
            assert!((det - expected).abs() <= 1e-10 * expected.abs(), "n {n} t {t}");
        }
    }
}

#[test]
fn blown_up_map_factors_through_pair_matrix() {
    for seed in 0..30 {
        let mut rng = trial_rng(19, seed);
        let n = 1 + seed as usize % 3;
        let f = random_polymap(&mut rng, n, 3 * n, 3).unwrap();
        let a = gaussian_vec(&mut rng, n);
        let y = unit_sphere(&mut rng, n);
        let t = 0.05 + 0.9 * (seed as f64 / 30.0);
        let bp = BlowupPoint::new(a.clone(), y.clone(), t).unwrap();
        let (p, q) = phi(&bp);
        let prod = &pair_matrix(&f, &p, &q).unwrap().matrix * lemma2_matrix(&y, t).unwrap();
        assert!(rel_err(&prod, &f_tilde(&f, &bp).unwrap()) < 1e-10, "seed {seed}");
    }
}

#[test]
fn cubic_remainder_ratio_is_zero() {
    let f = skewjet::constructions::skew_cubic(2).unwrap();
    let r = remainder_scaling_check(&f, &[0.1, 0.2], 3, 5, 0).unwrap();
    assert!(r.identically_zero && r.pass);
}

#[test]
fn quartic_monomial_ratio_is_linear() {
    let parts: Vec<SymMultiMap> = (1..=4).map(|k| SymMultiMap::from_fn(1, 1, k, |_| vec![if k == 4 { 24.0 } else { 0.0 }]).unwrap()).collect();
    let f = PolyMap::from_derivatives(vec![0.0], parts).unwrap();
    let r = remainder_scaling_check(&f, &[0.0], 3, 1, 0).unwrap();
    for (ratio, t) in r.series[0].ratios.iter().zip(SCALING_STEPS) {
        assert!((ratio - t).abs() <= 1e-12 * t);
    }
    assert!((r.min_slope.unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn random_quartic_slopes_are_near_one() {
    let mut rng = trial_rng(3, 3);
    let f = random_polymap(&mut rng, 2, 5, 4).unwrap();
    let r = remainder_scaling_check(&f, &[0.3, -0.6], 3, 10, 1).unwrap();
    assert!(r.pass);
    let (lo, hi) = (r.min_slope.unwrap(), r.max_slope.unwrap());
    assert!(lo >= 0.9 && hi <= 1.1, "{lo} {hi}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_inverts_off_the_diagonal(seed in any::<u64>(), n in 1usize..4, t in 1e-3f64..5.0) {
        let mut rng = trial_rng(seed, 0);
        let a = gaussian_vec(&mut rng, n);
        let y = unit_sphere(&mut rng, n);
        let bp = BlowupPoint::new(a, y, t).unwrap();
        let (p, q) = phi(&bp);
        prop_assert!((linalg::norm(&linalg::sub(&q, &p)) - t).abs() <= 1e-12 * (1.0 + t));
        let back = BlowupPoint::from_pair(&p, &q).unwrap();
        prop_assert!(close(back.a(), bp.a(), 0.0));
        prop_assert!(close(back.y(), bp.y(), 1e-9));
        prop_assert!((back.t() - t).abs() <= 1e-12 * (1.0 + t));
    }

    #[test]
    fn ranks_agree_with_pair_matrix(seed in any::<u64>(), t in 1e-2f64..1.0) {
        let mut rng = trial_rng(seed, 0);
        let n = 1 + (seed % 3) as usize;
        let f = random_polymap(&mut rng, n, 2 * n + 1, 3).unwrap();
        let bp = BlowupPoint::new(gaussian_vec(&mut rng, n), unit_sphere(&mut rng, n), t).unwrap();
        let (p, q) = phi(&bp);
        let ft = f_tilde(&f, &bp).unwrap();
        let rank = linalg::numerical_rank(&ft, 1e-9);
        prop_assert_eq!(rank, pair_matrix(&f, &p, &q).unwrap().rank(1e-9));
    }
}
