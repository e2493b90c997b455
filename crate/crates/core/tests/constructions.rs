mod common;

use common::*;
use proptest::prelude::*;
use skewjet::constructions::*;
use skewjet::linalg;
use skewjet::local_condition::{boundary_matrix, check_local_condition};
use skewjet::sampling::{gaussian_vec, trial_rng, unit_sphere};

#[test]
fn convolution_reference_values() {
    let b = conv_bilinear(2).unwrap();
    let (e0, e1) = (e(2, 0), e(2, 1));
    assert_eq!(b.apply(&[&e0, &e0]).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
    assert_eq!(b.apply(&[&e0, &e1]).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
    let b1 = conv_bilinear(1).unwrap();
    assert_eq!(b1.apply(&[&[3.0], &[-2.0]]).unwrap(), vec![0.0, -6.0]);
}

#[test]
fn diagonal_trilinear_has_zero_tail() {
    let mut rng = trial_rng(1, 0);
    for n in 1..=4 {
        let x = gaussian_vec(&mut rng, n);
        let v = diag_trilinear(n).unwrap().apply_diag(&x).unwrap();
        assert!(v[n..].iter().all(|&c| c == 0.0));
        assert!(close(&v[..n], &x.iter().map(|t| t.powi(3)).collect::<Vec<_>>(), 1e-14));
    }
}

#[test]
fn skew_cubic_in_one_dimension() {
    let f = skew_cubic(1).unwrap();
    for x in [-1.5, 0.0, 0.3, 2.0] {
        assert!(close(&f.eval(&[x]).unwrap(), &[x, x * x * x / 6.0, x * x / 2.0], 1e-15));
    }
}

#[test]
fn skew_cubic_derivatives_are_the_building_blocks() {
    for n in 1..=4 {
        let f = skew_cubic(n).unwrap();
        let zero = vec![0.0; n];
        let embed_b = conv_bilinear(n).unwrap().embed_output(n, 3 * n).unwrap();
        let embed_c = diag_trilinear(n).unwrap().embed_output(n, 3 * n).unwrap();
        assert_eq!(f.derivative(&zero, 2).unwrap().coeffs(), embed_b.coeffs());
        assert_eq!(f.derivative(&zero, 3).unwrap().coeffs(), embed_c.coeffs());
        let d1 = f.derivative(&zero, 1).unwrap();
        let u = e(n, n - 1);
        let mut expected = vec![0.0; 3 * n];
        expected[n - 1] = 1.0;
        assert_eq!(d1.apply(&[&u]).unwrap(), expected);
    }
}

#[test]
fn skew_cubic_satisfies_local_condition() {
    for n in 1..=4 {
        let r = check_local_condition(&skew_cubic(n).unwrap(), &vec![0.0; n], &Default::default()).unwrap();
        assert!(r.holds.is_true(), "n = {n}");
    }
}

#[test]
fn convolution_is_nonsingular() {
    for n in 1..=6 {
        let r = conv_nonsingular_check(n, CheckMode::Exact, 0, 0).unwrap();
        assert!(r.nonsingular && r.uncertified_pair.is_none());
        assert_eq!(r.certified_pairs, Some(n * n));
    }
    let sampled = conv_nonsingular_check(3, CheckMode::Sampled, NONSINGULAR_SAMPLES, 9).unwrap();
    assert!(sampled.nonsingular && sampled.min_norm.unwrap() > 0.0);
    assert_eq!(sampled.samples, Some(NONSINGULAR_SAMPLES));
}

#[test]
fn extreme_basis_pair_hits_middle_component() {
    for n in 1..=5 {
        let v = conv_bilinear(n).unwrap().apply(&[&e(n, 0), &e(n, n - 1)]).unwrap();
        assert_eq!(v[n], 1.0);
        assert_eq!(v.iter().filter(|&&c| c != 0.0).count(), 1);
    }
    let b = conv_bilinear(3).unwrap();
    assert_eq!(b.apply(&[&[0.0; 3], &[1.0, 2.0, 3.0]]).unwrap(), vec![0.0; 6]);
}

#[test]
fn degenerate_convolution_has_no_certificate() {
    let bbar = appendix_bbar(3).unwrap();
    assert_eq!(lowest_index_certificate(&bbar).unwrap(), Some((0, 2)));
    assert_eq!(lowest_index_certificate(&conv_bilinear(3).unwrap()).unwrap(), None);
}

#[test]
fn triangular_oracle_cases() {
    let x = [0.3, -1.2, 0.8];
    assert_eq!(triangular_oracle(&x, 1.0, &[0.0; 3]).unwrap(), TriangularOutcome::Zero);
    match triangular_oracle(&x, 1.0, &e(3, 0)).unwrap() {
        TriangularOutcome::Contradiction { index, residual } => {
            assert_eq!(index, 0);
            assert_eq!(residual, 1.0);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(triangular_oracle(&x, 0.0, &[0.0; 3]), Err(skewjet::Error::Domain(_))));
}

#[test]
fn cubic_equation_has_only_trivial_solution() {
    let mut rng = trial_rng(7, 0);
    for i in 0..1000 {
        let n = 1 + i % 4;
        let x = gaussian_vec(&mut rng, n);
        let mut lambda = gaussian_vec(&mut rng, 1)[0];
        if lambda == 0.0 {
            lambda = 1.0;
        }
        let y = unit_sphere(&mut rng, n);
        assert!(triangular_residual(&x, lambda, &y).unwrap() > 0.0);
    }
}

#[test]
fn oracle_agrees_with_brute_force_grid() {
    let mut rng = trial_rng(8, 0);
    for n in 1..=3 {
        let x = gaussian_vec(&mut rng, n);
        let lambda = 0.5 + gaussian_vec(&mut rng, 1)[0].abs();
        let axis: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let total = 21usize.pow(n as u32);
        for code in 0..total {
            let y: Vec<f64> = (0..n).map(|d| axis[(code / 21usize.pow(d as u32)) % 21]).collect();
            let zero = y.iter().all(|&c| c.abs() < 1e-12);
            let outcome = triangular_oracle(&x, lambda, &y).unwrap();
            let resid = triangular_residual(&x, lambda, &y).unwrap();
            if zero {
                continue;
            }
            assert!(matches!(outcome, TriangularOutcome::Contradiction { .. }));
            assert!(resid > 0.0, "n {n} y {y:?}");
        }
    }
}

#[test]
fn degenerate_convolution_reference_values() {
    let b = appendix_bbar(2).unwrap();
    let (e1, e2) = (e(2, 0), e(2, 1));
    // e'_2 and e'_4 in one-based numbering.
    assert_eq!(b.apply(&[&e1, &e1]).unwrap(), e(4, 1));
    assert_eq!(b.apply(&[&e2, &e2]).unwrap(), e(4, 3));
    assert_eq!(b.apply(&[&e1, &e2]).unwrap(), vec![0.0; 4]);
    assert!(appendix_bbar(1).is_err());
}

#[test]
fn degenerate_convolution_images() {
    for n in 2..=5 {
        let b = appendix_bbar(n).unwrap();
        let first = b.partial_matrix(&[&e(n, 0)]);
        let last = b.partial_matrix(&[&e(n, n - 1)]);
        for r in 0..2 * n {
            let in_first = (1..n).contains(&r);
            let in_last = (n + 1..2 * n).contains(&r);
            assert_eq!(first.row(r).iter().any(|&c| c != 0.0), in_first, "n {n} row {r}");
            assert_eq!(last.row(r).iter().any(|&c| c != 0.0), in_last, "n {n} row {r}");
        }
        assert_eq!(b.apply(&[&e(n, 0), &e(n, n - 1)]).unwrap(), vec![0.0; 2 * n]);
    }
}

#[test]
fn counterexample_kernel_and_orthogonality() {
    for (n, big_n) in [(2, 6), (3, 9), (2, 8)] {
        let f = appendix_triple(n, big_n).unwrap();
        let m = boundary_matrix(&f, &vec![0.0; n], &e(n, 0)).unwrap().matrix;
        let mut z = vec![0.0; 2 * n + 1];
        z[2 * n - 1] = 1.0;
        let image = &m * nalgebra::DVector::from_vec(z);
        assert!(image.norm() == 0.0);
        let t = f.derivative(&vec![0.0; n], 3).unwrap().apply_diag(&e(n, 0)).unwrap();
        let b = f.derivative(&vec![0.0; n], 2).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(linalg::dot(&t, &b.apply(&[&e(n, i), &e(n, j)]).unwrap()), 0.0);
            }
        }
        assert!(f.eval(&vec![0.7; n]).unwrap()[3 * n..].iter().all(|&c| c == 0.0));
    }
    assert!(appendix_triple(2, 5).is_err());
}

#[test]
fn counterexample_minimum_is_near_first_axis() {
    let r = check_local_condition(&appendix_triple(3, 9).unwrap(), &[0.0; 3], &Default::default()).unwrap();
    assert!(r.min_sigma < 1e-12);
    assert!(r.argmin_y[0].abs() > 1.0 - 1e-6);
}

#[test]
fn named_constructions() {
    assert_eq!(by_name("skew-cubic", 2, None).unwrap(), skew_cubic(2).unwrap());
    assert_eq!(by_name("appendix-triple", 2, Some(7)).unwrap(), appendix_triple(2, 7).unwrap());
    assert!(by_name("skew-cubic", 2, Some(7)).is_err());
    assert!(by_name("helix", 2, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_is_symmetric(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = trial_rng(seed, 0);
        let (x, y) = (gaussian_vec(&mut rng, n), gaussian_vec(&mut rng, n));
        let b = conv_bilinear(n).unwrap();
        prop_assert_eq!(b.apply(&[&x, &y]).unwrap(), b.apply(&[&y, &x]).unwrap());
    }
}
