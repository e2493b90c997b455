mod common;

use common::*;
use skewjet::constructions::{appendix_bbar, diag_trilinear};
use skewjet::linalg;
use skewjet::local_condition::{check_with_evaluator, LocalOptions, Verdict};
use skewjet::sampling::{trial_rng, unit_sphere};
use skewjet::stratification::*;

#[test]
fn sampling_is_reproducible() {
    assert_eq!(sample_triple(2, 6, 42).unwrap(), sample_triple(2, 6, 42).unwrap());
    assert_ne!(sample_triple(2, 6, 42).unwrap(), sample_triple(2, 6, 43).unwrap());
    assert_ne!(sample_triple_stream(2, 6, 42, 0).unwrap(), sample_triple_stream(2, 6, 42, 1).unwrap());
}

#[test]
fn sampled_coefficients_are_centered() {
    let mut values = Vec::new();
    let mut stream = 0;
    while values.len() < 10_000 {
        let t = sample_triple_stream(2, 6, 5, stream).unwrap();
        values.extend(t.l.coeffs().iter().chain(t.b.coeffs()).chain(t.t.coeffs()));
        stream += 1;
    }
    values.truncate(10_000);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    assert!(mean.abs() < 4.0 / 100.0, "mean {mean}");
}

#[test]
fn bilinear_part_is_symmetric() {
    let t = sample_triple(3, 9, 1).unwrap();
    let mut rng = trial_rng(1, 1);
    let (x, y) = (unit_sphere(&mut rng, 3), unit_sphere(&mut rng, 3));
    assert_eq!(t.b.apply(&[&x, &y]).unwrap(), t.b.apply(&[&y, &x]).unwrap());
}

#[test]
fn generic_triples_satisfy_the_condition() {
    let r = genericity_experiment(2, 6, 100, 3, &LocalOptions::default()).unwrap();
    assert_eq!(r.failures, 0);
    assert_eq!(r.expected_failures, Expectation::None);
    assert!(r.pass && r.min_sigma_min > 0.0);
}

#[test]
fn wide_boundary_matrices_always_fail() {
    let r = genericity_experiment(2, 4, 20, 3, &LocalOptions::default()).unwrap();
    assert_eq!(r.failures, 20);
    assert!(r.pass);
}

#[test]
fn intermediate_range_is_reported_without_assertion() {
    let r = genericity_experiment(2, 5, 20, 3, &LocalOptions::default()).unwrap();
    assert_eq!(r.expected_failures, Expectation::Unspecified);
    assert!(r.pass);
}

#[test]
fn more_outputs_give_more_margin() {
    let opts = LocalOptions::default();
    let six = genericity_experiment(2, 6, 100, 9, &opts).unwrap();
    let seven = genericity_experiment(2, 7, 100, 9, &opts).unwrap();
    assert!(seven.min_sigma_quartiles[1] > six.min_sigma_quartiles[1]);
}

#[test]
fn genericity_report_is_deterministic() {
    let opts = LocalOptions::default();
    let a = genericity_experiment(2, 6, 30, 11, &opts).unwrap();
    let b = genericity_experiment(2, 6, 30, 11, &opts).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.min_sigmas, b.min_sigmas);
}

#[test]
fn planted_failures_are_confirmed_with_small_witnesses() {
    for (seed, lambda) in [(0, 0.0), (1, 1.0), (2, -0.5)] {
        let base = sample_triple(2, 6, seed).unwrap();
        let mut rng = trial_rng(seed, 9);
        let y = unit_sphere(&mut rng, 2);
        let triple = plant_failure(&base, &y, &unit_sphere(&mut rng, 2), &unit_sphere(&mut rng, 2), lambda).unwrap();
        let out = run_trial(&triple, &LocalOptions::default());
        assert!(out.confirmed_failure, "seed {seed}: {out:?}");
        assert!(out.witness_residual.unwrap() <= 10.0 * out.min_sigma + 1e-14);
    }
}

#[test]
fn membership_is_scale_invariant() {
    for seed in 0..6 {
        let base = sample_triple(2, 6, 100 + seed).unwrap();
        let triple = if seed % 2 == 0 {
            let mut rng = trial_rng(seed, 3);
            plant_failure(&base, &unit_sphere(&mut rng, 2), &unit_sphere(&mut rng, 2), &unit_sphere(&mut rng, 2), 0.0).unwrap()
        } else {
            base
        };
        let opts = LocalOptions::default();
        let reference = check_with_evaluator(&triple.evaluator(), &opts).holds;
        for c in [-3.0, 0.5, 10.0] {
            let scaled_opts = LocalOptions { tol: opts.tol * f64::abs(c), ..opts.clone() };
            let holds = check_with_evaluator(&triple.scaled(c).evaluator(), &scaled_opts).holds;
            assert_eq!(holds, reference, "seed {seed} c {c}");
        }
        assert_eq!(reference == Verdict::True, seed % 2 == 1);
    }
}

#[test]
fn quartiles_interpolate() {
    assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]), [2.0, 3.0, 4.0]);
    assert_eq!(quartiles(&[1.0, 2.0]), [1.25, 1.5, 1.75]);
}

#[test]
fn tangent_system_shape_and_rank() {
    let m = appendix_tangent_system(2, 6).unwrap();
    assert_eq!(m.shape(), (6, 5));
    assert_eq!(linalg::numerical_rank(&m, 1e-9), 5);
}

#[test]
fn tangent_system_blocks() {
    for (n, big_n) in [(2, 6), (3, 9), (2, 7)] {
        let pt = TangentPoint::appendix(n, big_n).unwrap();
        let full = pt.full_matrix();
        let nu = full.column(2 * n);
        let c = diag_trilinear(n).unwrap().apply_diag(&e(n, 0)).unwrap();
        for r in 0..big_n {
            let expected = if (n..3 * n).contains(&r) { c[r - n] } else { 0.0 };
            assert_eq!(nu[r], expected);
        }
        let bbar = appendix_bbar(n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let v = bbar.apply(&[&e(n, i), &e(n, j)]).unwrap();
                assert_eq!(linalg::dot(&v, &c), 0.0);
            }
        }
        let w1 = full.columns(0, n);
        for r in 0..big_n {
            for col in 0..n {
                assert_eq!(w1[(r, col)], (r == col) as u8 as f64);
            }
        }
    }
}

#[test]
fn tangent_system_columns_evaluate_the_tangent_map() {
    let pt = TangentPoint::appendix(3, 9).unwrap();
    let basis = pt.constraint_basis();
    let restricted = appendix_tangent_system(3, 9).unwrap();
    let n = 3;
    for k in 0..basis.ncols() {
        let z: Vec<f64> = basis.column(k).iter().copied().collect();
        let direct = pt.tangent_map(&z[..n], &z[n..2 * n], z[2 * n], &z[2 * n + 1..]);
        let col: Vec<f64> = restricted.column(k).iter().copied().collect();
        assert!(close(&col, &direct, 1e-14));
    }
    let normals = pt.constraint_normals();
    assert!((normals.transpose() * &basis).amax() < 1e-14);
    assert!(((basis.transpose() * &basis) - nalgebra::DMatrix::identity(8, 8)).amax() < 1e-14);
}

#[test]
fn transversality_at_the_counterexample() {
    for (n, big_n) in [(2, 6), (3, 9), (2, 8)] {
        let r = transversality_check(n, big_n, TRANSVERSALITY_TOL).unwrap();
        assert!(r.injective && r.sigma_min > 0.5, "{r:?}");
        assert_eq!(r.unconstrained_kernel_dim, 2);
    }
}

#[test]
fn unconstrained_kernel_is_spanned_by_the_normals() {
    let pt = TangentPoint::appendix(2, 6).unwrap();
    let full = pt.full_matrix();
    let normals = pt.constraint_normals();
    assert!((&full * &normals).amax() < 1e-14);
    // w2 = e_n and w3 = e_1
    assert_eq!(normals[(3, 0)], 1.0);
    assert_eq!(normals[(5, 1)], 1.0);
}

#[test]
fn bad_dimensions_are_rejected() {
    assert!(transversality_check(2, 5, TRANSVERSALITY_TOL).is_err());
    assert!(transversality_check(1, 3, TRANSVERSALITY_TOL).is_err());
    assert!(sample_triple(0, 3, 0).is_err());
}
