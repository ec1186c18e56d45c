//! Reference values checked against oracles computed here, independently of
//! the library's own quadrature and search code.

use homogopt::analysis::{is_non_increasing, zero_count_curve, geometric_scales};
use homogopt::{
    corpus, corpus_with_controls, default_schedule, find_entry, find_h0, make_schedule, plain_descent,
    smoothed_descent, verify_theorems, CheckId, CheckStatus, DescentParams, HomogenizationOperator, QuadraturePolicy,
    ScalarField, VerifyConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn root(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (g(m) < 0.0) == (g(a) < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn tilted_minimizer() -> f64 {
    root(|x| 4.0 * x * x * x - 2.0 * x + 0.2, -2.0, -0.4)
}

fn count(f: &ScalarField, h: f64) -> usize {
    let op = HomogenizationOperator::new(h, QuadraturePolicy::default()).unwrap();
    homogopt::scan_zeros(f, &op, 1024).unwrap().count
}

#[test]
fn corpus_minimizers_match_closed_forms() {
    let sym = find_entry::<f64>("symmetric_double_well", false).unwrap();
    let mut xs: Vec<f64> = sym.oracle.minimizers.iter().map(|m| m[0]).collect();
    xs.sort_by(f64::total_cmp);
    let r = 0.5f64.sqrt();
    assert!((xs[0] + r).abs() < 1e-9 && (xs[1] - r).abs() < 1e-9, "{xs:?}");
    assert!((sym.oracle.min_value + 0.25).abs() < 1e-12);

    let tilted = find_entry::<f64>("tilted_double_well", false).unwrap();
    assert_eq!(tilted.oracle.minimizers.len(), 1);
    assert!((tilted.oracle.minimizers[0][0] - tilted_minimizer()).abs() < 1e-9);
}

#[test]
fn average_gradient_matches_riemann_sum() {
    // f = x^2 y on the box of side 2 around (1, 1)
    let f = ScalarField::parse("m", "x^2*y", &["x", "y"], &[(-3.0, 3.0), (-3.0, 3.0)]).unwrap();
    let op = HomogenizationOperator::new(2.0, QuadraturePolicy::default()).unwrap();
    let t = op.gradient(&f, &[1.0, 1.0]).unwrap().components;
    let n = 1000;
    let (mut tx, mut ty) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let x = (i as f64 + 0.5) * 2.0 / n as f64;
            let y = (j as f64 + 0.5) * 2.0 / n as f64;
            tx += 2.0 * x * y;
            ty += x * x;
        }
    }
    let cells = (n * n) as f64;
    assert!((t[0] - tx / cells).abs() < 1e-5 && (t[0] - 2.0).abs() < 1e-12);
    assert!((t[1] - ty / cells).abs() < 1e-5 && (t[1] - 4.0 / 3.0).abs() < 1e-12);
}

#[test]
fn box_average_of_sine() {
    let f = ScalarField::parse("s", "sin(x)", &["x"], &[(-4.0, 6.0)]).unwrap();
    let h = std::f64::consts::PI;
    let op = HomogenizationOperator::new(h, QuadraturePolicy::Adaptive { tolerance: 1e-12 }).unwrap();
    let x = std::f64::consts::FRAC_PI_2;
    let expected = ((x - h / 2.0).cos() - (x + h / 2.0).cos()) / h;
    assert!((op.homogenize(&f, &[x]).unwrap().value - expected).abs() < 1e-12);
    assert!((expected - 2.0 / h).abs() < 1e-15);
}

#[test]
fn double_well_zero_counts() {
    let f = find_entry::<f64>("symmetric_double_well", false).unwrap().field;
    let curve = zero_count_curve(&f, QuadraturePolicy::default(), &[0.5, 1.0, 1.5, 2.0], 1024).unwrap();
    let curve: Vec<usize> = curve.into_iter().map(|(_, c)| c).collect();
    assert_eq!(curve, vec![3, 3, 1, 1]);

    let t = find_entry::<f64>("tilted_double_well", false).unwrap().field;
    let hs = geometric_scales(0.1, 3.0, 24);
    let curve = zero_count_curve(&t, QuadraturePolicy::default(), &hs, 1024).unwrap();
    let curve: Vec<usize> = curve.into_iter().map(|(_, c)| c).collect();
    assert!(is_non_increasing(&curve), "{curve:?}");
    assert_eq!(*curve.last().unwrap(), 1);
}

#[test]
fn critical_scales() {
    let sym = find_entry::<f64>("symmetric_double_well", false).unwrap().field;
    let h0 = find_h0(&sym, QuadraturePolicy::default(), 1, (0.1, 3.0), 1024).unwrap().h0;
    assert!((h0 / 2f64.sqrt() - 1.0).abs() < 1e-3, "{h0}");

    let tilted = find_entry::<f64>("tilted_double_well", false).unwrap().field;
    let h0 = find_h0(&tilted, QuadraturePolicy::default(), 1, (0.1, 3.0), 1024).unwrap().h0;
    assert_eq!(count(&tilted, h0), 1);
    assert!(count(&tilted, 0.9 * h0) > 1);
}

#[test]
fn continuation_leaves_the_wrong_basin_in_one_dimension() {
    let f = find_entry::<f64>("tilted_double_well", false).unwrap().field;
    let h0 = find_h0(&f, QuadraturePolicy::default(), 1, (0.1, 3.0), 1024).unwrap().h0;
    let schedule = make_schedule(h0, 0.5, 4e-3).unwrap();
    let params = DescentParams::default();
    let smooth = smoothed_descent(&f, &schedule, &[1.0], &params).unwrap();
    assert!((smooth.final_point[0] - tilted_minimizer()).abs() < 1e-4, "{:?}", smooth.final_point);

    let plain = plain_descent(&f, &[1.0], &params).unwrap();
    let positive_min = root(|x| 4.0 * x * x * x - 2.0 * x + 0.2, 0.41, 2.0);
    assert!((plain.final_point[0] - positive_min).abs() < 1e-4, "{:?}", plain.final_point);
}

#[test]
fn continuation_leaves_a_far_basin_in_two_dimensions() {
    let e = find_entry::<f64>("tilted_multiwell", false).unwrap();
    let params = DescentParams::default();
    let x0 = [2.0, -2.0];
    let smooth = smoothed_descent(&e.field, &default_schedule(e.field.domain()), &x0, &params).unwrap();
    assert!(smooth.distance_to(&e.oracle.minimizers) < 1e-3, "{:?}", smooth.final_point);
    let plain = plain_descent(&e.field, &x0, &params).unwrap();
    assert!(plain.distance_to(&e.oracle.minimizers) > 0.5, "{:?}", plain.final_point);
}

#[test]
fn coupled_bowl_minimizer_solves_the_linear_system() {
    // grad = (2x + y, x + 2y) vanishes only at the origin
    let e = find_entry::<f64>("coupled_bowl", false).unwrap();
    let t = plain_descent(&e.field, &[1.0, -1.0], &DescentParams::default()).unwrap();
    assert!(t.final_point.iter().all(|v| v.abs() < 1e-6), "{:?}", t.final_point);
}

#[test]
fn homogenized_multiwell_is_solved_from_random_starts() {
    let e = find_entry::<f64>("tilted_multiwell", false).unwrap();
    let h0 = homogopt::heuristic_h0(e.field.domain()).h0;
    let op = HomogenizationOperator::new(h0, QuadraturePolicy::Gauss { order: 24 }).unwrap();
    let smooth = op.homogenized_field(&e.field).unwrap();
    let m = &e.oracle.minimizers[0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut descent_hits, mut line_hits) = (0, 0);
    let inside = |end: &[f64]| end.iter().zip(m).all(|(a, b)| (a - b).abs() <= h0 / 2.0);
    for seed in 0..20 {
        let x0: Vec<f64> = (0..2)
            .map(|i| {
                let (a, b) = smooth.domain().bounds(i);
                rng.gen_range(a..b)
            })
            .collect();
        let end = plain_descent(&smooth, &x0, &DescentParams::default()).unwrap().final_point;
        descent_hits += inside(&end) as usize;
        let end = homogopt::line_decomposition_solve(&smooth, &x0, seed, &Default::default())
            .unwrap()
            .final_point;
        line_hits += inside(&end) as usize;
    }
    assert!(descent_hits >= 18, "{descent_hits}/20");
    assert!(line_hits >= 18, "{line_hits}/20");
}

#[test]
fn solver_runs_are_reproducible() {
    let e = find_entry::<f64>("tilted_multiwell", false).unwrap();
    let run = || {
        let s = smoothed_descent(&e.field, &default_schedule(e.field.domain()), &[1.3, 0.4], &DescentParams::default())
            .unwrap();
        let l = homogopt::line_decomposition_solve(&e.field, &[1.3, 0.4], 9, &Default::default()).unwrap();
        serde_json::to_string(&(s, l)).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn full_corpus_verification() {
    let report = verify_theorems(&corpus::<f64>(), &VerifyConfig::default()).unwrap();
    assert!(report.records.len() >= 30, "{}", report.records.len());
    let failures: Vec<_> = report.mandatory_failures().iter().map(|r| (r.entry.clone(), r.check.id())).collect();
    assert!(failures.is_empty(), "{failures:?}");

    let equal = report.find(CheckId::EqualMinimaCount, "symmetric_double_well").unwrap();
    assert_eq!(equal.status, CheckStatus::Discrepancy);
    assert_eq!(equal.observed["terminal_count"], 1);
    assert!(equal.notes.contains("4x^3 + (h^2 - 2)x"));
}

#[test]
fn negative_control_fails_its_check() {
    let entries: Vec<_> = corpus_with_controls::<f64>(true)
        .into_iter()
        .filter(|e| e.name() == "mislabeled_double_well")
        .collect();
    let report = verify_theorems(&entries, &VerifyConfig::default()).unwrap();
    let failed: Vec<_> = report.mandatory_failures().iter().map(|r| r.check).collect();
    assert_eq!(failed, vec![CheckId::BoundaryExtremumSign]);

    // the same check fails at a single small scale
    let cfg = VerifyConfig {
        h_grids: [("mislabeled_double_well".to_string(), vec![0.5])].into(),
        ..VerifyConfig::default()
    };
    let report = verify_theorems(&entries, &cfg).unwrap();
    assert!(!report.find(CheckId::BoundaryExtremumSign, "mislabeled_double_well").unwrap().passed);
}
