use homogopt::analysis::{extreme_point_census, geometric_scales, is_non_increasing};
use homogopt::{
    corpus, default_schedule, find_entry, find_h0, make_schedule, plain_descent, scan_zeros, smoothed_descent,
    verify_theorems, DescentParams, Expression, HomogenizationOperator, QuadraturePolicy, ScalarField, VerifyConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 3] = ["x", "y", "z"];

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 200,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn polynomial(dim: usize, terms: &[(f64, [u32; 3])]) -> String {
    terms
        .iter()
        .map(|(c, e)| {
            let mut t = format!("({c:?})");
            for (v, k) in VARS.iter().zip(e).take(dim) {
                t.push_str(&format!("*{v}^{k}"));
            }
            t
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn multivariate_derivatives_match_finite_differences(
        dim in 1usize..=3,
        raw in prop::collection::vec((-2.0f64..2.0, 0u32..=5, 0u32..=5, 0u32..=5), 1..6),
        seed in any::<u64>(),
    ) {
        // total degree at most 5
        let terms: Vec<(f64, [u32; 3])> = raw
            .iter()
            .map(|&(c, a, b, d)| {
                let b = b.min(5 - a);
                let d = d.min(5 - a - b);
                (c, [a, b, d])
            })
            .collect();
        let vars = &VARS[..dim];
        let e = Expression::parse(&polynomial(dim, &terms), vars).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let step = 1e-5;
        for _ in 0..10 {
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for (i, v) in vars.iter().enumerate() {
                let d = e.differentiate(v).unwrap().evaluate(&p).unwrap();
                let (mut a, mut b) = (p.clone(), p.clone());
                a[i] += step;
                b[i] -= step;
                let fd = (e.evaluate(&a).unwrap() - e.evaluate(&b).unwrap()) / (2.0 * step);
                prop_assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0), "{d} vs {fd}");
            }
        }
    }

    #[test]
    fn affine_functions_are_fixed_by_homogenization(
        c in prop::collection::vec(-3.0f64..3.0, 5),
        h in 0.05f64..1.0,
        u in prop::collection::vec(0.0f64..1.0, 4),
        dim in 1usize..=4,
    ) {
        let vars: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        let text = (0..dim).fold(format!("{:?}", c[0]), |t, i| format!("{t} + ({:?})*x{}", c[i + 1], i + 1));
        let f = ScalarField::parse("affine", &text, &vars, &vec![(-1.0, 1.0); dim]).unwrap();
        let x: Vec<f64> = u[..dim].iter().map(|t| -0.45 + 0.9 * t).collect();
        let exact = f.value(&x);
        let policies = [
            QuadraturePolicy::Gauss { order: 8 },
            QuadraturePolicy::Adaptive { tolerance: 1e-10 },
            QuadraturePolicy::MonteCarlo { samples: 200, seed: 1 },
        ];
        for policy in policies {
            let op = HomogenizationOperator::new(h, policy).unwrap().with_force_monte_carlo(true);
            let v = op.homogenize(&f, &x).unwrap();
            // Monte Carlo error of an affine integrand is sampling noise
            let allowed = match policy {
                QuadraturePolicy::MonteCarlo { .. } => 5.0 * v.error + 1e-12,
                _ => 1e-12 * (1.0 + exact.abs()),
            };
            prop_assert!((v.value - exact).abs() <= allowed, "{policy:?}: {} vs {exact}", v.value);
        }
    }

    #[test]
    fn line_restriction_agrees_with_the_field(a in -3.0f64..3.0, b in -1.0f64..1.0, u in 0.0f64..1.0) {
        let f = find_entry::<f64>("tilted_multiwell", false).unwrap().field;
        let g = f.restrict_to_line(a, b).unwrap();
        let (lo, hi) = g.domain().bounds(0);
        let x = lo + (hi - lo) * u;
        let (direct, restricted) = (f.value(&[x, a * x + b]), g.value(&[x]));
        prop_assert!((direct - restricted).abs() <= 1e-12 * direct.abs().max(1e-300));
    }

    #[test]
    fn schedules_fit_their_box(h_frac in 0.01f64..1.0, rho in 0.05f64..0.95, min_frac in 1e-4f64..0.5) {
        let e = find_entry::<f64>("tilted_multiwell", false).unwrap();
        let l = e.field.domain().shortest_edge();
        if min_frac < h_frac {
            let s = make_schedule(h_frac * l, rho, min_frac * l).unwrap();
            prop_assert!(s.fits(e.field.domain()));
            prop_assert!(!s.scales().is_empty());
            prop_assert!(s.scales().windows(2).all(|w| w[0] > w[1]));
            prop_assert!(*s.scales().last().unwrap() >= min_frac * l);
        } else {
            prop_assert!(make_schedule(h_frac * l, rho, min_frac * l).is_err());
        }
    }
}

#[test]
fn corpus_expressions_print_and_reparse_stably() {
    for e in corpus::<f64>() {
        let expr = e.field.expression().unwrap();
        let once = Expression::parse(&expr.to_string(), expr.variables()).unwrap();
        let twice = Expression::parse(&once.to_string(), expr.variables()).unwrap();
        assert_eq!(once.root(), twice.root(), "{}", e.name());
        assert_eq!(once.to_string(), twice.to_string());
    }
}

#[test]
fn corpus_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for e in corpus::<f64>() {
        let f = &e.field;
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let p: Vec<f64> = (0..f.dim())
                .map(|i| {
                    let (a, b) = f.domain().bounds(i);
                    rng.gen_range(a + 1e-3..b - 1e-3)
                })
                .collect();
            let g = f.gradient(&p).unwrap();
            let fd = f.fd_gradient(&p, 1e-6);
            let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            worst = g.iter().zip(&fd).fold(worst, |m, (a, b)| m.max((a - b).abs() / scale));
        }
        assert!(worst <= 1e-6, "{}: {worst}", e.name());
    }
}

#[test]
fn refined_zeros_have_small_residuals() {
    for e in corpus::<f64>().into_iter().filter(|e| e.dim() == 1) {
        let l = e.field.domain().edge(0);
        for h in geometric_scales(0.02 * l, 0.5 * l, 6) {
            let op = HomogenizationOperator::new(h, QuadraturePolicy::default()).unwrap();
            let r = scan_zeros(&e.field, &op, 1024).unwrap();
            for z in &r.zeros {
                assert!(z.residual <= 1e-8 * (1.0 + r.max_abs), "{} h {h}: {}", e.name(), z.residual);
            }
        }
    }
}

#[test]
fn critical_scale_is_the_first_with_the_target_count() {
    for name in ["symmetric_double_well", "tilted_double_well", "rippled_cubic"] {
        let f = find_entry::<f64>(name, false).unwrap().field;
        let l = f.domain().edge(0);
        let target = if name == "rippled_cubic" { 2 } else { 1 };
        let found = find_h0(&f, QuadraturePolicy::default(), target, (0.02 * l, 0.5 * l), 1024).unwrap();
        assert_eq!(found.count_at_h0, Some(target), "{name}");
        assert!(found.count_below.unwrap() > target, "{name}");
    }
}

#[test]
fn multiwell_census_decreases_over_the_default_sweep() {
    let f = find_entry::<f64>("tilted_multiwell", false).unwrap().field;
    let l = f.domain().shortest_edge();
    let totals: Vec<usize> = geometric_scales(0.02 * l, 0.5 * l, 8)
        .into_iter()
        .map(|h| {
            let op = HomogenizationOperator::new(h, QuadraturePolicy::Gauss { order: 16 }).unwrap();
            extreme_point_census(&f, &op, 256).unwrap().total()
        })
        .collect();
    assert!(is_non_increasing(&totals), "{totals:?}");
}

#[test]
fn homogenization_keeps_the_convex_argmin() {
    let e = find_entry::<f64>("convex_bowl", false).unwrap();
    let schedule = default_schedule(e.field.domain());
    let params = DescentParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let x0 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let a = smoothed_descent(&e.field, &schedule, &x0, &params).unwrap().final_point;
        let b = plain_descent(&e.field, &x0, &params).unwrap().final_point;
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= 1e-6), "{a:?} {b:?}");
    }
}

#[test]
fn accepted_values_never_increase_within_a_stage() {
    let e = find_entry::<f64>("tilted_multiwell", false).unwrap();
    let schedule = default_schedule(e.field.domain());
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..5 {
        let x0 = [rng.gen_range(-2.4..2.4), rng.gen_range(-2.4..2.4)];
        let t = smoothed_descent(&e.field, &schedule, &x0, &DescentParams::default()).unwrap();
        for w in t.records.windows(2) {
            if w[0].stage == w[1].stage {
                assert!(w[1].value <= w[0].value, "stage {}: {} then {}", w[0].stage, w[0].value, w[1].value);
            }
        }
        assert!(e.field.domain().contains(&t.final_point));
    }
}

/// Each stage on a 1-D entry starts within `h/2` of a zero of `T(h, .)`.
#[test]
fn stages_start_near_a_zero_of_the_average_gradient() {
    let params = DescentParams::default();
    for name in ["symmetric_double_well", "tilted_double_well", "rippled_cubic"] {
        let f = find_entry::<f64>(name, false).unwrap().field;
        let schedule = default_schedule(f.domain());
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (a, b) = HomogenizationOperator::new(schedule.first(), QuadraturePolicy::default())
            .unwrap()
            .inset_domain(&f)
            .unwrap()
            .bounds(0);
        for _ in 0..5 {
            let t = smoothed_descent(&f, &schedule, &[rng.gen_range(a..b)], &params).unwrap();
            for stage in t.stages.iter().skip(1) {
                let Some(h) = stage.h else { continue };
                let op = HomogenizationOperator::new(h, QuadraturePolicy::default()).unwrap();
                let zeros = scan_zeros(&f, &op, 1024).unwrap().zero_points();
                let near = zeros.iter().any(|z| (z - stage.start[0]).abs() <= h / 2.0);
                assert!(near, "{name} h {h}: start {} zeros {zeros:?}", stage.start[0]);
            }
        }
    }
}

#[test]
fn verification_ignores_worker_count() {
    let entries: Vec<_> = corpus::<f64>()
        .into_iter()
        .filter(|e| ["tilted_double_well", "coupled_bowl"].contains(&e.name()))
        .collect();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| verify_theorems(&entries, &VerifyConfig::default()).unwrap().to_json().to_string())
    };
    assert_eq!(run(1), run(3));
}
