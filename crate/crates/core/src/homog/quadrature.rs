//! Cube averages `(1/(2r)^d) * integral of g over [c - r, c + r]^d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule<S> {
    pub nodes: Vec<S>,
    pub weights: Vec<S>,
}

impl<S: Scalar> GaussRule<S> {
    /// Newton iteration on the Legendre polynomial three-term recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss rule needs at least one node");
        let n = order;
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0f64, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if n == 1 { x } else { p1 };
                let pm1 = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule {
            nodes: nodes.into_iter().map(S::lit).collect(),
            weights: weights.into_iter().map(S::lit).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Tensor-product average of `g` over the `d`-cube. Returns the average and
    /// the number of evaluations.
    pub fn cube_average(&self, g: &mut dyn FnMut(&[S]) -> S, center: &[S], half: S) -> (S, usize) {
        let d = center.len();
        if d == 0 {
            return (g(&[]), 1);
        }
        let q = self.order();
        let mut idx = vec![0usize; d];
        let mut point = center.to_vec();
        let mut sum = S::zero();
        let mut evals = 0;
        let half_weight = S::lit(0.5);
        loop {
            let mut w = S::one();
            for (k, &i) in idx.iter().enumerate() {
                point[k] = center[k] + half * self.nodes[i];
                w = w * self.weights[i] * half_weight;
            }
            sum = sum + w * g(&point);
            evals += 1;
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < q {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    return (sum, evals);
                }
            }
        }
    }
}

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an integrand evaluation at an outer node: value, error of any
/// inner quadrature, evaluation count.
pub type NodeValue<S> = (S, S, usize);

pub struct AdaptiveOutcome<S> {
    pub average: S,
    pub error: S,
    pub evaluations: usize,
    pub converged: bool,
}

struct Panel<S> {
    a: S,
    b: S,
    integral: S,
    error: S,
    inner_error: S,
}

/// Globally adaptive G7K15 over `[a, b]`: repeatedly bisects the panel with
/// the largest error estimate until the absolute error of the *average*
/// falls below `tol` or `max_panels` is reached.
pub fn adaptive_average<S: Scalar>(
    g: &mut dyn FnMut(S) -> NodeValue<S>,
    a: S,
    b: S,
    tol: S,
    max_panels: usize,
) -> AdaptiveOutcome<S> {
    let width = b - a;
    let mut evals = 0usize;
    let mut kronrod = |lo: S, hi: S, evals: &mut usize| -> Panel<S> {
        let c = (lo + hi) * S::lit(0.5);
        let r = (hi - lo) * S::lit(0.5);
        let (mut k, mut gs, mut inner) = (S::zero(), S::zero(), S::zero());
        for j in 0..8 {
            let x = S::lit(XGK[j]);
            let pts: &[S] = if j == 7 { &[S::zero()] } else { &[-x, x] };
            for &t in pts {
                let (v, e, n) = g(c + r * t);
                *evals += n;
                k = k + S::lit(WGK[j]) * v;
                inner = inner + S::lit(WGK[j]) * e;
                if j % 2 == 1 {
                    gs = gs + S::lit(WG[j / 2]) * v;
                }
            }
        }
        Panel {
            a: lo,
            b: hi,
            integral: k * r,
            error: ((k - gs) * r).abs(),
            inner_error: inner * r,
        }
    };
    let mut panels = vec![kronrod(a, b, &mut evals)];
    let total = |p: &[Panel<S>]| {
        let e: S = p.iter().map(|x| x.error + x.inner_error).sum();
        e / width
    };
    while total(&panels) > tol && panels.len() < max_panels {
        // splitting cannot reduce error that comes from inner levels
        let inner: S = panels.iter().map(|x| x.inner_error).sum();
        if inner / width >= tol {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).expect("finite error"))
            .expect("non-empty");
        let p = panels.swap_remove(worst);
        let m = (p.a + p.b) * S::lit(0.5);
        panels.push(kronrod(p.a, m, &mut evals));
        panels.push(kronrod(m, p.b, &mut evals));
    }
    let integral: S = panels.iter().map(|p| p.integral).sum();
    let error = total(&panels);
    AdaptiveOutcome {
        average: integral / width,
        error,
        evaluations: evals,
        converged: error <= tol,
    }
}

pub struct MonteCarloOutcome<S> {
    pub average: S,
    pub standard_error: S,
    pub evaluations: usize,
}

/// Uniform sampling in the `d`-cube with a fixed seed, so that the estimate
/// is a smooth, deterministic function of `center` (common random numbers).
pub fn monte_carlo_average<S: Scalar>(
    g: &mut dyn FnMut(&[S]) -> S,
    center: &[S],
    half: S,
    samples: usize,
    seed: u64,
) -> MonteCarloOutcome<S> {
    let d = center.len();
    if d == 0 {
        return MonteCarloOutcome {
            average: g(&[]),
            standard_error: S::zero(),
            evaluations: 1,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = center.to_vec();
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for k in 0..samples {
        for (i, p) in point.iter_mut().enumerate() {
            let u: f64 = rng.gen_range(-1.0..1.0);
            *p = center[i] + half * S::lit(u);
        }
        let v = g(&point).as_f64();
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
    MonteCarloOutcome {
        average: S::lit(mean),
        standard_error: S::lit((var / samples as f64).sqrt()),
        evaluations: samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_weights_sum_to_two_and_nodes_symmetric() {
        for q in 1..=24 {
            let r = GaussRule::<f64>::new(q);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {q}: {s}");
            for i in 0..q {
                assert!((r.nodes[i] + r.nodes[q - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gauss_known_rule() {
        let r = GaussRule::<f64>::new(2);
        assert!((r.nodes[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let r = GaussRule::<f64>::new(3);
        assert!((r.nodes[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((r.weights[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_exact_degree() {
        // average of t^k over [-1, 1] is 1/(k+1) for even k
        let r = GaussRule::<f64>::new(5);
        for k in (0..=9).step_by(2) {
            let (avg, n) = r.cube_average(&mut |p| p[0].powi(k), &[0.0], 1.0);
            assert_eq!(n, 5);
            assert!((avg - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn kronrod_integrates_degree_21() {
        let mut g = |t: f64| (t.powi(21) + t.powi(20), 0.0, 1);
        let out = adaptive_average(&mut g, -1.0, 1.0, 1e-12, 1);
        assert!((out.average - 1.0 / 21.0).abs() < 1e-14);
        assert_eq!(out.evaluations, 15);
    }

    #[test]
    fn adaptive_handles_oscillation() {
        let mut g = |t: f64| ((30.0 * t).cos(), 0.0, 1);
        let out = adaptive_average(&mut g, 0.0, 2.0, 1e-12, 500);
        assert!(out.converged);
        assert!((out.average - (60.0f64).sin() / 60.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let mut g = |p: &[f64]| p[0] * p[0] + p[1];
        let a = monte_carlo_average(&mut g, &[0.0, 0.0], 0.5, 1000, 7);
        let b = monte_carlo_average(&mut g, &[0.0, 0.0], 0.5, 1000, 7);
        assert_eq!(a.average, b.average);
        assert!((a.average - 1.0 / 12.0).abs() < 4.0 * a.standard_error);
    }
}
