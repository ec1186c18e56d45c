//! One-dimensional bracketing searches shared by the extrema oracle, the
//! zero scanner and the line solver.

use crate::scalar::Scalar;

/// Golden-section minimization of `f` over `[lo, hi]`, stopping when the
/// bracket is narrower than `tol`. Returns `(x, f(x), evaluations)`.
pub fn golden_section<S: Scalar>(
    f: impl Fn(S) -> S,
    lo: S,
    hi: S,
    tol: S,
) -> (S, S, usize) {
    let inv_phi = S::lit(0.618_033_988_749_894_9);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evals = 2;
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evals += 1;
        iters += 1;
    }
    if fc < fd {
        (c, fc, evals)
    } else {
        (d, fd, evals)
    }
}

/// Bisection for a sign change of `g` on `[lo, hi]`. Returns `None` when the
/// endpoint values do not have strictly opposite signs.
pub fn bisect<S: Scalar>(g: impl Fn(S) -> S, lo: S, hi: S, width: S) -> Option<(S, S, S)> {
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (g(a), g(b));
    if ga == S::zero() {
        return Some((a, a, a));
    }
    if gb == S::zero() {
        return Some((b, b, b));
    }
    if ga.signum() == gb.signum() || ga.is_nan() || gb.is_nan() {
        return None;
    }
    let negative_left = ga < S::zero();
    let two = S::lit(2.0);
    for _ in 0..200 {
        if (b - a).abs() <= width {
            break;
        }
        let m = a + (b - a) / two;
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == S::zero() {
            return Some((m, m, m));
        }
        if (gm < S::zero()) == negative_left {
            a = m;
        } else {
            b = m;
        }
    }
    Some((a + (b - a) / two, a, b))
}

/// Minimizes `f` over `[lo, hi]`: coarse scan with `samples` points, then
/// golden-section inside the bracket around the best sample, then (when a
/// derivative is supplied) bisection on the derivative inside that bracket.
pub fn bracketed_minimum<S: Scalar>(
    f: &dyn Fn(S) -> S,
    derivative: Option<&dyn Fn(S) -> S>,
    lo: S,
    hi: S,
    samples: usize,
) -> (S, S, usize) {
    if hi <= lo {
        return (lo, f(lo), 1);
    }
    let samples = samples.max(3);
    let step = (hi - lo) / S::from_usize_lossy(samples - 1);
    let mut best = (0usize, S::infinity());
    for i in 0..samples {
        let x = lo + step * S::from_usize_lossy(i);
        let v = f(x);
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut evals = samples;
    let at = |i: usize| lo + step * S::from_usize_lossy(i);
    let a = at(best.0.saturating_sub(1));
    let b = if best.0 + 1 < samples { at(best.0 + 1) } else { hi };
    let tol = (hi - lo) * S::epsilon().sqrt();
    let (mut x, mut fx, e) = golden_section(f, a, b, tol);
    evals += e;
    if best.1 < fx {
        x = at(best.0);
        fx = best.1;
    }
    if let Some(df) = derivative {
        let width = (hi - lo) * S::epsilon() * S::lit(4.0);
        if let Some((xr, _, _)) = bisect(df, a, b, width) {
            let fr = f(xr);
            evals += 1;
            if fr <= fx {
                x = xr;
                fx = fr;
            }
        }
    }
    (x, fx, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, fx, _) = golden_section(|x: f64| (x - 0.3) * (x - 0.3) + 1.0, -2.0, 2.0, 1e-10);
        // a parabola pins its vertex only to about sqrt(eps)
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bisection_root() {
        let (r, a, b) = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(a <= r && r <= b);
        assert!(bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-9).is_none());
    }

    #[test]
    fn bracketed_minimum_is_global_on_scan_resolution() {
        let f = |x: f64| x.powi(4) - x.powi(2) + 0.2 * x;
        let df = |x: f64| 4.0 * x.powi(3) - 2.0 * x + 0.2;
        let (x, _, _) = bracketed_minimum(&f, Some(&df), -2.0, 2.0, 64);
        assert!(x < 0.0);
        assert!(df(x).abs() < 1e-12);
    }
}
