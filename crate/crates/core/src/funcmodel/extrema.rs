//! Dense-grid extrema census used as ground truth by the verification
//! suite. Independent of the homogenization machinery.

use rayon::prelude::*;
use serde::Serialize;

use super::{FieldError, ScalarField};
use crate::scalar::Scalar;
use crate::search::{bisect, golden_section};

/// Two extrema are "equal" when their values differ by at most this much.
pub const EQUAL_EXTREMA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremum<S> {
    pub point: Vec<S>,
    pub value: S,
    pub boundary: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremaReport<S> {
    /// Interior local minima, sorted by coordinate.
    pub minima: Vec<Extremum<S>>,
    /// Interior local maxima, sorted by coordinate.
    pub maxima: Vec<Extremum<S>>,
    pub boundary_minima: Vec<Extremum<S>>,
    pub boundary_maxima: Vec<Extremum<S>>,
    /// All candidates tied (within tolerance) for the smallest value.
    pub global_minima: Vec<Extremum<S>>,
    pub global_maxima: Vec<Extremum<S>>,
    pub equal_minima: bool,
    pub equal_maxima: bool,
}

impl<S: Scalar> ExtremaReport<S> {
    pub fn global_min_value(&self) -> S {
        self.global_minima[0].value
    }

    pub fn global_min_interior(&self) -> bool {
        self.global_minima.iter().any(|e| !e.boundary)
    }

    pub fn global_max_interior(&self) -> bool {
        self.global_maxima.iter().any(|e| !e.boundary)
    }

    /// Interior stationary points of either kind, sorted by first coordinate.
    pub fn interior_extrema(&self) -> Vec<&Extremum<S>> {
        let mut all: Vec<_> = self.minima.iter().chain(&self.maxima).collect();
        all.sort_by(|a, b| a.point[0].partial_cmp(&b.point[0]).expect("finite"));
        all
    }
}

/// Classifies grid points of a 1-D or 2-D field as local minima/maxima by
/// neighbour comparison and refines interior candidates. `grid` is the
/// number of cells per axis (at least 64).
pub fn brute_force_extrema<S: Scalar>(
    f: &ScalarField<S>,
    grid: usize,
) -> Result<ExtremaReport<S>, FieldError> {
    if grid < 64 {
        return Err(FieldError::GridTooCoarse(grid));
    }
    let (mut minima, mut maxima, mut bmin, mut bmax) = match f.dim() {
        1 => scan_1d(f, grid),
        2 => scan_2d(f, grid),
        n => {
            return Err(FieldError::WrongDimension {
                expected: 2,
                got: n,
            })
        }
    };
    let by_coord = |a: &Extremum<S>, b: &Extremum<S>| {
        a.point
            .partial_cmp(&b.point)
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    for v in [&mut minima, &mut maxima, &mut bmin, &mut bmax] {
        v.sort_by(by_coord);
    }
    let tol = S::lit(EQUAL_EXTREMA_TOLERANCE);
    let candidates_min: Vec<&Extremum<S>> = minima.iter().chain(&bmin).collect();
    let candidates_max: Vec<&Extremum<S>> = maxima.iter().chain(&bmax).collect();
    let global = |c: &[&Extremum<S>], better: fn(S, S) -> bool| -> Vec<Extremum<S>> {
        let best = c
            .iter()
            .map(|e| e.value)
            .fold(None, |acc: Option<S>, v| match acc {
                Some(a) if !better(v, a) => Some(a),
                _ => Some(v),
            });
        match best {
            Some(b) => c
                .iter()
                .filter(|e| (e.value - b).abs() <= tol)
                .map(|e| (*e).clone())
                .collect(),
            None => Vec::new(),
        }
    };
    let mut global_minima = global(&candidates_min, |v, a| v < a);
    let mut global_maxima = global(&candidates_max, |v, a| v > a);
    if global_minima.is_empty() || global_maxima.is_empty() {
        // constant field: every point ties
        let c = f.domain().center();
        let e = Extremum {
            value: f.value(&c),
            point: c,
            boundary: false,
        };
        if global_minima.is_empty() {
            global_minima.push(e.clone());
        }
        if global_maxima.is_empty() {
            global_maxima.push(e);
        }
    }
    let interior_ties = |g: &[Extremum<S>]| g.iter().filter(|e| !e.boundary).count() > 1;
    Ok(ExtremaReport {
        equal_minima: interior_ties(&global_minima),
        equal_maxima: interior_ties(&global_maxima),
        minima,
        maxima,
        boundary_minima: bmin,
        boundary_maxima: bmax,
        global_minima,
        global_maxima,
    })
}

type Scan<S> = (Vec<Extremum<S>>, Vec<Extremum<S>>, Vec<Extremum<S>>, Vec<Extremum<S>>);

fn grid_points<S: Scalar>(lo: S, hi: S, grid: usize) -> Vec<S> {
    let step = (hi - lo) / S::from_usize_lossy(grid);
    (0..=grid)
        .map(|i| if i == grid { hi } else { lo + step * S::from_usize_lossy(i) })
        .collect()
}

fn scan_1d<S: Scalar>(f: &ScalarField<S>, grid: usize) -> Scan<S> {
    let (lo, hi) = f.domain().bounds(0);
    let xs = grid_points(lo, hi, grid);
    let vals: Vec<S> = xs.par_iter().map(|x| f.value(&[*x])).collect();
    let (mut minima, mut maxima, mut bmin, mut bmax) = (vec![], vec![], vec![], vec![]);
    for i in 1..grid {
        let (l, c, r) = (vals[i - 1], vals[i], vals[i + 1]);
        // strict on the left, weak on the right so flat-bottomed pairs count once
        let is_min = c < l && c <= r && !(c == r && i + 2 <= grid && vals[i + 2] == c);
        let is_max = c > l && c >= r && !(c == r && i + 2 <= grid && vals[i + 2] == c);
        if is_min {
            minima.push(refine_1d(f, xs[i - 1], xs[i + 1], true));
        } else if is_max {
            maxima.push(refine_1d(f, xs[i - 1], xs[i + 1], false));
        }
    }
    let ends = [(0usize, 1usize), (grid, grid - 1)];
    for (i, j) in ends {
        let e = Extremum {
            point: vec![xs[i]],
            value: vals[i],
            boundary: true,
        };
        if vals[i] < vals[j] {
            bmin.push(e);
        } else if vals[i] > vals[j] {
            bmax.push(e);
        }
    }
    (minima, maxima, bmin, bmax)
}

fn refine_1d<S: Scalar>(f: &ScalarField<S>, a: S, b: S, minimum: bool) -> Extremum<S> {
    let sign = if minimum { S::one() } else { -S::one() };
    let tol = (b - a) * S::lit(1e-9);
    let (mut x, _, _) = golden_section(|t| sign * f.value(&[t]), a, b, tol);
    if f.has_gradient() {
        let d = |t: S| f.gradient(&[t]).expect("gradient present")[0];
        let width = (b - a) * S::epsilon();
        if let Some((r, _, _)) = bisect(d, a, b, width) {
            if sign * f.value(&[r]) <= sign * f.value(&[x]) {
                x = r;
            }
        }
    }
    Extremum {
        value: f.value(&[x]),
        point: vec![x],
        boundary: false,
    }
}

fn scan_2d<S: Scalar>(f: &ScalarField<S>, grid: usize) -> Scan<S> {
    let d = f.domain();
    let xs = grid_points(d.bounds(0).0, d.bounds(0).1, grid);
    let ys = grid_points(d.bounds(1).0, d.bounds(1).1, grid);
    let m = grid + 1;
    let vals: Vec<S> = (0..m * m)
        .into_par_iter()
        .map(|k| f.value(&[xs[k / m], ys[k % m]]))
        .collect();
    let at = |i: usize, j: usize| vals[i * m + j];
    let classified: Vec<(usize, usize, i8)> = (0..m * m)
        .into_par_iter()
        .filter_map(|k| {
            let (i, j) = (k / m, k % m);
            let c = at(i, j);
            let (mut lower, mut higher) = (true, true);
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= m as i64 || nj >= m as i64 {
                        continue;
                    }
                    let v = at(ni as usize, nj as usize);
                    lower &= c < v;
                    higher &= c > v;
                }
            }
            match (lower, higher) {
                (true, _) => Some((i, j, -1)),
                (_, true) => Some((i, j, 1)),
                _ => None,
            }
        })
        .collect();
    let (hx, hy) = (xs[1] - xs[0], ys[1] - ys[0]);
    let refined: Vec<(Extremum<S>, i8)> = classified
        .par_iter()
        .map(|&(i, j, kind)| {
            let boundary = i == 0 || j == 0 || i == grid || j == grid;
            let point = vec![xs[i], ys[j]];
            if boundary {
                let value = at(i, j);
                (Extremum { point, value, boundary }, kind)
            } else {
                (refine_2d(f, point, hx, hy, kind < 0), kind)
            }
        })
        .collect();
    let (mut minima, mut maxima, mut bmin, mut bmax) = (vec![], vec![], vec![], vec![]);
    for (e, kind) in refined {
        match (kind < 0, e.boundary) {
            (true, false) => minima.push(e),
            (false, false) => maxima.push(e),
            (true, true) => bmin.push(e),
            (false, true) => bmax.push(e),
        }
    }
    (minima, maxima, bmin, bmax)
}

/// Alternating golden-section sweeps inside the candidate's grid cell
/// neighbourhood, then Newton polishing on the analytic gradient when one
/// exists.
fn refine_2d<S: Scalar>(f: &ScalarField<S>, start: Vec<S>, hx: S, hy: S, minimum: bool) -> Extremum<S> {
    let sign = if minimum { S::one() } else { -S::one() };
    let lo = [start[0] - hx, start[1] - hy];
    let hi = [start[0] + hx, start[1] + hy];
    let mut p = start;
    for _ in 0..40 {
        let before = p.clone();
        for axis in 0..2 {
            let tol = (hi[axis] - lo[axis]) * S::lit(1e-10);
            let (t, _, _) = golden_section(
                |t| {
                    let mut q = p.clone();
                    q[axis] = t;
                    sign * f.value(&q)
                },
                lo[axis],
                hi[axis],
                tol,
            );
            p[axis] = t;
        }
        if (p[0] - before[0]).abs() <= hx * S::lit(1e-11) && (p[1] - before[1]).abs() <= hy * S::lit(1e-11) {
            break;
        }
    }
    if f.has_gradient() {
        let grad = |q: &[S]| f.gradient(q).expect("gradient present");
        for _ in 0..20 {
            let g = grad(&p);
            let step = S::lit(1e-6) * hx.max(hy);
            let mut jac = [[S::zero(); 2]; 2];
            for k in 0..2 {
                let mut qp = p.clone();
                let mut qm = p.clone();
                qp[k] = qp[k] + step;
                qm[k] = qm[k] - step;
                let (gp, gm) = (grad(&qp), grad(&qm));
                for r in 0..2 {
                    jac[r][k] = (gp[r] - gm[r]) / (S::lit(2.0) * step);
                }
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det == S::zero() || !det.is_finite() {
                break;
            }
            let dx = (jac[1][1] * g[0] - jac[0][1] * g[1]) / det;
            let dy = (jac[0][0] * g[1] - jac[1][0] * g[0]) / det;
            let q = vec![p[0] - dx, p[1] - dy];
            let inside = q[0] >= lo[0] && q[0] <= hi[0] && q[1] >= lo[1] && q[1] <= hi[1];
            let gq = grad(&q);
            let better = gq[0].abs() + gq[1].abs() < g[0].abs() + g[1].abs();
            if !inside || !better {
                break;
            }
            p = q;
        }
    }
    Extremum {
        value: f.value(&p),
        point: p,
        boundary: false,
    }
}
