use anyhow::{bail, Result};
use homogopt::analysis::{containment_check, geometric_scales, DEFAULT_CENSUS_GRID, DEFAULT_SCAN_GRID};
use homogopt::Oracle;
use homogopt::{
    extreme_point_census, find_h0, heuristic_h0, scan_sweep, HomogenizationOperator, QuadraturePolicy, ScalarField,
    ScaleError,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{resolve, RunConfig};
use crate::output::{ensure_dir, header, join, write_csv, write_json};

const LANDSCAPE_POINTS_1D: usize = 200;
const LANDSCAPE_POINTS_2D: usize = 40;
const CENSUS_SCALES: usize = 8;

/// Writes `zeros.csv`, `landscape.csv` and `summary.json` for a 1-D or 2-D
/// function. Returns the summary.
pub fn run_analyze(cfg: &RunConfig) -> Result<Value> {
    cfg.validate()?;
    let problem = resolve(cfg.function.as_ref())?;
    let f = &problem.field;
    let dir = cfg.out_dir();
    let summary = match f.dim() {
        1 => analyze_1d(cfg, f, problem.oracle.as_ref(), &dir)?,
        2 => analyze_2d(cfg, f, problem.oracle.as_ref(), &dir)?,
        d => bail!("analyze supports 1-D and 2-D functions, got dimension {d}"),
    };
    write_json(&dir, "summary.json", &summary)?;
    Ok(summary)
}

fn scales(cfg: &RunConfig, f: &ScalarField, points: usize) -> Vec<f64> {
    cfg.h_values.clone().unwrap_or_else(|| {
        let l = f.domain().shortest_edge();
        geometric_scales(l * cfg.verify.h_min_fraction, l * cfg.verify.h_max_fraction, points)
    })
}

fn oracle_json(oracle: Option<&Oracle>) -> Value {
    oracle.map_or(Value::Null, |o| {
        json!({
            "minimizers": o.minimizers,
            "min_value": o.min_value,
            "provenance": o.provenance,
        })
    })
}

fn analyze_1d(cfg: &RunConfig, f: &ScalarField, oracle: Option<&Oracle>, dir: &std::path::Path) -> Result<Value> {
    let policy = cfg.policy.unwrap_or_default();
    let grid = cfg.grid.unwrap_or(DEFAULT_SCAN_GRID);
    let hs = scales(cfg, f, cfg.verify.h_points);
    let sweep = scan_sweep(f, policy, &hs, grid)?;
    ensure_dir(dir)?;

    write_csv(
        dir,
        "zeros.csv",
        &header(&["h", "count", "touching", "zeros", "profile", "interval_lo", "interval_hi", "max_abs_t"]),
        sweep.iter().map(|r| {
            vec![
                r.h.to_string(),
                r.count.to_string(),
                r.touching.to_string(),
                join(&r.zero_points()),
                r.profile_string(),
                r.interval.0.to_string(),
                r.interval.1.to_string(),
                r.max_abs.to_string(),
            ]
        }),
    )?;

    let rows: Vec<Vec<Vec<String>>> = hs
        .par_iter()
        .map(|&h| -> Result<Vec<Vec<String>>> {
            let op = HomogenizationOperator::new(h, policy)?;
            let (a, b) = op.inset_domain(f)?.bounds(0);
            (0..=LANDSCAPE_POINTS_1D)
                .map(|i| {
                    let x = a + (b - a) * i as f64 / LANDSCAPE_POINTS_1D as f64;
                    Ok(vec![
                        h.to_string(),
                        x.to_string(),
                        f.value(&[x]).to_string(),
                        op.avg_gradient_1d(f, x)?.to_string(),
                        op.value(f, &[x])?.value.to_string(),
                    ])
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    write_csv(dir, "landscape.csv", &header(&["h", "x", "f", "t", "big_f"]), rows.into_iter().flatten())?;

    let counts: Vec<usize> = sweep.iter().map(|r| r.count).collect();
    let terminal = *counts.last().expect("non-empty scale grid");
    let mut h0 = Value::Null;
    let mut containment = Value::Null;
    if terminal > 0 && hs.len() > 1 {
        match find_h0(f, policy, terminal, (hs[0], hs[hs.len() - 1]), grid) {
            Ok(finding) => {
                if let Some(o) = oracle {
                    let op = HomogenizationOperator::new(finding.h0, policy)?;
                    let report = homogopt::scan_zeros(f, &op, grid)?;
                    let c = containment_check(&report, o, cfg.verify.containment_slack * finding.h0 / 2.0)?;
                    containment = json!({
                        "passed": c.passed,
                        "margin": c.margin,
                        "slack": c.slack,
                        "zeros": c.zeros,
                    });
                }
                h0 = serde_json::to_value(&finding)?;
            }
            Err(e @ ScaleError::Unachievable { .. }) => h0 = json!({ "error": e.to_string() }),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(json!({
        "function": f.name(),
        "expression": f.expression().map(|e| e.to_string()),
        "dimension": 1,
        "box": f.domain().to_f64(),
        "policy": policy,
        "grid": grid,
        "h_values": hs,
        "counts": counts,
        "terminal_count": terminal,
        "identically_zero": sweep.last().is_some_and(|r| r.identically_zero()),
        "h0": h0,
        "containment": containment,
        "oracle": oracle_json(oracle),
    }))
}

fn census_policy(cfg: &RunConfig, f: &ScalarField) -> QuadraturePolicy {
    cfg.policy.unwrap_or(QuadraturePolicy::Gauss {
        order: if f.polynomial_degree().is_some() { 8 } else { 16 },
    })
}

fn analyze_2d(cfg: &RunConfig, f: &ScalarField, oracle: Option<&Oracle>, dir: &std::path::Path) -> Result<Value> {
    let policy = census_policy(cfg, f);
    let grid = cfg.grid.unwrap_or(DEFAULT_CENSUS_GRID);
    let hs = scales(cfg, f, CENSUS_SCALES);
    let censuses = hs
        .iter()
        .map(|&h| Ok(extreme_point_census(f, &HomogenizationOperator::new(h, policy)?, grid)?))
        .collect::<Result<Vec<_>>>()?;
    ensure_dir(dir)?;
    write_csv(
        dir,
        "zeros.csv",
        &header(&["h", "minima", "maxima", "count", "argmin"]),
        censuses.iter().map(|c| {
            vec![
                c.h.to_string(),
                c.minima.to_string(),
                c.maxima.to_string(),
                c.total().to_string(),
                join(&c.argmin),
            ]
        }),
    )?;

    let rows: Vec<Vec<Vec<String>>> = hs
        .par_iter()
        .map(|&h| -> Result<Vec<Vec<String>>> {
            let op = HomogenizationOperator::new(h, policy)?;
            let inset = op.inset_domain(f)?;
            let (ax, bx) = inset.bounds(0);
            let (ay, by) = inset.bounds(1);
            let n = LANDSCAPE_POINTS_2D;
            let mut out = Vec::with_capacity((n + 1) * (n + 1));
            for j in 0..=n {
                for i in 0..=n {
                    let p = [ax + (bx - ax) * i as f64 / n as f64, ay + (by - ay) * j as f64 / n as f64];
                    let t = op.gradient(f, &p)?.components;
                    out.push(vec![
                        h.to_string(),
                        p[0].to_string(),
                        p[1].to_string(),
                        f.value(&p).to_string(),
                        t[0].to_string(),
                        t[1].to_string(),
                        op.value(f, &p)?.value.to_string(),
                    ]);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    write_csv(
        dir,
        "landscape.csv",
        &header(&["h", "x", "y", "f", "t_x", "t_y", "big_f"]),
        rows.into_iter().flatten(),
    )?;

    let finding = heuristic_h0(f.domain());
    let at_h0 = extreme_point_census(f, &HomogenizationOperator::new(finding.h0, policy)?, grid)?;
    let containment = oracle.map_or(Value::Null, |o| {
        let half = finding.h0 / 2.0;
        let margin = o
            .minimizers
            .iter()
            .map(|m| m.iter().zip(&at_h0.argmin).map(|(a, b)| half - (a - b).abs()).fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min);
        json!({
            "passed": margin >= 0.0,
            "margin": margin,
            "argmin_at_h0": at_h0.argmin,
        })
    });
    Ok(json!({
        "function": f.name(),
        "expression": f.expression().map(|e| e.to_string()),
        "dimension": 2,
        "box": f.domain().to_f64(),
        "policy": policy,
        "grid": grid,
        "h_values": hs,
        "census": censuses,
        "counts": censuses.iter().map(|c| c.total()).collect::<Vec<_>>(),
        "terminal_count": censuses.last().map(|c| c.total()),
        "h0": finding,
        "census_at_h0": at_h0,
        "containment": containment,
        "oracle": oracle_json(oracle),
    }))
}
