use anyhow::Result;
use homogopt::solver::Method;
use homogopt::{line_decomposition_solve, plain_descent, smoothed_descent, HomogenizationOperator, SolverTrace};
use serde_json::{json, Value};

use super::random_point;
use crate::config::{resolve, schedule, RunConfig};
use crate::output::{ensure_dir, write_csv, write_json};

/// Solves one problem and writes `trace.json`, `trace.csv` and
/// `result.json`. Without an explicit `x0` the start is drawn from the seed
/// inside the region the method accepts.
pub fn run_solve(cfg: &RunConfig) -> Result<Value> {
    cfg.validate()?;
    let problem = resolve(cfg.function.as_ref())?;
    let f = &problem.field;
    let sched = schedule(cfg, f.domain())?;
    let x0 = match &cfg.x0 {
        Some(x) => x.clone(),
        None => {
            let region = match cfg.method {
                Method::Continuation => HomogenizationOperator::new(sched.first(), cfg.descent.policy_for(f.dim()))?
                    .inset_domain(f)?,
                _ => f.domain().clone(),
            };
            random_point(&region, cfg.seed)
        }
    };
    let trace: SolverTrace = match cfg.method {
        Method::Continuation => smoothed_descent(f, &sched, &x0, &cfg.descent)?,
        Method::LineDecomposition => line_decomposition_solve(f, &x0, cfg.seed, &cfg.line)?,
        Method::Plain => plain_descent(f, &x0, &cfg.descent)?,
    };

    let oracle = problem.oracle.as_ref().map_or(Value::Null, |o| {
        json!({
            "minimizers": o.minimizers,
            "min_value": o.min_value,
            "gap": trace.distance_to(&o.minimizers),
            "value_gap": trace.final_value - o.min_value,
            "provenance": o.provenance,
        })
    });
    let result = json!({
        "function": f.name(),
        "expression": f.expression().map(|e| e.to_string()),
        "method": cfg.method,
        "seed": cfg.seed,
        "x0": x0,
        "schedule": if cfg.method == Method::Continuation { serde_json::to_value(&sched)? } else { Value::Null },
        "final_point": trace.final_point,
        "final_value": trace.final_value,
        "status": trace.status,
        "iterations": trace.records.len(),
        "lines": trace.lines,
        "evaluations": trace.evaluations,
        "oracle": oracle,
    });

    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    write_json(&dir, "trace.json", &trace)?;
    write_csv(&dir, "trace.csv", &trace.csv_header(), trace.csv_rows())?;
    write_json(&dir, "result.json", &result)?;
    Ok(result)
}
