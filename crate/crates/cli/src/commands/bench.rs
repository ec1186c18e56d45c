use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Result};
use homogopt::solver::Evaluations;
use homogopt::{
    corpus, heuristic_h0, line_decomposition_solve, plain_descent, smoothed_descent, CorpusEntry,
    HomogenizationOperator, Tag,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{name_seed, random_point};
use crate::config::{schedule, RunConfig};
use crate::output::{ensure_dir, header, join, write_csv, write_json};

pub const BENCH_METHODS: [&str; 3] = ["continuation", "line-decomposition-on-f", "plain"];

#[derive(Debug, Clone, Serialize)]
pub struct BenchRun {
    pub entry: String,
    pub start: usize,
    pub method: &'static str,
    pub x0: Vec<f64>,
    pub final_point: Vec<f64>,
    pub final_value: f64,
    pub distance: f64,
    pub success: bool,
    pub status: String,
    pub evaluations: Evaluations,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MethodSummary {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_f_evaluations: f64,
    pub mean_gradient_evaluations: f64,
    pub mean_quadrature_evaluations: f64,
}

pub struct BenchOutcome {
    pub runs: Vec<BenchRun>,
    /// Entry name to method id to summary; a method that does not apply to
    /// an entry's dimension maps to `None`.
    pub summary: BTreeMap<String, BTreeMap<&'static str, Option<MethodSummary>>>,
}

fn status_id(s: homogopt::Status) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn add(a: &mut Evaluations, b: &Evaluations) {
    a.f += b.f;
    a.gradient += b.gradient;
    a.quadrature += b.quadrature;
}

/// Every applicable method from one seeded start.
fn runs_from(entry: &CorpusEntry, k: usize, cfg: &RunConfig) -> Result<Vec<BenchRun>> {
    let f = &entry.field;
    let sched = schedule(cfg, f.domain())?;
    let policy = cfg.descent.policy_for(f.dim());
    let start_region = HomogenizationOperator::new(sched.first(), policy)?.inset_domain(f)?;
    let seed = name_seed(cfg.seed, entry.name()).wrapping_add(k as u64);
    let x0 = random_point(&start_region, seed);
    let oracle = &entry.oracle.minimizers;
    let record = |method, t: homogopt::SolverTrace, evaluations| {
        let distance = t.distance_to(oracle);
        BenchRun {
            entry: entry.name().to_string(),
            start: k,
            method,
            x0: x0.clone(),
            final_point: t.final_point.clone(),
            final_value: t.final_value,
            distance,
            success: distance <= cfg.tolerance,
            status: status_id(t.status),
            evaluations,
        }
    };
    let mut out = Vec::new();
    let t = smoothed_descent(f, &sched, &x0, &cfg.descent)?;
    let ev = t.evaluations.clone();
    out.push(record(BENCH_METHODS[0], t, ev));
    if f.dim() == 2 {
        // lines on F(h0, .) locate the smoothed minimizer; a raw descent
        // then settles in the basin it lands in
        let h0 = heuristic_h0(f.domain()).h0;
        let op = HomogenizationOperator::new(h0, policy)?;
        let smooth = op.counting_homogenized_field(f, Default::default())?;
        let inset = op.inset_domain(f)?;
        let mut start = x0.clone();
        inset.project(&mut start);
        let coarse = line_decomposition_solve(&smooth, &start, seed, &cfg.line)?;
        let fine = plain_descent(f, &coarse.final_point, &cfg.descent)?;
        let mut ev = coarse.evaluations.clone();
        add(&mut ev, &fine.evaluations);
        out.push(record(BENCH_METHODS[1], fine, ev));
    }
    let t = plain_descent(f, &x0, &cfg.descent)?;
    let ev = t.evaluations.clone();
    out.push(record(BENCH_METHODS[2], t, ev));
    Ok(out)
}

/// Benchmarks the three methods on multimodal corpus entries (or the
/// configured ones) and writes `bench.csv`, `bench_summary.json` and the
/// timing sidecar `bench_meta.json`.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchOutcome> {
    cfg.validate()?;
    let all: Vec<CorpusEntry> = corpus();
    let entries: Vec<&CorpusEntry> = match &cfg.entries {
        Some(names) => names
            .iter()
            .map(|n| match all.iter().find(|e| e.name() == n) {
                Some(e) => Ok(e),
                None => bail!("config.entries: unknown corpus entry `{n}`"),
            })
            .collect::<Result<_>>()?,
        None => all.iter().filter(|e| e.has_tag(Tag::Multimodal)).collect(),
    };

    let began = Instant::now();
    let jobs: Vec<(&CorpusEntry, usize)> =
        entries.iter().flat_map(|e| (0..cfg.starts).map(move |k| (*e, k))).collect();
    let timed: Vec<(String, f64, Vec<BenchRun>)> = jobs
        .par_iter()
        .map(|(e, k)| {
            let t = Instant::now();
            let runs = runs_from(e, *k, cfg)?;
            Ok((e.name().to_string(), t.elapsed().as_secs_f64(), runs))
        })
        .collect::<Result<_>>()?;
    let wall = began.elapsed().as_secs_f64();

    let mut per_entry_time: BTreeMap<String, f64> = BTreeMap::new();
    for (name, secs, _) in &timed {
        *per_entry_time.entry(name.clone()).or_default() += secs;
    }
    let runs: Vec<BenchRun> = timed.into_iter().flat_map(|(_, _, r)| r).collect();

    let mut summary: BTreeMap<String, BTreeMap<&'static str, Option<MethodSummary>>> = BTreeMap::new();
    for e in &entries {
        let methods = summary.entry(e.name().to_string()).or_default();
        for m in BENCH_METHODS {
            let mine: Vec<&BenchRun> = runs.iter().filter(|r| r.entry == e.name() && r.method == m).collect();
            if mine.is_empty() {
                methods.insert(m, None);
                continue;
            }
            let n = mine.len() as f64;
            let successes = mine.iter().filter(|r| r.success).count();
            let mean = |g: fn(&Evaluations) -> usize| mine.iter().map(|r| g(&r.evaluations) as f64).sum::<f64>() / n;
            methods.insert(
                m,
                Some(MethodSummary {
                    runs: mine.len(),
                    successes,
                    success_rate: successes as f64 / n,
                    mean_f_evaluations: mean(|e| e.f),
                    mean_gradient_evaluations: mean(|e| e.gradient),
                    mean_quadrature_evaluations: mean(|e| e.quadrature),
                }),
            );
        }
    }

    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    write_csv(
        &dir,
        "bench.csv",
        &header(&[
            "entry",
            "start",
            "method",
            "x0",
            "final_point",
            "final_value",
            "distance",
            "success",
            "status",
            "f_evaluations",
            "gradient_evaluations",
            "quadrature_evaluations",
        ]),
        runs.iter().map(|r| {
            vec![
                r.entry.clone(),
                r.start.to_string(),
                r.method.to_string(),
                join(&r.x0),
                join(&r.final_point),
                r.final_value.to_string(),
                r.distance.to_string(),
                r.success.to_string(),
                r.status.clone(),
                r.evaluations.f.to_string(),
                r.evaluations.gradient.to_string(),
                r.evaluations.quadrature.to_string(),
            ]
        }),
    )?;
    let summary_json: Value = json!({
        "starts": cfg.starts,
        "seed": cfg.seed,
        "tolerance": cfg.tolerance,
        "entries": summary,
    });
    write_json(&dir, "bench_summary.json", &summary_json)?;
    write_json(
        &dir,
        "bench_meta.json",
        &json!({
            "wall_time_seconds": wall,
            "cpu_seconds_per_entry": per_entry_time,
            "threads": rayon::current_num_threads(),
        }),
    )?;
    Ok(BenchOutcome { runs, summary })
}
