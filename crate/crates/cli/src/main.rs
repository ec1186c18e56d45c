use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use homogopt::solver::Method;
use homogopt_cli::config::{parse_box, parse_point, FunctionSource, RunConfig};
use homogopt_cli::{run_analyze, run_bench, run_solve, run_verify};

/// Global optimization by box-kernel homogenization.
#[derive(Parser)]
#[command(name = "homogopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zero counts, landscape grids and critical scale of a 1-D or 2-D function.
    Analyze(Common),
    /// Run the theorem checks over the corpus. Exits 1 if a mandatory check fails.
    Verify(Common),
    /// Minimize one function.
    Solve(Common),
    /// Compare continuation, line decomposition and plain descent over seeded starts.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// continuation | line | plain
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    h_start: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    h_min: Option<f64>,
    /// Zero-scan grid (1-D) or census grid (2-D).
    #[arg(long)]
    grid: Option<usize>,
    /// Corpus entry name.
    #[arg(long, conflicts_with = "expr")]
    entry: Option<String>,
    /// Expression text, e.g. "x^4 - x^2 + 0.2*x".
    #[arg(long, requires = "bounds")]
    expr: Option<String>,
    /// Comma-separated variable names (default x, or x,y in 2-D).
    #[arg(long)]
    vars: Option<String>,
    /// Box as lo:hi per axis, comma separated.
    #[arg(long = "box", id = "bounds", allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Starting point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Comma-separated h values for analyze.
    #[arg(long)]
    h_values: Option<String>,
    /// Comma-separated corpus entries for verify and bench.
    #[arg(long)]
    entries: Option<String>,
    /// Seeded starts per entry for bench.
    #[arg(long)]
    starts: Option<usize>,
    /// Include negative-control entries in verify.
    #[arg(long)]
    controls: bool,
}

impl Common {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(name) = self.entry {
            cfg.function = Some(FunctionSource::Corpus(name));
        }
        if let Some(text) = self.expr {
            let bounds = parse_box(self.bounds.as_deref().unwrap_or_default())?;
            let variables: Vec<String> = match self.vars {
                Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
                None => match bounds.len() {
                    1 => vec!["x".into()],
                    2 => vec!["x".into(), "y".into()],
                    n => bail!("--vars is required for {n}-dimensional boxes"),
                },
            };
            cfg.function = Some(FunctionSource::Expression { text, variables, bounds });
        } else if self.bounds.is_some() || self.vars.is_some() {
            bail!("--box and --vars only apply together with --expr");
        }
        if let Some(v) = self.out {
            cfg.out = Some(v);
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.method {
            cfg.method = v;
        }
        if let Some(v) = self.h_start {
            cfg.h_start = Some(v);
        }
        if let Some(v) = self.rho {
            cfg.rho = Some(v);
        }
        if let Some(v) = self.h_min {
            cfg.h_min = Some(v);
        }
        if let Some(v) = self.grid {
            cfg.grid = Some(v);
        }
        if let Some(v) = self.x0 {
            cfg.x0 = Some(parse_point(&v).context("--x0")?);
        }
        if let Some(v) = self.h_values {
            cfg.h_values = Some(parse_point(&v).context("--h-values")?);
        }
        if let Some(v) = self.entries {
            cfg.entries = Some(v.split(',').map(|s| s.trim().to_string()).collect());
        }
        if let Some(v) = self.starts {
            cfg.starts = v;
        }
        cfg.controls |= self.controls;
        Ok(cfg)
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HOMOGOPT_THREADS") {
        let n: usize = v.parse().with_context(|| format!("HOMOGOPT_THREADS: `{v}` is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Analyze(c) => {
            let s = run_analyze(&c.into_config()?)?;
            println!("terminal count {}", s["terminal_count"]);
        }
        Command::Verify(c) => {
            let report = run_verify(&c.into_config()?)?;
            let failures = report.mandatory_failures();
            println!(
                "{} records, {} mandatory failures, {} discrepancies",
                report.records.len(),
                failures.len(),
                report.discrepancies().len()
            );
            for r in &failures {
                println!("FAIL {} {}", r.entry, r.check.id());
            }
            if !failures.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Solve(c) => {
            let r = run_solve(&c.into_config()?)?;
            println!("final point {} value {} ({})", r["final_point"], r["final_value"], r["status"]);
        }
        Command::Bench(c) => {
            let out = run_bench(&c.into_config()?)?;
            for (entry, methods) in &out.summary {
                let rates: Vec<String> = methods
                    .iter()
                    .map(|(m, s)| match s {
                        Some(s) => format!("{m} {}/{}", s.successes, s.runs),
                        None => format!("{m} n/a"),
                    })
                    .collect();
                println!("{entry}: {}", rates.join(", "));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
