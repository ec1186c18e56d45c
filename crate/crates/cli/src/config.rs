//! Run configuration: a JSON file overlaid with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use homogopt::funcmodel::{self, brute_force_extrema};
use homogopt::{CorpusEntry, Oracle};
use homogopt::solver::{DescentParams, LineParams, Method};
use homogopt::{Domain, QuadraturePolicy, ScalarField, VerifyConfig};
use serde::{Deserialize, Serialize};

/// Where the objective comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSource {
    /// A built-in corpus entry by name.
    Corpus(String),
    Expression {
        text: String,
        variables: Vec<String>,
        #[serde(rename = "box")]
        bounds: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub function: Option<FunctionSource>,
    /// Corpus filter for `verify` and `bench`.
    pub entries: Option<Vec<String>>,
    /// Include negative-control entries in `verify`.
    pub controls: bool,
    /// Quadrature for `analyze`; the solver has its own in `descent`.
    pub policy: Option<QuadraturePolicy>,
    /// Zero-scan grid (1-D) or census grid (2-D).
    pub grid: Option<usize>,
    /// Explicit scale grid for `analyze`.
    pub h_values: Option<Vec<f64>>,
    pub h_start: Option<f64>,
    pub rho: Option<f64>,
    pub h_min: Option<f64>,
    pub polish: bool,
    pub method: Method,
    pub x0: Option<Vec<f64>>,
    pub seed: u64,
    /// Seeded starts per entry in `bench`.
    pub starts: usize,
    /// Success radius around the oracle minimizer.
    pub tolerance: f64,
    pub descent: DescentParams,
    pub line: LineParams,
    pub verify: VerifyConfig,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            function: None,
            entries: None,
            controls: false,
            policy: None,
            grid: None,
            h_values: None,
            h_start: None,
            rho: None,
            h_min: None,
            polish: true,
            method: Method::Continuation,
            x0: None,
            seed: 0,
            starts: 20,
            tolerance: 1e-3,
            descent: DescentParams::default(),
            line: LineParams::default(),
            verify: VerifyConfig::default(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Parses a configuration, reporting the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("config.{path}: {}", e.into_inner())
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            bail!("config.starts: must be at least 1");
        }
        if !(self.tolerance > 0.0) {
            bail!("config.tolerance: must be positive");
        }
        if let Some(p) = &self.policy {
            p.validate().context("config.policy")?;
        }
        if let Some(p) = &self.descent.policy {
            p.validate().context("config.descent.policy")?;
        }
        if let Some(h) = &self.h_values {
            if h.is_empty() || h.iter().any(|v| !(*v > 0.0)) || h.windows(2).any(|w| w[0] >= w[1]) {
                bail!("config.h_values: must be positive and strictly increasing");
            }
        }
        for (name, v) in [("h_start", self.h_start), ("rho", self.rho), ("h_min", self.h_min)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    bail!("config.{name}: must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

/// A resolved objective with its ground truth, when one is available.
pub struct Problem {
    pub field: ScalarField,
    pub oracle: Option<Oracle>,
    pub entry: Option<CorpusEntry>,
}

/// Dense-grid oracle resolution for user expressions.
const EXPRESSION_ORACLE_GRID_1D: usize = 8192;
const EXPRESSION_ORACLE_GRID_2D: usize = 400;

pub fn resolve(source: Option<&FunctionSource>) -> Result<Problem> {
    match source {
        None => bail!("config.function: no function given (use --entry or --expr)"),
        Some(FunctionSource::Corpus(name)) => {
            let entry: CorpusEntry = funcmodel::find_entry(name, true)
                .with_context(|| format!("config.function.corpus: unknown corpus entry `{name}`"))?;
            Ok(Problem {
                field: entry.field.clone(),
                oracle: Some(entry.oracle.clone()),
                entry: Some(entry),
            })
        }
        Some(FunctionSource::Expression { text, variables, bounds }) => {
            let field = ScalarField::parse("expression", text, variables, bounds)
                .context("config.function.expression")?;
            let oracle = match field.dim() {
                1 | 2 => {
                    let grid = if field.dim() == 1 { EXPRESSION_ORACLE_GRID_1D } else { EXPRESSION_ORACLE_GRID_2D };
                    let r = brute_force_extrema(&field, grid)?;
                    Some(Oracle {
                        minimizers: r.global_minima.iter().map(|m| m.point.clone()).collect(),
                        min_value: r.global_min_value(),
                        local_minima: r.minima.len(),
                        provenance: format!("dense-grid ({grid} cells per axis) with refinement"),
                    })
                }
                _ => None,
            };
            Ok(Problem {
                field,
                oracle,
                entry: None,
            })
        }
    }
}

/// Parses `a:b,c:d` into per-axis bounds.
pub fn parse_box(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|axis| {
            let (a, b) = axis
                .split_once(':')
                .with_context(|| format!("--box: axis `{axis}` is not of the form lo:hi"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

pub fn parse_point(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("`{v}` is not a number")))
        .collect()
}

/// Continuation schedule from the configured scales, defaulting to half the
/// shortest edge down to a thousandth of it.
pub fn schedule(cfg: &RunConfig, domain: &Domain) -> Result<homogopt::ContinuationSchedule> {
    let l = domain.shortest_edge();
    let s = homogopt::make_schedule(
        cfg.h_start.unwrap_or(0.5 * l),
        cfg.rho.unwrap_or(homogopt::scale::DEFAULT_RHO),
        cfg.h_min.unwrap_or(homogopt::scale::DEFAULT_H_MIN_FRACTION * l),
    )?;
    if !s.fits(domain) {
        bail!("config.h_start: first scale {} exceeds the shortest box edge {l}", s.first());
    }
    Ok(s.with_polish(cfg.polish))
}
