use anyhow::{bail, Result};
use homogopt::funcmodel::corpus_manifest;
use homogopt::{corpus_with_controls, verify_theorems, CorpusEntry, TheoremReport};

use crate::config::RunConfig;
use crate::output::{ensure_dir, header, write_csv, write_json};

/// Runs the theorem suite and writes `theorem_report.json`,
/// `theorem_report.csv` and `corpus_manifest.json`.
pub fn run_verify(cfg: &RunConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    let mut entries: Vec<CorpusEntry> = corpus_with_controls(cfg.controls);
    if let Some(names) = &cfg.entries {
        for n in names {
            if !entries.iter().any(|e| e.name() == n) {
                bail!("config.entries: unknown corpus entry `{n}`");
            }
        }
        entries.retain(|e| names.iter().any(|n| n == e.name()));
    }
    let mut vc = cfg.verify.clone();
    if let Some(g) = cfg.grid {
        vc.grid = g;
    }
    if let Some(p) = cfg.policy {
        vc.policy = p;
    }
    vc.seed = cfg.seed;
    let report = verify_theorems(&entries, &vc)?;

    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    write_json(&dir, "theorem_report.json", &report.to_json())?;
    write_csv(
        &dir,
        "theorem_report.csv",
        &header(&TheoremReport::CSV_HEADER),
        report.csv_rows(),
    )?;
    write_json(&dir, "corpus_manifest.json", &corpus_manifest(&entries))?;
    Ok(report)
}
