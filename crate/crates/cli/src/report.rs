//! Output writing: CSV tables, JSON summaries, and the provenance block.
//!
//! Every run emits one CSV table (`{prefix}.csv`) and one JSON summary
//! (`{prefix}_summary.json`).  Floats are printed with 17 significant
//! digits so a round-trip through the file reproduces the exact bit
//! pattern; the summary's top-level key order is alphabetical (serde_json's
//! default map), so identical runs produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use crate::config::ResolvedConfig;
use crate::error::{CliError, CliResult};

/// 17 significant digits: enough for f64 round-trip exactness.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV table with a fixed header.
pub struct CsvTable {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
    rows: u64,
}

impl CsvTable {
    pub fn create(path: &Path, header: &[&str]) -> CliResult<Self> {
        let file = File::create(path)
            .map_err(|e| CliError::Run(format!("cannot create {}: {e}", path.display())))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        writer.write_record(header)?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
            rows: 0,
        })
    }

    pub fn write_row(&mut self, fields: &[String]) -> CliResult<()> {
        self.writer.write_record(fields)?;
        self.rows += 1;
        Ok(())
    }

    /// Flushes and reports (path, number of data rows).
    pub fn finish(mut self) -> CliResult<(PathBuf, u64)> {
        self.writer.flush().map_err(CliError::from)?;
        Ok((self.path, self.rows))
    }
}

/// Tracks the pre-run event estimate against the configured budget and the
/// events actually consumed.
#[derive(Debug, Clone, Copy)]
pub struct BudgetReport {
    pub estimated: u64,
    pub budget: u64,
    pub actual: u64,
}

impl BudgetReport {
    /// Refuses up front when the estimate does not fit the budget.
    pub fn admit(estimated: u64, budget: u64) -> CliResult<Self> {
        if estimated > budget {
            return Err(CliError::Budget {
                estimate: estimated,
                budget,
            });
        }
        println!("budget: estimated at most {estimated} events against a budget of {budget}");
        Ok(Self {
            estimated,
            budget,
            actual: 0,
        })
    }

    pub fn consume(&mut self, events: u64) {
        self.actual = self.actual.saturating_add(events);
    }

    /// The estimate is constructed as a hard upper bound, so exceeding it
    /// indicates an accounting bug rather than bad luck.
    pub fn close(&self) -> CliResult<serde_json::Value> {
        if self.actual as f64 > self.estimated as f64 * 1.01 {
            return Err(CliError::Run(format!(
                "event accounting error: consumed {} events against a pre-run estimate of {}",
                self.actual, self.estimated
            )));
        }
        Ok(serde_json::json!({
            "estimated_events": self.estimated,
            "budget_events": self.budget,
            "actual_events": self.actual,
        }))
    }
}

/// Provenance block attached to every summary: full resolved-config echo,
/// which fields were defaulted, which were overridden by flags, and how the
/// sampling design was chosen.
pub fn provenance(cfg: &ResolvedConfig, design_note: &str) -> serde_json::Value {
    serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "root_seed": cfg.root_seed,
        "resolved_config": cfg.echo(),
        "defaulted_fields": cfg.defaulted,
        "flag_overrides": cfg.overrides,
        "design_note": design_note,
    })
}

/// Writes the JSON summary next to the CSV and prints where things went.
pub fn write_summary(prefix: &Path, summary: &serde_json::Value) -> CliResult<PathBuf> {
    let path = summary_path(prefix);
    let file = File::create(&path)
        .map_err(|e| CliError::Run(format!("cannot create {}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, summary)
        .map_err(|e| CliError::Run(format!("cannot serialize summary: {e}")))?;
    out.write_all(b"\n").map_err(CliError::from)?;
    out.flush().map_err(CliError::from)?;
    Ok(path)
}

pub fn csv_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, ".csv")
}

pub fn summary_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, "_summary.json")
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}
