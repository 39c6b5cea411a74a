//! The five experiment kinds behind the `experiment` subcommand, plus
//! shared aggregation helpers.
//!
//! Every experiment follows the same shape: build a validated plan from the
//! config, report a hard upper bound on the event count and refuse if it
//! exceeds the budget, run the study with per-unit derived RNG streams (so
//! the output is independent of thread count), write one CSV table and one
//! JSON summary with full provenance.

pub mod asymptotic;
pub mod bounds;
pub mod drawlaw;
pub mod events;
pub mod localization;

use std::path::Path;

use driftwalk_core::stats::quantile_sorted;

use crate::config::{ExperimentKind, ResolvedConfig};
use crate::error::{CliError, CliResult};

pub fn run_experiment(cfg: &mut ResolvedConfig, prefix: &Path) -> CliResult<()> {
    match cfg.require_kind()? {
        ExperimentKind::LocalizationTrend => localization::run(cfg, prefix),
        ExperimentKind::EventFrequency => events::run(cfg, prefix),
        ExperimentKind::BoundValidation => bounds::run(cfg, prefix),
        ExperimentKind::DrawupLawValidation => drawlaw::run(cfg, prefix),
        ExperimentKind::AsymptoticConvergence => asymptotic::run(cfg, prefix),
    }
}

/// Median of an unsorted sample.
pub fn median(mut values: Vec<f64>) -> CliResult<f64> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(CliError::Run("median of a sample containing NaN".into()));
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("NaN screened above"));
    Ok(quantile_sorted(&values, 0.5)?)
}

/// Interquartile range of an unsorted sample.
pub fn iqr(mut values: Vec<f64>) -> CliResult<f64> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(CliError::Run("quartiles of a sample containing NaN".into()));
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("NaN screened above"));
    let q1 = quantile_sorted(&values, 0.25)?;
    let q3 = quantile_sorted(&values, 0.75)?;
    Ok(q3 - q1)
}
