//! Localization-trend study: many disordered environments, many replicas
//! each, positions recorded at every grid horizon.
//!
//! Headline statistics:
//! * the slope of ln(median position) against ln(ln t / ln ln t), whose
//!   theoretical target is 1/α (medians are taken across replicas within an
//!   environment, then across environments, for robustness);
//! * the cross-environment interquartile range of the (position / scale)
//!   medians per horizon, which should shrink as t grows;
//! * the frequency of replicas whose running maximum never reached
//!   (1 − ε)·s(t) by time t — the first-passage shortfall.

use std::path::Path;

use driftwalk_core::rng::{derive_seed, domain};
use driftwalk_core::simulate::{horizon_step_cap, run_checkpoints};
use driftwalk_core::stats::ols_fit;
use rayon::prelude::*;

use crate::config::ResolvedConfig;
use crate::error::{CliError, CliResult};
use crate::experiments::{iqr, median};
use crate::report::{csv_path, fmt_float, provenance, write_summary, BudgetReport, CsvTable};

const DESIGN_NOTE: &str = "Environments are drawn independently per index from a derived seed \
     stream; replicas within an environment use streams derived from the environment seed, so \
     the layout (environments x replicas x horizons) is reproducible at any thread count. \
     Positions come from the Poissonized jump chain queried at the grid horizons. Medians are \
     taken across replicas within an environment and then across environments. The shortfall \
     frequency counts replicas whose running maximum stayed below ceil((1 - epsilon) * s(t)). \
     This study design is this artifact's own construction.";

pub fn run(cfg: &mut ResolvedConfig, prefix: &Path) -> CliResult<()> {
    // A defaulted grid is trimmed from the top until the hard per-replica
    // step bound fits the budget; an explicit grid is the user's contract
    // and refusal is preferred over silent truncation.
    if cfg.grid_was_default {
        let units = cfg.n_environments * cfg.n_replicas;
        while cfg.t_grid.len() > 2 {
            let t_max = *cfg.t_grid.last().expect("nonempty grid");
            if units.saturating_mul(horizon_step_cap(t_max)) <= cfg.budget_events {
                break;
            }
            cfg.t_grid.pop();
            cfg.defaulted.push(format!(
                "time.t_grid truncated above t = {} to fit run.budget_events = {}",
                cfg.t_grid.last().expect("nonempty grid"),
                cfg.budget_events
            ));
        }
    }
    let plan = cfg.walk_plan()?;
    let units = plan.n_environments * plan.n_replicas;
    let estimate = units.saturating_mul(plan.cap);
    let mut budget = BudgetReport::admit(estimate, cfg.budget_events)?;

    let mut table = CsvTable::create(
        &csv_path(prefix),
        &["env_index", "env_seed", "replica", "t", "position", "max_position"],
    )?;

    let n_t = plan.t_grid.len();
    // positions[ti][env] = replica positions; ratio med and shortfall per t.
    let mut env_medians: Vec<Vec<f64>> = vec![Vec::new(); n_t];
    let mut shortfall: Vec<u64> = vec![0; n_t];
    let targets: Vec<usize> = {
        let mut v = Vec::with_capacity(n_t);
        for &t in &plan.t_grid {
            let s = plan.scale.localization_scale(t)?;
            v.push(((1.0 - cfg.epsilon) * s).ceil() as usize);
        }
        v
    };

    for env_index in 0..plan.n_environments {
        let env_seed = derive_seed(cfg.root_seed, domain::ENVIRONMENT, env_index);
        let env = driftwalk_core::environment::sample_environment(&plan.spec, env_seed)
            .map_err(|e| CliError::at(&format!("environment {env_index} (seed {env_seed})"), e))?;
        let runs: Vec<driftwalk_core::simulate::CheckpointRun> = (0..plan.n_replicas)
            .into_par_iter()
            .map(|replica| {
                run_checkpoints(&env, plan.start, &plan.t_grid, env_seed, replica, plan.cap)
                    .map_err(|e| {
                        CliError::at(
                            &format!(
                                "environment {env_index} (seed {env_seed}), replica {replica}"
                            ),
                            e,
                        )
                    })
            })
            .collect::<CliResult<Vec<_>>>()?;
        for (replica, run) in runs.iter().enumerate() {
            budget.consume(run.events);
            for (ti, (&pos, &max_pos)) in
                run.positions.iter().zip(&run.max_positions).enumerate()
            {
                table.write_row(&[
                    env_index.to_string(),
                    env_seed.to_string(),
                    replica.to_string(),
                    fmt_float(plan.t_grid[ti]),
                    pos.to_string(),
                    max_pos.to_string(),
                ])?;
                if max_pos < targets[ti] {
                    shortfall[ti] += 1;
                }
            }
        }
        for ti in 0..n_t {
            let replica_positions: Vec<f64> =
                runs.iter().map(|r| r.positions[ti] as f64).collect();
            env_medians[ti].push(median(replica_positions)?);
        }
    }

    // Per-horizon aggregates and the trend regression.
    let mut per_t = Vec::with_capacity(n_t);
    let mut xs = Vec::with_capacity(n_t);
    let mut ys = Vec::with_capacity(n_t);
    for ti in 0..n_t {
        let t = plan.t_grid[ti];
        let s = plan.scale.localization_scale(t)?;
        let med = median(env_medians[ti].clone())?;
        let ratios: Vec<f64> = env_medians[ti].iter().map(|m| m / s).collect();
        let ratio_median = median(ratios.clone())?;
        let ratio_iqr = iqr(ratios)?;
        let shortfall_freq = shortfall[ti] as f64 / units as f64;
        if med <= 0.0 {
            return Err(CliError::Run(format!(
                "median position at t = {t} is {med}; the log-trend regression needs positive \
                 medians (longer horizons or more sites required)"
            )));
        }
        xs.push((t.ln() / t.ln().ln()).ln());
        ys.push(med.ln());
        per_t.push(serde_json::json!({
            "t": t,
            "scale": s,
            "median_position": med,
            "ratio_median_across_envs": ratio_median,
            "ratio_iqr_across_envs": ratio_iqr,
            "shortfall_target": targets[ti],
            "shortfall_frequency": shortfall_freq,
        }));
    }
    let slope = if n_t >= 3 {
        let fit = ols_fit(&xs, &ys)?;
        serde_json::json!({
            "slope": fit.slope,
            "intercept": fit.intercept,
            "slope_se": fit.slope_se,
            "slope_ci95_halfwidth": fit.ci95_halfwidth(),
            "target": 1.0 / plan.scale.alpha,
        })
    } else {
        serde_json::json!(null)
    };

    let (csv, rows) = table.finish()?;
    let summary = serde_json::json!({
        "kind": "localization_trend",
        "n_environments": plan.n_environments,
        "n_replicas": plan.n_replicas,
        "epsilon": cfg.epsilon,
        "per_t": per_t,
        "trend": slope,
        "no_data": rows == 0,
        "budget": budget.close()?,
        "provenance": provenance(cfg, DESIGN_NOTE),
    });
    let summary_file = write_summary(prefix, &summary)?;
    println!("wrote {} ({rows} rows) and {}", csv.display(), summary_file.display());
    Ok(())
}
