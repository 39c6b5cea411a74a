//! The plain (non-`experiment`) subcommands: environment generation, single
//! ensemble runs, hitting-time runs, and path draw statistics.  `bmlaw` is
//! the draw-up law study without requiring an experiment kind in the
//! config, so it lives in the experiments module.

use std::path::Path;

use driftwalk_core::environment::{sample_environment, sample_potential_path};
use driftwalk_core::pathfunc::interval_stats;
use driftwalk_core::rng::{derive_seed, domain};
use driftwalk_core::simulate::{run_checkpoints, run_hits, HitConvention, StopRule};
use rayon::prelude::*;

use crate::config::ResolvedConfig;
use crate::error::{CliError, CliResult};
use crate::experiments::median;
use crate::report::{csv_path, fmt_float, provenance, write_summary, BudgetReport, CsvTable};

/// Samples the configured environment and writes its full record (spec,
/// seed, disorder values) as JSON, so later runs can audit or reload it.
pub fn gen_env(cfg: &mut ResolvedConfig, prefix: &Path) -> CliResult<()> {
    let spec = cfg.standalone_env_spec()?;
    let env_seed = derive_seed(cfg.root_seed, domain::ENVIRONMENT, 0);
    let env = sample_environment(&spec, env_seed)
        .map_err(|e| CliError::at(&format!("environment 0 (seed {env_seed})"), e))?;
    let record = env.to_record(true)?;
    let path = {
        let mut s = prefix.as_os_str().to_os_string();
        s.push("_env.json");
        std::path::PathBuf::from(s)
    };
    let file = std::fs::File::create(&path)
        .map_err(|e| CliError::Run(format!("cannot create {}: {e}", path.display())))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &record)
        .map_err(|e| CliError::Run(format!("cannot serialize environment record: {e}")))?;
    println!(
        "wrote {} ({} sites, seed {env_seed})",
        path.display(),
        env.n_sites()
    );
    Ok(())
}

const SIMULATE_NOTE: &str = "Single-environment ensemble: environment from stream index 0, one \
     derived stream per replica, positions and running maxima at each grid horizon.";

/// One environment, `n_replicas` replicas, positions at every grid horizon.
pub fn simulate(cfg: &mut ResolvedConfig, prefix: &Path) -> CliResult<()> {
    let plan = cfg.walk_plan()?;
    let estimate = plan.n_replicas.saturating_mul(plan.cap);
    let mut budget = BudgetReport::admit(estimate, cfg.budget_events)?;
    let env_seed = derive_seed(cfg.root_seed, domain::ENVIRONMENT, 0);
    let env = sample_environment(&plan.spec, env_seed)
        .map_err(|e| CliError::at(&format!("environment 0 (seed {env_seed})"), e))?;

    let runs: Vec<driftwalk_core::simulate::CheckpointRun> = (0..plan.n_replicas)
        .into_par_iter()
        .map(|replica| {
            run_checkpoints(&env, plan.start, &plan.t_grid, env_seed, replica, plan.cap).map_err(
                |e| {
                    CliError::at(
                        &format!("environment 0 (seed {env_seed}), replica {replica}"),
                        e,
                    )
                },
            )
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut table = CsvTable::create(
        &csv_path(prefix),
        &["replica", "t", "position", "max_position"],
    )?;
    for (replica, run) in runs.iter().enumerate() {
        budget.consume(run.events);
        for (ti, (&pos, &max_pos)) in run.positions.iter().zip(&run.max_positions).enumerate() {
            table.write_row(&[
                replica.to_string(),
                fmt_float(plan.t_grid[ti]),
                pos.to_string(),
                max_pos.to_string(),
            ])?;
        }
    }

    let mut per_t = Vec::with_capacity(plan.t_grid.len());
    for (ti, &t) in plan.t_grid.iter().enumerate() {
        let positions: Vec<f64> = runs.iter().map(|r| r.positions[ti] as f64).collect();
        let med = median(positions)?;
        let s = plan.scale.localization_scale(t)?;
        per_t.push(serde_json::json!({
            "t": t,
            "scale": s,
            "median_position": med,
            "ratio_median": med / s,
        }));
    }

    let (csv, rows) = table.finish()?;
    let summary = serde_json::json!({
        "kind": "simulate",
        "env_seed": env_seed,
        "n_replicas": plan.n_replicas,
        "per_t": per_t,
        "no_data": rows == 0,
        "budget": budget.close()?,
        "provenance": provenance(cfg, SIMULATE_NOTE),
    });
    let summary_file = write_summary(prefix, &summary)?;
    println!("wrote {} ({rows} rows) and {}", csv.display(), summary_file.display());
    Ok(())
}

const HITTING_NOTE: &str = "Single-environment hitting run: environment from stream index 0, \
     one derived stream per replica, continuous first-hit times of every target site \
     reconstructed from the jump chain; unresolved targets are reported censored with the \
     elapsed lower bound.";

/// First-hit times of the configured target sites, one row per
/// (replica, target).
pub fn hitting(cfg: &mut ResolvedConfig, prefix: &Path) -> CliResult<()> {
    let plan = cfg.walk_plan()?;
    let targets = cfg.targets.clone().ok_or_else(|| {
        CliError::Config("simulate.targets is required for the hitting subcommand".into())
    })?;
    if targets.is_empty() {
        return Err(CliError::Config("simulate.targets must not be empty".into()));
    }
    let estimate = plan.n_replicas.saturating_mul(plan.cap);
    let mut budget = BudgetReport::admit(estimate, cfg.budget_events)?;
    let env_seed = derive_seed(cfg.root_seed, domain::ENVIRONMENT, 0);
    let env = sample_environment(&plan.spec, env_seed)
        .map_err(|e| CliError::at(&format!("environment 0 (seed {env_seed})"), e))?;

    let runs: Vec<driftwalk_core::simulate::HitRun> = (0..plan.n_replicas)
        .into_par_iter()
        .map(|replica| {
            run_hits(
                &env,
                plan.start,
                &targets,
                env_seed,
                replica,
                plan.cap,
                HitConvention::HitAtStart,
                StopRule::AllTargets,
            )
            .map_err(|e| {
                CliError::at(
                    &format!("environment 0 (seed {env_seed}), replica {replica}"),
                    e,
                )
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut table = CsvTable::create(
        &csv_path(prefix),
        &["replica", "target", "hit_time", "hit_step", "resolved", "elapsed"],
    )?;
    for (replica, run) in runs.iter().enumerate() {
        budget.consume(run.events);
        for (k, &target) in targets.iter().enumerate() {
            table.write_row(&[
                replica.to_string(),
                target.to_string(),
                run.hit_times[k].map(fmt_float).unwrap_or_default(),
                run.hit_events[k].map(|v| v.to_string()).unwrap_or_default(),
                u8::from(run.hit_times[k].is_some()).to_string(),
                fmt_float(run.elapsed),
            ])?;
        }
    }

    let mut per_target = Vec::with_capacity(targets.len());
    for (k, &target) in targets.iter().enumerate() {
        let resolved: Vec<f64> = runs.iter().filter_map(|r| r.hit_times[k]).collect();
        let n_resolved = resolved.len() as u64;
        let med = if resolved.is_empty() {
            None
        } else {
            Some(median(resolved)?)
        };
        per_target.push(serde_json::json!({
            "target": target,
            "resolved": n_resolved,
            "censored": plan.n_replicas - n_resolved,
            "median_hit_time": med,
        }));
    }

    let (csv, rows) = table.finish()?;
    let summary = serde_json::json!({
        "kind": "hitting",
        "env_seed": env_seed,
        "n_replicas": plan.n_replicas,
        "per_target": per_target,
        "no_data": rows == 0,
        "budget": budget.close()?,
        "provenance": provenance(cfg, HITTING_NOTE),
    });
    let summary_file = write_summary(prefix, &summary)?;
    println!("wrote {} ({rows} rows) and {}", csv.display(), summary_file.display());
    Ok(())
}

const DRAWSTATS_NOTE: &str = "One sampled potential path per grid horizon (derived seed per \
     horizon), reporting draw-up/draw-down statistics of the window [0, (1+epsilon)s(t)] and \
     the four path events at the configured (epsilon, delta, N).";

/// Draw statistics and event indicators of sampled potential paths, one
/// path per grid horizon.
pub fn drawstats(cfg: &mut ResolvedConfig, prefix: &Path) -> CliResult<()> {
    let plan = cfg.events_plan()?;

    let mut lengths = Vec::with_capacity(plan.t_grid.len());
    let mut estimate: u64 = 0;
    for &t in &plan.t_grid {
        let s = plan.scale.localization_scale(t)?;
        let window = t.ln().powf(1.0 / plan.scale.alpha);
        let length = ((1.0 + plan.epsilon) * s).max(window) + 2.0 * plan.grid_step;
        lengths.push(length);
        estimate = estimate.saturating_add((length / plan.grid_step).ceil() as u64);
    }
    let mut budget = BudgetReport::admit(estimate, cfg.budget_events)?;

    let mut table = CsvTable::create(
        &csv_path(prefix),
        &[
            "t",
            "path_seed",
            "scale",
            "drawup",
            "drawdown",
            "argmax_x",
            "range_max",
            "drawup_cap",
            "descent_partition",
            "ascent_partition",
            "envelope",
        ],
    )?;

    for (ti, &t) in plan.t_grid.iter().enumerate() {
        let seed = derive_seed(cfg.root_seed, domain::POTENTIAL_PATH, ti as u64);
        let coord = format!("t = {t} (seed {seed})");
        let path = sample_potential_path(
            plan.scale.sigma,
            plan.scale.b,
            plan.scale.alpha,
            lengths[ti],
            plan.grid_step,
            seed,
        )
        .map_err(|e| CliError::at(&coord, e))?;
        budget.consume((path.values().len() - 1) as u64);
        let s = plan.scale.localization_scale(t)?;
        let hi = path
            .last_index_at_or_before((1.0 + plan.epsilon) * s)
            .map_err(|e| CliError::at(&coord, e))?;
        let stats = interval_stats(path.values(), 0, hi).map_err(|e| CliError::at(&coord, e))?;
        let flags = [
            driftwalk_core::pathfunc::check_drawup_cap_event(
                &path,
                &plan.scale,
                t,
                plan.epsilon,
                plan.delta,
            )
            .map_err(|e| CliError::at(&coord, e))?,
            driftwalk_core::pathfunc::check_descent_partition_event(
                &path,
                &plan.scale,
                t,
                plan.epsilon,
                plan.delta,
                plan.n_partition,
            )
            .map_err(|e| CliError::at(&coord, e))?,
            driftwalk_core::pathfunc::check_ascent_partition_event(
                &path,
                &plan.scale,
                t,
                plan.epsilon,
                plan.delta,
                plan.n_partition,
            )
            .map_err(|e| CliError::at(&coord, e))?,
            driftwalk_core::pathfunc::check_envelope_event(&path, &plan.scale, t)
                .map_err(|e| CliError::at(&coord, e))?,
        ];
        table.write_row(&[
            fmt_float(t),
            seed.to_string(),
            fmt_float(s),
            fmt_float(stats.drawup),
            fmt_float(stats.drawdown),
            fmt_float(path.x_at(stats.argmax_index)),
            fmt_float(stats.range_max),
            u8::from(flags[0]).to_string(),
            u8::from(flags[1]).to_string(),
            u8::from(flags[2]).to_string(),
            u8::from(flags[3]).to_string(),
        ])?;
    }

    let (csv, rows) = table.finish()?;
    let summary = serde_json::json!({
        "kind": "drawstats",
        "epsilon": plan.epsilon,
        "delta": plan.delta,
        "n_partition": plan.n_partition,
        "grid_step": plan.grid_step,
        "no_data": rows == 0,
        "budget": budget.close()?,
        "provenance": provenance(cfg, DRAWSTATS_NOTE),
    });
    let summary_file = write_summary(prefix, &summary)?;
    println!("wrote {} ({rows} rows) and {}", csv.display(), summary_file.display());
    Ok(())
}
