//! End-to-end checks of the command-line interface: exit codes, error
//! message quality, provenance echoing, and the exactness of the CSV float
//! format.  Every test drives the compiled binary through a scratch
//! directory, exactly as an operator would.

use std::path::Path;
use std::process::{Command, Output};

use driftwalk_core::environment::{Disorder, EnvRecord, Environment, EnvSpec};
use driftwalk_core::pathfunc::ScaleParams;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_driftwalk")
}

/// Runs the binary with a config written to `dir`, returning the raw output.
fn run_in(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg_path = dir.join("config.toml");
    std::fs::write(&cfg_path, config).expect("write config");
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .arg("--config")
        .arg(&cfg_path)
        .output()
        .expect("spawn driftwalk")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process terminated by signal")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn missing_alpha_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "kind = \"localization_trend\"\n",
        &["experiment"],
    );
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr_text(&out));
    assert!(
        stderr_text(&out).contains("environment.alpha is required"),
        "stderr should name the missing field: {}",
        stderr_text(&out)
    );
}

#[test]
fn alpha_on_the_interval_boundary_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "kind = \"localization_trend\"\n[environment]\nalpha = 0.5\n",
        &["experiment"],
    );
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr_text(&out));
    assert!(
        stderr_text(&out).contains("open interval"),
        "stderr should state the open-interval constraint: {}",
        stderr_text(&out)
    );
}

#[test]
fn unknown_experiment_kind_lists_the_choices() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "kind = \"localisation\"\n", &["experiment"]);
    assert_eq!(exit_code(&out), 2);
    let err = stderr_text(&out);
    assert!(err.contains("unknown experiment kind"), "stderr: {err}");
    assert!(err.contains("drawup_law_validation"), "stderr: {err}");
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "kind = \"localization_trend\"\n[environment]\nalpa = 0.4\n",
        &["experiment"],
    );
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr_text(&out));
    assert!(
        stderr_text(&out).contains("alpa"),
        "stderr should echo the misspelled field: {}",
        stderr_text(&out)
    );
}

#[test]
fn degenerate_disorder_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        concat!(
            "kind = \"localization_trend\"\n",
            "[environment]\n",
            "alpha = 0.4\n",
            "disorder = { family = \"gaussian\", std_dev = 0.0 }\n",
        ),
        &["experiment"],
    );
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr_text(&out));
    assert!(
        stderr_text(&out).contains("std_dev must be positive"),
        "stderr: {}",
        stderr_text(&out)
    );
}

#[test]
fn fractional_event_budget_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "kind = \"localization_trend\"\n[environment]\nalpha = 0.4\n[run]\nbudget_events = 1.5\n",
        &["experiment"],
    );
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr_text(&out));
    assert!(
        stderr_text(&out).contains("whole number"),
        "stderr: {}",
        stderr_text(&out)
    );
}

#[test]
fn scientific_notation_budget_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        concat!(
            "kind = \"localization_trend\"\n",
            "[environment]\nalpha = 0.4\n",
            "[time]\nt_grid = [1e3]\n",
            "[run]\nn_environments = 2\nn_replicas = 2\nbudget_events = 1e8\n",
        ),
        &["experiment", "--out", "sci"],
    );
    assert_eq!(
        exit_code(&out),
        0,
        "stdout: {}\nstderr: {}",
        stdout_text(&out),
        stderr_text(&out)
    );
}

#[test]
fn budget_refusal_names_both_numbers_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        concat!(
            "kind = \"localization_trend\"\n",
            "[environment]\nalpha = 0.4\n",
            "[time]\nt_grid = [1e4]\n",
            "[run]\nn_environments = 5\nn_replicas = 5\nbudget_events = 1000\n",
        ),
        &["experiment"],
    );
    assert_eq!(exit_code(&out), 3, "stderr: {}", stderr_text(&out));
    let err = stderr_text(&out);
    assert!(
        err.contains("budget refusal: estimated") && err.contains("1000"),
        "stderr should carry both the estimate and the budget: {err}"
    );
    // Nothing may be written when the run is refused.
    assert!(!dir.path().join("experiment.csv").exists());
}

#[test]
fn horizon_below_the_monotone_threshold_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "kind = \"localization_trend\"\n[environment]\nalpha = 0.4\n[time]\nt_grid = [10]\n",
        &["experiment"],
    );
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr_text(&out));
    assert!(
        stderr_text(&out).contains("15.16"),
        "stderr should state the horizon floor: {}",
        stderr_text(&out)
    );
}

#[test]
fn inadmissible_event_delta_names_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    // At alpha = 0.4 and epsilon = 0.5 the ascent bound is the tighter one:
    // delta = 0.08 violates it while staying below the draw-up cap bound.
    let out = run_in(
        dir.path(),
        concat!(
            "kind = \"event_frequency\"\n",
            "[environment]\nalpha = 0.4\n",
            "[time]\nt_grid = [1e6]\n",
            "[events]\ndelta = 0.08\n",
        ),
        &["experiment"],
    );
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr_text(&out));
    let err = stderr_text(&out);
    assert!(
        err.contains("2*delta < (1 + epsilon/2)^alpha - 1"),
        "stderr should state the violated inequality: {err}"
    );
    assert!(err.contains("0.08"), "stderr should echo the offending value: {err}");
}

#[test]
fn hitting_without_targets_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "[environment]\nalpha = 0.4\n[time]\nt_grid = [1e3]\n",
        &["hitting"],
    );
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr_text(&out));
    assert!(
        stderr_text(&out).contains("simulate.targets"),
        "stderr: {}",
        stderr_text(&out)
    );
}

#[test]
fn right_edge_overrun_is_a_runtime_error_with_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    // A 10-site environment cannot hold a walk for t = 1000.
    let out = run_in(
        dir.path(),
        concat!(
            "kind = \"localization_trend\"\n",
            "[environment]\nalpha = 0.4\nn_sites = 10\n",
            "[time]\nt_grid = [1e3]\n",
            "[run]\nn_environments = 2\nn_replicas = 2\n",
        ),
        &["experiment"],
    );
    assert_eq!(exit_code(&out), 4, "stderr: {}", stderr_text(&out));
    let err = stderr_text(&out);
    assert!(
        err.contains("environment") && err.contains("replica") && err.contains("seed"),
        "stderr should locate the failing unit: {err}"
    );
}

#[test]
fn csv_floats_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        concat!(
            "[environment]\nalpha = 0.35\nn_sites = 500\n",
            "[time]\nt_grid = [1e3, 1e4]\n",
            "[run]\nn_replicas = 4\n",
        ),
        &["drawstats", "--out", "ds"],
    );
    assert_eq!(
        exit_code(&out),
        0,
        "stdout: {}\nstderr: {}",
        stdout_text(&out),
        stderr_text(&out)
    );
    let mut rdr = csv::Reader::from_path(dir.path().join("ds.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let t_col = headers.iter().position(|h| h == "t").unwrap();
    let scale_col = headers.iter().position(|h| h == "scale").unwrap();
    let params = ScaleParams::new(0.35, 1.0, 1.0).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[t_col].parse().unwrap();
        let scale: f64 = rec[scale_col].parse().unwrap();
        assert!(t == 1e3 || t == 1e4, "t must round-trip bit-exactly, got {t:?}");
        let expect = params.localization_scale(t).unwrap();
        assert_eq!(
            scale.to_bits(),
            expect.to_bits(),
            "scale column must round-trip to the computed f64"
        );
        rows += 1;
    }
    assert_eq!(rows, 2);
}

#[test]
fn summary_records_defaults_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "kind = \"asymptotic_convergence\"\n",
        &["experiment", "--out", "asym", "--seed", "5"],
    );
    assert_eq!(
        exit_code(&out),
        0,
        "stdout: {}\nstderr: {}",
        stdout_text(&out),
        stderr_text(&out)
    );
    let text = std::fs::read_to_string(dir.path().join("asym_summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let prov = &v["provenance"];
    assert_eq!(prov["resolved_config"]["root_seed"], 5);
    let overrides = prov["flag_overrides"].as_array().unwrap();
    assert!(
        overrides.iter().any(|o| o.as_str().unwrap().contains("root_seed")),
        "flag overrides must record the seed: {overrides:?}"
    );
    let defaults = prov["defaulted_fields"].as_array().unwrap();
    assert!(
        defaults.iter().any(|d| d.as_str().unwrap().contains("asymptotic.ks")),
        "defaulted fields must record the schedule: {defaults:?}"
    );
}

#[test]
fn gen_env_emits_a_reloadable_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        concat!(
            "root_seed = 11\n",
            "[environment]\n",
            "alpha = 0.3\n",
            "n_sites = 200\n",
            "disorder = { family = \"rademacher\", c = 0.8 }\n",
        ),
        &["gen-env", "--out", "g"],
    );
    assert_eq!(
        exit_code(&out),
        0,
        "stdout: {}\nstderr: {}",
        stdout_text(&out),
        stderr_text(&out)
    );
    let text = std::fs::read_to_string(dir.path().join("g_env.json")).unwrap();
    let record: EnvRecord = serde_json::from_str(&text).unwrap();
    let env = Environment::from_record(&record).expect("record must reload");
    assert_eq!(env.n_sites(), 200);
    assert_eq!(
        env.spec(),
        &EnvSpec {
            disorder: Disorder::Rademacher { c: 0.8 },
            b: 1.0,
            alpha: 0.3,
            n_sites: 200,
            theta0_check: 0.5,
        }
    );
    // Rademacher increments: every disorder value is exactly +-0.8.
    for y in 1..=200 {
        let w = env.omega(y).unwrap();
        assert!(w == 0.8 || w == -0.8, "omega({y}) = {w}");
    }
}
