//! Configuration parsing, defaulting, and validation.
//!
//! A single TOML file feeds every subcommand; each reads the sections it
//! needs.  Parsing produces a [`ResolvedConfig`] in which every omitted
//! field has been filled with a documented default and recorded in
//! `defaulted`, so the provenance block of each run can echo exactly what
//! was assumed.  Validation happens in the `*_plan` methods, which hand the
//! experiments fully-checked parameter bundles; every rejected combination
//! names the violated constraint.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use driftwalk_core::environment::{Disorder, EnvSpec};
use driftwalk_core::pathfunc::{default_partition_count, ScaleParams};
use driftwalk_core::simulate::horizon_step_cap;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Grid points below e^e are rejected: the iterated logarithm in the
/// localization scale changes sign at e and the scale is only monotone
/// beyond e^e.
pub const MIN_HORIZON: f64 = 15.16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LocalizationTrend,
    EventFrequency,
    BoundValidation,
    DrawupLawValidation,
    AsymptoticConvergence,
}

impl FromStr for ExperimentKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "localization_trend" => Ok(Self::LocalizationTrend),
            "event_frequency" => Ok(Self::EventFrequency),
            "bound_validation" => Ok(Self::BoundValidation),
            "drawup_law_validation" => Ok(Self::DrawupLawValidation),
            "asymptotic_convergence" => Ok(Self::AsymptoticConvergence),
            other => Err(CliError::Config(format!(
                "unknown experiment kind {other:?}; expected one of localization_trend, \
                 event_frequency, bound_validation, drawup_law_validation, \
                 asymptotic_convergence"
            ))),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::LocalizationTrend => "localization_trend",
            Self::EventFrequency => "event_frequency",
            Self::BoundValidation => "bound_validation",
            Self::DrawupLawValidation => "drawup_law_validation",
            Self::AsymptoticConvergence => "asymptotic_convergence",
        };
        f.write_str(s)
    }
}

/// Large counts (event budgets, path counts) are naturally written in
/// scientific notation, which TOML types as a float.  Accept both spellings
/// but insist the value is a nonnegative whole number.
fn de_count<'de, D>(deserializer: D) -> Result<Option<u64>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum IntOrFloat {
        Int(u64),
        Float(f64),
    }
    match Option::<IntOrFloat>::deserialize(deserializer)? {
        None => Ok(None),
        Some(IntOrFloat::Int(n)) => Ok(Some(n)),
        Some(IntOrFloat::Float(x)) => {
            if x.is_finite() && x >= 0.0 && x < u64::MAX as f64 && x.fract() == 0.0 {
                Ok(Some(x as u64))
            } else {
                Err(serde::de::Error::custom(format!(
                    "count must be a nonnegative whole number representable in 64 bits, got {x}"
                )))
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Option<String>,
    root_seed: Option<u64>,
    output_prefix: Option<String>,
    environment: Option<RawEnvironment>,
    time: Option<RawTime>,
    run: Option<RawRun>,
    events: Option<RawEvents>,
    bounds: Option<RawBounds>,
    bmlaw: Option<RawBmLaw>,
    asymptotic: Option<RawAsymptotic>,
    simulate: Option<RawSimulate>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvironment {
    disorder: Option<Disorder>,
    b: Option<f64>,
    alpha: Option<f64>,
    n_sites: Option<usize>,
    theta0_check: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_grid: Option<Vec<f64>>,
    grid_mu: Option<f64>,
    t_min: Option<f64>,
    t_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n_environments: Option<u64>,
    n_replicas: Option<u64>,
    start_site: Option<usize>,
    #[serde(default, deserialize_with = "de_count")]
    budget_events: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvents {
    epsilon: Option<f64>,
    delta: Option<f64>,
    n_partition: Option<usize>,
    grid_step: Option<f64>,
    #[serde(default, deserialize_with = "de_count")]
    n_paths: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    n_calibration: Option<u64>,
    n_validation: Option<u64>,
    n_replicas: Option<u64>,
    interval_width: Option<usize>,
    k1: Option<f64>,
    safety_se: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBmLaw {
    sigma: Option<f64>,
    nu: Option<f64>,
    mu: Option<f64>,
    thresholds: Option<Vec<f64>>,
    dt: Option<f64>,
    #[serde(default, deserialize_with = "de_count")]
    n_paths: Option<u64>,
    with_mc: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAsymptotic {
    ks: Option<Vec<f64>>,
    sigma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    targets: Option<Vec<usize>>,
}

/// Fully defaulted configuration.  Optional fields that have no universal
/// default (`kind`, `alpha`, `n_sites`, explicit `delta`, `targets`) stay
/// optional here and are demanded by the plans that need them.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub kind: Option<ExperimentKind>,
    pub root_seed: u64,
    pub output_prefix: String,
    pub disorder: Disorder,
    pub b: f64,
    pub alpha: Option<f64>,
    pub n_sites: Option<usize>,
    pub theta0_check: f64,
    pub t_grid: Vec<f64>,
    pub grid_was_default: bool,
    pub n_environments: u64,
    pub n_replicas: u64,
    pub start_site: usize,
    pub budget_events: u64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub n_partition: Option<usize>,
    pub grid_step: f64,
    pub n_paths: u64,
    pub bounds_n_calibration: u64,
    pub bounds_n_validation: u64,
    pub bounds_n_replicas: u64,
    pub bounds_interval_width: usize,
    pub bounds_k1: f64,
    pub bounds_safety_se: f64,
    pub bm_sigma: f64,
    pub bm_nu: f64,
    pub bm_mu: f64,
    pub bm_thresholds: Vec<f64>,
    pub bm_dt: f64,
    pub bm_n_paths: u64,
    pub bm_with_mc: bool,
    pub asym_ks: Vec<f64>,
    pub asym_sigma: f64,
    pub targets: Option<Vec<usize>>,
    /// One line per field that fell back to its default.
    pub defaulted: Vec<String>,
    /// One line per field overridden by a command-line flag.
    pub overrides: Vec<String>,
}

macro_rules! take {
    ($cfg:ident, $section:ident . $field:ident, $default:expr, $fmt:literal) => {{
        match $cfg.$section.as_ref().and_then(|s| s.$field.clone()) {
            Some(v) => v,
            None => {
                let d = $default;
                $cfg.defaulted_notes.push(format!($fmt, d));
                d
            }
        }
    }};
}

struct RawWithNotes {
    kind: Option<String>,
    root_seed: Option<u64>,
    output_prefix: Option<String>,
    environment: Option<RawEnvironment>,
    time: Option<RawTime>,
    run: Option<RawRun>,
    events: Option<RawEvents>,
    bounds: Option<RawBounds>,
    bmlaw: Option<RawBmLaw>,
    asymptotic: Option<RawAsymptotic>,
    simulate: Option<RawSimulate>,
    defaulted_notes: Vec<String>,
}

/// Parses and defaults a TOML config file.
pub fn parse_config(path: &Path) -> CliResult<ResolvedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("config parse failure in {}: {e}", path.display())))?;
    resolve(raw)
}

/// Parses and defaults TOML config text; an empty string yields the full
/// default configuration.
pub fn parse_config_text(text: &str) -> CliResult<ResolvedConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse failure: {e}")))?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> CliResult<ResolvedConfig> {
    let mut cfg = RawWithNotes {
        kind: raw.kind,
        root_seed: raw.root_seed,
        output_prefix: raw.output_prefix,
        environment: raw.environment,
        time: raw.time,
        run: raw.run,
        events: raw.events,
        bounds: raw.bounds,
        bmlaw: raw.bmlaw,
        asymptotic: raw.asymptotic,
        simulate: raw.simulate,
        defaulted_notes: Vec::new(),
    };

    let kind = match cfg.kind.as_deref() {
        Some(s) => Some(ExperimentKind::from_str(s)?),
        None => None,
    };
    let root_seed = match cfg.root_seed {
        Some(v) => v,
        None => {
            cfg.defaulted_notes.push("root_seed = 0".into());
            0
        }
    };
    let output_prefix = match cfg.output_prefix.clone() {
        Some(v) => v,
        None => {
            cfg.defaulted_notes.push("output_prefix = \"experiment\"".into());
            "experiment".into()
        }
    };

    let disorder = take!(
        cfg,
        environment.disorder,
        Disorder::Gaussian { std_dev: 1.0 },
        "environment.disorder = {:?}"
    );
    let b = take!(cfg, environment.b, 1.0, "environment.b = {}");
    let alpha = cfg.environment.as_ref().and_then(|e| e.alpha);
    let n_sites = cfg.environment.as_ref().and_then(|e| e.n_sites);
    let theta0_check = take!(cfg, environment.theta0_check, 0.5, "environment.theta0_check = {}");

    let (t_grid, grid_was_default) = resolve_grid(&mut cfg)?;

    let n_environments = take!(cfg, run.n_environments, 20, "run.n_environments = {}");
    let n_replicas = take!(cfg, run.n_replicas, 50, "run.n_replicas = {}");
    let start_site = take!(cfg, run.start_site, 0, "run.start_site = {}");
    let budget_events =
        take!(cfg, run.budget_events, 1_000_000_000, "run.budget_events = {}");

    let epsilon = take!(cfg, events.epsilon, 0.5, "events.epsilon = {}");
    let delta = cfg.events.as_ref().and_then(|e| e.delta);
    let n_partition = cfg.events.as_ref().and_then(|e| e.n_partition);
    let grid_step = take!(cfg, events.grid_step, 1.0, "events.grid_step = {}");
    let n_paths = take!(cfg, events.n_paths, 1000, "events.n_paths = {}");

    let bounds_n_calibration =
        take!(cfg, bounds.n_calibration, 100, "bounds.n_calibration = {}");
    let bounds_n_validation = take!(cfg, bounds.n_validation, 100, "bounds.n_validation = {}");
    let bounds_n_replicas = take!(cfg, bounds.n_replicas, 200, "bounds.n_replicas = {}");
    let bounds_interval_width =
        take!(cfg, bounds.interval_width, 40, "bounds.interval_width = {}");
    let bounds_k1 = take!(cfg, bounds.k1, 1.0, "bounds.k1 = {}");
    let bounds_safety_se = take!(cfg, bounds.safety_se, 3.0, "bounds.safety_se = {}");

    let bm_sigma = take!(cfg, bmlaw.sigma, 1.0, "bmlaw.sigma = {}");
    let bm_nu = take!(cfg, bmlaw.nu, -0.5, "bmlaw.nu = {}");
    let bm_mu = take!(cfg, bmlaw.mu, 20.0, "bmlaw.mu = {}");
    let bm_thresholds = take!(
        cfg,
        bmlaw.thresholds,
        vec![1.0, 2.0, 3.0],
        "bmlaw.thresholds = {:?}"
    );
    let bm_dt = take!(cfg, bmlaw.dt, 1e-4, "bmlaw.dt = {}");
    let bm_n_paths = take!(cfg, bmlaw.n_paths, 200_000, "bmlaw.n_paths = {}");
    let bm_with_mc = take!(cfg, bmlaw.with_mc, true, "bmlaw.with_mc = {}");

    let asym_ks = take!(
        cfg,
        asymptotic.ks,
        vec![2.0, 4.0, 8.0, 16.0],
        "asymptotic.ks = {:?}"
    );
    let asym_sigma = take!(cfg, asymptotic.sigma, 1.0, "asymptotic.sigma = {}");

    let targets = cfg.simulate.as_ref().and_then(|s| s.targets.clone());

    Ok(ResolvedConfig {
        kind,
        root_seed,
        output_prefix,
        disorder,
        b,
        alpha,
        n_sites,
        theta0_check,
        t_grid,
        grid_was_default,
        n_environments,
        n_replicas,
        start_site,
        budget_events,
        epsilon,
        delta,
        n_partition,
        grid_step,
        n_paths,
        bounds_n_calibration,
        bounds_n_validation,
        bounds_n_replicas,
        bounds_interval_width,
        bounds_k1,
        bounds_safety_se,
        bm_sigma,
        bm_nu,
        bm_mu,
        bm_thresholds,
        bm_dt,
        bm_n_paths,
        bm_with_mc,
        asym_ks,
        asym_sigma,
        targets,
        defaulted: cfg.defaulted_notes,
        overrides: Vec::new(),
    })
}

/// Either the explicit grid or the default geometric-exponential grid
/// t_n = exp((1 + mu)^n) restricted to [t_min, t_max].
fn resolve_grid(cfg: &mut RawWithNotes) -> CliResult<(Vec<f64>, bool)> {
    if let Some(grid) = cfg.time.as_ref().and_then(|t| t.t_grid.clone()) {
        validate_grid(&grid)?;
        return Ok((grid, false));
    }
    let mu = take!(cfg, time.grid_mu, 0.1, "time.grid_mu = {}");
    let t_min = take!(cfg, time.t_min, 1e4, "time.t_min = {}");
    let t_max = take!(cfg, time.t_max, 1e6, "time.t_max = {}");
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(CliError::Config(format!(
            "time.grid_mu must be positive and finite, got {mu}"
        )));
    }
    if !(t_min >= MIN_HORIZON && t_max > t_min && t_max.is_finite()) {
        return Err(CliError::Config(format!(
            "default grid needs {MIN_HORIZON} <= t_min < t_max, got t_min = {t_min}, t_max = {t_max}"
        )));
    }
    let ratio = 1.0 + mu;
    let mut grid = Vec::new();
    let mut n = (t_min.ln().ln() / ratio.ln()).ceil().max(1.0);
    loop {
        let t = ratio.powf(n).exp();
        if t > t_max * (1.0 + 1e-9) {
            break;
        }
        if t >= t_min {
            grid.push(t);
        }
        n += 1.0;
    }
    if grid.len() < 2 {
        return Err(CliError::Config(format!(
            "default grid between {t_min} and {t_max} with grid_mu = {mu} has fewer than two \
             points; widen the range or shrink grid_mu"
        )));
    }
    cfg.defaulted_notes
        .push(format!("time.t_grid = {grid:?} (geometric-exponential)"));
    validate_grid(&grid)?;
    Ok((grid, true))
}

fn validate_grid(grid: &[f64]) -> CliResult<()> {
    if grid.is_empty() {
        return Err(CliError::Config("time.t_grid must not be empty".into()));
    }
    for &t in grid {
        if !(t.is_finite() && t >= MIN_HORIZON) {
            return Err(CliError::Config(format!(
                "every grid horizon must be finite and at least {MIN_HORIZON} (above e^e the \
                 localization scale is monotone), got {t}"
            )));
        }
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(CliError::Config(format!(
                "time.t_grid must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Parameter bundle for the localization-trend study and the plain
/// simulate/hitting subcommands.
#[derive(Debug, Clone)]
pub struct WalkPlan {
    pub spec: EnvSpec,
    pub scale: ScaleParams,
    pub t_grid: Vec<f64>,
    pub n_environments: u64,
    pub n_replicas: u64,
    pub start: usize,
    pub cap: u64,
}

/// Parameter bundle for the potential-path event study.
#[derive(Debug, Clone)]
pub struct EventsPlan {
    pub scale: ScaleParams,
    pub t_grid: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub n_partition: usize,
    pub grid_step: f64,
    pub n_paths: u64,
}

/// Parameter bundle for confinement/escape bound calibration + validation.
#[derive(Debug, Clone)]
pub struct BoundsPlan {
    pub spec: EnvSpec,
    pub t_grid: Vec<f64>,
    pub n_calibration: u64,
    pub n_validation: u64,
    pub n_replicas: u64,
    pub interval_left: usize,
    pub start: usize,
    pub interval_right: usize,
    pub k1: f64,
    pub safety_se: f64,
    pub cap: u64,
}

/// Parameter bundle for the drifted-Brownian draw-up law study.
#[derive(Debug, Clone)]
pub struct DrawLawPlan {
    pub sigma: f64,
    pub nu: f64,
    pub mu: f64,
    pub thresholds: Vec<f64>,
    pub dt: f64,
    pub n_paths: u64,
    pub with_mc: bool,
}

/// Parameter bundle for the asymptotic-regime comparison schedule
/// (threshold = k, drift = -k, horizon mean = k^3).
#[derive(Debug, Clone)]
pub struct AsymptoticPlan {
    pub ks: Vec<f64>,
    pub sigma: f64,
}

impl ResolvedConfig {
    pub fn require_kind(&self) -> CliResult<ExperimentKind> {
        self.kind.ok_or_else(|| {
            CliError::Config("kind is required for the experiment subcommand".into())
        })
    }

    fn require_alpha(&self) -> CliResult<f64> {
        self.alpha
            .ok_or_else(|| CliError::Config("environment.alpha is required".into()))
    }

    pub fn scale_params(&self) -> CliResult<ScaleParams> {
        let alpha = self.require_alpha()?;
        // Validate the disorder first so a degenerate law is reported by its
        // own field name, not as a derived sigma problem.
        self.disorder.validate()?;
        Ok(ScaleParams::new(alpha, self.b, self.disorder.sigma())?)
    }

    fn t_max(&self) -> f64 {
        *self.t_grid.last().expect("resolved grid is nonempty")
    }

    /// Number of sites: explicit, or four localization scales at the
    /// largest horizon plus margin so right-edge overruns are negligible.
    fn walk_sites(&mut self) -> CliResult<usize> {
        if let Some(n) = self.n_sites {
            if n < 2 {
                return Err(CliError::Config(format!(
                    "environment.n_sites must be at least 2, got {n}"
                )));
            }
            return Ok(n);
        }
        let scale = self.scale_params()?;
        let s = scale.localization_scale(self.t_max())?;
        let n = (4.0 * s).ceil() as usize + 200;
        self.defaulted
            .push(format!("environment.n_sites = {n} (four localization scales at the largest horizon, plus margin)"));
        Ok(n)
    }

    fn env_spec(&self, n_sites: usize) -> CliResult<EnvSpec> {
        let spec = EnvSpec {
            disorder: self.disorder.clone(),
            b: self.b,
            alpha: self.require_alpha()?,
            n_sites,
            theta0_check: self.theta0_check,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn walk_plan(&mut self) -> CliResult<WalkPlan> {
        let n_sites = self.walk_sites()?;
        let spec = self.env_spec(n_sites)?;
        let scale = self.scale_params()?;
        if self.start_site > n_sites {
            return Err(CliError::Config(format!(
                "run.start_site = {} exceeds environment.n_sites = {n_sites}",
                self.start_site
            )));
        }
        Ok(WalkPlan {
            spec,
            scale,
            t_grid: self.t_grid.clone(),
            n_environments: self.n_environments,
            n_replicas: self.n_replicas,
            start: self.start_site,
            cap: horizon_step_cap(self.t_max()),
        })
    }

    pub fn events_plan(&mut self) -> CliResult<EventsPlan> {
        let scale = self.scale_params()?;
        let epsilon = self.epsilon;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(CliError::Config(format!(
                "events.epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let cap_bound = scale.drawup_cap_delta_bound(epsilon)?;
        let ascent_bound = scale.ascent_delta_bound(epsilon)?;
        let delta = match self.delta {
            Some(d) => d,
            None => {
                let d = 0.5 * cap_bound.min(ascent_bound);
                self.defaulted.push(format!(
                    "events.delta = {d} (half the tighter admissibility bound)"
                ));
                d
            }
        };
        if !(delta > 0.0 && delta < cap_bound) {
            return Err(CliError::Config(format!(
                "2*delta < 1 - (1 - epsilon)^alpha, required for the drawup cap event: \
                 delta = {delta}, admissible bound = {cap_bound}"
            )));
        }
        if delta >= ascent_bound {
            return Err(CliError::Config(format!(
                "2*delta < (1 + epsilon/2)^alpha - 1, required for the ascent partition event: \
                 delta = {delta}, admissible bound = {ascent_bound}"
            )));
        }
        let n_partition = match self.n_partition {
            Some(n) => n,
            None => {
                let n = default_partition_count(delta)?;
                self.defaulted
                    .push(format!("events.n_partition = {n} (floor(2/delta))"));
                n
            }
        };
        if n_partition == 0 {
            return Err(CliError::Config(
                "events.n_partition must be at least 1".into(),
            ));
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(CliError::Config(format!(
                "events.grid_step must be positive, got {}",
                self.grid_step
            )));
        }
        // The partition windows must resolve to at least two grid points at
        // the smallest horizon, else the events are undefined.
        let t0 = self.t_grid[0];
        let s0 = scale.localization_scale(t0)?;
        let descent_width = 0.5 * epsilon * s0;
        let ascent_width = epsilon * s0;
        if descent_width < 2.0 * self.grid_step || ascent_width < 2.0 * self.grid_step {
            return Err(CliError::Config(format!(
                "partition windows must span at least two grid points at the smallest horizon: \
                 at t = {t0} the descent window is {descent_width:.3} and the ascent window \
                 {ascent_width:.3} wide, but events.grid_step = {}",
                self.grid_step
            )));
        }
        if self.n_paths == 0 {
            return Err(CliError::Config("events.n_paths must be positive".into()));
        }
        Ok(EventsPlan {
            scale,
            t_grid: self.t_grid.clone(),
            epsilon,
            delta,
            n_partition,
            grid_step: self.grid_step,
            n_paths: self.n_paths,
        })
    }

    pub fn bounds_plan(&mut self) -> CliResult<BoundsPlan> {
        let width = self.bounds_interval_width;
        if width < 4 {
            return Err(CliError::Config(format!(
                "bounds.interval_width must be at least 4 sites, got {width}"
            )));
        }
        let spec = self.env_spec(width)?;
        if self.bounds_n_calibration == 0 || self.bounds_n_validation == 0 {
            return Err(CliError::Config(
                "bounds.n_calibration and bounds.n_validation must be positive".into(),
            ));
        }
        if self.bounds_n_replicas == 0 {
            return Err(CliError::Config("bounds.n_replicas must be positive".into()));
        }
        if !(self.bounds_k1 > 0.0 && self.bounds_k1.is_finite()) {
            return Err(CliError::Config(format!(
                "bounds.k1 must be positive, got {}",
                self.bounds_k1
            )));
        }
        if !(self.bounds_safety_se >= 0.0 && self.bounds_safety_se.is_finite()) {
            return Err(CliError::Config(format!(
                "bounds.safety_se must be nonnegative, got {}",
                self.bounds_safety_se
            )));
        }
        Ok(BoundsPlan {
            spec,
            t_grid: self.t_grid.clone(),
            n_calibration: self.bounds_n_calibration,
            n_validation: self.bounds_n_validation,
            n_replicas: self.bounds_n_replicas,
            interval_left: 0,
            start: width / 2,
            interval_right: width,
            k1: self.bounds_k1,
            safety_se: self.bounds_safety_se,
            cap: horizon_step_cap(self.t_max()),
        })
    }

    pub fn drawlaw_plan(&self) -> CliResult<DrawLawPlan> {
        if self.bm_thresholds.is_empty() {
            return Err(CliError::Config("bmlaw.thresholds must not be empty".into()));
        }
        for &a in &self.bm_thresholds {
            if !(a.is_finite() && a >= 0.0) {
                return Err(CliError::Config(format!(
                    "bmlaw.thresholds must be nonnegative, got {a}"
                )));
            }
        }
        if !(self.bm_dt > 0.0 && self.bm_dt.is_finite()) {
            return Err(CliError::Config(format!(
                "bmlaw.dt must be positive, got {}",
                self.bm_dt
            )));
        }
        if self.bm_with_mc && self.bm_n_paths == 0 {
            return Err(CliError::Config(
                "bmlaw.n_paths must be positive when bmlaw.with_mc is set".into(),
            ));
        }
        // sigma/nu/mu are validated by the parameter struct at evaluation
        // time; checking one threshold here surfaces bad values as a
        // configuration error before any work starts.
        driftwalk_core::bmlaw::DriftedBmParams {
            sigma: self.bm_sigma,
            nu: self.bm_nu,
            mu: self.bm_mu,
            threshold: self.bm_thresholds[0],
        }
        .validate()?;
        Ok(DrawLawPlan {
            sigma: self.bm_sigma,
            nu: self.bm_nu,
            mu: self.bm_mu,
            thresholds: self.bm_thresholds.clone(),
            dt: self.bm_dt,
            n_paths: self.bm_n_paths,
            with_mc: self.bm_with_mc,
        })
    }

    pub fn asymptotic_plan(&self) -> CliResult<AsymptoticPlan> {
        if self.asym_ks.is_empty() {
            return Err(CliError::Config("asymptotic.ks must not be empty".into()));
        }
        for w in self.asym_ks.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CliError::Config(format!(
                    "asymptotic.ks must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for &k in &self.asym_ks {
            if !(k.is_finite() && k >= 1.0) {
                return Err(CliError::Config(format!(
                    "asymptotic.ks entries must be at least 1, got {k}"
                )));
            }
        }
        if !(self.asym_sigma > 0.0 && self.asym_sigma.is_finite()) {
            return Err(CliError::Config(format!(
                "asymptotic.sigma must be positive, got {}",
                self.asym_sigma
            )));
        }
        Ok(AsymptoticPlan {
            ks: self.asym_ks.clone(),
            sigma: self.asym_sigma,
        })
    }

    /// Environment spec for gen-env style subcommands: explicit size, or
    /// sized from the time grid when one is configured.
    pub fn standalone_env_spec(&mut self) -> CliResult<EnvSpec> {
        let n = self.walk_sites()?;
        self.env_spec(n)
    }

    /// Echo of every resolved value, for the provenance block.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind.map(|k| k.to_string()),
            "root_seed": self.root_seed,
            "output_prefix": self.output_prefix,
            "environment": {
                "disorder": self.disorder,
                "b": self.b,
                "alpha": self.alpha,
                "n_sites": self.n_sites,
                "theta0_check": self.theta0_check,
            },
            "time": { "t_grid": self.t_grid, "default_grid": self.grid_was_default },
            "run": {
                "n_environments": self.n_environments,
                "n_replicas": self.n_replicas,
                "start_site": self.start_site,
                "budget_events": self.budget_events,
            },
            "events": {
                "epsilon": self.epsilon,
                "delta": self.delta,
                "n_partition": self.n_partition,
                "grid_step": self.grid_step,
                "n_paths": self.n_paths,
            },
            "bounds": {
                "n_calibration": self.bounds_n_calibration,
                "n_validation": self.bounds_n_validation,
                "n_replicas": self.bounds_n_replicas,
                "interval_width": self.bounds_interval_width,
                "k1": self.bounds_k1,
                "safety_se": self.bounds_safety_se,
            },
            "bmlaw": {
                "sigma": self.bm_sigma,
                "nu": self.bm_nu,
                "mu": self.bm_mu,
                "thresholds": self.bm_thresholds,
                "dt": self.bm_dt,
                "n_paths": self.bm_n_paths,
                "with_mc": self.bm_with_mc,
            },
            "asymptotic": { "ks": self.asym_ks, "sigma": self.asym_sigma },
            "simulate": { "targets": self.targets },
        })
    }
}
