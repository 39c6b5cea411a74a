//! Random environments for the walk.
//!
//! An environment on sites `0..=n_sites` is built from i.i.d. mean-zero
//! disorder `ω_1, ω_2, ...` and a decaying pull `b·y^{-α}` with `b > 0` and
//! `α ∈ (0, 1/2)`.  Site `y ≥ 1` sends the walk left with probability
//! `q_y = logistic(ω_y - b·y^{-α})`; site 0 reflects (`q_0 = 0`).  The
//! potential is the prefix sum `U(x) = Σ_{y≤x} (ω_y - b·y^{-α})`, so
//! `log(q_y / (1 - q_y))` is exactly the potential increment at `y`.
//!
//! The module also samples the continuous analogue `V(x) = σW(x) -
//! (b/(1-α))·x^{1-α}` (Brownian motion plus the integrated drift) on a
//! uniform grid, and can couple a Gaussian environment to such a path by
//! reading the disorder off the Brownian increments, which makes the
//! discrete and continuous potentials comparable site by site.

use crate::error::{Error, Result};
use crate::numeric::{logistic, CompensatedSum};
use crate::rng::{self, domain};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Default deviation allowance (in units of ln ln t) for the coupling event.
pub const DEFAULT_COUPLING_K: f64 = 10.0;

/// Default exponent M of the `ln^M t` comparison window; any value above
/// `1/α` works, this picks the smallest comfortable integer.
pub fn default_m_exponent(alpha: f64) -> f64 {
    (1.0 / alpha).ceil() + 1.0
}

/// Disorder law for the i.i.d. site variables.  Every family has mean zero,
/// positive finite variance, and a moment generating function that is finite
/// in a neighbourhood of the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Disorder {
    /// ±c with probability 1/2 each.
    Rademacher { c: f64 },
    /// Uniform on [-half_width, half_width].
    CenteredUniform { half_width: f64 },
    /// Mean-zero normal with the given standard deviation.
    Gaussian { std_dev: f64 },
    /// `up` with probability `p`, `down` with probability `1 - p`; the
    /// weights must balance so the mean vanishes.
    TwoPoint { p: f64, up: f64, down: f64 },
}

impl Disorder {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        match *self {
            Disorder::Rademacher { c } => {
                if !(c.is_finite() && c > 0.0) {
                    return fail(format!("rademacher amplitude c must be positive, got {c}"));
                }
            }
            Disorder::CenteredUniform { half_width } => {
                if !(half_width.is_finite() && half_width > 0.0) {
                    return fail(format!(
                        "centered_uniform half_width must be positive, got {half_width}"
                    ));
                }
            }
            Disorder::Gaussian { std_dev } => {
                if !(std_dev.is_finite() && std_dev > 0.0) {
                    return fail(format!("gaussian std_dev must be positive, got {std_dev}"));
                }
            }
            Disorder::TwoPoint { p, up, down } => {
                if !(p.is_finite() && p > 0.0 && p < 1.0) {
                    return fail(format!("two_point p must lie in (0, 1), got {p}"));
                }
                if !(up.is_finite() && down.is_finite()) {
                    return fail(format!("two_point values must be finite, got {up}, {down}"));
                }
                let mean = p * up + (1.0 - p) * down;
                let scale = up.abs().max(down.abs()).max(1.0);
                if mean.abs() > 1e-12 * scale {
                    return fail(format!(
                        "two_point mean must vanish: p*up + (1-p)*down = {mean}"
                    ));
                }
                if self.variance() <= 0.0 {
                    return fail("two_point variance must be positive".into());
                }
            }
        }
        Ok(())
    }

    /// Distribution variance σ².
    pub fn variance(&self) -> f64 {
        match *self {
            Disorder::Rademacher { c } => c * c,
            Disorder::CenteredUniform { half_width } => half_width * half_width / 3.0,
            Disorder::Gaussian { std_dev } => std_dev * std_dev,
            Disorder::TwoPoint { p, up, down } => p * up * up + (1.0 - p) * down * down,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Analytic moment generating function E[exp(θω)].
    pub fn mgf(&self, theta: f64) -> f64 {
        match *self {
            Disorder::Rademacher { c } => (theta * c).cosh(),
            Disorder::CenteredUniform { half_width } => {
                let x = theta * half_width;
                if x.abs() < 1e-4 {
                    // sinh(x)/x by series; avoids 0/0 at θ = 0.
                    1.0 + x * x / 6.0 + x.powi(4) / 120.0
                } else {
                    x.sinh() / x
                }
            }
            Disorder::Gaussian { std_dev } => (0.5 * theta * theta * std_dev * std_dev).exp(),
            Disorder::TwoPoint { p, up, down } => {
                p * (theta * up).exp() + (1.0 - p) * (theta * down).exp()
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Disorder::Rademacher { c } => {
                if rng.random::<f64>() < 0.5 {
                    c
                } else {
                    -c
                }
            }
            Disorder::CenteredUniform { half_width } => (2.0 * rng.random::<f64>() - 1.0) * half_width,
            Disorder::Gaussian { std_dev } => std_dev * rng.sample::<f64, _>(StandardNormal),
            Disorder::TwoPoint { p, up, down } => {
                if rng.random::<f64>() < p {
                    up
                } else {
                    down
                }
            }
        }
    }
}

/// Full specification of an environment: disorder law, drift amplitude and
/// exponent, number of sites, and the radius at which the moment generating
/// function is probed during validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub disorder: Disorder,
    pub b: f64,
    pub alpha: f64,
    pub n_sites: usize,
    pub theta0_check: f64,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        self.disorder.validate()?;
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::Config(format!(
                "drift amplitude b must be positive, got {}",
                self.b
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Config(format!(
                "drift exponent alpha must lie in the open interval (0, 0.5), got {}",
                self.alpha
            )));
        }
        if self.n_sites == 0 {
            return Err(Error::Config("n_sites must be at least 1".into()));
        }
        if !(self.theta0_check.is_finite() && self.theta0_check > 0.0) {
            return Err(Error::Config(format!(
                "theta0_check must be positive, got {}",
                self.theta0_check
            )));
        }
        for theta in [-self.theta0_check, self.theta0_check] {
            let m = self.disorder.mgf(theta);
            if !m.is_finite() {
                return Err(Error::Config(format!(
                    "moment generating function not finite at theta = {theta}"
                )));
            }
        }
        Ok(())
    }
}

/// How an environment was built; only sampled environments can be resampled
/// from their spec and seed alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    Sampled,
    CoupledToPath,
    Imported,
}

/// A realized environment: the disorder, its potential prefix sums, and the
/// spec and seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    spec: EnvSpec,
    seed: u64,
    construction: Construction,
    omega: Vec<f64>,
    u: Vec<f64>,
}

impl Environment {
    /// Wraps externally supplied disorder values.  `spec.disorder` is taken
    /// as the nominal law and is not checked against the data; lengths and
    /// finiteness are.  Useful for importing measurements and for building
    /// hand-crafted potentials in tests.
    pub fn from_disorder(spec: EnvSpec, omega: Vec<f64>) -> Result<Environment> {
        spec.validate()?;
        if omega.len() != spec.n_sites {
            return Err(Error::Config(format!(
                "disorder length {} does not match n_sites {}",
                omega.len(),
                spec.n_sites
            )));
        }
        if let Some(w) = omega.iter().find(|w| !w.is_finite()) {
            return Err(Error::Config(format!("disorder values must be finite, got {w}")));
        }
        Ok(Self::from_omega(spec, 0, Construction::Imported, omega))
    }

    fn from_omega(spec: EnvSpec, seed: u64, construction: Construction, omega: Vec<f64>) -> Self {
        debug_assert_eq!(omega.len(), spec.n_sites);
        let mut u = Vec::with_capacity(spec.n_sites + 1);
        u.push(0.0);
        let mut acc = CompensatedSum::new();
        for (i, &w) in omega.iter().enumerate() {
            let y = (i + 1) as f64;
            acc.add(w - spec.b * y.powf(-spec.alpha));
            u.push(acc.total());
        }
        Self {
            spec,
            seed,
            construction,
            omega,
            u,
        }
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn n_sites(&self) -> usize {
        self.spec.n_sites
    }

    /// Disorder variable ω_y, 1-based.
    pub fn omega(&self, y: usize) -> Result<f64> {
        if y == 0 || y > self.spec.n_sites {
            return Err(Error::IndexOutOfRange {
                index: y,
                max: self.spec.n_sites,
            });
        }
        Ok(self.omega[y - 1])
    }

    /// Potential increment ω_y - b·y^{-α}; equals log(q_y / (1 - q_y)).
    pub fn potential_increment(&self, y: usize) -> Result<f64> {
        let w = self.omega(y)?;
        Ok(w - self.spec.b * (y as f64).powf(-self.spec.alpha))
    }

    /// Potential U(x) at integer sites, U(0) = 0.
    pub fn u(&self, x: usize) -> Result<f64> {
        self.u
            .get(x)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: x,
                max: self.spec.n_sites,
            })
    }

    /// The whole potential array U(0), ..., U(n_sites).
    pub fn potential(&self) -> &[f64] {
        &self.u
    }

    /// Left-jump probability q_y; the walk leaves site y to the left at rate
    /// q_y and to the right at rate 1 - q_y.  Site 0 reflects: q_0 = 0.
    pub fn jump_prob(&self, y: usize) -> Result<f64> {
        if y == 0 {
            return Ok(0.0);
        }
        Ok(logistic(self.potential_increment(y)?))
    }

    /// All left-jump probabilities q_0..q_{n_sites} as a lookup table.
    pub fn left_jump_probs(&self) -> Vec<f64> {
        let mut q = Vec::with_capacity(self.spec.n_sites + 1);
        q.push(0.0);
        for y in 1..=self.spec.n_sites {
            q.push(logistic(self.omega[y - 1] - self.spec.b * (y as f64).powf(-self.spec.alpha)));
        }
        q
    }

    /// Prefix sums of the raw disorder, S(m) = Σ_{y≤m} ω_y, for m ≤ `upto`.
    pub fn disorder_prefix(&self, upto: usize) -> Result<Vec<f64>> {
        if upto > self.spec.n_sites {
            return Err(Error::IndexOutOfRange {
                index: upto,
                max: self.spec.n_sites,
            });
        }
        let mut out = Vec::with_capacity(upto + 1);
        out.push(0.0);
        let mut acc = CompensatedSum::new();
        for &w in &self.omega[..upto] {
            acc.add(w);
            out.push(acc.total());
        }
        Ok(out)
    }

    pub fn to_record(&self, include_omega: bool) -> Result<EnvRecord> {
        match self.construction {
            Construction::Sampled => {}
            Construction::CoupledToPath => {
                return Err(Error::Argument(
                    "coupled environments are derived from a potential path; store the path seed instead"
                        .into(),
                ));
            }
            Construction::Imported => {
                return Err(Error::Argument(
                    "imported environments have no generating seed; keep the original data".into(),
                ));
            }
        }
        Ok(EnvRecord {
            format_version: ENV_RECORD_VERSION,
            spec: self.spec.clone(),
            seed: self.seed,
            omega: include_omega.then(|| self.omega.clone()),
        })
    }

    pub fn from_record(record: &EnvRecord) -> Result<Environment> {
        if record.format_version != ENV_RECORD_VERSION {
            return Err(Error::Config(format!(
                "unsupported environment record version {} (expected {})",
                record.format_version, ENV_RECORD_VERSION
            )));
        }
        let env = sample_environment(&record.spec, record.seed)?;
        if let Some(stored) = &record.omega {
            if stored != &env.omega {
                return Err(Error::Config(
                    "environment record audit failed: stored disorder does not match resample"
                        .into(),
                ));
            }
        }
        Ok(env)
    }
}

const ENV_RECORD_VERSION: u32 = 1;

/// Versioned serialization of an environment.  Spec and seed suffice to
/// rebuild it; the disorder itself is stored only as an optional audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvRecord {
    pub format_version: u32,
    pub spec: EnvSpec,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub omega: Option<Vec<f64>>,
}

/// Draws the disorder for `spec` from the stream keyed by `seed`.
pub fn sample_environment(spec: &EnvSpec, seed: u64) -> Result<Environment> {
    spec.validate()?;
    let mut rng = rng::stream_rng(seed, domain::ENVIRONMENT, 0);
    let omega: Vec<f64> = (0..spec.n_sites).map(|_| spec.disorder.sample(&mut rng)).collect();
    Ok(Environment::from_omega(spec.clone(), seed, Construction::Sampled, omega))
}

/// The continuous potential `V(x) = σW(x) - (b/(1-α))·x^{1-α}` sampled on a
/// uniform grid of step `grid_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPath {
    sigma: f64,
    b: f64,
    alpha: f64,
    grid_step: f64,
    brownian_seed: u64,
    values: Vec<f64>,
}

impl PotentialPath {
    /// Wraps externally supplied grid values.  The declared parameters
    /// describe the law the values are supposed to follow and are not
    /// audited; the grid itself is checked for shape and finiteness.
    pub fn from_values(
        sigma: f64,
        b: f64,
        alpha: f64,
        grid_step: f64,
        values: Vec<f64>,
    ) -> Result<PotentialPath> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Config(format!("sigma must be nonnegative, got {sigma}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Config(format!("b must be positive, got {b}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(grid_step.is_finite() && grid_step > 0.0) {
            return Err(Error::Config(format!("grid_step must be positive, got {grid_step}")));
        }
        if values.len() < 2 {
            return Err(Error::Config("a path needs at least two grid values".into()));
        }
        if values[0] != 0.0 {
            return Err(Error::Config(format!("paths start at the origin, got V(0) = {}", values[0])));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("path values must be finite, got {v}")));
        }
        Ok(PotentialPath { sigma, b, alpha, grid_step, brownian_seed: 0, values })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn brownian_seed(&self) -> u64 {
        self.brownian_seed
    }

    /// Sampled values V(0), V(grid_step), V(2·grid_step), ...
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x_at(&self, k: usize) -> f64 {
        k as f64 * self.grid_step
    }

    /// Rightmost grid abscissa.
    pub fn covered_length(&self) -> f64 {
        self.x_at(self.values.len() - 1)
    }

    /// Integrated drift term -(b/(1-α))·x^{1-α}.
    pub fn drift_at(&self, x: f64) -> f64 {
        -(self.b / (1.0 - self.alpha)) * x.powf(1.0 - self.alpha)
    }

    /// The Brownian part σW(x_k), recovered by removing the drift.
    pub fn brownian_at(&self, k: usize) -> Result<f64> {
        let v = self.values.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            max: self.values.len() - 1,
        })?;
        Ok(v - self.drift_at(self.x_at(k)))
    }

    /// Index of the last grid point with x_k ≤ x (small forward tolerance for
    /// grid points that land on x up to rounding).
    pub fn last_index_at_or_before(&self, x: f64) -> Result<usize> {
        if x < 0.0 {
            return Err(Error::Argument(format!("negative abscissa {x}")));
        }
        if x > self.covered_length() + 1e-9 {
            return Err(Error::Coverage {
                covered: self.covered_length(),
                required: x,
            });
        }
        let k = ((x / self.grid_step) + 1e-9).floor() as usize;
        Ok(k.min(self.values.len() - 1))
    }

    /// First grid point with x_k ≥ x.
    pub fn first_index_at_or_after(&self, x: f64) -> Result<usize> {
        if x < 0.0 {
            return Err(Error::Argument(format!("negative abscissa {x}")));
        }
        let k = ((x / self.grid_step) - 1e-9).ceil().max(0.0) as usize;
        if k >= self.values.len() {
            return Err(Error::Coverage {
                covered: self.covered_length(),
                required: x,
            });
        }
        Ok(k)
    }
}

/// Samples the continuous potential on a grid covering [0, length].
///
/// `sigma = 0` yields the pure drift curve.  The Brownian increments are
/// standard normals scaled by `sqrt(grid_step)`, accumulated with
/// compensation so long paths do not drift numerically.
pub fn sample_potential_path(
    sigma: f64,
    b: f64,
    alpha: f64,
    length: f64,
    grid_step: f64,
    seed: u64,
) -> Result<PotentialPath> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Config(format!("sigma must be nonnegative, got {sigma}")));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Config(format!("b must be positive, got {b}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie in (0, 1) for the drift integral, got {alpha}"
        )));
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::Config(format!("length must be positive, got {length}")));
    }
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::Config(format!("grid_step must be positive, got {grid_step}")));
    }
    let n_steps = (length / grid_step).ceil() as usize;
    if n_steps > 200_000_000 {
        return Err(Error::Config(format!(
            "grid of {n_steps} steps is too large; raise grid_step or shorten the path"
        )));
    }
    let mut rng = rng::stream_rng(seed, domain::POTENTIAL_PATH, 0);
    let sqrt_dt = grid_step.sqrt();
    let drift_scale = b / (1.0 - alpha);
    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(0.0);
    let mut w = CompensatedSum::new();
    for k in 1..=n_steps {
        let z: f64 = rng.sample(StandardNormal);
        w.add(sqrt_dt * z);
        let x = k as f64 * grid_step;
        values.push(sigma * w.total() - drift_scale * x.powf(1.0 - alpha));
    }
    Ok(PotentialPath {
        sigma,
        b,
        alpha,
        grid_step,
        brownian_seed: seed,
        values,
    })
}

/// Builds a Gaussian environment whose disorder is read off the path's
/// Brownian unit increments: ω_y = σ(W(y) - W(y-1)).  The discrete disorder
/// sums then track σW(x) exactly at integer sites, so the deviation checked
/// by [`check_coupling_event`] comes from interpolation alone.
pub fn couple_environment_to_path(path: &PotentialPath, n_sites: usize) -> Result<Environment> {
    if path.sigma <= 0.0 {
        return Err(Error::Config(
            "coupling requires sigma > 0; a flat path carries no disorder".into(),
        ));
    }
    let per_unit = 1.0 / path.grid_step;
    if (per_unit - per_unit.round()).abs() > 1e-9 || per_unit < 1.0 {
        return Err(Error::Config(format!(
            "coupling requires 1/grid_step to be a whole number, got grid_step {}",
            path.grid_step
        )));
    }
    let per_unit = per_unit.round() as usize;
    if n_sites * per_unit > path.values.len() - 1 {
        return Err(Error::Coverage {
            covered: path.covered_length(),
            required: n_sites as f64,
        });
    }
    let spec = EnvSpec {
        disorder: Disorder::Gaussian { std_dev: path.sigma },
        b: path.b,
        alpha: path.alpha,
        n_sites,
        theta0_check: 1.0,
    };
    spec.validate()?;
    let mut omega = Vec::with_capacity(n_sites);
    for y in 1..=n_sites {
        let w_hi = path.brownian_at(y * per_unit)?;
        let w_lo = path.brownian_at((y - 1) * per_unit)?;
        omega.push(w_hi - w_lo);
    }
    Ok(Environment::from_omega(
        spec,
        path.brownian_seed,
        Construction::CoupledToPath,
        omega,
    ))
}

/// Largest deviation |Σ_{y≤⌊x⌋} ω_y - σW(x)| over the path grid points with
/// x ≤ length.
pub fn coupling_max_gap(env: &Environment, path: &PotentialPath, length: f64) -> Result<f64> {
    if !(length.is_finite() && length >= 0.0) {
        return Err(Error::Argument(format!("length must be nonnegative, got {length}")));
    }
    if (env.n_sites() as f64) < length.floor() {
        return Err(Error::Coverage {
            covered: env.n_sites() as f64,
            required: length,
        });
    }
    let k_max = path.last_index_at_or_before(length)?;
    let prefix = env.disorder_prefix(env.n_sites().min(length.floor() as usize))?;
    let mut max_gap: f64 = 0.0;
    for k in 0..=k_max {
        let x = path.x_at(k);
        let m = ((x + 1e-9).floor() as usize).min(prefix.len() - 1);
        let gap = (prefix[m] - path.brownian_at(k)?).abs();
        max_gap = max_gap.max(gap);
    }
    Ok(max_gap)
}

/// Checks whether the disorder sums stay within `k_dev · ln ln t` of the
/// path's Brownian part over the window [0, ln^M t], with M the default
/// exponent for the environment's α.  Meaningful for environments coupled to
/// the path (see [`couple_environment_to_path`]).
pub fn check_coupling_event(
    env: &Environment,
    path: &PotentialPath,
    t: f64,
    k_dev: f64,
) -> Result<bool> {
    if !(t > std::f64::consts::E) {
        return Err(Error::Domain(format!(
            "coupling event needs t > e so ln ln t is positive, got {t}"
        )));
    }
    if !(k_dev >= 0.0) {
        return Err(Error::Argument(format!("allowance k_dev must be nonnegative, got {k_dev}")));
    }
    let m_exp = default_m_exponent(env.spec().alpha);
    let window = t.ln().powf(m_exp);
    let gap = coupling_max_gap(env, path, window)?;
    Ok(gap <= k_dev * t.ln().ln())
}

/// |Σ_{i=1}^{⌊x⌋} i^{-α} - ∫_1^x u^{-α} du| for x ≥ 1, α ∈ (0, 1).  The
/// quantity is bounded by 1 uniformly in x, which is what makes the series
/// and integral forms of the drift interchangeable.
pub fn series_integral_gap(alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(x >= 1.0) {
        return Err(Error::Domain(format!("x must be at least 1, got {x}")));
    }
    let n = x.floor() as u64;
    let mut sum = CompensatedSum::new();
    for i in 1..=n {
        sum.add((i as f64).powf(-alpha));
    }
    let integral = (x.powf(1.0 - alpha) - 1.0) / (1.0 - alpha);
    Ok((sum.total() - integral).abs())
}
