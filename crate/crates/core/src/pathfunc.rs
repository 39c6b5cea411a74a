//! Path functionals of potentials: draw-up and draw-down, interval barrier
//! statistics, the localization scale, and the threshold events used by the
//! trap-structure experiments.
//!
//! For a function f on an interval, the draw-up is the largest rise
//! `sup_{v ≤ u} (f(u) - f(v))` and the draw-down the largest fall
//! `sup_{u ≤ v} (f(u) - f(v))`.  Both are sups over ordered pairs, so they
//! are monotone under interval inclusion; that monotonicity is what makes
//! the greedy left-to-right cut rule in the partition events exact.

use crate::environment::PotentialPath;
use crate::error::{Error, Result};

/// Parameters of the localization scale: drift exponent α, drift amplitude
/// b, and disorder standard deviation σ.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScaleParams {
    pub alpha: f64,
    pub b: f64,
    pub sigma: f64,
}

impl ScaleParams {
    pub fn new(alpha: f64, b: f64, sigma: f64) -> Result<Self> {
        let p = Self { alpha, b, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Config(format!(
                "alpha must lie in the open interval (0, 0.5), got {}",
                self.alpha
            )));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::Config(format!("b must be positive, got {}", self.b)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    /// The constant 2αb / (σ²(1 - 2α)) entering the localization scale.
    pub fn scale_constant(&self) -> f64 {
        2.0 * self.alpha * self.b / (self.sigma * self.sigma * (1.0 - 2.0 * self.alpha))
    }

    /// Localization scale s(t) = (scale_constant · ln t / ln ln t)^{1/α}.
    /// Needs t > e so the iterated logarithm is positive.
    pub fn localization_scale(&self, t: f64) -> Result<f64> {
        if !(t > std::f64::consts::E) {
            return Err(Error::Domain(format!(
                "localization scale needs t > e, got {t}"
            )));
        }
        let ratio = t.ln() / t.ln().ln();
        Ok((self.scale_constant() * ratio).powf(1.0 / self.alpha))
    }

    /// Slope of the integrated drift curve -(b/(1-α))x^{1-α} at `anchor`,
    /// i.e. -b·anchor^{-α}.
    pub fn tangent_drift(&self, anchor: f64) -> Result<f64> {
        if !(anchor.is_finite() && anchor > 0.0) {
            return Err(Error::Domain(format!("anchor must be positive, got {anchor}")));
        }
        Ok(-self.b * anchor.powf(-self.alpha))
    }

    /// Largest δ (exclusive) admissible for the draw-up cap event at a given
    /// ε: δ must satisfy 2δ < 1 - (1-ε)^α.
    pub fn drawup_cap_delta_bound(&self, epsilon: f64) -> Result<f64> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Argument(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        Ok(0.5 * (1.0 - (1.0 - epsilon).powf(self.alpha)))
    }

    /// Largest δ (exclusive) admissible for the ascent partition event:
    /// 2δ < (1 + ε/2)^α - 1.
    pub fn ascent_delta_bound(&self, epsilon: f64) -> Result<f64> {
        if !(epsilon > 0.0) {
            return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(0.5 * ((1.0 + 0.5 * epsilon).powf(self.alpha) - 1.0))
    }
}

/// Number of partition cells ⌊2/δ⌋ used by default in the partition events.
pub fn default_partition_count(delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::Argument(format!("delta must be positive, got {delta}")));
    }
    Ok((2.0 / delta).floor() as usize)
}

/// Largest rise sup_{v ≤ u} (f(u) - f(v)) over the sampled values.
/// Single forward pass against the running minimum.
pub fn drawup(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("draw-up of an empty sample".into()));
    }
    let mut run_min = values[0];
    let mut best: f64 = 0.0;
    for &v in &values[1..] {
        if v - run_min > best {
            best = v - run_min;
        }
        if v < run_min {
            run_min = v;
        }
    }
    Ok(best)
}

/// Largest fall sup_{u ≤ v} (f(u) - f(v)); single pass against the running
/// maximum.
pub fn drawdown(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("draw-down of an empty sample".into()));
    }
    let mut run_max = values[0];
    let mut best: f64 = 0.0;
    for &v in &values[1..] {
        if run_max - v > best {
            best = run_max - v;
        }
        if v > run_max {
            run_max = v;
        }
    }
    Ok(best)
}

/// Draw statistics of one interval: both draw functionals, the location of
/// the maximum (leftmost on ties), and the maximal value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DrawStats {
    pub drawup: f64,
    pub drawdown: f64,
    /// Absolute index of the leftmost maximum within the queried slice.
    pub argmax_index: usize,
    pub range_max: f64,
}

impl DrawStats {
    /// Barrier height: the smaller of the two draw functionals.
    pub fn min_draw(&self) -> f64 {
        self.drawup.min(self.drawdown)
    }

    /// Oscillation bound: the larger of the two draw functionals.
    pub fn max_draw(&self) -> f64 {
        self.drawup.max(self.drawdown)
    }
}

/// Draw statistics of `values[lo..=hi]` in one forward pass.
pub fn interval_stats(values: &[f64], lo: usize, hi: usize) -> Result<DrawStats> {
    if lo > hi {
        return Err(Error::Argument(format!("interval [{lo}, {hi}] is reversed")));
    }
    if hi >= values.len() {
        return Err(Error::IndexOutOfRange {
            index: hi,
            max: values.len().saturating_sub(1),
        });
    }
    let first = values[lo];
    let mut run_min = first;
    let mut run_max = first;
    let mut du: f64 = 0.0;
    let mut dd: f64 = 0.0;
    let mut argmax = lo;
    let mut best = first;
    for (i, &v) in values[lo + 1..=hi].iter().enumerate() {
        if v - run_min > du {
            du = v - run_min;
        }
        if run_max - v > dd {
            dd = run_max - v;
        }
        if v < run_min {
            run_min = v;
        }
        if v > run_max {
            run_max = v;
        }
        if v > best {
            best = v;
            argmax = lo + 1 + i;
        }
    }
    Ok(DrawStats {
        drawup: du,
        drawdown: dd,
        argmax_index: argmax,
        range_max: best,
    })
}

/// Direction of the draw functional used when cutting segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawDirection {
    /// Segments must contain a rise exceeding the threshold.
    Rise,
    /// Segments must contain a fall exceeding the threshold.
    Fall,
}

/// Maximal number of consecutive segments (sharing endpoints) whose draw
/// functional strictly exceeds `threshold`, by the greedy rule: scan left to
/// right and cut at the first index where the running segment crosses.
/// Because the draw functionals grow under interval inclusion, a partition
/// of the whole range into `n` qualifying cells exists iff this count is at
/// least `n`.
pub fn max_threshold_segments(values: &[f64], threshold: f64, direction: DrawDirection) -> usize {
    if values.len() < 2 {
        return 0;
    }
    // Draw functionals are nonnegative (the trivial pair u = v contributes
    // 0), so a negative threshold is crossed by every single-step segment.
    if threshold < 0.0 {
        return values.len() - 1;
    }
    let mut count = 0usize;
    match direction {
        DrawDirection::Rise => {
            let mut run_min = values[0];
            for &v in &values[1..] {
                if v - run_min > threshold {
                    count += 1;
                    run_min = v;
                } else if v < run_min {
                    run_min = v;
                }
            }
        }
        DrawDirection::Fall => {
            let mut run_max = values[0];
            for &v in &values[1..] {
                if run_max - v > threshold {
                    count += 1;
                    run_max = v;
                } else if v > run_max {
                    run_max = v;
                }
            }
        }
    }
    count
}

fn check_params_match(path: &PotentialPath, params: &ScaleParams) -> Result<()> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    if !(close(path.alpha(), params.alpha) && close(path.b(), params.b) && close(path.sigma(), params.sigma))
    {
        return Err(Error::Argument(format!(
            "path parameters (alpha {}, b {}, sigma {}) disagree with scale parameters (alpha {}, b {}, sigma {})",
            path.alpha(),
            path.b(),
            path.sigma(),
            params.alpha,
            params.b,
            params.sigma
        )));
    }
    Ok(())
}

/// Draw-up cap event: the potential's draw-up on [0, (1-ε)s(t)] stays at or
/// below (1-δ)·ln t.  The admissibility constraint 2δ < 1 - (1-ε)^α is
/// enforced at configuration level, not here; any δ is evaluated as given.
pub fn check_drawup_cap_event(
    path: &PotentialPath,
    params: &ScaleParams,
    t: f64,
    epsilon: f64,
    delta: f64,
) -> Result<bool> {
    check_params_match(path, params)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Argument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let s = params.localization_scale(t)?;
    let hi = path.last_index_at_or_before((1.0 - epsilon) * s)?;
    let du = drawup(&path.values()[..=hi])?;
    Ok(du <= (1.0 - delta) * t.ln())
}

/// Descent partition event: [(1-ε)s(t), (1-ε/2)s(t)] splits into `n_parts`
/// consecutive cells, each with draw-down strictly above (1+δ)·ln t.
pub fn check_descent_partition_event(
    path: &PotentialPath,
    params: &ScaleParams,
    t: f64,
    epsilon: f64,
    delta: f64,
    n_parts: usize,
) -> Result<bool> {
    check_params_match(path, params)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Argument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if n_parts == 0 {
        return Err(Error::Argument("partition needs at least one cell".into()));
    }
    let s = params.localization_scale(t)?;
    let lo = path.first_index_at_or_after((1.0 - epsilon) * s)?;
    let hi = path.last_index_at_or_before((1.0 - 0.5 * epsilon) * s)?;
    if hi < lo + 1 {
        return Err(Error::Argument(format!(
            "interval [{}, {}] resolves to fewer than two grid points",
            (1.0 - epsilon) * s,
            (1.0 - 0.5 * epsilon) * s
        )));
    }
    let count = max_threshold_segments(
        &path.values()[lo..=hi],
        (1.0 + delta) * t.ln(),
        DrawDirection::Fall,
    );
    Ok(count >= n_parts)
}

/// Ascent partition event: [s(t), (1+ε)s(t)] splits into `n_parts` cells,
/// each with draw-up strictly above (1+δ)·ln t.  The admissibility
/// constraint 2δ < (1+ε/2)^α - 1 is enforced at configuration level.
pub fn check_ascent_partition_event(
    path: &PotentialPath,
    params: &ScaleParams,
    t: f64,
    epsilon: f64,
    delta: f64,
    n_parts: usize,
) -> Result<bool> {
    check_params_match(path, params)?;
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    if n_parts == 0 {
        return Err(Error::Argument("partition needs at least one cell".into()));
    }
    let s = params.localization_scale(t)?;
    let lo = path.first_index_at_or_after(s)?;
    let hi = path.last_index_at_or_before((1.0 + epsilon) * s)?;
    if hi < lo + 1 {
        return Err(Error::Argument(format!(
            "interval [{}, {}] resolves to fewer than two grid points",
            s,
            (1.0 + epsilon) * s
        )));
    }
    let count = max_threshold_segments(
        &path.values()[lo..=hi],
        (1.0 + delta) * t.ln(),
        DrawDirection::Rise,
    );
    Ok(count >= n_parts)
}

/// Envelope event: |V(y)| ≤ 2·ln^{1/α} t for all grid points y in
/// [0, ln^{1/α} t].
pub fn check_envelope_event(path: &PotentialPath, params: &ScaleParams, t: f64) -> Result<bool> {
    check_params_match(path, params)?;
    if !(t > 1.0) {
        return Err(Error::Domain(format!("envelope event needs t > 1, got {t}")));
    }
    let window = t.ln().powf(1.0 / params.alpha);
    let hi = path.last_index_at_or_before(window)?;
    let max_abs = path.values()[..=hi]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(max_abs <= 2.0 * window)
}
