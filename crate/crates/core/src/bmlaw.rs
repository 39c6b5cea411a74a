//! Draw-up law for drifted Brownian motion over an exponential horizon.
//!
//! Let X be Brownian motion with drift ν and volatility σ, and T an
//! independent exponential time with mean μ.  The draw-up of X on [0, T] is
//! sup_{u ≤ T} (X_u - min_{v ≤ u} X_v).  Its tail has a closed form: with
//! S = sqrt(ν² + 2σ²/μ), κ = S/σ² and c = ν/S,
//!
//! P[draw-up > a] = exp(νa/σ²) / (cosh(κa) + c·sinh(κa)).
//!
//! (Derivation sketch: the gap between the running minimum and the current
//! position is Brownian motion with drift -ν reflected at 0; the tail is the
//! Laplace transform, at rate 1/μ, of its first passage to a, which solves a
//! two-point boundary problem with a reflecting condition at 0.)
//!
//! The denominator is evaluated as ((1+c)e^{κa} + (1-c)e^{-κa})/2 in log
//! space.  For negative drift, 1 + c loses all precision to cancellation as
//! μ grows, so it is expanded as (2σ²/μ) / (S(S + |ν|)), which is exact and
//! cancellation-free.  For strongly negative drift the whole tail collapses
//! to the logistic form 1 / (1 + (σ²/(2ν²μ))·e^{2|ν|a/σ²}), exposed as
//! [`asymptotic_drawup_tail`].
//!
//! [`mc_drawup_survival`] estimates the same tail from Euler paths on a fine
//! grid, drawing the horizon first and streaming the draw-up so paths stop
//! as soon as they exceed the threshold.  The grid skeleton can only
//! undershoot the continuous draw-up, so the estimate is biased low by
//! O(σ·sqrt(dt)); validation tolerances account for that one-sidedness.

use crate::error::{Error, Result};
use crate::numeric::{logaddexp, softplus};
use crate::rng::{domain, stream_rng};
use crate::stats::FreqEstimate;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

/// Parameters of the drifted Brownian draw-up query.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DriftedBmParams {
    /// Volatility σ > 0.
    pub sigma: f64,
    /// Drift ν (any sign for the exact law; the asymptotic needs ν < 0).
    pub nu: f64,
    /// Mean μ > 0 of the exponential horizon.
    pub mu: f64,
    /// Draw-up threshold a ≥ 0.
    pub threshold: f64,
}

impl DriftedBmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.nu.is_finite() {
            return Err(Error::Config(format!("nu must be finite, got {}", self.nu)));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::Config(format!(
                "threshold must be nonnegative, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// ln P[draw-up > a], exact and stable over the whole parameter range.
pub fn exact_drawup_tail_log(p: &DriftedBmParams) -> Result<f64> {
    p.validate()?;
    if p.threshold == 0.0 {
        // The draw-up is a.s. positive on any nondegenerate horizon.
        return Ok(0.0);
    }
    let sig2 = p.sigma * p.sigma;
    let two_lambda_sig2 = 2.0 * sig2 / p.mu;
    let s = (p.nu * p.nu + two_lambda_sig2).sqrt();
    let kappa = s / sig2;
    let x = kappa * p.threshold;
    // ln(1+c) and ln(1-c) with c = ν/S; the side matching the drift sign is
    // expanded to avoid the catastrophic cancellation S - |ν|.
    let expanded = two_lambda_sig2.ln() - s.ln() - (s + p.nu.abs()).ln();
    let (ln_1pc, ln_1mc) = if p.nu < 0.0 {
        (expanded, (p.nu.abs() / s).ln_1p())
    } else {
        ((p.nu / s).ln_1p(), expanded)
    };
    let ln_den = logaddexp(x + ln_1pc, -x + ln_1mc) - std::f64::consts::LN_2;
    Ok(p.nu * p.threshold / sig2 - ln_den)
}

/// P[draw-up > a] on the natural scale, clamped to [0, 1] against rounding.
pub fn exact_drawup_tail(p: &DriftedBmParams) -> Result<f64> {
    Ok(exact_drawup_tail_log(p)?.exp().clamp(0.0, 1.0))
}

/// Large-depth form of the tail for negative drift:
/// 1 / (1 + (σ²/(2ν²μ))·e^{2|ν|a/σ²}), evaluated as exp(-softplus).
/// Accurate when the horizon is long and the threshold deep; converges to
/// the exact law as both grow with a/μ → 0.
pub fn asymptotic_drawup_tail(p: &DriftedBmParams) -> Result<f64> {
    p.validate()?;
    if !(p.nu < 0.0) {
        return Err(Error::Domain(format!(
            "the asymptotic tail describes negative drift only, got nu = {}",
            p.nu
        )));
    }
    let sig2 = p.sigma * p.sigma;
    let w = 2.0 * p.nu.abs() * p.threshold / sig2 + (sig2 / (2.0 * p.nu * p.nu * p.mu)).ln();
    Ok((-softplus(w)).exp())
}

/// Result of a draw-up Monte Carlo run: the frequency estimate plus the
/// number of Euler increments actually generated (early exits make this
/// smaller than the horizon-implied count; budget accounting needs it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawupMcRun {
    pub estimate: FreqEstimate,
    pub steps: u64,
}

/// Monte Carlo estimate of P[draw-up > a] from Euler paths of step `dt`.
/// Each path draws its horizon first, then streams increments, tracking the
/// running minimum and the largest gap above it; a path ends early once the
/// gap exceeds the threshold.  Paths use independent derived streams, so
/// early exits and parallel evaluation cannot perturb other paths.
pub fn mc_drawup_survival_detailed(
    p: &DriftedBmParams,
    dt: f64,
    n_paths: u64,
    root_seed: u64,
) -> Result<DrawupMcRun> {
    p.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let outcomes: Vec<(bool, u64)> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = stream_rng(root_seed, domain::BM_PATH, path);
            let horizon: f64 = p.mu * rng.sample::<f64, _>(Exp1);
            let n_full = (horizon / dt).floor();
            let remainder = horizon - n_full * dt;
            let sqrt_dt = dt.sqrt();
            let drift_dt = p.nu * dt;
            let mut x = 0.0_f64;
            let mut min_x = 0.0_f64;
            let mut drawup = 0.0_f64;
            let mut steps: u64 = 0;
            let mut k = 0.0;
            while k < n_full {
                let z: f64 = rng.sample(StandardNormal);
                steps += 1;
                x += drift_dt + p.sigma * sqrt_dt * z;
                if x < min_x {
                    min_x = x;
                } else if x - min_x > drawup {
                    drawup = x - min_x;
                    if drawup > p.threshold {
                        return (true, steps);
                    }
                }
                k += 1.0;
            }
            if remainder > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                steps += 1;
                x += p.nu * remainder + p.sigma * remainder.sqrt() * z;
                if x - min_x > drawup {
                    drawup = x - min_x;
                }
            }
            (drawup > p.threshold, steps)
        })
        .collect();
    let successes = outcomes.iter().filter(|&&(b, _)| b).count() as u64;
    let steps = outcomes.iter().map(|&(_, s)| s).sum();
    Ok(DrawupMcRun {
        estimate: FreqEstimate { successes, trials: n_paths, censored: 0 },
        steps,
    })
}

/// [`mc_drawup_survival_detailed`] without the step count.
pub fn mc_drawup_survival(
    p: &DriftedBmParams,
    dt: f64,
    n_paths: u64,
    root_seed: u64,
) -> Result<FreqEstimate> {
    Ok(mc_drawup_survival_detailed(p, dt, n_paths, root_seed)?.estimate)
}
