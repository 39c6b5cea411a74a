//! Monte Carlo engines for the walk in a fixed environment.
//!
//! The continuous-time walk holds at every site for an Exp(1) time, so the
//! number of jumps in [0, t] is Poisson(t) independently of the trajectory,
//! and the jump chain is a Markov chain with the environment's left-jump
//! probabilities.  Three engines exploit this at different cost points:
//!
//! * [`run_checkpoints`]: positions at fixed times only.  Draws one Poisson
//!   step count per checkpoint interval and advances the jump chain with a
//!   single 64-bit compare per step; no per-step floating point at all.
//! * [`run_hits`]: first-passage data.  Advances the jump chain until the
//!   targets are hit, then reconstructs the continuous hit times from the
//!   step counts with Gamma draws (a sum of k unit exponentials is
//!   Gamma(k, 1)).
//! * [`run_full`]: the literal definition, one Exp(1) holding time per jump.
//!   Slow; kept as the reference the faster engines are tested against.
//!
//! Every replica gets its own counter-derived RNG stream, so ensembles can
//! be evaluated in parallel in any order and still produce identical output.

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::rng::{domain, stream_rng};
use crate::stats::FreqEstimate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use rayon::prelude::*;

const TWO64: f64 = 18_446_744_073_709_551_616.0;

/// How a hitting query treats a target equal to the starting site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitConvention {
    /// The target counts as hit at time zero.
    HitAtStart,
    /// The walk must leave and come back; hits are only counted from the
    /// first jump onward.
    FirstReturn,
}

/// Whether a multi-target run stops at the first hit or keeps going until
/// every target has been visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    AnyTarget,
    AllTargets,
}

/// Left-jump probabilities as 64-bit integer thresholds: a uniform u64 draw
/// below the threshold means a left jump.  Rounding to the grid of
/// multiples of 2^-64 perturbs each probability by at most 6e-20.
fn jump_thresholds(env: &Environment) -> Vec<u64> {
    env.left_jump_probs()
        .into_iter()
        .map(|q| (q * TWO64) as u64)
        .collect()
}

#[inline]
fn step(thresholds: &[u64], pos: usize, draw: u64) -> usize {
    if draw < thresholds[pos] {
        pos - 1
    } else {
        pos + 1
    }
}

fn validate_start(env: &Environment, start: usize) -> Result<()> {
    if start > env.n_sites() {
        return Err(Error::IndexOutOfRange { index: start, max: env.n_sites() });
    }
    Ok(())
}

fn validate_checkpoints(checkpoints: &[f64]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Argument("at least one checkpoint time is required".into()));
    }
    let mut last = 0.0;
    for &t in checkpoints {
        if !(t.is_finite() && t > last) {
            return Err(Error::Argument(format!(
                "checkpoint times must be finite, positive and strictly increasing; got {t} after {last}"
            )));
        }
        last = t;
    }
    Ok(())
}

/// Positions of one replica at the requested times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointRun {
    pub positions: Vec<usize>,
    /// Running maximum of the position up to each checkpoint.  On a ±1
    /// chain the walk has hit site y by time t exactly when this is ≥ y,
    /// so first-passage indicators come for free with the positions.
    pub max_positions: Vec<usize>,
    pub events: u64,
}

fn run_checkpoints_with_rng(
    thresholds: &[u64],
    start: usize,
    checkpoints: &[f64],
    cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<CheckpointRun> {
    let mut pos = start;
    let mut max_pos = start;
    let mut events: u64 = 0;
    let mut positions = Vec::with_capacity(checkpoints.len());
    let mut max_positions = Vec::with_capacity(checkpoints.len());
    let mut prev_t = 0.0;
    for &t in checkpoints {
        let lambda = t - prev_t;
        prev_t = t;
        let dist = Poisson::new(lambda)
            .map_err(|e| Error::Argument(format!("bad checkpoint gap {lambda}: {e}")))?;
        let drawn: f64 = dist.sample(rng);
        let n_steps = drawn as u64;
        if events + n_steps > cap {
            return Err(Error::EventCap { cap });
        }
        events += n_steps;
        for _ in 0..n_steps {
            pos = step(thresholds, pos, rng.random::<u64>());
            if pos >= thresholds.len() {
                return Err(Error::RightEdgeOverrun { site: pos - 1, time: t });
            }
            if pos > max_pos {
                max_pos = pos;
            }
        }
        positions.push(pos);
        max_positions.push(max_pos);
    }
    Ok(CheckpointRun { positions, max_positions, events })
}

/// Exact positions of one replica at each checkpoint time, by Poissonized
/// step counts.  `cap` bounds the total number of embedded steps.
pub fn run_checkpoints(
    env: &Environment,
    start: usize,
    checkpoints: &[f64],
    root_seed: u64,
    replica: u64,
    cap: u64,
) -> Result<CheckpointRun> {
    validate_start(env, start)?;
    validate_checkpoints(checkpoints)?;
    let thresholds = jump_thresholds(env);
    let mut rng = stream_rng(root_seed, domain::REPLICA, replica);
    run_checkpoints_with_rng(&thresholds, start, checkpoints, cap, &mut rng)
}

/// Same engine with an explicit left-jump probability table instead of an
/// environment: `q[0]` must be 0 and every entry must lie in [0, 1).  Used
/// to check the engine against distributions known in closed form.
pub fn run_checkpoints_with_probs(
    q: &[f64],
    start: usize,
    checkpoints: &[f64],
    root_seed: u64,
    replica: u64,
    cap: u64,
) -> Result<CheckpointRun> {
    if q.is_empty() || q[0] != 0.0 {
        return Err(Error::Argument("probability table must start with q[0] = 0".into()));
    }
    if let Some(&bad) = q.iter().find(|&&p| !(0.0..1.0).contains(&p)) {
        return Err(Error::Argument(format!("left-jump probability {bad} outside [0, 1)")));
    }
    if start >= q.len() {
        return Err(Error::IndexOutOfRange { index: start, max: q.len() - 1 });
    }
    validate_checkpoints(checkpoints)?;
    let thresholds: Vec<u64> = q.iter().map(|&p| (p * TWO64) as u64).collect();
    let mut rng = stream_rng(root_seed, domain::REPLICA, replica);
    run_checkpoints_with_rng(&thresholds, start, checkpoints, cap, &mut rng)
}

/// Checkpoint positions for a whole ensemble, one derived RNG stream per
/// replica, evaluated in parallel.  The output is ordered by replica index
/// and does not depend on the number of worker threads.
pub fn ensemble_checkpoints(
    env: &Environment,
    start: usize,
    checkpoints: &[f64],
    root_seed: u64,
    n_replicas: u64,
    cap: u64,
) -> Result<Vec<CheckpointRun>> {
    validate_start(env, start)?;
    validate_checkpoints(checkpoints)?;
    let thresholds = jump_thresholds(env);
    (0..n_replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = stream_rng(root_seed, domain::REPLICA, replica);
            run_checkpoints_with_rng(&thresholds, start, checkpoints, cap, &mut rng)
        })
        .collect()
}

/// First-passage data of one replica.
#[derive(Debug, Clone, PartialEq)]
pub struct HitRun {
    /// Embedded step count at the first hit of each target, in input order.
    pub hit_events: Vec<Option<u64>>,
    /// Continuous first-hit times, reconstructed as partial Gamma sums.
    pub hit_times: Vec<Option<f64>>,
    /// Total embedded steps consumed.
    pub events: u64,
    /// Continuous time elapsed when the run stopped; for a capped run this
    /// is a lower bound on every unresolved hitting time.
    pub elapsed: f64,
}

fn run_hits_with_rng(
    thresholds: &[u64],
    start: usize,
    targets: &[usize],
    cap: u64,
    convention: HitConvention,
    stop: StopRule,
    rng: &mut ChaCha8Rng,
) -> Result<HitRun> {
    let n_targets = targets.len();
    let mut hit_events: Vec<Option<u64>> = vec![None; n_targets];
    let mut pending = n_targets;
    if convention == HitConvention::HitAtStart {
        for (i, &y) in targets.iter().enumerate() {
            if y == start {
                hit_events[i] = Some(0);
                pending -= 1;
            }
        }
    }
    let mut pos = start;
    let mut events: u64 = 0;
    let stop_now = |pending: usize| match stop {
        StopRule::AnyTarget => pending < n_targets,
        StopRule::AllTargets => pending == 0,
    };
    while pending > 0 && !stop_now(pending) {
        if events == cap {
            break;
        }
        pos = step(thresholds, pos, rng.random::<u64>());
        events += 1;
        if pos >= thresholds.len() {
            return Err(Error::RightEdgeOverrun { site: pos - 1, time: events as f64 });
        }
        for (i, &y) in targets.iter().enumerate() {
            if hit_events[i].is_none() && y == pos {
                hit_events[i] = Some(events);
                pending -= 1;
            }
        }
    }
    // Continuous times: the k-th jump happens at a Gamma(k, 1) time, and
    // disjoint step ranges contribute independent Gamma increments.  Walk
    // the hit step counts in increasing order and accumulate.
    let mut order: Vec<usize> = (0..n_targets).collect();
    order.sort_by_key(|&i| hit_events[i].unwrap_or(u64::MAX));
    let mut hit_times: Vec<Option<f64>> = vec![None; n_targets];
    let mut done_events: u64 = 0;
    let mut done_time = 0.0_f64;
    let gamma_to = |upto: u64, from_events: u64, from_time: f64, rng: &mut ChaCha8Rng| {
        let shape = (upto - from_events) as f64;
        if shape == 0.0 {
            from_time
        } else {
            let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
            from_time + g
        }
    };
    for &i in &order {
        if let Some(k) = hit_events[i] {
            let t = gamma_to(k, done_events, done_time, rng);
            hit_times[i] = Some(t);
            done_events = k;
            done_time = t;
        }
    }
    let elapsed = gamma_to(events, done_events, done_time, rng);
    Ok(HitRun { hit_events, hit_times, events, elapsed })
}

/// Runs the jump chain until the targets are hit (per `stop`) or `cap`
/// steps elapse, and reconstructs continuous hit times.  Unresolved targets
/// stay `None`; `elapsed` then lower-bounds their hitting times.
pub fn run_hits(
    env: &Environment,
    start: usize,
    targets: &[usize],
    root_seed: u64,
    replica: u64,
    cap: u64,
    convention: HitConvention,
    stop: StopRule,
) -> Result<HitRun> {
    validate_start(env, start)?;
    if targets.is_empty() {
        return Err(Error::Argument("at least one target site is required".into()));
    }
    for &y in targets {
        if y > env.n_sites() {
            return Err(Error::IndexOutOfRange { index: y, max: env.n_sites() });
        }
    }
    let thresholds = jump_thresholds(env);
    let mut rng = stream_rng(root_seed, domain::REPLICA, replica);
    run_hits_with_rng(&thresholds, start, targets, cap, convention, stop, &mut rng)
}

/// One replica of the literal event-driven dynamics: Exp(1) holding times
/// accumulated until `horizon`.  Returns the position at the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct FullRun {
    pub position: usize,
    pub events: u64,
    pub max_position: usize,
}

pub fn run_full(
    env: &Environment,
    start: usize,
    horizon: f64,
    root_seed: u64,
    replica: u64,
    cap: u64,
) -> Result<FullRun> {
    validate_start(env, start)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Argument(format!("horizon must be positive, got {horizon}")));
    }
    let thresholds = jump_thresholds(env);
    let mut rng = stream_rng(root_seed, domain::REPLICA, replica);
    let mut pos = start;
    let mut max_pos = start;
    let mut clock = 0.0_f64;
    let mut events: u64 = 0;
    loop {
        let hold: f64 = rng.sample(Exp1);
        if clock + hold > horizon {
            return Ok(FullRun { position: pos, events, max_position: max_pos });
        }
        clock += hold;
        if events == cap {
            return Err(Error::EventCap { cap });
        }
        pos = step(&thresholds, pos, rng.random::<u64>());
        events += 1;
        if pos >= thresholds.len() {
            return Err(Error::RightEdgeOverrun { site: pos - 1, time: clock });
        }
        max_pos = max_pos.max(pos);
    }
}

/// Estimates P[first hit of `target` is at or before `t`] over an ensemble.
/// Replicas whose cap expired while the reconstructed elapsed time was still
/// below `t` are counted as censored rather than guessed.
pub fn mc_hit_cdf(
    env: &Environment,
    start: usize,
    target: usize,
    t: f64,
    root_seed: u64,
    n_replicas: u64,
    cap: u64,
) -> Result<FreqEstimate> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Argument(format!("horizon must be positive, got {t}")));
    }
    validate_start(env, start)?;
    if target > env.n_sites() {
        return Err(Error::IndexOutOfRange { index: target, max: env.n_sites() });
    }
    let thresholds = jump_thresholds(env);
    let outcomes: Vec<Result<(bool, bool)>> = (0..n_replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = stream_rng(root_seed, domain::REPLICA, replica);
            let run = run_hits_with_rng(
                &thresholds,
                start,
                &[target],
                cap,
                HitConvention::HitAtStart,
                StopRule::AnyTarget,
                &mut rng,
            )?;
            Ok(match run.hit_times[0] {
                Some(tau) => (tau <= t, false),
                // Unresolved: certain miss if time t already passed.
                None => (false, run.elapsed < t),
            })
        })
        .collect();
    let mut successes = 0;
    let mut censored = 0;
    for o in outcomes {
        let (hit, cens) = o?;
        successes += u64::from(hit);
        censored += u64::from(cens);
    }
    Ok(FreqEstimate { successes, trials: n_replicas, censored })
}

/// One replica's first exit from the open interval (a, c).
#[derive(Debug, Clone, PartialEq)]
pub struct ExitSample {
    /// Continuous exit time, or the elapsed lower bound if censored.
    pub time: f64,
    /// Boundary reached: `Some(a)` or `Some(c)`, `None` if the cap expired
    /// first.
    pub exited_at: Option<usize>,
    pub events: u64,
}

/// First-exit ensemble from (a, c) started at x, one derived stream per
/// replica, parallel and order-stable.
pub fn mc_first_exit(
    env: &Environment,
    a: usize,
    x: usize,
    c: usize,
    root_seed: u64,
    n_replicas: u64,
    cap: u64,
) -> Result<Vec<ExitSample>> {
    if !(a < x && x < c) {
        return Err(Error::Argument(format!("start {x} must lie strictly inside ({a}, {c})")));
    }
    if c > env.n_sites() {
        return Err(Error::IndexOutOfRange { index: c, max: env.n_sites() });
    }
    let thresholds = jump_thresholds(env);
    (0..n_replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = stream_rng(root_seed, domain::REPLICA, replica);
            let run = run_hits_with_rng(
                &thresholds,
                x,
                &[a, c],
                cap,
                HitConvention::HitAtStart,
                StopRule::AnyTarget,
                &mut rng,
            )?;
            let sample = match (run.hit_times[0], run.hit_times[1]) {
                (Some(t), None) => ExitSample { time: t, exited_at: Some(a), events: run.events },
                (None, Some(t)) => ExitSample { time: t, exited_at: Some(c), events: run.events },
                _ => ExitSample { time: run.elapsed, exited_at: None, events: run.events },
            };
            Ok(sample)
        })
        .collect()
}

/// Fraction of exit samples that left through the upper boundary, treating
/// censored replicas as censored trials.
pub fn upward_exit_frequency(samples: &[ExitSample], c: usize) -> FreqEstimate {
    let mut successes = 0;
    let mut censored = 0;
    for s in samples {
        match s.exited_at {
            Some(site) if site == c => successes += 1,
            Some(_) => {}
            None => censored += 1,
        }
    }
    FreqEstimate { successes, trials: samples.len() as u64, censored }
}

/// Fraction of replicas still inside the interval at time `t`.  A censored
/// replica whose elapsed lower bound exceeds `t` is known to still be
/// inside; one that was capped earlier than `t` is genuinely unknown.
pub fn confinement_frequency(samples: &[ExitSample], t: f64) -> FreqEstimate {
    let mut successes = 0;
    let mut censored = 0;
    for s in samples {
        match s.exited_at {
            Some(_) if s.time > t => successes += 1,
            Some(_) => {}
            None if s.time > t => successes += 1,
            None => censored += 1,
        }
    }
    FreqEstimate { successes, trials: samples.len() as u64, censored }
}

/// Hard per-replica step budget for a horizon-`t` run: t + 6√t + 1000 covers
/// the Poisson(t) step count except with probability below 1e-8.
pub fn horizon_step_cap(t: f64) -> u64 {
    (t + 6.0 * t.sqrt() + 1000.0).ceil() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{sample_environment, Disorder, EnvSpec, Environment};
    use crate::exactsolve::{expected_hit, ruin_prob};

    fn spec(n: usize) -> EnvSpec {
        EnvSpec {
            disorder: Disorder::Rademacher { c: 1.0 },
            b: 1.0,
            alpha: 0.25,
            n_sites: n,
            theta0_check: 1.0,
        }
    }

    fn flat_env(n: usize) -> Environment {
        let omega: Vec<f64> = (1..=n).map(|y| (y as f64).powf(-0.25)).collect();
        Environment::from_disorder(spec(n), omega).unwrap()
    }

    #[test]
    fn checkpoints_are_deterministic_per_replica() {
        let env = sample_environment(&spec(400), 5).unwrap();
        let a = run_checkpoints(&env, 0, &[10.0, 50.0, 120.0], 9, 3, 10_000).unwrap();
        let b = run_checkpoints(&env, 0, &[10.0, 50.0, 120.0], 9, 3, 10_000).unwrap();
        assert_eq!(a, b);
        let c = run_checkpoints(&env, 0, &[10.0, 50.0, 120.0], 9, 4, 10_000).unwrap();
        assert_ne!(a, c, "distinct replicas must get distinct streams");
        let ens = ensemble_checkpoints(&env, 0, &[10.0, 50.0, 120.0], 9, 8, 10_000).unwrap();
        assert_eq!(ens[3], a, "ensemble must reuse the per-replica streams");
    }

    #[test]
    fn running_maxima_dominate_positions_and_record_visits() {
        let env = sample_environment(&spec(400), 11).unwrap();
        let grid = [5.0, 25.0, 80.0, 200.0];
        for replica in 0..20 {
            let run = run_checkpoints(&env, 0, &grid, 21, replica, 100_000).unwrap();
            let mut prev = 0usize;
            for (k, (&p, &m)) in run.positions.iter().zip(&run.max_positions).enumerate() {
                assert!(m >= p, "running max below the position at checkpoint {k}");
                assert!(m >= prev, "running max decreased at checkpoint {k}");
                prev = m;
            }
        }
        // Strong left pull at every interior site: the position keeps
        // falling back toward 0, but the first step (0 → 1 is forced) must
        // be remembered by the running max forever.
        let q = vec![0.0, 0.98, 0.98, 0.98, 0.98, 0.98];
        for replica in 0..20 {
            let run = run_checkpoints_with_probs(&q, 0, &grid, 22, replica, 100_000).unwrap();
            if run.events > 0 {
                assert!(
                    run.max_positions.last().copied() >= Some(1),
                    "a stepped walk from 0 must have visited site 1"
                );
            }
            for (&p, &m) in run.positions.iter().zip(&run.max_positions) {
                assert!(m >= p);
            }
        }
    }

    #[test]
    fn ensemble_is_identical_across_thread_counts() {
        let env = sample_environment(&spec(400), 6).unwrap();
        let mut runs = Vec::new();
        for threads in [1usize, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            runs.push(
                pool.install(|| ensemble_checkpoints(&env, 0, &[25.0, 75.0], 42, 64, 10_000))
                    .unwrap(),
            );
        }
        assert_eq!(runs[0], runs[1], "thread count must not leak into results");
    }

    #[test]
    fn pure_right_drift_is_poisson() {
        // q ≡ 0 never steps left, so the position at t is exactly the jump
        // count: Poisson(t).
        let t = 50.0;
        let n_rep = 4000;
        let q = vec![0.0; 2000];
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for r in 0..n_rep {
            let run = run_checkpoints_with_probs(&q, 0, &[t], 1234, r, 100_000).unwrap();
            let x = run.positions[0] as f64;
            assert_eq!(run.positions[0] as u64, run.events, "no left steps possible");
            sum += x;
            sum_sq += x * x;
        }
        let n = n_rep as f64;
        let mean = sum / n;
        let var = sum_sq / n - mean * mean;
        let se_mean = (t / n).sqrt();
        assert!((mean - t).abs() <= 4.0 * se_mean, "Poisson mean: {mean} vs {t}");
        // Var[sample var] ≈ (μ + 2μ²)/n for Poisson.
        let se_var = ((t + 2.0 * t * t) / n).sqrt();
        assert!((var - t).abs() <= 4.0 * se_var, "Poisson variance: {var} vs {t}");
    }

    #[test]
    fn checkpoint_and_full_engines_agree_in_distribution() {
        let env = sample_environment(&spec(300), 11).unwrap();
        let t = 150.0;
        let n_rep = 2000u64;
        let cap = horizon_step_cap(t);
        let quick: Vec<f64> = (0..n_rep)
            .map(|r| run_checkpoints(&env, 0, &[t], 7, r, cap).unwrap().positions[0] as f64)
            .collect();
        // Distinct seed: the engines must agree in law, not samplewise.
        let slow: Vec<f64> = (0..n_rep)
            .map(|r| run_full(&env, 0, t, 8, r, cap).unwrap().position as f64)
            .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
        let (mq, ms) = (mean(&quick), mean(&slow));
        let pooled_se = ((var(&quick, mq) + var(&slow, ms)) / n_rep as f64).sqrt();
        assert!(
            (mq - ms).abs() <= 4.0 * pooled_se + 0.5,
            "engine means diverge: {mq} vs {ms} (se {pooled_se})"
        );
        for cut in [mq as usize, mq as usize + 5] {
            let fq = quick.iter().filter(|&&x| x >= cut as f64).count() as f64 / n_rep as f64;
            let fs = slow.iter().filter(|&&x| x >= cut as f64).count() as f64 / n_rep as f64;
            let se = (2.0 * 0.25 / n_rep as f64).sqrt();
            assert!(
                (fq - fs).abs() <= 4.0 * se + 0.01,
                "tail frequencies diverge at {cut}: {fq} vs {fs}"
            );
        }
    }

    #[test]
    fn hit_times_match_exact_expectations() {
        // Flat potential: E^0[τ_10] = 100 exactly.
        let env = flat_env(500);
        let n_rep = 3000u64;
        let mut times = Vec::with_capacity(n_rep as usize);
        for r in 0..n_rep {
            let run = run_hits(
                &env, 0, &[10], 21, r, 2_000_000,
                HitConvention::HitAtStart, StopRule::AllTargets,
            )
            .unwrap();
            times.push(run.hit_times[0].expect("flat walk must hit 10"));
        }
        let n = n_rep as f64;
        let mean = times.iter().sum::<f64>() / n;
        let sd = (times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n).sqrt();
        let exact = expected_hit(&env, 0, 10).unwrap();
        assert!(
            (mean - exact).abs() <= 5.0 * sd / n.sqrt() + 1.0,
            "hit-time mean {mean} vs exact {exact} (sd {sd})"
        );

        // Disordered environment, same cross-check.
        let env = sample_environment(&spec(200), 33).unwrap();
        let exact = expected_hit(&env, 0, 25).unwrap();
        let mut times = Vec::with_capacity(n_rep as usize);
        for r in 0..n_rep {
            let run = run_hits(
                &env, 0, &[25], 22, r, 50_000_000,
                HitConvention::HitAtStart, StopRule::AllTargets,
            )
            .unwrap();
            times.push(run.hit_times[0].expect("target within drift range"));
        }
        let mean = times.iter().sum::<f64>() / n;
        let sd = (times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n).sqrt();
        assert!(
            (mean - exact).abs() <= 5.0 * sd / n.sqrt() + 0.05 * exact,
            "disordered hit-time mean {mean} vs exact {exact}"
        );
    }

    #[test]
    fn hit_step_counts_and_times_are_ordered() {
        let env = sample_environment(&spec(300), 2).unwrap();
        let run = run_hits(
            &env, 0, &[5, 15, 40], 77, 0, 10_000_000,
            HitConvention::HitAtStart, StopRule::AllTargets,
        )
        .unwrap();
        let e: Vec<u64> = run.hit_events.iter().map(|x| x.unwrap()).collect();
        let t: Vec<f64> = run.hit_times.iter().map(|x| x.unwrap()).collect();
        assert!(e[0] < e[1] && e[1] < e[2], "nearer targets hit first: {e:?}");
        assert!(t[0] < t[1] && t[1] < t[2], "times must follow step order: {t:?}");
        assert!(run.elapsed >= t[2]);
        assert!(run.events >= e[2]);
    }

    #[test]
    fn hit_conventions_differ_only_at_the_start_site() {
        let env = flat_env(100);
        let at_start = run_hits(
            &env, 5, &[5], 3, 0, 100_000,
            HitConvention::HitAtStart, StopRule::AllTargets,
        )
        .unwrap();
        assert_eq!(at_start.hit_events[0], Some(0));
        assert_eq!(at_start.hit_times[0], Some(0.0));

        let ret = run_hits(
            &env, 5, &[5], 3, 0, 100_000,
            HitConvention::FirstReturn, StopRule::AllTargets,
        )
        .unwrap();
        let k = ret.hit_events[0].expect("fair walk returns");
        assert!(k >= 2 && k % 2 == 0, "returns to the start take an even step count, got {k}");
        assert!(ret.hit_times[0].unwrap() > 0.0);

        // A target away from the start is untouched by the convention.
        let a = run_hits(&env, 5, &[9], 3, 1, 100_000, HitConvention::HitAtStart, StopRule::AllTargets).unwrap();
        let b = run_hits(&env, 5, &[9], 3, 1, 100_000, HitConvention::FirstReturn, StopRule::AllTargets).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn censoring_reports_a_sound_lower_bound() {
        // Potential climbing 5 per site walls the walk near 0; reaching 30
        // within 10_000 steps is hopeless.
        let omega: Vec<f64> = (1..=50).map(|y| 5.0 + (y as f64).powf(-0.25)).collect();
        let env = Environment::from_disorder(spec(50), omega).unwrap();
        let run = run_hits(
            &env, 0, &[30], 13, 0, 10_000,
            HitConvention::HitAtStart, StopRule::AllTargets,
        )
        .unwrap();
        assert_eq!(run.hit_events[0], None);
        assert_eq!(run.events, 10_000);
        // Elapsed is Gamma(10_000, 1): tightly around 10_000.
        assert!(
            (run.elapsed - 10_000.0).abs() < 600.0,
            "elapsed {} far from its Gamma mean",
            run.elapsed
        );
    }

    #[test]
    fn exit_split_matches_exact_ruin_probability() {
        let env = flat_env(40);
        let samples = mc_first_exit(&env, 0, 3, 10, 99, 5000, 1_000_000).unwrap();
        let up = upward_exit_frequency(&samples, 10);
        assert_eq!(up.censored, 0);
        let exact = ruin_prob(&env, 0, 3, 10).unwrap();
        let se = up.std_error();
        assert!(
            (up.frequency() - exact).abs() <= 4.0 * se + 0.005,
            "upward exit {} vs exact {exact} (se {se})",
            up.frequency()
        );

        // Confinement frequency decreases with t and hits 0 eventually.
        let f_small = confinement_frequency(&samples, 1.0);
        let f_large = confinement_frequency(&samples, 1e6);
        assert!(f_small.frequency() > f_large.frequency());
        assert_eq!(f_large.successes, 0, "every replica exits well before t = 1e6");
    }

    #[test]
    fn mc_hit_cdf_counts_censoring_honestly() {
        let env = flat_env(60);
        // Generous cap: no censoring, cdf increases with t.
        let lo = mc_hit_cdf(&env, 0, 8, 30.0, 5, 2000, 1_000_000).unwrap();
        let hi = mc_hit_cdf(&env, 0, 8, 300.0, 5, 2000, 1_000_000).unwrap();
        assert_eq!(lo.censored + hi.censored, 0);
        assert!(hi.frequency() > lo.frequency());

        // Tiny cap with a horizon beyond it: unresolved replicas must land
        // in the censored column, not in either frequency.
        let capped = mc_hit_cdf(&env, 0, 40, 5000.0, 5, 200, 100).unwrap();
        assert!(capped.censored > 0, "a 100-step cap cannot resolve a 5000-time-unit horizon");
    }

    #[test]
    fn right_edge_overrun_is_detected() {
        let env = flat_env(10);
        let err = ensemble_checkpoints(&env, 0, &[500.0], 1, 50, 100_000).unwrap_err();
        assert!(
            matches!(err, Error::RightEdgeOverrun { .. }),
            "a 10-site box cannot hold a t = 500 run: {err:?}"
        );
    }

    #[test]
    fn event_cap_refuses_rather_than_truncates() {
        let env = flat_env(4000);
        let err = run_checkpoints(&env, 0, &[2000.0], 1, 0, 100).unwrap_err();
        assert!(matches!(err, Error::EventCap { cap: 100 }));
        assert!(horizon_step_cap(1e6) > 1_000_000 + 5_000);
        assert!(horizon_step_cap(1e6) < 1_100_000);
    }
}
