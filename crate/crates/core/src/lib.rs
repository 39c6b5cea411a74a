//! Toolkit for nearest-neighbour birth-death walks on the nonnegative integers
//! whose jump rates come from a random potential: i.i.d. site disorder plus a
//! decaying power-law drift.  The crate provides
//!
//! * [`environment`]: sampling of disorder environments and of the continuous
//!   potential (Brownian motion plus power drift), with coupling diagnostics;
//! * [`pathfunc`]: draw-up/draw-down functionals, the localization scale, and
//!   threshold events on potential paths;
//! * [`exactsolve`]: closed-form ruin probabilities, expected hitting times,
//!   reversible measures, and confinement/escape tail bounds, all evaluated in
//!   log space;
//! * [`simulate`]: continuous-time Monte Carlo of the walk (event-count
//!   sampling at checkpoints, per-event clocks for hitting times);
//! * [`bmlaw`]: the exact law of the maximal rise of a drifted Brownian motion
//!   over an independent exponential horizon, its large-deviation
//!   approximation, and a discretized Monte Carlo estimator.
//!
//! Everything is deterministic given the seeds carried in configuration
//! structs; parallel runs reproduce the sequential output bit for bit.

pub mod bmlaw;
pub mod environment;
pub mod error;
pub mod exactsolve;
pub mod numeric;
pub mod pathfunc;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
