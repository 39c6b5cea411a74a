//! Shared error type for the crate.  Variants distinguish bad configuration,
//! out-of-range queries, analytic domain violations, and reports that carry
//! information back to the caller (overflow log-values, bound applicability
//! thresholds, right-edge overruns).

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter struct failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// A site or grid index lies outside the stored data.
    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    /// An argument violates an ordering or count requirement.
    #[error("argument error: {0}")]
    Argument(String),

    /// A value lies outside the analytic domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A path or environment does not extend far enough for the query.
    #[error("coverage error: data covers [0, {covered}], query needs [0, {required}]")]
    Coverage { covered: f64, required: f64 },

    /// A natural-scale value exceeds f64 range; the log-value is retained.
    #[error("natural-scale overflow: log-value {log_value}")]
    Overflow { log_value: f64 },

    /// A tail bound was requested at a horizon where it is vacuous.
    #[error("bound not applicable: requires t > {valid_from}, got t = {t}")]
    BoundNotApplicable { t: f64, valid_from: f64 },

    /// The walk attempted to jump past the last site of the environment.
    #[error("right-edge overrun: walk left site {site} at time {time}")]
    RightEdgeOverrun { site: usize, time: f64 },

    /// A simulation consumed its whole event budget before finishing.  Caps
    /// are sized so this is vanishingly rare; aborting loudly beats biasing
    /// the ensemble silently.
    #[error("event cap of {cap} embedded steps exhausted")]
    EventCap { cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
