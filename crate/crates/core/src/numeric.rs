//! Log-space and compensated-summation primitives.
//!
//! Weights of the form `exp(-U(x))` span thousands of e-folds, so every ratio
//! and sum in this crate is carried in log space and exponentiated only at
//! final reporting.  The conventions here: the log of zero is `-inf`, sums
//! over empty index sets are `-inf` in log space, and exponentiation that
//! would exceed f64 range is reported as an error instead of saturating.

use crate::error::{Error, Result};

/// Largest x with exp(x) finite in f64.
pub const MAX_EXP_ARG: f64 = 709.782712893384;

/// log(exp(a) + exp(b)) without overflow.  `-inf` inputs act as zero weights.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// log(sum exp(values)) with a max shift.  Empty input and all-`-inf` input
/// return `-inf` (the log of an empty sum).
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut sum = CompensatedSum::new();
    for &v in values {
        sum.add((v - m).exp());
    }
    m + sum.total().ln()
}

/// ln(1 + exp(x)), accurate across the whole real line.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// 1 / (1 + exp(-x)) without overflow for large |x|.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(logistic(x)) = -softplus(-x).
pub fn log_logistic(x: f64) -> f64 {
    -softplus(-x)
}

/// Neumaier-compensated accumulator: absorbs the rounding error of every
/// addition, so cancellation between large terms does not lose small ones.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A nonnegative quantity stored by its natural logarithm.  Products and
/// ratios are log additions; `+` merges weights through `logaddexp`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogWeight {
    log_value: f64,
}

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight {
        log_value: f64::NEG_INFINITY,
    };
    pub const ONE: LogWeight = LogWeight { log_value: 0.0 };

    pub fn from_ln(log_value: f64) -> Self {
        Self { log_value }
    }

    /// Wraps a natural-scale value; negative input is an argument error.
    pub fn from_value(v: f64) -> Result<Self> {
        if v < 0.0 || v.is_nan() {
            return Err(Error::Argument(format!(
                "log weight requires a nonnegative value, got {v}"
            )));
        }
        Ok(Self { log_value: v.ln() })
    }

    pub fn ln(&self) -> f64 {
        self.log_value
    }

    /// Exponentiates back to natural scale; overflow is reported, not
    /// saturated.
    pub fn value(&self) -> Result<f64> {
        if self.log_value > MAX_EXP_ARG {
            return Err(Error::Overflow {
                log_value: self.log_value,
            });
        }
        Ok(self.log_value.exp())
    }

    /// Natural-scale value clipped into [0, 1]; intended for reporting
    /// quantities that are probabilities by contract.
    pub fn value_clipped_to_unit(&self) -> f64 {
        self.log_value.min(0.0).exp()
    }
}

impl std::ops::Mul for LogWeight {
    type Output = LogWeight;
    fn mul(self, rhs: LogWeight) -> LogWeight {
        LogWeight::from_ln(self.log_value + rhs.log_value)
    }
}

impl std::ops::Div for LogWeight {
    type Output = LogWeight;
    fn div(self, rhs: LogWeight) -> LogWeight {
        LogWeight::from_ln(self.log_value - rhs.log_value)
    }
}

impl std::ops::Add for LogWeight {
    type Output = LogWeight;
    fn add(self, rhs: LogWeight) -> LogWeight {
        LogWeight::from_ln(logaddexp(self.log_value, rhs.log_value))
    }
}
