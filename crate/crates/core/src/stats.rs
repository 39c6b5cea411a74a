//! Small statistical helpers shared by the Monte Carlo modules: binomial
//! frequency estimates, empirical quartiles, and ordinary least squares for
//! the trend summaries.

use crate::error::{Error, Result};

/// Binomial frequency estimate with its standard error.  `censored` counts
/// trials whose outcome could not be resolved (event caps); such trials are
/// still part of `trials` and are never reported as successes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FreqEstimate {
    pub successes: u64,
    pub trials: u64,
    pub censored: u64,
}

impl FreqEstimate {
    pub fn new(successes: u64, trials: u64, censored: u64) -> Self {
        assert!(
            successes + censored <= trials,
            "successes {successes} + censored {censored} exceed trials {trials}"
        );
        Self {
            successes,
            trials,
            censored,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Standard error sqrt(p(1-p)/n) of the estimated frequency.
    pub fn std_error(&self) -> f64 {
        let p = self.frequency();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Linear-interpolated empirical quantile (the common "type 7" rule) of an
/// ascending-sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Argument("quantile of empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!("quantile level {p} outside [0, 1]")));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        return Ok(sorted[lo]);
    }
    let w = h - lo as f64;
    let (a, b) = (sorted[lo], sorted[hi]);
    if a == b {
        return Ok(a); // avoids inf - inf when both ends are infinite
    }
    Ok(a + w * (b - a))
}

/// Sample quartiles of an unsorted sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Quartiles {
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

impl Quartiles {
    pub fn of(values: &mut [f64]) -> Result<Self> {
        values.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quartile input"));
        Ok(Self {
            q25: quantile_sorted(values, 0.25)?,
            q50: quantile_sorted(values, 0.50)?,
            q75: quantile_sorted(values, 0.75)?,
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

/// Ordinary least squares fit y = intercept + slope * x.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub n: usize,
}

impl OlsFit {
    /// Half-width of the two-sided 95% confidence interval for the slope
    /// (Student t with n - 2 degrees of freedom).
    pub fn ci95_halfwidth(&self) -> f64 {
        student_t_975(self.n.saturating_sub(2)) * self.slope_se
    }
}

pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "regression inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Argument(format!(
            "regression needs at least 3 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if sxx == 0.0 {
        return Err(Error::Argument("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut sse = 0.0;
    for i in 0..n {
        let r = y[i] - intercept - slope * x[i];
        sse += r * r;
    }
    let slope_se = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(OlsFit {
        slope,
        intercept,
        slope_se,
        n,
    })
}

/// Two-sided 97.5% Student-t quantile.  Exact table through 12 degrees of
/// freedom; a Cornish-Fisher expansion beyond (error below 2e-3 there).
fn student_t_975(df: usize) -> f64 {
    const TABLE: [f64; 12] = [
        12.7062, 4.30265, 3.18245, 2.77645, 2.57058, 2.44691, 2.36462, 2.30600, 2.26216, 2.22814,
        2.20099, 2.17881,
    ];
    match df {
        0 => f64::INFINITY,
        1..=12 => TABLE[df - 1],
        _ => {
            let z = 1.959963984540054_f64;
            let d = df as f64;
            z + (z.powi(3) + z) / (4.0 * d) + (5.0 * z.powi(5) + 16.0 * z.powi(3) + 3.0 * z) / (96.0 * d * d)
        }
    }
}
