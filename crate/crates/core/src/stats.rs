//! Comparators that score how likely the current policy's return
//! distribution is to beat a previous one.
//!
//! Every comparator maps a pair of [`RewardSamples`] to an
//! [`ImprovementScore`] in `[0, 1]`, so the same revert threshold can be
//! applied regardless of which comparator produced it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Episodic returns observed during one evaluation phase.
///
/// Non-empty and finite by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RewardSamples(Vec<f64>);

impl RewardSamples {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("reward samples must not be empty"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite reward {bad}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Population variance (divides by `len`).
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.0.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.0.len() as f64
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

impl TryFrom<Vec<f64>> for RewardSamples {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<RewardSamples> for Vec<f64> {
    fn from(s: RewardSamples) -> Self {
        s.0
    }
}

/// Maximum-likelihood normal fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSummary {
    pub mean: f64,
    pub std_dev: f64,
}

/// Estimated probability that current returns exceed previous returns.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImprovementScore(f64);

impl ImprovementScore {
    pub const ZERO: Self = Self(0.0);
    pub const ONE: Self = Self(1.0);

    /// Clamps into `[0, 1]`; rounding in the normal CDF can overshoot by an ulp.
    pub fn new(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        Self(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for ImprovementScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.0)
    }
}

/// Fraction of (current, previous) pairs in which the current return is
/// strictly greater. Ties contribute nothing.
///
/// Runs in `O((n + m) log(n + m))` by sorting both sides and sweeping.
pub fn rho_statistic(current: &RewardSamples, previous: &RewardSamples) -> ImprovementScore {
    let cur = current.sorted();
    let prev = previous.sorted();

    let mut below = 0usize; // previous values strictly below the current cursor
    let mut wins: u64 = 0;
    for c in &cur {
        while below < prev.len() && prev[below] < *c {
            below += 1;
        }
        wins += below as u64;
    }
    let pairs = (cur.len() as u64) * (prev.len() as u64);
    ImprovementScore::new(wins as f64 / pairs as f64)
}

/// Step-function empirical CDF.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &RewardSamples) -> Self {
        Self {
            sorted: samples.sorted(),
        }
    }

    /// `P(X <= x)`.
    pub fn at(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    /// Left limit `P(X < x)`.
    pub fn strictly_below(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v < x) as f64 / self.sorted.len() as f64
    }
}

/// Probability of superiority under the empirical measures of both sample
/// sets: the integral of `P(previous < x)` against the empirical density of
/// `current`. With the left-limit CDF this coincides with [`rho_statistic`].
pub fn empirical_superiority(current: &RewardSamples, previous: &RewardSamples) -> ImprovementScore {
    let cdf = EmpiricalCdf::new(previous);
    let weight = 1.0 / current.len() as f64;
    let total: f64 = current
        .values()
        .iter()
        .map(|&x| weight * cdf.strictly_below(x))
        .sum();
    ImprovementScore::new(total)
}

/// Standard normal CDF.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Closed-form `P(current > previous)` when both sides are fitted with
/// independent normals.
///
/// A zero combined spread is resolved as the point-mass limit: 1 for a
/// positive mean difference, 0 for a negative one, 0.5 at equality.
pub fn gaussian_superiority(current: &RewardSamples, previous: &RewardSamples) -> ImprovementScore {
    let mu = current.mean() - previous.mean();
    let sigma = (current.variance() + previous.variance()).sqrt();
    if sigma == 0.0 {
        return ImprovementScore::new(match mu.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => 0.0,
            _ => 0.5,
        });
    }
    ImprovementScore::new(1.0 - standard_normal_cdf(-mu / sigma))
}

/// 1 if the current mean is at least the previous mean, else 0.
pub fn mean_superiority(current: &RewardSamples, previous: &RewardSamples) -> ImprovementScore {
    if current.mean() >= previous.mean() {
        ImprovementScore::ONE
    } else {
        ImprovementScore::ZERO
    }
}

pub fn gaussian_fit(samples: &RewardSamples) -> GaussianSummary {
    GaussianSummary {
        mean: samples.mean(),
        std_dev: samples.variance().sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    #[default]
    MannWhitney,
    Gaussian,
    Mean,
}

impl Comparator {
    pub const ALL: [Comparator; 3] = [Comparator::MannWhitney, Comparator::Gaussian, Comparator::Mean];

    pub fn score(self, current: &RewardSamples, previous: &RewardSamples) -> ImprovementScore {
        match self {
            Comparator::MannWhitney => rho_statistic(current, previous),
            Comparator::Gaussian => gaussian_superiority(current, previous),
            Comparator::Mean => mean_superiority(current, previous),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Comparator::MannWhitney => "mann_whitney",
            Comparator::Gaussian => "gaussian",
            Comparator::Mean => "mean",
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Comparator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Comparator::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown comparator `{s}`")))
    }
}
