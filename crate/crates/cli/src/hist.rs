//! Per-cycle return histograms with a Gaussian fit.

use std::path::Path;

use ctrlz_core::stats::{gaussian_fit, GaussianSummary, RewardSamples};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{read_episode_csv, Phase};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins over `[min, max]`; the last bin is closed on the right.
/// If every value is equal there is a single bin.
pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    assert!(bins >= 1 && !values.is_empty());
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Histogram {
            edges: vec![lo, hi],
            counts: vec![values.len()],
        };
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
    edges.push(hi);
    let mut counts = vec![0; bins];
    for v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Histogram { edges, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleHistogram {
    pub cycle: usize,
    pub samples: usize,
    #[serde(flatten)]
    pub histogram: Histogram,
    pub fit: GaussianSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistReport {
    pub run_id: String,
    pub threshold: f64,
    pub phase: Phase,
    pub cycles: Vec<CycleHistogram>,
}

pub fn cmd_hist(
    csv: &Path,
    run_id: &str,
    threshold: Option<f64>,
    cycles: &[usize],
    bins: usize,
    phase: Phase,
) -> Result<HistReport, CliError> {
    if bins == 0 {
        return Err(CliError::invalid("bins must be at least 1"));
    }
    let rows: Vec<_> = read_episode_csv(csv)?
        .into_iter()
        .filter(|r| r.run_id == run_id && r.phase == phase)
        .filter(|r| threshold.is_none_or(|t| r.threshold == t))
        .collect();
    let Some(first) = rows.first() else {
        return Err(CliError::invalid(format!("run `{run_id}` not found in {}", csv.display())));
    };
    let threshold = first.threshold;
    if rows.iter().any(|r| r.threshold != threshold) {
        return Err(CliError::invalid(format!(
            "run `{run_id}` appears at several thresholds; pass --threshold"
        )));
    }

    let mut out = Vec::with_capacity(cycles.len());
    for &cycle in cycles {
        let returns: Vec<f64> = rows.iter().filter(|r| r.cycle == cycle).map(|r| r.episode_return).collect();
        if returns.is_empty() {
            return Err(CliError::invalid(format!("cycle {cycle} not found for run `{run_id}`")));
        }
        let samples = RewardSamples::new(returns.clone()).map_err(|e| CliError::invalid(e.to_string()))?;
        out.push(CycleHistogram {
            cycle,
            samples: returns.len(),
            histogram: histogram(&returns, bins),
            fit: gaussian_fit(&samples),
        });
    }
    Ok(HistReport {
        run_id: run_id.to_string(),
        threshold,
        phase,
        cycles: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values_single_bin() {
        let h = histogram(&[4.0; 7], 10);
        assert_eq!(h.counts, vec![7]);
        assert_eq!(h.edges, vec![4.0, 4.0]);
    }

    #[test]
    fn counts_conserved_and_max_in_last_bin() {
        let values: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        let h = histogram(&values, 10);
        assert_eq!(h.counts.iter().sum::<usize>(), 20);
        assert_eq!(h.edges.len(), 11);
        assert_eq!(h.edges[0], 0.0);
        assert_eq!(h.edges[10], 361.0);
        assert!(h.counts[9] >= 1);
    }

    #[test]
    fn two_bins_split() {
        let h = histogram(&[0.0, 0.4, 0.6, 1.0], 2);
        assert_eq!(h.counts, vec![2, 2]);
    }
}
