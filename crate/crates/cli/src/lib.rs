//! Experiment runner for checkpoint-and-revert training.
//!
//! Library half of the `ctrlz` binary: configuration, seed batches,
//! threshold sweeps, CSV/JSON artifacts, histograms and the comparator
//! utility.

pub mod config;
pub mod error;
pub mod experiment;
pub mod hist;
pub mod output;

use std::fs;
use std::path::Path;

use ctrlz_core::{Comparator, ImprovementScore, RewardSamples};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment::{run_batch, sweep_row, ArmLabel, RunResult, SweepRow};
use crate::output::{ensure_dir, write_episode_csv, write_json, write_sweep_csv, SummaryFile};

pub use crate::hist::cmd_hist;

pub const CYCLES_CSV: &str = "cycles.csv";
pub const BASELINE_CSV: &str = "baseline_cycles.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SWEEP_CSV: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Judge-and-revert arm only.
    Revert,
    /// Never-revert arm only.
    Baseline,
    /// Both arms; the baseline goes to a separate CSV.
    Both,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub revert: Vec<RunResult>,
    pub baseline: Vec<RunResult>,
}

/// Runs every seed and writes `cycles.csv` (plus `baseline_cycles.csv` for
/// [`RunMode::Both`]) and `summary.json` into the output directory.
pub fn cmd_run(config: &ExperimentConfig, mode: RunMode) -> Result<RunOutput, CliError> {
    ensure_dir(&config.output)?;
    let threshold = config.schedule.threshold;
    let mut out = RunOutput::default();
    match mode {
        RunMode::Revert => out.revert = run_batch(config, threshold, ArmLabel::Revert, CYCLES_CSV)?,
        RunMode::Baseline => out.baseline = run_batch(config, threshold, ArmLabel::Baseline, CYCLES_CSV)?,
        RunMode::Both => {
            out.revert = run_batch(config, threshold, ArmLabel::Revert, CYCLES_CSV)?;
            out.baseline = run_batch(config, threshold, ArmLabel::Baseline, BASELINE_CSV)?;
        }
    }

    if mode == RunMode::Baseline {
        write_episode_csv(&config.output.join(CYCLES_CSV), &out.baseline)?;
    } else {
        write_episode_csv(&config.output.join(CYCLES_CSV), &out.revert)?;
        if mode == RunMode::Both {
            write_episode_csv(&config.output.join(BASELINE_CSV), &out.baseline)?;
        }
    }
    let summary = SummaryFile {
        config,
        runs: out.revert.iter().map(|r| &r.summary).collect(),
        baseline: out.baseline.iter().map(|r| &r.summary).collect(),
    };
    write_json(&config.output.join(SUMMARY_JSON), &summary)?;
    Ok(out)
}

/// Runs the full seed batch at every threshold. Writes `cycles.csv` with
/// all runs, `sweep.csv` with one row per threshold, and `summary.json`.
pub fn cmd_sweep(config: &ExperimentConfig, thresholds: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    if thresholds.is_empty() {
        return Err(CliError::invalid("no thresholds given"));
    }
    if let Some(t) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(CliError::invalid(format!("threshold {t} outside [0, 1]")));
    }
    ensure_dir(&config.output)?;
    let mut runs = Vec::with_capacity(thresholds.len() * config.seeds.len());
    let mut rows = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let batch = run_batch(config, t, ArmLabel::Revert, CYCLES_CSV)?;
        rows.push(sweep_row(t, &batch));
        runs.extend(batch);
    }
    write_episode_csv(&config.output.join(CYCLES_CSV), &runs)?;
    write_sweep_csv(&config.output.join(SWEEP_CSV), &rows)?;
    let summary = SummaryFile {
        config,
        runs: runs.iter().map(|r| &r.summary).collect(),
        baseline: Vec::new(),
    };
    write_json(&config.output.join(SUMMARY_JSON), &summary)?;
    Ok(rows)
}

/// Newline-separated returns; blank lines are ignored.
pub fn read_samples(path: &Path) -> Result<RewardSamples, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    let values = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| CliError::invalid(format!("{}: cannot parse `{l}`", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    RewardSamples::new(values).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

pub fn cmd_compare(current: &Path, previous: &Path, comparator: Comparator) -> Result<ImprovementScore, CliError> {
    Ok(comparator.score(&read_samples(current)?, &read_samples(previous)?))
}
