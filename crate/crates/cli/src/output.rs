//! CSV and JSON artifacts.
//!
//! The per-episode CSV has one row per training or evaluation episode with
//! the fixed columns of [`EpisodeRow`]. Cycle-level fields (`rho_min`,
//! `reverted`, `reverted_to`, `checkpoint_saved`) are filled on evaluation
//! rows only and left empty on training rows.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::experiment::{RunResult, RunSummary, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub run_id: String,
    pub seed: u64,
    pub threshold: f64,
    pub comparator: String,
    pub cycle: usize,
    pub phase: Phase,
    pub episode_index: u64,
    pub episode_return: f64,
    pub rho_min: Option<f64>,
    pub reverted: Option<bool>,
    pub reverted_to: Option<u64>,
    pub checkpoint_saved: Option<u64>,
}

pub fn episode_rows(run: &RunResult) -> Vec<EpisodeRow> {
    let s = &run.summary;
    let mut rows = Vec::new();
    let base = |cycle, phase, episode_index, episode_return| EpisodeRow {
        run_id: s.run_id.clone(),
        seed: s.seed,
        threshold: s.threshold,
        comparator: s.comparator.to_string(),
        cycle,
        phase,
        episode_index,
        episode_return,
        rho_min: None,
        reverted: None,
        reverted_to: None,
        checkpoint_saved: None,
    };
    for rec in &run.records {
        let first_train = rec.episode_index - rec.train_returns.len() as u64;
        for (i, r) in rec.train_returns.iter().enumerate() {
            rows.push(base(rec.cycle, Phase::Train, first_train + i as u64, *r));
        }
        for r in &rec.eval_returns {
            rows.push(EpisodeRow {
                rho_min: rec.verdict.as_ref().map(|v| v.min_score.value()),
                reverted: Some(rec.reverted()),
                reverted_to: rec.reverted_to,
                checkpoint_saved: rec.checkpoint_saved,
                ..base(rec.cycle, Phase::Eval, rec.episode_index, *r)
            });
        }
    }
    rows
}

pub fn write_episode_csv<'a>(path: &Path, runs: impl IntoIterator<Item = &'a RunResult>) -> Result<usize, CliError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut n = 0;
    for run in runs {
        for row in episode_rows(run) {
            w.serialize(row).map_err(|e| CliError::runtime(e.to_string()))?;
            n += 1;
        }
    }
    w.flush()?;
    Ok(n)
}

pub fn read_episode_csv(path: &Path) -> Result<Vec<EpisodeRow>, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::invalid(format!("cannot open {}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| CliError::invalid(format!("{}: {e}", path.display()))))
        .collect()
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in rows {
        w.serialize(row).map_err(|e| CliError::runtime(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::runtime(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::invalid(format!("cannot create {}: {e}", dir.display())))
}

#[derive(Debug, Serialize)]
pub struct SummaryFile<'a, C: Serialize> {
    pub config: &'a C,
    pub runs: Vec<&'a RunSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub baseline: Vec<&'a RunSummary>,
}
