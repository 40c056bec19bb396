//! Seed batches, threshold sweeps and hyperparameter perturbation.

use std::fs;
use std::path::PathBuf;

use ctrlz_core::envs::{scripted_pair, CartPole};
use ctrlz_core::harness::{self, Arm};
use ctrlz_core::learner::{ReinforceConfig, ReinforceLearner};
use ctrlz_core::rng::{substream, Stream};
use ctrlz_core::{CheckpointStore, Comparator, CycleRecord, ScheduleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EnvChoice, ExperimentConfig};
use crate::error::CliError;

/// Caps applied after perturbation so multiplied values stay valid.
const MAX_GAMMA: f64 = 1.0;
const MAX_DECAY: f64 = 0.999;

/// The perturbable learner hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hyperparameters {
    pub lr: f64,
    pub gamma: f64,
    pub log_std_init: f64,
    pub rmsprop_decay: f64,
}

impl Hyperparameters {
    pub fn of(config: &ReinforceConfig) -> Self {
        Self {
            lr: config.optimizer.learning_rate,
            gamma: config.gamma,
            log_std_init: config.log_std_init,
            rmsprop_decay: config.optimizer.decay,
        }
    }

    pub fn apply(&self, base: &ReinforceConfig) -> ReinforceConfig {
        let mut c = base.clone();
        c.optimizer.learning_rate = self.lr;
        c.gamma = self.gamma;
        c.log_std_init = self.log_std_init;
        c.optimizer.decay = self.rmsprop_decay;
        c
    }
}

/// Multipliers for (lr, gamma, log_std_init, rmsprop_decay), each uniform
/// in `[low, high]`. Depends only on the master seed and the seed's position
/// in the batch, so every threshold/comparator arm sees the same values.
pub fn perturbation_multipliers(master_seed: u64, seed_index: usize, (low, high): (f64, f64)) -> [f64; 4] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(seed_index as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(Stream::Perturbation as u64);
    std::array::from_fn(|_| if low == high { low } else { rng.random_range(low..=high) })
}

pub fn perturbed(base: &ReinforceConfig, multipliers: [f64; 4]) -> Hyperparameters {
    let h = Hyperparameters::of(base);
    Hyperparameters {
        lr: h.lr * multipliers[0],
        gamma: (h.gamma * multipliers[1]).min(MAX_GAMMA),
        log_std_init: h.log_std_init * multipliers[2],
        rmsprop_decay: (h.rmsprop_decay * multipliers[3]).min(MAX_DECAY),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmLabel {
    Revert,
    Baseline,
}

impl From<ArmLabel> for Arm {
    fn from(a: ArmLabel) -> Self {
        match a {
            ArmLabel::Revert => Arm::Revert,
            ArmLabel::Baseline => Arm::Baseline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub seed: u64,
    pub arm: ArmLabel,
    /// Effective threshold; the baseline arm is logged as 0.
    pub threshold: f64,
    pub comparator: Comparator,
    pub hyperparameters: Hyperparameters,
    pub cycles: usize,
    pub mean_lifetime_train_reward: f64,
    pub mean_lifetime_reward_with_eval: f64,
    pub revert_count: usize,
    pub cycles_csv: String,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub records: Vec<CycleRecord>,
}

pub fn run_id(seed: u64) -> String {
    format!("s{seed}")
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn summarize(
    records: &[CycleRecord],
    seed: u64,
    arm: ArmLabel,
    threshold: f64,
    comparator: Comparator,
    hyperparameters: Hyperparameters,
    cycles_csv: &str,
) -> RunSummary {
    RunSummary {
        run_id: run_id(seed),
        seed,
        arm,
        threshold,
        comparator,
        hyperparameters,
        cycles: records.len(),
        mean_lifetime_train_reward: mean(records.iter().flat_map(|r| r.train_returns.iter().copied())),
        mean_lifetime_reward_with_eval: mean(
            records
                .iter()
                .flat_map(|r| r.train_returns.iter().chain(&r.eval_returns).copied()),
        ),
        revert_count: records.iter().filter(|r| r.reverted()).count(),
        cycles_csv: cycles_csv.to_string(),
    }
}

/// One seed of one arm at one threshold.
pub fn execute_run(
    config: &ExperimentConfig,
    seed_index: usize,
    threshold: f64,
    arm: ArmLabel,
    cycles_csv: &str,
) -> Result<RunResult, CliError> {
    let seed = config.seeds[seed_index];
    let effective_threshold = match arm {
        ArmLabel::Revert => threshold,
        ArmLabel::Baseline => 0.0,
    };
    let schedule = ScheduleConfig {
        threshold: effective_threshold,
        ..config.schedule.clone()
    };
    schedule.validate().map_err(|e| CliError::invalid(e.to_string()))?;

    let hyper = match config.perturbation {
        Some(range) => perturbed(&config.learner, perturbation_multipliers(config.master_seed, seed_index, range)),
        None => Hyperparameters::of(&config.learner),
    };

    let mut store = match schedule.checkpoint_capacity {
        Some(k) => CheckpointStore::with_capacity(k),
        None => Ok(CheckpointStore::new()),
    }
    .map_err(|e| CliError::invalid(e.to_string()))?;
    if let Some(dir) = &config.checkpoint_dir {
        let arm_name = match arm {
            ArmLabel::Revert => "revert",
            ArmLabel::Baseline => "baseline",
        };
        let dir: PathBuf = dir.join(format!("{arm_name}-t{effective_threshold}-{}", run_id(seed)));
        fs::create_dir_all(&dir)?;
        store = store.persist_to(dir);
    }

    let fail = |e: ctrlz_core::Error| CliError::runtime(format!("seed {seed}: {e}"));
    let records = match &config.env {
        EnvChoice::Cartpole(params) => {
            let learner_config = hyper.apply(&config.learner);
            let mut learner = ReinforceLearner::new(learner_config, 4, 1, &mut substream(seed, Stream::Init))
                .map_err(|e| CliError::invalid(e.to_string()))?;
            let mut env = CartPole::new(*params);
            harness::run(&mut learner, &mut env, &schedule, seed, arm.into(), &mut store).map_err(fail)?
        }
        EnvChoice::Scripted(settings) => {
            let (mut env, mut learner) = scripted_pair(settings.spec(schedule.train_episodes_per_cycle))
                .map_err(|e| CliError::invalid(e.to_string()))?;
            harness::run(&mut learner, &mut env, &schedule, seed, arm.into(), &mut store).map_err(fail)?
        }
    };

    let summary = summarize(
        &records,
        seed,
        arm,
        effective_threshold,
        schedule.comparator,
        hyper,
        cycles_csv,
    );
    Ok(RunResult { summary, records })
}

/// Every seed of the config, in seed-list order.
pub fn run_batch(
    config: &ExperimentConfig,
    threshold: f64,
    arm: ArmLabel,
    cycles_csv: &str,
) -> Result<Vec<RunResult>, CliError> {
    (0..config.seeds.len())
        .into_par_iter()
        .map(|i| execute_run(config, i, threshold, arm, cycles_csv))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub runs: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub mean_reward_with_eval: f64,
    /// Fraction of all cycles that ended in a revert.
    pub revert_rate: f64,
}

/// Aggregates one threshold's batch. Spread is the population standard
/// deviation of per-seed lifetime rewards.
pub fn sweep_row(threshold: f64, runs: &[RunResult]) -> SweepRow {
    let rewards: Vec<f64> = runs.iter().map(|r| r.summary.mean_lifetime_train_reward).collect();
    let m = mean(rewards.iter().copied());
    let var = mean(rewards.iter().map(|r| (r - m) * (r - m)));
    let cycles: usize = runs.iter().map(|r| r.summary.cycles).sum();
    let reverts: usize = runs.iter().map(|r| r.summary.revert_count).sum();
    SweepRow {
        threshold,
        runs: runs.len(),
        mean_reward: m,
        std_reward: var.sqrt(),
        mean_reward_with_eval: mean(runs.iter().map(|r| r.summary.mean_lifetime_reward_with_eval)),
        revert_rate: if cycles == 0 { 0.0 } else { reverts as f64 / cycles as f64 },
    }
}
