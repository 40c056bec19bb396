//! The train / evaluate / judge / revert loop.
//!
//! Each cycle trains for `train_episodes_per_cycle` episodes, evaluates the
//! frozen policy for `eval_episodes` episodes, and compares the evaluation
//! against every stored checkpoint. If the lowest score falls below the
//! threshold the learner is reset to the checkpoint with the widest margin;
//! otherwise the current policy becomes a new checkpoint.
//!
//! Randomness comes from separate substreams of the run seed for training
//! actions, evaluation actions, training resets and evaluation resets, so
//! reverting never shifts any stream.

use serde::{Deserialize, Serialize};

use crate::checkpoint::{CheckpointId, CheckpointStore, ComparisonVerdict};
use crate::error::{Error, Result};
use crate::interface::{ActionMode, Environment, Learner, Trajectory};
use crate::rng::{substream, RunRng, Stream};
use crate::stats::{Comparator, RewardSamples};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub train_episodes_per_cycle: usize,
    pub eval_episodes: usize,
    pub threshold: f64,
    pub comparator: Comparator,
    pub total_train_episodes: usize,
    pub eval_mode: ActionMode,
    /// Bound on stored checkpoints; `None` keeps the whole history.
    pub checkpoint_capacity: Option<usize>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            train_episodes_per_cycle: 30,
            eval_episodes: 20,
            threshold: 0.1,
            comparator: Comparator::MannWhitney,
            total_train_episodes: 600,
            eval_mode: ActionMode::Stochastic,
            checkpoint_capacity: None,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_episodes_per_cycle == 0 {
            return Err(Error::Config("train_episodes_per_cycle must be at least 1".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.total_train_episodes < self.train_episodes_per_cycle {
            return Err(Error::Config(format!(
                "budget of {} training episodes is less than one cycle ({})",
                self.total_train_episodes, self.train_episodes_per_cycle
            )));
        }
        if self.checkpoint_capacity == Some(0) {
            return Err(Error::Config("checkpoint capacity must be at least 1".into()));
        }
        Ok(())
    }

    /// Whole cycles that fit in the training budget.
    pub fn cycles(&self) -> usize {
        self.total_train_episodes / self.train_episodes_per_cycle
    }
}

/// What happened in one cycle. Cycles are numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Training episodes completed before evaluation.
    pub episode_index: u64,
    pub train_returns: Vec<f64>,
    pub eval_returns: Vec<f64>,
    pub verdict: Option<ComparisonVerdict>,
    pub reverted_to: Option<CheckpointId>,
    pub checkpoint_saved: Option<CheckpointId>,
}

impl CycleRecord {
    pub fn reverted(&self) -> bool {
        self.reverted_to.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    /// Judge and revert.
    Revert,
    /// Never judge; every evaluated policy is checkpointed.
    Baseline,
}

pub fn run_training<L: Learner, E: Environment>(
    learner: &mut L,
    env: &mut E,
    schedule: &ScheduleConfig,
    rng_seed: u64,
) -> Result<Vec<CycleRecord>> {
    let mut store = new_store(schedule)?;
    run(learner, env, schedule, rng_seed, Arm::Revert, &mut store)
}

pub fn run_baseline<L: Learner, E: Environment>(
    learner: &mut L,
    env: &mut E,
    schedule: &ScheduleConfig,
    rng_seed: u64,
) -> Result<Vec<CycleRecord>> {
    let mut store = new_store(schedule)?;
    run(learner, env, schedule, rng_seed, Arm::Baseline, &mut store)
}

fn new_store(schedule: &ScheduleConfig) -> Result<CheckpointStore> {
    match schedule.checkpoint_capacity {
        Some(k) => CheckpointStore::with_capacity(k),
        None => Ok(CheckpointStore::new()),
    }
}

struct Streams {
    train_policy: RunRng,
    eval_policy: RunRng,
    train_env: RunRng,
    eval_env: RunRng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            train_policy: substream(seed, Stream::TrainPolicy),
            eval_policy: substream(seed, Stream::EvalPolicy),
            train_env: substream(seed, Stream::TrainEnv),
            eval_env: substream(seed, Stream::EvalEnv),
        }
    }
}

/// Runs the full schedule against a caller-supplied store.
///
/// At threshold 0 no score can fall below the threshold, so judging is
/// skipped entirely and the log matches [`Arm::Baseline`].
pub fn run<L: Learner, E: Environment>(
    learner: &mut L,
    env: &mut E,
    schedule: &ScheduleConfig,
    rng_seed: u64,
    arm: Arm,
    store: &mut CheckpointStore,
) -> Result<Vec<CycleRecord>> {
    schedule.validate()?;
    let judging = arm == Arm::Revert && schedule.threshold > 0.0;
    let mut rngs = Streams::new(rng_seed);
    let mut episodes_done: u64 = 0;
    let mut records = Vec::with_capacity(schedule.cycles());

    for cycle in 1..=schedule.cycles() {
        let record = (|| -> Result<CycleRecord> {
            let mut train_returns = Vec::with_capacity(schedule.train_episodes_per_cycle);
            for _ in 0..schedule.train_episodes_per_cycle {
                let traj = run_episode(
                    learner,
                    env,
                    ActionMode::Stochastic,
                    &mut rngs.train_policy,
                    &mut rngs.train_env,
                )?;
                learner.train_on_episode(&traj)?;
                train_returns.push(traj.total_reward());
                episodes_done += 1;
            }

            let mut eval_returns = Vec::with_capacity(schedule.eval_episodes);
            for _ in 0..schedule.eval_episodes {
                let traj = run_episode(
                    learner,
                    env,
                    schedule.eval_mode,
                    &mut rngs.eval_policy,
                    &mut rngs.eval_env,
                )?;
                eval_returns.push(traj.total_reward());
                learner.ingest_offline(&traj)?;
            }
            let evaluation = RewardSamples::new(eval_returns.clone())?;

            let verdict = if judging && !store.is_empty() {
                Some(store.judge(&evaluation, schedule.comparator, schedule.threshold)?)
            } else {
                None
            };

            let (reverted_to, checkpoint_saved) = match verdict.as_ref().and_then(|v| v.target_id) {
                Some(target) => {
                    learner.set_parameters(&store.restore(target)?)?;
                    (Some(target), None)
                }
                None => {
                    let id = store.store(learner.parameters(), evaluation, episodes_done)?;
                    (None, Some(id))
                }
            };

            Ok(CycleRecord {
                cycle,
                episode_index: episodes_done,
                train_returns,
                eval_returns,
                verdict,
                reverted_to,
                checkpoint_saved,
            })
        })()
        .map_err(|e| e.in_cycle(cycle))?;
        records.push(record);
    }
    Ok(records)
}

fn run_episode<L: Learner, E: Environment>(
    learner: &mut L,
    env: &mut E,
    mode: ActionMode,
    policy_rng: &mut RunRng,
    env_rng: &mut RunRng,
) -> Result<Trajectory> {
    let cap = env.max_episode_steps();
    if cap == 0 {
        return Err(Error::Contract("environment allows zero steps per episode".into()));
    }
    let mut traj = Trajectory::new();
    let mut observation = env.reset(env_rng)?;
    for _ in 0..cap {
        let action = learner.act(&observation, mode, policy_rng)?;
        let step = env.step(&action)?;
        if !step.reward.is_finite() {
            return Err(Error::Contract(format!("non-finite reward {}", step.reward)));
        }
        traj.push(observation, action, step.reward);
        observation = step.observation;
        if step.done {
            break;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{scripted_pair, ScriptedProcessSpec};

    fn schedule(n: usize, m: usize, cycles: usize) -> ScheduleConfig {
        ScheduleConfig {
            train_episodes_per_cycle: n,
            eval_episodes: m,
            total_train_episodes: n * cycles,
            ..Default::default()
        }
    }

    #[test]
    fn budget_determines_cycle_count() {
        let (mut env, mut learner) = scripted_pair(ScriptedProcessSpec::constant(30, 5.0, 1.0)).unwrap();
        let records = run_baseline(&mut learner, &mut env, &schedule(30, 4, 3), 0).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records.iter().map(|r| r.cycle).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(records[2].episode_index, 90);

        let mut s = schedule(30, 4, 3);
        s.total_train_episodes = 100;
        assert_eq!(s.cycles(), 3);
    }

    #[test]
    fn validation() {
        let mut s = schedule(30, 20, 1);
        s.total_train_episodes = 29;
        assert!(s.validate().is_err());
        assert!(schedule(0, 20, 1).validate().is_err());
        assert!(schedule(1, 0, 1).validate().is_err());
        let mut s = schedule(1, 1, 1);
        s.threshold = 1.01;
        assert!(s.validate().is_err());
    }

    #[test]
    fn baseline_never_judges() {
        let spec = ScriptedProcessSpec::degrading(2, 3, (10.0, 0.1), (0.0, 0.1));
        let (mut env, mut learner) = scripted_pair(spec).unwrap();
        let records = run_baseline(&mut learner, &mut env, &schedule(2, 5, 6), 4).unwrap();
        for r in &records {
            assert!(r.verdict.is_none());
            assert!(r.reverted_to.is_none());
            assert!(r.checkpoint_saved.is_some());
        }
    }

    #[test]
    fn exactly_one_outcome_per_cycle() {
        let spec = ScriptedProcessSpec::degrading(2, 3, (10.0, 0.1), (0.0, 0.1));
        let (mut env, mut learner) = scripted_pair(spec).unwrap();
        let records = run_training(&mut learner, &mut env, &schedule(2, 5, 6), 4).unwrap();
        for r in &records {
            assert!(r.reverted_to.is_some() != r.checkpoint_saved.is_some());
            assert_eq!(r.reverted_to.is_some(), r.verdict.as_ref().is_some_and(|v| v.revert));
        }
        assert!(records[0].verdict.is_none());
    }

    #[test]
    fn errors_carry_cycle_index() {
        let spec = ScriptedProcessSpec::per_cycle(1, &[1.0, 2.0], 0.0);
        let (mut env, mut learner) = scripted_pair(spec).unwrap();
        let err = run_training(&mut learner, &mut env, &schedule(1, 2, 4), 0).unwrap_err();
        assert!(matches!(err, Error::Cycle { cycle: 2, .. }), "{err}");
    }
}
