//! History of evaluated policies and revert-target selection.

mod file;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{Comparator, ImprovementScore, RewardSamples};

pub use file::{read_checkpoint, write_checkpoint, FORMAT_VERSION, MAGIC};

/// Flat snapshot of every learnable scalar, optionally with optimizer
/// accumulators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    values: Vec<f64>,
    optimizer_state: Option<Vec<f64>>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values, "parameter")?;
        Ok(Self {
            values,
            optimizer_state: None,
        })
    }

    pub fn with_optimizer_state(mut self, state: Vec<f64>) -> Result<Self> {
        check_finite(&state, "optimizer state")?;
        self.optimizer_state = Some(state);
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn optimizer_state(&self) -> Option<&[f64]> {
        self.optimizer_state.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::invalid(format!("{what} {i} is not finite"))),
        None => Ok(()),
    }
}

pub type CheckpointId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub id: CheckpointId,
    /// Training episodes completed when the checkpoint was taken.
    pub episode_index: u64,
    pub params: ParameterVector,
    pub evaluation: RewardSamples,
}

/// Per-checkpoint improvement scores and the resulting revert decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub scores: Vec<(CheckpointId, ImprovementScore)>,
    pub min_score: ImprovementScore,
    pub target_id: Option<CheckpointId>,
    pub revert: bool,
}

#[derive(Debug, Default)]
pub struct CheckpointStore {
    checkpoints: Vec<Checkpoint>,
    next_id: CheckpointId,
    capacity: Option<usize>,
    persist_dir: Option<PathBuf>,
}

impl CheckpointStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bounded store: keeps the newest checkpoint plus the `capacity - 1`
    /// best by mean evaluation return.
    pub fn with_capacity(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("checkpoint capacity must be at least 1".into()));
        }
        Ok(Self {
            capacity: Some(capacity),
            ..Self::default()
        })
    }

    /// Also write every stored checkpoint to `dir` as `ckpt_<id>.bin`.
    pub fn persist_to(mut self, dir: impl Into<PathBuf>) -> Self {
        self.persist_dir = Some(dir.into());
        self
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn get(&self, id: CheckpointId) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.id == id)
    }

    pub fn store(
        &mut self,
        params: ParameterVector,
        evaluation: RewardSamples,
        episode_index: u64,
    ) -> Result<CheckpointId> {
        if let Some(last) = self.checkpoints.last() {
            if episode_index < last.episode_index {
                return Err(Error::InvalidState(format!(
                    "episode index {episode_index} precedes last checkpoint's {}",
                    last.episode_index
                )));
            }
        }
        let id = self.next_id;
        let checkpoint = Checkpoint {
            id,
            episode_index,
            params,
            evaluation,
        };
        if let Some(dir) = &self.persist_dir {
            write_checkpoint(&checkpoint_path(dir, id), &checkpoint)?;
        }
        self.checkpoints.push(checkpoint);
        self.next_id += 1;
        self.evict();
        Ok(id)
    }

    fn evict(&mut self) {
        let Some(cap) = self.capacity else { return };
        while self.checkpoints.len() > cap {
            // The newest entry is exempt; among the rest drop the lowest
            // mean, oldest first on ties.
            let candidates = &self.checkpoints[..self.checkpoints.len() - 1];
            let worst = candidates
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    a.evaluation
                        .mean()
                        .total_cmp(&b.evaluation.mean())
                        .then(a.id.cmp(&b.id))
                })
                .map(|(i, _)| i)
                .expect("capacity >= 1 leaves at least one candidate");
            self.checkpoints.remove(worst);
        }
    }

    /// Scores `current_eval` against every stored checkpoint and decides
    /// whether to revert (`min score < threshold`). Among checkpoints tied at
    /// the minimum the target is the one with the highest mean evaluation
    /// return, then the lowest id.
    pub fn judge(
        &self,
        current_eval: &RewardSamples,
        comparator: Comparator,
        threshold: f64,
    ) -> Result<ComparisonVerdict> {
        if self.checkpoints.is_empty() {
            return Err(Error::InvalidState("cannot judge against an empty checkpoint store".into()));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::invalid(format!("threshold {threshold} outside [0, 1]")));
        }

        let scores: Vec<(CheckpointId, ImprovementScore)> = self
            .checkpoints
            .iter()
            .map(|c| (c.id, comparator.score(current_eval, &c.evaluation)))
            .collect();
        let min_score = scores
            .iter()
            .map(|(_, s)| *s)
            .min_by(|a, b| a.value().total_cmp(&b.value()))
            .expect("non-empty store");

        let revert = min_score.value() < threshold;
        let target_id = if revert {
            self.checkpoints
                .iter()
                .zip(&scores)
                .filter(|(_, (_, s))| *s == min_score)
                .map(|(c, _)| c)
                .min_by(|a, b| {
                    b.evaluation
                        .mean()
                        .total_cmp(&a.evaluation.mean())
                        .then(a.id.cmp(&b.id))
                })
                .map(|c| c.id)
        } else {
            None
        };

        Ok(ComparisonVerdict {
            scores,
            min_score,
            target_id,
            revert,
        })
    }

    /// The stored parameters of `id`. The checkpoint stays in the store.
    pub fn restore(&self, id: CheckpointId) -> Result<ParameterVector> {
        self.get(id).map(|c| c.params.clone()).ok_or(Error::NotFound(id))
    }
}

pub fn checkpoint_path(dir: &Path, id: CheckpointId) -> PathBuf {
    dir.join(format!("ckpt_{id:06}.bin"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(v: &[f64]) -> RewardSamples {
        RewardSamples::new(v.to_vec()).unwrap()
    }

    fn params(v: &[f64]) -> ParameterVector {
        ParameterVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ids_are_sequential_from_zero() {
        let mut store = CheckpointStore::new();
        let ids: Vec<_> = (0..3)
            .map(|i| store.store(params(&[i as f64]), eval(&[1.0]), i).unwrap())
            .collect();
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn rejects_non_finite_parameters() {
        assert!(ParameterVector::new(vec![0.0, f64::NAN]).is_err());
        assert!(params(&[1.0]).with_optimizer_state(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn episode_index_must_not_decrease() {
        let mut store = CheckpointStore::new();
        store.store(params(&[0.0]), eval(&[1.0]), 30).unwrap();
        assert!(matches!(
            store.store(params(&[0.0]), eval(&[1.0]), 10),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn capacity_keeps_best_plus_newest() {
        let mut store = CheckpointStore::with_capacity(2).unwrap();
        store.store(params(&[0.0]), eval(&[5.0, 5.0]), 0).unwrap();
        store.store(params(&[1.0]), eval(&[9.0, 9.0]), 1).unwrap();
        store.store(params(&[2.0]), eval(&[7.0, 7.0]), 2).unwrap();
        let means: Vec<f64> = store.checkpoints().iter().map(|c| c.evaluation.mean()).collect();
        assert_eq!(means, vec![9.0, 7.0]);
        assert!(matches!(store.restore(0), Err(Error::NotFound(0))));
    }

    #[test]
    fn capacity_one_keeps_only_newest() {
        let mut store = CheckpointStore::with_capacity(1).unwrap();
        store.store(params(&[0.0]), eval(&[9.0]), 0).unwrap();
        store.store(params(&[1.0]), eval(&[1.0]), 1).unwrap();
        assert_eq!(store.len(), 1);
        assert_eq!(store.checkpoints()[0].id, 1);
        assert!(CheckpointStore::with_capacity(0).is_err());
    }

    #[test]
    fn judge_clear_improvement() {
        let mut store = CheckpointStore::new();
        store.store(params(&[0.0]), eval(&[0., 1., 2.]), 0).unwrap();
        let v = store.judge(&eval(&[3., 4., 5.]), Comparator::MannWhitney, 0.1).unwrap();
        assert_eq!(v.scores, vec![(0, ImprovementScore::ONE)]);
        assert!(!v.revert);
        assert_eq!(v.target_id, None);
    }

    #[test]
    fn judge_clear_degradation() {
        let mut store = CheckpointStore::new();
        store.store(params(&[0.0]), eval(&[3., 4., 5.]), 0).unwrap();
        let v = store.judge(&eval(&[0., 1., 2.]), Comparator::MannWhitney, 0.1).unwrap();
        assert_eq!(v.min_score.value(), 0.0);
        assert!(v.revert);
        assert_eq!(v.target_id, Some(0));
    }

    #[test]
    fn judge_tie_prefers_higher_mean() {
        let mut store = CheckpointStore::new();
        let a = store.store(params(&[0.0]), eval(&[10., 11., 12.]), 0).unwrap();
        let b = store.store(params(&[1.0]), eval(&[5., 6., 7.]), 1).unwrap();
        let v = store.judge(&eval(&[0., 1., 2.]), Comparator::MannWhitney, 0.1).unwrap();
        assert_eq!(v.scores, vec![(a, ImprovementScore::ZERO), (b, ImprovementScore::ZERO)]);
        assert_eq!(v.target_id, Some(a));
    }

    #[test]
    fn judge_tie_equal_means_prefers_lower_id() {
        let mut store = CheckpointStore::new();
        store.store(params(&[0.0]), eval(&[10.]), 0).unwrap();
        store.store(params(&[1.0]), eval(&[10.]), 1).unwrap();
        let v = store.judge(&eval(&[0.]), Comparator::MannWhitney, 0.5).unwrap();
        assert_eq!(v.target_id, Some(0));
    }

    #[test]
    fn judge_picks_widest_margin() {
        let mut store = CheckpointStore::new();
        store.store(params(&[0.0]), eval(&[1., 2., 3.]), 0).unwrap();
        store.store(params(&[1.0]), eval(&[4., 5., 6.]), 1).unwrap();
        // rho vs id0 = 8/9, vs id1 = 1/9
        let v = store.judge(&eval(&[2.5, 3.5, 4.5]), Comparator::MannWhitney, 0.2).unwrap();
        assert!(v.revert);
        assert_eq!(v.target_id, Some(1));
        assert_eq!(v.min_score.value(), 1.0 / 9.0);
    }

    #[test]
    fn judge_requires_checkpoints_and_valid_threshold() {
        let store = CheckpointStore::new();
        assert!(matches!(
            store.judge(&eval(&[1.0]), Comparator::MannWhitney, 0.1),
            Err(Error::InvalidState(_))
        ));
        let mut store = CheckpointStore::new();
        store.store(params(&[0.0]), eval(&[1.0]), 0).unwrap();
        assert!(store.judge(&eval(&[1.0]), Comparator::MannWhitney, 1.5).is_err());
    }

    #[test]
    fn threshold_zero_never_reverts() {
        let mut store = CheckpointStore::new();
        store.store(params(&[0.0]), eval(&[100.0]), 0).unwrap();
        for c in Comparator::ALL {
            let v = store.judge(&eval(&[-100.0]), c, 0.0).unwrap();
            assert!(!v.revert);
            assert_eq!(v.target_id, None);
        }
    }

    #[test]
    fn restore_survives_later_stores() {
        let mut store = CheckpointStore::new();
        let p = params(&[0.1, -2.5, 3.75]);
        store.store(p.clone(), eval(&[1.0]), 0).unwrap();
        store.store(params(&[9.0, 9.0, 9.0]), eval(&[2.0]), 30).unwrap();
        assert_eq!(store.restore(0).unwrap(), p);
        store.store(params(&[7.0, 7.0, 7.0]), eval(&[3.0]), 60).unwrap();
        assert_eq!(store.restore(0).unwrap(), p);
        assert!(matches!(store.restore(7), Err(Error::NotFound(7))));
    }
}
