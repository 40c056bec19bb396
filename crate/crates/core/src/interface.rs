//! Contracts between the harness and pluggable learners/environments.

use serde::{Deserialize, Serialize};

use crate::checkpoint::ParameterVector;
use crate::error::Result;
use crate::rng::RunRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
}

/// One episode of experience, in time order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<Transition>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, observation: Vec<f64>, action: Vec<f64>, reward: f64) {
        self.steps.push(Transition {
            observation,
            action,
            reward,
        });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted episode return.
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Reward-to-go `G_t = r_t + gamma * G_{t+1}` for every step.
    pub fn discounted_returns(&self, gamma: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.steps.len()];
        let mut acc = 0.0;
        for (t, step) in self.steps.iter().enumerate().rev() {
            acc = step.reward + gamma * acc;
            out[t] = acc;
        }
        out
    }
}

/// How actions are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    /// Sample from the behavior policy, exploration noise included.
    #[default]
    Stochastic,
    /// Take the mean action.
    Deterministic,
}

pub trait Environment {
    fn reset(&mut self, rng: &mut RunRng) -> Result<Vec<f64>>;

    /// Must not be called again after `done` until the next `reset`.
    fn step(&mut self, action: &[f64]) -> Result<Step>;

    fn max_episode_steps(&self) -> usize;
}

pub trait Learner {
    fn act(&mut self, observation: &[f64], mode: ActionMode, rng: &mut RunRng) -> Result<Vec<f64>>;

    fn train_on_episode(&mut self, trajectory: &Trajectory) -> Result<()>;

    fn parameters(&self) -> ParameterVector;

    fn set_parameters(&mut self, params: &ParameterVector) -> Result<()>;

    /// Experience gathered outside training (evaluation rollouts).
    fn ingest_offline(&mut self, _trajectory: &Trajectory) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discounted_returns_recursion() {
        let mut t = Trajectory::new();
        for r in [1.0, 2.0, 3.0] {
            t.push(vec![], vec![], r);
        }
        let g = t.discounted_returns(0.5);
        assert_eq!(g, vec![1.0 + 0.5 * (2.0 + 0.5 * 3.0), 2.0 + 0.5 * 3.0, 3.0]);
        assert_eq!(t.total_reward(), 6.0);
    }

    #[test]
    fn single_step_return_is_reward() {
        let mut t = Trajectory::new();
        t.push(vec![], vec![], 4.25);
        assert_eq!(t.discounted_returns(0.123), vec![4.25]);
    }
}
