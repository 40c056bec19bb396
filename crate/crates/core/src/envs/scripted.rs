//! A fake learner/environment pair with a scheduled return distribution.
//!
//! The learner's only "parameter" is the number of training episodes it has
//! consumed. Dividing by the episodes per cycle gives the policy's cycle
//! index, which it emits as its action; the environment answers with a
//! single-step episode whose reward is drawn from the schedule for that
//! cycle. Restoring an older parameter vector therefore restores the older
//! return distribution.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::checkpoint::ParameterVector;
use crate::error::{Error, Result};
use crate::interface::{ActionMode, Environment, Learner, Step, Trajectory};
use crate::rng::RunRng;

/// Return distribution in force from `from_cycle` until the next phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub from_cycle: usize,
    pub mean: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedProcessSpec {
    pub episodes_per_cycle: usize,
    pub phases: Vec<Phase>,
    /// Cycles at or beyond this are undefined.
    pub horizon: Option<usize>,
}

impl ScriptedProcessSpec {
    pub fn constant(episodes_per_cycle: usize, mean: f64, std_dev: f64) -> Self {
        Self {
            episodes_per_cycle,
            phases: vec![Phase {
                from_cycle: 0,
                mean,
                std_dev,
            }],
            horizon: None,
        }
    }

    /// `before` for cycles below `cycle`, `after` from `cycle` on.
    pub fn degrading(episodes_per_cycle: usize, cycle: usize, before: (f64, f64), after: (f64, f64)) -> Self {
        Self {
            episodes_per_cycle,
            phases: vec![
                Phase {
                    from_cycle: 0,
                    mean: before.0,
                    std_dev: before.1,
                },
                Phase {
                    from_cycle: cycle,
                    mean: after.0,
                    std_dev: after.1,
                },
            ],
            horizon: None,
        }
    }

    /// One phase per cycle with the given means.
    pub fn per_cycle(episodes_per_cycle: usize, means: &[f64], std_dev: f64) -> Self {
        Self {
            episodes_per_cycle,
            phases: means
                .iter()
                .enumerate()
                .map(|(c, &mean)| Phase {
                    from_cycle: c,
                    mean,
                    std_dev,
                })
                .collect(),
            horizon: Some(means.len()),
        }
    }

    /// First cycle whose mean drops below the preceding phase's.
    pub fn degradation_cycle(&self) -> Option<usize> {
        self.phases
            .windows(2)
            .find(|w| w[1].mean < w[0].mean)
            .map(|w| w[1].from_cycle)
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes_per_cycle == 0 {
            return Err(Error::Config("episodes_per_cycle must be at least 1".into()));
        }
        if self.phases.is_empty() {
            return Err(Error::Config("schedule has no phases".into()));
        }
        if self.phases.windows(2).any(|w| w[1].from_cycle <= w[0].from_cycle) {
            return Err(Error::Config("phases must start at strictly increasing cycles".into()));
        }
        for p in &self.phases {
            if !p.mean.is_finite() || !(p.std_dev.is_finite() && p.std_dev >= 0.0) {
                return Err(Error::Config(format!("invalid phase {p:?}")));
            }
        }
        Ok(())
    }

    /// `(mean, std_dev)` for `cycle`.
    pub fn at(&self, cycle: usize) -> Result<(f64, f64)> {
        if self.horizon.is_some_and(|h| cycle >= h) {
            return Err(Error::Config(format!("schedule undefined for cycle {cycle}")));
        }
        self.phases
            .iter()
            .rev()
            .find(|p| p.from_cycle <= cycle)
            .map(|p| (p.mean, p.std_dev))
            .ok_or_else(|| Error::Config(format!("schedule undefined for cycle {cycle}")))
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedEnv {
    spec: ScriptedProcessSpec,
    noise: Option<f64>,
}

impl Environment for ScriptedEnv {
    fn reset(&mut self, rng: &mut RunRng) -> Result<Vec<f64>> {
        self.noise = Some(StandardNormal.sample(rng));
        Ok(vec![0.0])
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        let z = self
            .noise
            .take()
            .ok_or_else(|| Error::Contract("scripted env stepped outside an episode".into()))?;
        let &[cycle] = action else {
            return Err(Error::Contract("scripted env expects one action".into()));
        };
        if !(cycle >= 0.0 && cycle.fract() == 0.0) {
            return Err(Error::Contract(format!("action {cycle} is not a cycle index")));
        }
        let (mean, std_dev) = self.spec.at(cycle as usize)?;
        Ok(Step {
            observation: vec![0.0],
            reward: mean + std_dev * z,
            done: true,
        })
    }

    fn max_episode_steps(&self) -> usize {
        1
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedLearner {
    episodes_per_cycle: usize,
    episodes_trained: u64,
}

impl ScriptedLearner {
    pub fn episodes_trained(&self) -> u64 {
        self.episodes_trained
    }

    pub fn cycle(&self) -> u64 {
        self.episodes_trained / self.episodes_per_cycle as u64
    }
}

impl Learner for ScriptedLearner {
    fn act(&mut self, _observation: &[f64], _mode: ActionMode, _rng: &mut RunRng) -> Result<Vec<f64>> {
        Ok(vec![self.cycle() as f64])
    }

    fn train_on_episode(&mut self, _trajectory: &Trajectory) -> Result<()> {
        self.episodes_trained += 1;
        Ok(())
    }

    fn parameters(&self) -> ParameterVector {
        ParameterVector::new(vec![self.episodes_trained as f64]).expect("finite counter")
    }

    fn set_parameters(&mut self, params: &ParameterVector) -> Result<()> {
        match params.values() {
            &[v] if v >= 0.0 && v.fract() == 0.0 => {
                self.episodes_trained = v as u64;
                Ok(())
            }
            other => Err(Error::invalid(format!("scripted learner cannot load {other:?}"))),
        }
    }
}

pub fn scripted_pair(spec: ScriptedProcessSpec) -> Result<(ScriptedEnv, ScriptedLearner)> {
    spec.validate()?;
    let learner = ScriptedLearner {
        episodes_per_cycle: spec.episodes_per_cycle,
        episodes_trained: 0,
    };
    Ok((ScriptedEnv { spec, noise: None }, learner))
}
