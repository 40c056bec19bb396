//! Baseline-free REINFORCE with a diagonal Gaussian policy.

mod network;
mod rmsprop;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::checkpoint::ParameterVector;
use crate::error::{Error, Result};
use crate::interface::{ActionMode, Learner, Trajectory};
use crate::rng::RunRng;

pub use network::PolicyNetwork;
pub use rmsprop::{RmsProp, RmsPropConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinforceConfig {
    pub hidden_sizes: Vec<usize>,
    pub gamma: f64,
    pub log_std_init: f64,
    pub optimizer: RmsPropConfig,
    /// Episodes per gradient update.
    pub batch_episodes: usize,
    /// Carry RMSProp accumulators in the parameter vector so a revert also
    /// restores them.
    pub revert_optimizer_state: bool,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![32, 32],
            gamma: 0.95,
            log_std_init: 0.0,
            optimizer: RmsPropConfig::default(),
            batch_episodes: 1,
            revert_optimizer_state: false,
        }
    }
}

impl ReinforceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("discount {} outside (0, 1]", self.gamma)));
        }
        if !self.log_std_init.is_finite() {
            return Err(Error::Config("log_std_init must be finite".into()));
        }
        if self.batch_episodes == 0 {
            return Err(Error::Config("batch_episodes must be at least 1".into()));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::Config("hidden layers must be non-empty".into()));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone)]
pub struct ReinforceLearner {
    config: ReinforceConfig,
    network: PolicyNetwork,
    optimizer: RmsProp,
    pending: Vec<Trajectory>,
}

impl ReinforceLearner {
    pub fn new(config: ReinforceConfig, observation_dim: usize, action_dim: usize, init_rng: &mut RunRng) -> Result<Self> {
        config.validate()?;
        let mut sizes = vec![observation_dim];
        sizes.extend(&config.hidden_sizes);
        sizes.push(action_dim);
        let network = PolicyNetwork::new(&sizes, config.log_std_init, init_rng)?;
        let optimizer = RmsProp::new(config.optimizer, network.params().len());
        Ok(Self {
            config,
            network,
            optimizer,
            pending: Vec::new(),
        })
    }

    pub fn config(&self) -> &ReinforceConfig {
        &self.config
    }

    pub fn network(&self) -> &PolicyNetwork {
        &self.network
    }

    pub fn network_mut(&mut self) -> &mut PolicyNetwork {
        &mut self.network
    }

    pub fn optimizer(&self) -> &RmsProp {
        &self.optimizer
    }

    /// Monte-Carlo policy gradient `sum_t grad log pi(a_t|s_t) * G_t`,
    /// averaged over trajectories. No baseline, no return normalization.
    pub fn policy_gradient(&self, trajectories: &[Trajectory]) -> Result<Vec<f64>> {
        if trajectories.is_empty() {
            return Err(Error::invalid("policy gradient needs at least one trajectory"));
        }
        let mut grad = vec![0.0; self.network.params().len()];
        let weight = 1.0 / trajectories.len() as f64;
        for traj in trajectories {
            if traj.is_empty() {
                return Err(Error::invalid("empty trajectory"));
            }
            let returns = traj.discounted_returns(self.config.gamma);
            for (step, g) in traj.steps.iter().zip(returns) {
                if g == 0.0 {
                    continue;
                }
                self.network
                    .accumulate_log_prob_grad(&step.observation, &step.action, weight * g, &mut grad)?;
            }
        }
        Ok(grad)
    }

    /// One RMSProp ascent step on the policy gradient of `trajectories`.
    pub fn reinforce_update(&mut self, trajectories: &[Trajectory]) -> Result<()> {
        let grad = self.policy_gradient(trajectories)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidState("policy gradient is not finite".into()));
        }
        self.optimizer.ascend(self.network.params_mut(), &grad);
        if self.network.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidState("parameters diverged".into()));
        }
        Ok(())
    }
}

impl Learner for ReinforceLearner {
    /// The raw Gaussian sample; the environment clips it to its bounds, so
    /// the log-probability used for learning is that of the sampled action.
    fn act(&mut self, observation: &[f64], mode: ActionMode, rng: &mut RunRng) -> Result<Vec<f64>> {
        let mut action = self.network.mean_action(observation)?;
        if mode == ActionMode::Stochastic {
            for (a, log_std) in action.iter_mut().zip(self.network.log_std()) {
                let z: f64 = StandardNormal.sample(rng);
                *a += log_std.exp() * z;
            }
        }
        Ok(action)
    }

    fn train_on_episode(&mut self, trajectory: &Trajectory) -> Result<()> {
        self.pending.push(trajectory.clone());
        if self.pending.len() >= self.config.batch_episodes {
            let batch = std::mem::take(&mut self.pending);
            self.reinforce_update(&batch)?;
        }
        Ok(())
    }

    fn parameters(&self) -> ParameterVector {
        let params = ParameterVector::new(self.network.params().to_vec()).expect("parameters are finite");
        if self.config.revert_optimizer_state {
            params
                .with_optimizer_state(self.optimizer.accumulators().to_vec())
                .expect("accumulators are finite")
        } else {
            params
        }
    }

    /// Loads network parameters, plus optimizer accumulators when present
    /// and enabled. Any partially collected batch is discarded.
    fn set_parameters(&mut self, params: &ParameterVector) -> Result<()> {
        self.network.set_params(params.values())?;
        if self.config.revert_optimizer_state {
            if let Some(state) = params.optimizer_state() {
                self.optimizer.set_accumulators(state)?;
            }
        }
        self.pending.clear();
        Ok(())
    }
}
