//! RMSProp without momentum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            decay: 0.99,
            epsilon: 1e-8,
        }
    }
}

impl RmsPropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be >= 0", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(Error::Config(format!("rmsprop decay {} outside [0, 1)", self.decay)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("rmsprop epsilon {} must be > 0", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    config: RmsPropConfig,
    accumulators: Vec<f64>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig, len: usize) -> Self {
        Self {
            config,
            accumulators: vec![0.0; len],
        }
    }

    pub fn config(&self) -> &RmsPropConfig {
        &self.config
    }

    pub fn accumulators(&self) -> &[f64] {
        &self.accumulators
    }

    pub fn set_accumulators(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.accumulators.len() {
            return Err(Error::invalid("optimizer state has wrong length"));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("optimizer accumulators must be non-negative"));
        }
        self.accumulators.copy_from_slice(values);
        Ok(())
    }

    /// Gradient ascent: `p += lr * g / (sqrt(acc) + eps)`.
    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.accumulators.len());
        let RmsPropConfig {
            learning_rate,
            decay,
            epsilon,
        } = self.config;
        for ((p, g), acc) in params.iter_mut().zip(grad).zip(&mut self.accumulators) {
            *acc = decay * *acc + (1.0 - decay) * g * g;
            *p += learning_rate * g / (acc.sqrt() + epsilon);
        }
    }
}
