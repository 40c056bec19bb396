//! Fully-connected Gaussian policy with hand-written backprop.
//!
//! Parameters live in one flat vector, layer-major: for each layer the
//! weight matrix (row-major, `outputs x inputs`) then its biases, and the
//! per-action `log_std` last. Hidden layers use `tanh`; the output layer is
//! linear and gives the action mean.

use rand::Rng;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNetwork {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct LayerSlice {
    inputs: usize,
    outputs: usize,
    weights: usize,
    biases: usize,
}

impl PolicyNetwork {
    /// `sizes` is `[observation_dim, hidden..., action_dim]`. Weights start
    /// uniform in `+-1/sqrt(fan_in)`, biases at zero, `log_std` at
    /// `log_std_init`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], log_std_init: f64, rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid(format!("bad layer sizes {sizes:?}")));
        }
        let mut net = Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; Self::param_count(sizes)],
        };
        for layer in net.layers() {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in &mut net.params[layer.weights..layer.biases] {
                *w = rng.random_range(-bound..=bound);
            }
        }
        let log_std_at = net.log_std_offset();
        net.params[log_std_at..].fill(log_std_init);
        Ok(net)
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        let layers: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        layers + sizes.last().copied().unwrap_or(0)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn action_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.params.len() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                values.len()
            )));
        }
        self.params.copy_from_slice(values);
        Ok(())
    }

    pub fn log_std(&self) -> &[f64] {
        &self.params[self.log_std_offset()..]
    }

    fn log_std_offset(&self) -> usize {
        self.params.len() - self.action_dim()
    }

    fn layers(&self) -> Vec<LayerSlice> {
        let mut offset = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let layer = LayerSlice {
                    inputs: w[0],
                    outputs: w[1],
                    weights: offset,
                    biases: offset + w[0] * w[1],
                };
                offset = layer.biases + w[1];
                layer
            })
            .collect()
    }

    fn check_input(&self, observation: &[f64]) -> Result<()> {
        if observation.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "observation has {} dims, network expects {}",
                observation.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Activations of every layer, input first, action mean last.
    fn activations(&self, observation: &[f64]) -> Vec<Vec<f64>> {
        let layers = self.layers();
        let mut acts = Vec::with_capacity(layers.len() + 1);
        acts.push(observation.to_vec());
        for (k, layer) in layers.iter().enumerate() {
            let input = &acts[k];
            let w = &self.params[layer.weights..layer.biases];
            let b = &self.params[layer.biases..layer.biases + layer.outputs];
            let hidden = k + 1 < layers.len();
            let out: Vec<f64> = (0..layer.outputs)
                .map(|o| {
                    let row = &w[o * layer.inputs..(o + 1) * layer.inputs];
                    let z = b[o] + row.iter().zip(input).map(|(wi, xi)| wi * xi).sum::<f64>();
                    if hidden {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn mean_action(&self, observation: &[f64]) -> Result<Vec<f64>> {
        self.check_input(observation)?;
        Ok(self.activations(observation).pop().unwrap())
    }

    pub fn log_prob(&self, observation: &[f64], action: &[f64]) -> Result<f64> {
        let mean = self.mean_action(observation)?;
        self.check_action(action)?;
        Ok(gaussian_log_prob(&mean, self.log_std(), action))
    }

    fn check_action(&self, action: &[f64]) -> Result<()> {
        if action.len() != self.action_dim() {
            return Err(Error::invalid(format!(
                "action has {} dims, policy emits {}",
                action.len(),
                self.action_dim()
            )));
        }
        Ok(())
    }

    /// Adds `scale * d log pi(action | observation) / d params` into `grad`
    /// and returns the log-probability.
    pub fn accumulate_log_prob_grad(
        &self,
        observation: &[f64],
        action: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_input(observation)?;
        self.check_action(action)?;
        if grad.len() != self.params.len() {
            return Err(Error::invalid("gradient buffer has wrong length"));
        }
        let acts = self.activations(observation);
        let mean = acts.last().unwrap();
        let log_std_at = self.log_std_offset();

        let mut delta: Vec<f64> = Vec::with_capacity(mean.len());
        for d in 0..mean.len() {
            let log_std = self.params[log_std_at + d];
            let inv_var = (-2.0 * log_std).exp();
            let diff = action[d] - mean[d];
            delta.push(scale * diff * inv_var);
            grad[log_std_at + d] += scale * (diff * diff * inv_var - 1.0);
        }

        let layers = self.layers();
        for (k, layer) in layers.iter().enumerate().rev() {
            let input = &acts[k];
            for o in 0..layer.outputs {
                let row = layer.weights + o * layer.inputs;
                for i in 0..layer.inputs {
                    grad[row + i] += delta[o] * input[i];
                }
                grad[layer.biases + o] += delta[o];
            }
            if k == 0 {
                break;
            }
            // input[i] is the tanh output of the previous layer
            delta = (0..layer.inputs)
                .map(|i| {
                    let back: f64 = (0..layer.outputs)
                        .map(|o| self.params[layer.weights + o * layer.inputs + i] * delta[o])
                        .sum();
                    back * (1.0 - input[i] * input[i])
                })
                .collect();
        }

        Ok(gaussian_log_prob(mean, self.log_std(), action))
    }
}

fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - 0.5 * LN_2PI
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    fn net() -> PolicyNetwork {
        PolicyNetwork::new(&[4, 32, 32, 1], 0.0, &mut substream(1, Stream::Init)).unwrap()
    }

    #[test]
    fn parameter_count() {
        // 4*32+32 + 32*32+32 + 32*1+1 + 1
        assert_eq!(net().params().len(), 160 + 1056 + 33 + 1);
    }

    #[test]
    fn init_bounds() {
        let n = net();
        let bound = 0.5; // 1/sqrt(4)
        assert!(n.params()[..128].iter().all(|w| w.abs() <= bound));
        assert!(n.params()[128..160].iter().all(|b| *b == 0.0));
        assert_eq!(n.log_std(), &[0.0]);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut n = net();
        n.params_mut().fill(0.0);
        assert_eq!(n.mean_action(&[0.3, -1.0, 2.0, 0.1]).unwrap(), vec![0.0]);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let n = net();
        assert!(n.mean_action(&[0.0; 3]).is_err());
        assert!(n.log_prob(&[0.0; 4], &[0.0, 0.0]).is_err());
        let mut m = net();
        assert!(m.set_params(&[0.0; 5]).is_err());
        assert!(PolicyNetwork::new(&[4], 0.0, &mut substream(0, Stream::Init)).is_err());
    }

    #[test]
    fn log_prob_matches_closed_form() {
        let mut n = net();
        let obs = [0.1, 0.2, -0.3, 0.4];
        let mean = n.mean_action(&obs).unwrap()[0];
        let at = n.params().len() - 1;
        n.params_mut()[at] = 0.5f64.ln();
        let lp = n.log_prob(&obs, &[mean + 1.0]).unwrap();
        // N(mean, 0.5) density at distance 1
        let expected = -0.5 * 4.0 - 0.5f64.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((lp - expected).abs() < 1e-12);
    }
}
