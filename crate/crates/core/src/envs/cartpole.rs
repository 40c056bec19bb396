//! Cart-pole with a continuous force input.
//!
//! Closed-form dynamics with semi-implicit Euler integration. The action is
//! a scalar clipped to `[-1, 1]` and scaled by `force_mag`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interface::{Environment, Step};
use crate::rng::RunRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Half the pole length (m).
    pub half_length: f64,
    pub force_mag: f64,
    pub dt: f64,
    pub x_threshold: f64,
    pub theta_threshold: f64,
    pub max_steps: usize,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            force_mag: 10.0,
            dt: 0.02,
            x_threshold: 2.4,
            theta_threshold: 12.0f64.to_radians(),
            max_steps: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn observation(&self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

#[derive(Debug, Clone)]
pub struct CartPole {
    params: CartPoleParams,
    state: CartPoleState,
    steps: usize,
    done: bool,
    started: bool,
}

impl CartPole {
    pub fn new(params: CartPoleParams) -> Self {
        Self {
            params,
            state: CartPoleState::default(),
            steps: 0,
            done: false,
            started: false,
        }
    }

    pub fn params(&self) -> &CartPoleParams {
        &self.params
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }

    /// Starts an episode from an explicit state.
    pub fn reset_to(&mut self, state: CartPoleState) -> Vec<f64> {
        self.state = state;
        self.steps = 0;
        self.done = false;
        self.started = true;
        state.observation()
    }

    /// One integration step of the dynamics, with `force` in newtons.
    pub fn integrate(params: &CartPoleParams, s: CartPoleState, force: f64) -> CartPoleState {
        let total_mass = params.cart_mass + params.pole_mass;
        let pole_mass_length = params.pole_mass * params.half_length;
        let (sin, cos) = s.theta.sin_cos();

        let temp = (force + pole_mass_length * s.theta_dot * s.theta_dot * sin) / total_mass;
        let theta_acc = (params.gravity * sin - cos * temp)
            / (params.half_length * (4.0 / 3.0 - params.pole_mass * cos * cos / total_mass));
        let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;

        let x_dot = s.x_dot + params.dt * x_acc;
        let theta_dot = s.theta_dot + params.dt * theta_acc;
        CartPoleState {
            x: s.x + params.dt * x_dot,
            x_dot,
            theta: s.theta + params.dt * theta_dot,
            theta_dot,
        }
    }

    fn out_of_bounds(&self) -> bool {
        self.state.x.abs() > self.params.x_threshold || self.state.theta.abs() > self.params.theta_threshold
    }
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new(CartPoleParams::default())
    }
}

impl Environment for CartPole {
    fn reset(&mut self, rng: &mut RunRng) -> Result<Vec<f64>> {
        let mut draw = || rng.random_range(-0.05..=0.05);
        let state = CartPoleState {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        };
        Ok(self.reset_to(state))
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        if !self.started {
            return Err(Error::Contract("cart-pole stepped before reset".into()));
        }
        if self.done {
            return Err(Error::Contract("cart-pole stepped after episode end".into()));
        }
        let &[a] = action else {
            return Err(Error::Contract(format!("cart-pole expects 1 action, got {}", action.len())));
        };
        if !a.is_finite() {
            return Err(Error::Contract(format!("non-finite action {a}")));
        }
        let force = self.params.force_mag * a.clamp(-1.0, 1.0);
        self.state = Self::integrate(&self.params, self.state, force);
        self.steps += 1;
        self.done = self.out_of_bounds() || self.steps >= self.params.max_steps;
        Ok(Step {
            observation: self.state.observation(),
            reward: 1.0,
            done: self.done,
        })
    }

    fn max_episode_steps(&self) -> usize {
        self.params.max_steps
    }
}
