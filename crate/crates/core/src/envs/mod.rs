//! Bundled episodic environments.

mod cartpole;
mod scripted;

pub use cartpole::{CartPole, CartPoleParams, CartPoleState};
pub use scripted::{scripted_pair, Phase, ScriptedEnv, ScriptedLearner, ScriptedProcessSpec};
