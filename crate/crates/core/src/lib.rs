//! Checkpoint-and-revert training stabilization.
//!
//! A learner is trained in cycles; after each cycle its frozen policy is
//! evaluated and compared with every stored checkpoint. When the comparison
//! rejects the hypothesis that the learner is still improving, its
//! parameters are rolled back to the checkpoint with the widest margin.
//!
//! * [`stats`]: improvement scores between two sets of episode returns.
//! * [`checkpoint`]: checkpoint history, revert-target selection, files.
//! * [`harness`]: the train / evaluate / judge / revert loop.
//! * [`learner`]: baseline-free REINFORCE with a small Gaussian MLP policy.
//! * [`envs`]: continuous cart-pole and a scripted process for tests.

pub mod checkpoint;
pub mod envs;
pub mod error;
pub mod harness;
pub mod interface;
pub mod learner;
pub mod rng;
pub mod stats;

pub use checkpoint::{Checkpoint, CheckpointId, CheckpointStore, ComparisonVerdict, ParameterVector};
pub use error::{Error, Result};
pub use harness::{run_baseline, run_training, Arm, CycleRecord, ScheduleConfig};
pub use interface::{ActionMode, Environment, Learner, Step, Trajectory};
pub use stats::{Comparator, GaussianSummary, ImprovementScore, RewardSamples};
