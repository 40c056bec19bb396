//! Experiment configuration.
//!
//! Settings are flat `key = value` pairs. They come from an optional config
//! file, then the `CTRLZ_SEED` environment variable (master seed only), then
//! command-line flags; later sources win. Recognised keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `env` | `cartpole` or `scripted` | `cartpole` |
//! | `comparator` | `mann_whitney`, `gaussian`, `mean` | `mann_whitney` |
//! | `threshold` | revert threshold in `[0, 1]` | `0.1` |
//! | `train_episodes` | training episodes per cycle | `30` |
//! | `eval_episodes` | evaluation episodes per cycle | `20` |
//! | `total_episodes` | training-episode budget | `600` |
//! | `eval_mode` | `stochastic` or `deterministic` | `stochastic` |
//! | `checkpoint_capacity` | max stored checkpoints, `0` = unbounded | `0` |
//! | `lr` | RMSProp learning rate | `0.001` |
//! | `gamma` | discount | `0.95` |
//! | `hidden` | comma-separated hidden layer widths | `32,32` |
//! | `log_std_init` | initial policy log std | `0` |
//! | `rmsprop_decay` | accumulator decay | `0.99` |
//! | `rmsprop_epsilon` | denominator epsilon | `1e-8` |
//! | `batch_episodes` | episodes per gradient step | `1` |
//! | `revert_optimizer_state` | also roll back RMSProp state | `false` |
//! | `gravity`, `cart_mass`, `pole_mass`, `half_length`, `force_mag`, `dt`, `max_steps` | cart-pole constants | classic values |
//! | `scripted_degrade_cycle` | cycle at which the scripted process degrades | `4` |
//! | `scripted_before_mean`, `scripted_before_std` | returns before degradation | `10`, `0.1` |
//! | `scripted_after_mean`, `scripted_after_std` | returns after degradation | `0`, `0.1` |
//! | `seeds` | `a..b` (inclusive) or a comma list | `0` |
//! | `master_seed` | seed for hyperparameter perturbation | `0` |
//! | `perturb` | `low,high` multiplier range | none |
//! | `output` | output directory | `ctrlz-out` |
//! | `checkpoint_dir` | write checkpoint files here | none |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ctrlz_core::envs::{CartPoleParams, ScriptedProcessSpec};
use ctrlz_core::learner::ReinforceConfig;
use ctrlz_core::{ActionMode, Comparator, ScheduleConfig};
use serde::Serialize;

use crate::error::CliError;

pub const SEED_ENV: &str = "CTRLZ_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScriptedSettings {
    pub degrade_cycle: usize,
    pub before: (f64, f64),
    pub after: (f64, f64),
}

impl ScriptedSettings {
    pub fn spec(&self, episodes_per_cycle: usize) -> ScriptedProcessSpec {
        ScriptedProcessSpec::degrading(episodes_per_cycle, self.degrade_cycle, self.before, self.after)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EnvChoice {
    Cartpole(CartPoleParams),
    Scripted(ScriptedSettings),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub schedule: ScheduleConfig,
    pub learner: ReinforceConfig,
    pub env: EnvChoice,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub perturbation: Option<(f64, f64)>,
    #[serde(skip)]
    pub output: PathBuf,
    #[serde(skip)]
    pub checkpoint_dir: Option<PathBuf>,
}

/// Raw `key = value` settings, in increasing precedence as they are merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn parse_text(text: &str) -> Result<Self, CliError> {
        let mut out = Self::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::invalid(format!("line {}: expected key = value", n + 1)))?;
            out.set(k.trim(), v.trim());
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    pub fn merge(&mut self, other: Settings) {
        self.0.extend(other.0);
    }

    /// Applies `CTRLZ_SEED` from `lookup` when present.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(seed) = lookup(SEED_ENV) {
            self.set("master_seed", seed);
        }
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|e| CliError::invalid(format!("bad value for `{key}` ({raw}): {e}"))),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "env",
    "comparator",
    "threshold",
    "train_episodes",
    "eval_episodes",
    "total_episodes",
    "eval_mode",
    "checkpoint_capacity",
    "lr",
    "gamma",
    "hidden",
    "log_std_init",
    "rmsprop_decay",
    "rmsprop_epsilon",
    "batch_episodes",
    "revert_optimizer_state",
    "gravity",
    "cart_mass",
    "pole_mass",
    "half_length",
    "force_mag",
    "dt",
    "max_steps",
    "scripted_degrade_cycle",
    "scripted_before_mean",
    "scripted_before_std",
    "scripted_after_mean",
    "scripted_after_std",
    "seeds",
    "master_seed",
    "perturb",
    "output",
    "checkpoint_dir",
];

/// `a..b` and `a..=b` are both inclusive; otherwise a comma list.
pub fn parse_seeds(raw: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::invalid(format!("bad seed list `{raw}`"));
    if let Some((lo, hi)) = raw.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    let seeds = parse_list::<u64>(raw).map_err(|_| bad())?;
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

pub fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::invalid(format!("bad list item `{s}`"))))
        .collect()
}

fn parse_mode(raw: &str) -> Result<ActionMode, CliError> {
    match raw {
        "stochastic" => Ok(ActionMode::Stochastic),
        "deterministic" => Ok(ActionMode::Deterministic),
        other => Err(CliError::invalid(format!("unknown eval_mode `{other}`"))),
    }
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        if let Some(unknown) = s.0.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::invalid(format!("unknown config key `{unknown}`")));
        }

        let sched_default = ScheduleConfig::default();
        let capacity: usize = s.parsed("checkpoint_capacity", 0)?;
        let schedule = ScheduleConfig {
            train_episodes_per_cycle: s.parsed("train_episodes", sched_default.train_episodes_per_cycle)?,
            eval_episodes: s.parsed("eval_episodes", sched_default.eval_episodes)?,
            threshold: s.parsed("threshold", sched_default.threshold)?,
            comparator: match s.get("comparator") {
                Some(c) => c.parse::<Comparator>().map_err(|e| CliError::invalid(e.to_string()))?,
                None => sched_default.comparator,
            },
            total_train_episodes: s.parsed("total_episodes", sched_default.total_train_episodes)?,
            eval_mode: s.get("eval_mode").map(parse_mode).transpose()?.unwrap_or_default(),
            checkpoint_capacity: (capacity > 0).then_some(capacity),
        };

        let mut learner = ReinforceConfig::default();
        learner.optimizer.learning_rate = s.parsed("lr", learner.optimizer.learning_rate)?;
        learner.optimizer.decay = s.parsed("rmsprop_decay", learner.optimizer.decay)?;
        learner.optimizer.epsilon = s.parsed("rmsprop_epsilon", learner.optimizer.epsilon)?;
        learner.gamma = s.parsed("gamma", learner.gamma)?;
        learner.log_std_init = s.parsed("log_std_init", learner.log_std_init)?;
        learner.batch_episodes = s.parsed("batch_episodes", learner.batch_episodes)?;
        learner.revert_optimizer_state = s.parsed("revert_optimizer_state", learner.revert_optimizer_state)?;
        if let Some(h) = s.get("hidden") {
            learner.hidden_sizes = parse_list(h)?;
        }

        let env = match s.get("env").unwrap_or("cartpole") {
            "cartpole" => {
                let d = CartPoleParams::default();
                EnvChoice::Cartpole(CartPoleParams {
                    gravity: s.parsed("gravity", d.gravity)?,
                    cart_mass: s.parsed("cart_mass", d.cart_mass)?,
                    pole_mass: s.parsed("pole_mass", d.pole_mass)?,
                    half_length: s.parsed("half_length", d.half_length)?,
                    force_mag: s.parsed("force_mag", d.force_mag)?,
                    dt: s.parsed("dt", d.dt)?,
                    max_steps: s.parsed("max_steps", d.max_steps)?,
                    ..d
                })
            }
            "scripted" => EnvChoice::Scripted(ScriptedSettings {
                degrade_cycle: s.parsed("scripted_degrade_cycle", 4)?,
                before: (
                    s.parsed("scripted_before_mean", 10.0)?,
                    s.parsed("scripted_before_std", 0.1)?,
                ),
                after: (
                    s.parsed("scripted_after_mean", 0.0)?,
                    s.parsed("scripted_after_std", 0.1)?,
                ),
            }),
            other => return Err(CliError::invalid(format!("unknown env `{other}`"))),
        };

        let perturbation = match s.get("perturb") {
            None => None,
            Some(raw) => match parse_list::<f64>(raw)?.as_slice() {
                &[lo, hi] => Some((lo, hi)),
                _ => return Err(CliError::invalid("perturb expects `low,high`")),
            },
        };

        let config = Self {
            schedule,
            learner,
            env,
            seeds: parse_seeds(s.get("seeds").unwrap_or("0"))?,
            master_seed: s.parsed("master_seed", 0)?,
            perturbation,
            output: PathBuf::from(s.get("output").unwrap_or("ctrlz-out")),
            checkpoint_dir: s.get("checkpoint_dir").map(PathBuf::from),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.schedule.validate().map_err(|e| CliError::invalid(e.to_string()))?;
        self.learner.validate().map_err(|e| CliError::invalid(e.to_string()))?;
        if let Some((lo, hi)) = self.perturbation {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(CliError::invalid(format!("perturbation range ({lo}, {hi}) needs 0 < low <= high")));
            }
        }
        if let EnvChoice::Cartpole(p) = &self.env {
            let positive = [p.cart_mass, p.pole_mass, p.half_length, p.dt];
            if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || p.max_steps == 0 || !p.gravity.is_finite() {
                return Err(CliError::invalid("cart-pole constants must be positive and finite"));
            }
        }
        if self.seeds.is_empty() {
            return Err(CliError::invalid("no seeds"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_inclusive_range() {
        assert_eq!(parse_seeds("0..19").unwrap().len(), 20);
        assert_eq!(parse_seeds("3..=5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_seeds("4, 1,9").unwrap(), vec![4, 1, 9]);
        assert!(parse_seeds("5..2").is_err());
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("").is_err());
    }

    #[test]
    fn file_text_with_comments() {
        let s = Settings::parse_text("# header\nthreshold = 0.2  # tuned\n\nlr=0.002\n").unwrap();
        assert_eq!(s.get("threshold"), Some("0.2"));
        assert_eq!(s.get("lr"), Some("0.002"));
        assert!(Settings::parse_text("oops").is_err());
    }

    #[test]
    fn precedence_file_env_flag() {
        let mut s = Settings::parse_text("master_seed = 1\nthreshold = 0.3").unwrap();
        s.apply_env(|k| (k == SEED_ENV).then(|| "7".to_string()));
        assert_eq!(s.get("master_seed"), Some("7"));
        let mut flags = Settings::new();
        flags.set("threshold", "0.05");
        s.merge(flags);
        let cfg = ExperimentConfig::from_settings(&s).unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.schedule.threshold, 0.05);
    }

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_settings(&Settings::new()).unwrap();
        assert_eq!(cfg.schedule.train_episodes_per_cycle, 30);
        assert_eq!(cfg.schedule.eval_episodes, 20);
        assert_eq!(cfg.schedule.threshold, 0.1);
        assert_eq!(cfg.learner.gamma, 0.95);
        assert_eq!(cfg.learner.hidden_sizes, vec![32, 32]);
        assert_eq!(cfg.seeds, vec![0]);
        assert!(matches!(cfg.env, EnvChoice::Cartpole(_)));
    }

    #[test]
    fn rejects_bad_values() {
        for (k, v) in [
            ("threshold", "2"),
            ("comparator", "t_test"),
            ("perturb", "1.5,0.5"),
            ("perturb", "0,1"),
            ("env", "pendulum"),
            ("eval_mode", "greedy"),
            ("bogus", "1"),
            ("lr", "fast"),
            ("dt", "0"),
        ] {
            let mut s = Settings::new();
            s.set(k, v);
            assert!(ExperimentConfig::from_settings(&s).is_err(), "{k}={v}");
        }
    }
}
