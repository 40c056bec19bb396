use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctrlz_cli::config::{parse_list, ExperimentConfig, Settings};
use ctrlz_cli::error::CliError;
use ctrlz_cli::hist::DEFAULT_BINS;
use ctrlz_cli::output::{write_json, Phase};
use ctrlz_cli::{cmd_compare, cmd_hist, cmd_run, cmd_sweep, RunMode};
use ctrlz_core::Comparator;

#[derive(Parser)]
#[command(name = "ctrlz", version, about = "Checkpoint-and-revert training experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train with judging and reverting.
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Disable reverting (same as the `baseline` command).
        #[arg(long, conflicts_with = "with_baseline")]
        baseline: bool,
        /// Also run the never-revert arm into baseline_cycles.csv.
        #[arg(long)]
        with_baseline: bool,
    },
    /// Train without ever reverting.
    Baseline {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Run the seed batch at several thresholds.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Comma-separated thresholds.
        #[arg(long, default_value = "0,0.05,0.1,0.2,0.3,0.5")]
        thresholds: String,
    },
    /// Histograms and Gaussian fits of per-cycle returns.
    Hist {
        /// Per-episode CSV written by run/baseline/sweep.
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        run_id: String,
        /// Required when the CSV holds several thresholds for the run.
        #[arg(long)]
        threshold: Option<f64>,
        /// Comma-separated cycle numbers.
        #[arg(long)]
        cycles: String,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Histogram training returns instead of evaluation returns.
        #[arg(long)]
        train: bool,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score one file of returns against another.
    Compare {
        current: PathBuf,
        previous: PathBuf,
        #[arg(long, default_value = "mann_whitney")]
        comparator: String,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    comparator: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    /// Training episodes per cycle.
    #[arg(long)]
    train_episodes: Option<String>,
    /// Evaluation episodes per cycle.
    #[arg(long)]
    eval_episodes: Option<String>,
    /// Training-episode budget per run.
    #[arg(long)]
    total_episodes: Option<String>,
    #[arg(long)]
    eval_mode: Option<String>,
    #[arg(long)]
    checkpoint_capacity: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    log_std_init: Option<String>,
    #[arg(long)]
    rmsprop_decay: Option<String>,
    #[arg(long)]
    batch_episodes: Option<String>,
    #[arg(long)]
    revert_optimizer_state: bool,
    /// `a..b` (inclusive) or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    master_seed: Option<String>,
    /// Multiplier range `low,high` for hyperparameter perturbation.
    #[arg(long)]
    perturb: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    checkpoint_dir: Option<String>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut settings = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::new(),
        };
        settings.apply_env(|k| std::env::var(k).ok());

        let mut flags = Settings::new();
        let pairs = [
            ("env", &self.env),
            ("comparator", &self.comparator),
            ("threshold", &self.threshold),
            ("train_episodes", &self.train_episodes),
            ("eval_episodes", &self.eval_episodes),
            ("total_episodes", &self.total_episodes),
            ("eval_mode", &self.eval_mode),
            ("checkpoint_capacity", &self.checkpoint_capacity),
            ("lr", &self.lr),
            ("gamma", &self.gamma),
            ("hidden", &self.hidden),
            ("log_std_init", &self.log_std_init),
            ("rmsprop_decay", &self.rmsprop_decay),
            ("batch_episodes", &self.batch_episodes),
            ("seeds", &self.seeds),
            ("master_seed", &self.master_seed),
            ("perturb", &self.perturb),
            ("output", &self.out),
            ("checkpoint_dir", &self.checkpoint_dir),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v.clone());
            }
        }
        if self.revert_optimizer_state {
            flags.set("revert_optimizer_state", "true");
        }
        settings.merge(flags);
        ExperimentConfig::from_settings(&settings)
    }
}

fn print_runs(out: &ctrlz_cli::RunOutput) {
    for r in out.revert.iter().chain(&out.baseline) {
        let s = &r.summary;
        println!(
            "{:?} {} threshold={} mean_train_reward={:.3} mean_reward_with_eval={:.3} reverts={}",
            s.arm, s.run_id, s.threshold, s.mean_lifetime_train_reward, s.mean_lifetime_reward_with_eval, s.revert_count
        );
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            exp,
            baseline,
            with_baseline,
        } => {
            let config = exp.resolve()?;
            let mode = match (baseline, with_baseline) {
                (true, _) => RunMode::Baseline,
                (false, true) => RunMode::Both,
                (false, false) => RunMode::Revert,
            };
            print_runs(&cmd_run(&config, mode)?);
        }
        Command::Baseline { exp } => {
            let config = exp.resolve()?;
            print_runs(&cmd_run(&config, RunMode::Baseline)?);
        }
        Command::Sweep { exp, thresholds } => {
            let config = exp.resolve()?;
            let thresholds: Vec<f64> = parse_list(&thresholds)?;
            for row in cmd_sweep(&config, &thresholds)? {
                println!(
                    "threshold={} mean_reward={:.3} std={:.3} revert_rate={:.4}",
                    row.threshold, row.mean_reward, row.std_reward, row.revert_rate
                );
            }
        }
        Command::Hist {
            csv,
            run_id,
            threshold,
            cycles,
            bins,
            train,
            out,
        } => {
            let cycles: Vec<usize> = parse_list(&cycles)?;
            let phase = if train { Phase::Train } else { Phase::Eval };
            let report = cmd_hist(&csv, &run_id, threshold, &cycles, bins, phase)?;
            match out {
                Some(path) => write_json(&path, &report)?,
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(|e| CliError::runtime(e.to_string()))?
                ),
            }
        }
        Command::Compare {
            current,
            previous,
            comparator,
        } => {
            let comparator: Comparator = comparator.parse().map_err(|e: ctrlz_core::Error| CliError::invalid(e.to_string()))?;
            println!("{}", cmd_compare(&current, &previous, comparator)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
