//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or configuration error.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::adapter_loop::{export_sft_jsonl, parse_sft_jsonl, SftDataset};
use crate::config::{Ablation, ConfigError, RunConfig};
use crate::evalkit::{self, EvalError};
use crate::orchestrator::{self, RunError};
use crate::policy::{load_checkpoint, CheckpointError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "adarefiner", version, about = "Language-guided PPO on a survival grid world")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the training loop and write a run directory.
    Train {
        /// TOML config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Total environment steps.
        #[arg(long)]
        steps: Option<u64>,
        /// Run directory. Must not exist or be empty.
        #[arg(long)]
        out: PathBuf,
        /// Replaces the config's ablation list. Repeatable.
        #[arg(long = "ablation", value_name = "NAME")]
        ablations: Vec<Ablation>,
    },
    /// Evaluate a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Defaults to the run's config-resolved.toml when the checkpoint sits
        /// in a run directory.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<u64>,
        /// Defaults to eval-report.json next to the checkpoint.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Copy a run's SFT pairs to a JSONL file.
    ExportSft {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the plotting CSVs for a run.
    PlotData {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Display) -> Self {
        CliError { code: EXIT_USAGE, message: message.to_string() }
    }

    fn runtime(message: impl Display) -> Self {
        CliError { code: EXIT_RUNTIME, message: message.to_string() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::usage(e)
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::usage(e)
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(e) => e.into(),
            RunError::Invalid(_) => CliError::usage(e),
            RunError::Checkpoint(e) => e.into(),
            other => CliError::runtime(other),
        }
    }
}

fn missing_artifact(e: EvalError) -> CliError {
    match e {
        EvalError::Io { .. } | EvalError::Parse { .. } | EvalError::Missing(_) => CliError::usage(e),
        other => CliError::runtime(other),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

/// Applies command-line overrides on top of the file values.
pub fn apply_overrides(config: &mut RunConfig, seed: Option<u64>, steps: Option<u64>, ablations: &[Ablation]) {
    if let Some(s) = seed {
        config.run.seed = s;
    }
    if let Some(n) = steps {
        config.run.total_steps = n;
    }
    if !ablations.is_empty() {
        let mut list = ablations.to_vec();
        list.sort();
        list.dedup();
        config.run.ablations = list;
    }
}

fn ensure_fresh_dir(dir: &Path) -> Result<(), CliError> {
    match std::fs::read_dir(dir) {
        Ok(mut entries) => {
            if entries.next().is_some() {
                return Err(CliError::usage(format!("{}: run directory is not empty", dir.display())));
            }
            Ok(())
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(CliError::usage(format!("{}: {e}", dir.display()))),
    }
}

fn cmd_train(
    config: Option<&Path>,
    seed: Option<u64>,
    steps: Option<u64>,
    out: &Path,
    ablations: &[Ablation],
) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    apply_overrides(&mut cfg, seed, steps, ablations);
    cfg.validate()?;
    ensure_fresh_dir(out)?;
    log::info!("training {} steps, seed {}, into {}", cfg.run.total_steps, cfg.run.seed, out.display());
    let outcome = orchestrator::train(&cfg, Some(out)).map_err(|e| match CliError::from(e) {
        CliError { code: EXIT_RUNTIME, message } => CliError::runtime(format!("training aborted: {message}")),
        other => other,
    })?;
    let c = &outcome.counters;
    println!(
        "trained {} steps: {} episodes, {} generations, {} SFT pairs, {} PPO updates",
        cfg.run.total_steps, c.episodes, c.generations, c.sft_pairs, c.ppo_updates
    );
    if let Some(r) = &outcome.report {
        println!("score {:.3} reward {:.3} over {} episodes", r.score, r.mean_reward, r.episodes);
    }
    Ok(())
}

fn cmd_eval(checkpoint: &Path, config: Option<&Path>, episodes: Option<u64>, report: Option<&Path>) -> Result<(), CliError> {
    let (params, header) = load_checkpoint(checkpoint)?;
    let run_config = checkpoint.parent().and_then(Path::parent).map(|d| d.join("config-resolved.toml"));
    let cfg = match (config, run_config) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(p)) if p.is_file() => RunConfig::load(&p)?,
        _ => RunConfig::default(),
    };
    let episodes = episodes.unwrap_or(cfg.eval.episodes);
    if episodes == 0 {
        return Err(CliError::usage("--episodes must be at least 1"));
    }
    let r = evalkit::evaluate(&params, Some(&header), &cfg, episodes)?;
    let path = report.map(Path::to_path_buf).unwrap_or_else(|| checkpoint.with_file_name("eval-report.json"));
    let json = serde_json::to_string_pretty(&r).expect("report serializes");
    std::fs::write(&path, json).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    println!(
        "score {:.3} reward {:.3} (std {:.3}) over {} episodes -> {}",
        r.score,
        r.mean_reward,
        r.reward_std,
        r.episodes,
        path.display()
    );
    Ok(())
}

fn cmd_export_sft(run: &Path, out: &Path) -> Result<(), CliError> {
    let source = run.join("sft.jsonl");
    if !source.is_file() {
        return Err(CliError::usage(format!("{}: missing run artifact", source.display())));
    }
    let pairs = parse_sft_jsonl(&source).map_err(CliError::usage)?;
    let n = pairs.len();
    export_sft_jsonl(&SftDataset::from_pairs(pairs), out).map_err(CliError::runtime)?;
    println!("exported {n} pairs to {}", out.display());
    Ok(())
}

fn cmd_plot_data(run: &Path, out: &Path) -> Result<(), CliError> {
    let steps = run.join("steps.csv");
    if !steps.is_file() {
        return Err(CliError::usage(format!("{}: missing run artifact", steps.display())));
    }
    let written = evalkit::emit_curves(run, out).map_err(missing_artifact)?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, seed, steps, out, ablations } => {
            cmd_train(config.as_deref(), seed, steps, &out, &ablations)
        }
        Command::Eval { checkpoint, config, episodes, report } => {
            cmd_eval(&checkpoint, config.as_deref(), episodes, report.as_deref())
        }
        Command::ExportSft { run, out } => cmd_export_sft(&run, &out),
        Command::PlotData { run, out } => cmd_plot_data(&run, &out),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_over_file_values() {
        let mut c = RunConfig::from_toml_str("[loop]\nseed = 1\ntotal_steps = 50\nablations = [\"no_adapter\"]\n").unwrap();
        apply_overrides(&mut c, Some(9), Some(70), &[Ablation::NoLlm, Ablation::NoLScore, Ablation::NoLlm]);
        assert_eq!(c.run.seed, 9);
        assert_eq!(c.run.total_steps, 70);
        assert_eq!(c.run.ablations, vec![Ablation::NoLScore, Ablation::NoLlm]);
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn no_overrides_keep_file_values() {
        let mut c = RunConfig::from_toml_str("[loop]\nseed = 1\nablations = [\"no_adapter\"]\n").unwrap();
        apply_overrides(&mut c, None, None, &[]);
        assert_eq!(c.run.seed, 1);
        assert_eq!(c.run.ablations, vec![Ablation::NoAdapter]);
    }

    #[test]
    fn eval_defaults_to_config_episode_count() {
        let cli = Cli::try_parse_from(["adarefiner", "eval", "--checkpoint", "x.ckpt"]).unwrap();
        match cli.command {
            Command::Eval { episodes, .. } => assert_eq!(episodes, None),
            _ => unreachable!(),
        }
        assert_eq!(RunConfig::default().eval.episodes, 500);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["adarefiner", "train"]), EXIT_USAGE);
        assert_eq!(run(["adarefiner", "train", "--out", "x", "--ablation", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["adarefiner", "frobnicate"]), EXIT_USAGE);
    }
}
