use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use emstree_core::env::write_trace_csv;
use emstree_core::trainer::{
    with_workers, ConfigError, EnvironmentKind, Experiment, ExperimentConfig, TrainedEms, Validation,
    ValidationLabel,
};
use emstree_core::tree::{ensemble_to_dot, ensemble_to_json};

const EXIT_CONFIG: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(name = "emstree", version, about = "Train, validate and export decision-tree energy management controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run restarted CMA-ES training, prune the winner and validate it.
    Train {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Master seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: available cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Evaluate a trained controller on the validation episodes.
    Validate {
        ems: PathBuf,
        config: PathBuf,
        /// Grid validation seeds, e.g. `0..9` (inclusive) or `1,4,7`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write the controller as Graphviz DOT or tree JSON.
    Export {
        ems: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a reference policy with the validation protocol.
    Baseline {
        #[arg(value_enum)]
        name: BaselineName,
        config: PathBuf,
        #[arg(long)]
        seeds: Option<String>,
        /// Seed of the random baseline; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineName {
    Random,
    Thermostat,
}

/// Failure classes with distinct exit codes.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config: &'a Path,
    out: &'a Path,
    tool_version: &'static str,
    seed: u64,
    workers: usize,
    started_unix: u64,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<Experiment, Failure> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| match e {
        ConfigError::Io { .. } => Failure::Config(anyhow::Error::new(e)),
        other => Failure::Config(anyhow::anyhow!("{}: {other}", path.display())),
    })?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Experiment::new(cfg).map_err(|e| Failure::Config(anyhow::anyhow!("{}: {e}", path.display())))
}

fn workers(requested: Option<usize>) -> usize {
    requested
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

/// `a..b` and `a..=b` are inclusive; also accepts `a` and `a,b,c`.
fn parse_seeds(text: &str) -> anyhow::Result<Vec<u64>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty seed range {text}");
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(Into::into))
        .collect()
}

fn validation_episodes(exp: &Experiment, seeds: Option<&str>) -> Result<Vec<(ValidationLabel, emstree_core::env::EpisodeConfig)>, Failure> {
    match (exp.config.environment, seeds) {
        (EnvironmentKind::Grid, Some(s)) => {
            let seeds = parse_seeds(s).map_err(|e| Failure::Config(e.context(format!("invalid --seeds `{s}`"))))?;
            Ok(seeds
                .into_iter()
                .map(|s| (ValidationLabel::Seed(s), exp.grid_validation_episode(s)))
                .collect())
        }
        _ => Ok(exp.validation_episodes()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_validation(dir: &Path, exp: &Experiment, v: &Validation) -> anyhow::Result<()> {
    let traces = dir.join("traces");
    fs::create_dir_all(&traces).with_context(|| format!("creating {}", traces.display()))?;
    let env = exp.training_env();
    use emstree_core::env::Environment;
    for (label, report) in &v.reports {
        let path = traces.join(format!("{}.csv", label.slug()));
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_trace_csv(report, env.features(), env.actions(), file)?;
    }
    write_json(&dir.join("summary.json"), &v.summary)
}

fn in_pool<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    with_workers(n, f).context("building worker pool")
}

fn train(config: &Path, out: &Path, seed: Option<u64>, workers_flag: Option<usize>) -> Outcome {
    let exp = load_config(config, seed)?;
    let workers = workers(workers_flag);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(
        &out.join("manifest.json"),
        &RunManifest {
            command: "train",
            config,
            out,
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: exp.config.seed,
            workers,
            started_unix: unix_now(),
        },
    )?;
    fs::write(out.join("config.toml"), exp.config.to_toml())?;
    let result = exp.train(workers)?;
    result.ems.save(&out.join("ems.json"))?;
    fs::write(out.join("winner.dot"), ensemble_to_dot(&result.ems.controller.ensemble))?;
    fs::write(out.join("winner_unpruned.dot"), ensemble_to_dot(&result.unpruned.ensemble))?;
    for r in &result.restarts {
        let path = out.join(format!("restart_{}_history.csv", r.index));
        emstree_core::cmaes::write_history_csv(&r.history, fs::File::create(&path)?)?;
        r.genome.write_csv(fs::File::create(out.join(format!("restart_{}_genome.csv", r.index)))?)?;
    }
    let validation = Validation {
        summary: result.ems.validation.clone(),
        reports: result.validation_reports,
    };
    write_validation(&out.join("validation"), &exp, &validation)?;
    println!("{}", serde_json::to_string_pretty(&result.ems.validation)?);
    eprintln!(
        "winner: restart {} (training score {:.4}), {} leaves after pruning ({} before)",
        result.ems.winner,
        result.ems.training_score,
        result.ems.controller.ensemble.leaf_count(),
        result.ems.unpruned_leaves
    );
    Ok(())
}

fn load_ems(path: &Path) -> Result<TrainedEms, Failure> {
    TrainedEms::load(path).map_err(|e| Failure::Config(anyhow::anyhow!("{}: {e}", path.display())))
}

fn validate(ems: &Path, config: &Path, seeds: Option<&str>, out: &Path, workers_flag: Option<usize>) -> Outcome {
    let ems = load_ems(ems)?;
    let exp = load_config(config, None)?;
    if ems.environment != exp.config.environment {
        return Err(Failure::Config(anyhow::anyhow!(
            "controller was trained for {:?} but the config describes {:?}",
            ems.environment,
            exp.config.environment
        )));
    }
    let controller = exp
        .controller(ems.controller.ensemble.clone())
        .map_err(|e| Failure::Config(e.into()))?;
    let episodes = validation_episodes(&exp, seeds)?;
    let v = in_pool(workers(workers_flag), || {
        exp.validate_with(episodes, |_| Box::new(controller.clone()))
    })?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_validation(out, &exp, &v)?;
    println!("{}", serde_json::to_string_pretty(&v.summary)?);
    Ok(())
}

fn export(ems: &Path, format: ExportFormat, out: Option<&Path>) -> Outcome {
    let ems = load_ems(ems)?;
    let ensemble = &ems.controller.ensemble;
    let text = match format {
        ExportFormat::Dot => ensemble_to_dot(ensemble),
        ExportFormat::Json => ensemble_to_json(ensemble)?,
    };
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn baseline(
    name: BaselineName,
    config: &Path,
    seeds: Option<&str>,
    seed: Option<u64>,
    out: Option<&Path>,
    workers_flag: Option<usize>,
) -> Outcome {
    let exp = load_config(config, seed)?;
    let episodes = validation_episodes(&exp, seeds)?;
    let v = match name {
        BaselineName::Random => in_pool(workers(workers_flag), || exp.random_baseline(episodes))?,
        BaselineName::Thermostat => {
            if exp.config.environment != EnvironmentKind::Heating {
                return Err(Failure::Config(anyhow::anyhow!(
                    "the thermostat baseline needs a heating config"
                )));
            }
            in_pool(workers(workers_flag), || exp.thermostat_baseline())?.expect("heating config")
        }
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_validation(dir, &exp, &v)?;
    }
    println!("{}", serde_json::to_string_pretty(&v.summary)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Train {
            config,
            out,
            seed,
            workers,
        } => train(config, out, *seed, *workers),
        Command::Validate {
            ems,
            config,
            seeds,
            out,
            workers,
        } => validate(ems, config, seeds.as_deref(), out, *workers),
        Command::Export { ems, format, out } => export(ems, *format, out.as_deref()),
        Command::Baseline {
            name,
            config,
            seeds,
            seed,
            out,
            workers,
        } => baseline(*name, config, seeds.as_deref(), *seed, out.as_deref(), *workers),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
