//! Training pipeline: restarted CMA-ES runs, then pruning and validation
//! of the winning controller.
//!
//! Candidate scores depend only on the genome and the episode of their
//! generation, and are collected by candidate index, so results are the
//! same for any worker count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmaes::{self, median, CmaesError, CmaesParams, CmaesState, HistoryRecord};
use crate::env::grid::{self, GridConfig, GridConfigError, GridEnv, GridModel};
use crate::env::heating::{self, HeatingConfig, HeatingConfigError, HeatingEnv, HeatingModel, Period, PricingScenario};
use crate::env::{
    evaluate_episode, EnvError, Environment, EpisodeConfig, EvalReport, Objective, Observation, Policy, RandomPolicy,
    StepOutcome,
};
use crate::genome::Genome;
use crate::seed;
use crate::tree::{ActionSpec, CodecError, EnsembleLayout, EvalError, FeatureSpec, PruneError, TreeEnsemble, DEFAULT_SPLITS};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const EMS_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_RESTARTS: usize = 5;
pub const GRID_TRAINING_STEPS: usize = crate::env::objective::TRAINING_STEPS;
pub const GRID_VALIDATION_STEPS: usize = crate::env::objective::VALIDATION_STEPS;
pub const GRID_VALIDATION_SEEDS: u64 = 10;

const RESTART_SALT: u64 = 0x7265_7374;
const SCHEDULE_SALT: u64 = 0x7363_6864;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported config schema_version {0} (expected {CONFIG_SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridConfigError),
    #[error(transparent)]
    Heating(#[from] HeatingConfigError),
    #[error(transparent)]
    Cmaes(#[from] CmaesError),
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("restart {index} aborted: {message}")]
    Restart { index: usize, message: String },
    #[error(transparent)]
    Cmaes(#[from] CmaesError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error("ensemble does not match the experiment: {0}")]
    Mismatch(String),
    #[error("failed to build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("episode failed: {0}")]
    Episode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentKind {
    Grid,
    Heating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// Draw a new grid start step every generation instead of once per
    /// restart.
    pub per_generation_start: bool,
    /// Grid training episode length.
    pub training_steps: usize,
    /// Grid validation episode length.
    pub validation_steps: usize,
    /// Grid validation uses seeds `0..validation_seeds`.
    pub validation_seeds: u64,
    /// Heating pricing scenario and period used for training.
    pub scenario: PricingScenario,
    pub period: Period,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            per_generation_start: false,
            training_steps: GRID_TRAINING_STEPS,
            validation_steps: GRID_VALIDATION_STEPS,
            validation_seeds: GRID_VALIDATION_SEEDS,
            scenario: PricingScenario::Constant,
            period: Period::Peak,
        }
    }
}

/// One training experiment, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub environment: EnvironmentKind,
    /// Split nodes per tree.
    #[serde(default = "default_splits")]
    pub splits: usize,
    pub generations: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Overrides the default `4 + 3⌊ln n⌋`.
    #[serde(default)]
    pub population_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Channels driven by trees, in tree order. Defaults to every channel.
    #[serde(default)]
    pub channels: Option<Vec<String>>,
    /// Constant values for channels without a tree.
    #[serde(default)]
    pub fixed_actions: BTreeMap<String, f64>,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub heating: HeatingConfig,
}

fn default_splits() -> usize {
    DEFAULT_SPLITS
}

fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}

impl ExperimentConfig {
    pub fn new(environment: EnvironmentKind, generations: usize) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            environment,
            splits: DEFAULT_SPLITS,
            generations,
            restarts: DEFAULT_RESTARTS,
            population_size: None,
            seed: 0,
            channels: None,
            fixed_actions: BTreeMap::new(),
            schedule: ScheduleConfig::default(),
            grid: GridConfig::default(),
            heating: HeatingConfig::default(),
        }
    }

    /// Parses TOML; relative data paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = toml::from_str(text)?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion(cfg.schema_version));
        }
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base_dir.join(&*path);
                }
            }
        };
        resolve(&mut cfg.grid.profile_csv);
        resolve(&mut cfg.heating.weather.csv);
        resolve(&mut cfg.heating.pricing.highly_dynamic_csv);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Environment instance of either case.
#[derive(Debug, Clone)]
pub enum AnyEnv {
    Grid(GridEnv),
    Heating(HeatingEnv),
}

impl Environment for AnyEnv {
    fn features(&self) -> &[FeatureSpec] {
        match self {
            AnyEnv::Grid(e) => e.features(),
            AnyEnv::Heating(e) => e.features(),
        }
    }
    fn actions(&self) -> &[ActionSpec] {
        match self {
            AnyEnv::Grid(e) => e.actions(),
            AnyEnv::Heating(e) => e.actions(),
        }
    }
    fn objective(&self) -> Objective {
        match self {
            AnyEnv::Grid(e) => e.objective(),
            AnyEnv::Heating(e) => e.objective(),
        }
    }
    fn cost_normalization(&self) -> f64 {
        match self {
            AnyEnv::Grid(e) => e.cost_normalization(),
            AnyEnv::Heating(e) => e.cost_normalization(),
        }
    }
    fn reset(&mut self, cfg: &EpisodeConfig) -> Result<Observation, EnvError> {
        match self {
            AnyEnv::Grid(e) => e.reset(cfg),
            AnyEnv::Heating(e) => e.reset(cfg),
        }
    }
    fn step(&mut self, actions: &[f64]) -> Result<StepOutcome, EnvError> {
        match self {
            AnyEnv::Grid(e) => e.step(actions),
            AnyEnv::Heating(e) => e.step(actions),
        }
    }
    fn warmup_action(&self, obs: &Observation, out: &mut [f64]) -> bool {
        match self {
            AnyEnv::Grid(e) => e.warmup_action(obs, out),
            AnyEnv::Heating(e) => e.warmup_action(obs, out),
        }
    }
}

/// An ensemble driving a subset of channels; the rest hold fixed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Controller {
    pub ensemble: TreeEnsemble,
    /// Environment channel index driven by each tree.
    pub slots: Vec<usize>,
    /// Full action vector used for channels without a tree.
    pub defaults: Vec<f64>,
}

impl Controller {
    fn fill(&self, out: &mut [f64], values: &[f64]) -> Result<(), EvalError> {
        if out.len() != self.defaults.len() {
            return Err(EvalError::ChannelCount {
                expected: self.defaults.len(),
                actual: out.len(),
            });
        }
        out.copy_from_slice(&self.defaults);
        for (&slot, &v) in self.slots.iter().zip(values) {
            out[slot] = v;
        }
        Ok(())
    }

    pub fn recording(&mut self) -> RecordingController<'_> {
        let n = self.slots.len();
        RecordingController {
            inner: self,
            buf: vec![0.0; n],
        }
    }
}

/// Borrowing policy view that also counts leaf visits.
pub struct RecordingController<'a> {
    inner: &'a mut Controller,
    buf: Vec<f64>,
}

impl Policy for RecordingController<'_> {
    fn act(&mut self, obs: &Observation, out: &mut [f64]) -> Result<(), EvalError> {
        self.inner.ensemble.act_recording(obs, &mut self.buf)?;
        self.inner.fill(out, &self.buf)
    }
}

impl Policy for Controller {
    fn act(&mut self, obs: &Observation, out: &mut [f64]) -> Result<(), EvalError> {
        let mut buf = [0.0; 8];
        let n = self.slots.len();
        if n <= buf.len() {
            self.ensemble.act(obs, &mut buf[..n])?;
            self.fill(out, &buf[..n])
        } else {
            let mut buf = vec![0.0; n];
            self.ensemble.act(obs, &mut buf)?;
            self.fill(out, &buf)
        }
    }
}

#[derive(Debug, Clone)]
enum Models {
    Grid(Arc<GridModel>),
    Heating {
        /// One model per pricing scenario, in [`PricingScenario::ALL`] order.
        scenarios: Vec<Arc<HeatingModel>>,
    },
}

/// A validated experiment with its environment models built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub layout: EnsembleLayout,
    pub params: CmaesParams,
    slots: Vec<usize>,
    defaults: Vec<f64>,
    models: Models,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if config.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion(config.schema_version));
        }
        if config.generations == 0 {
            return invalid("generations must be at least 1".into());
        }
        if config.restarts == 0 {
            return invalid("restarts must be at least 1".into());
        }
        let s = &config.schedule;
        if s.training_steps == 0 || s.validation_steps == 0 {
            return invalid("schedule episode lengths must be at least 1".into());
        }
        let models = match config.environment {
            EnvironmentKind::Grid => Models::Grid(GridModel::new(config.grid.clone())?),
            EnvironmentKind::Heating => {
                let first = HeatingModel::new(config.heating.clone(), PricingScenario::ALL[0])?;
                let exo = first.exogenous().clone();
                let mut scenarios = vec![first];
                for sc in &PricingScenario::ALL[1..] {
                    scenarios.push(HeatingModel::with_exogenous(config.heating.clone(), *sc, exo.clone()));
                }
                Models::Heating { scenarios }
            }
        };
        let probe = Self::instance(&models, config.schedule.scenario);
        let all_actions = probe.actions().to_vec();
        let features = probe.features().to_vec();

        let names: Vec<String> = match &config.channels {
            Some(list) => list.clone(),
            None => all_actions.iter().map(|a| a.name.clone()).collect(),
        };
        if names.is_empty() {
            return invalid("channels must name at least one action channel".into());
        }
        let mut slots = Vec::with_capacity(names.len());
        for name in &names {
            let Some(slot) = all_actions.iter().position(|a| &a.name == name) else {
                let known: Vec<&str> = all_actions.iter().map(|a| a.name.as_str()).collect();
                return invalid(format!("unknown channel `{name}`; available: {}", known.join(", ")));
            };
            if slots.contains(&slot) {
                return invalid(format!("channel `{name}` listed twice"));
            }
            slots.push(slot);
        }
        for name in config.fixed_actions.keys() {
            if !all_actions.iter().any(|a| &a.name == name) {
                return invalid(format!("fixed_actions names unknown channel `{name}`"));
            }
        }
        let mut defaults = vec![0.0; all_actions.len()];
        for (k, spec) in all_actions.iter().enumerate() {
            let fixed = config.fixed_actions.get(&spec.name);
            match (slots.contains(&k), fixed) {
                (true, Some(_)) => {
                    return invalid(format!("channel `{}` has both a tree and a fixed action", spec.name))
                }
                (false, None) => {
                    return invalid(format!("channel `{}` needs a tree or a fixed action", spec.name))
                }
                (false, Some(&v)) => {
                    if !spec.contains(v) {
                        return invalid(format!("fixed action {v} is outside the domain of `{}`", spec.name));
                    }
                    defaults[k] = v;
                }
                (true, None) => {}
            }
        }
        let layout = EnsembleLayout {
            features,
            actions: slots.iter().map(|&k| all_actions[k].clone()).collect(),
            splits: config.splits,
        };
        let n = layout.genome_len();
        let params = match config.population_size {
            Some(lambda) => CmaesParams::with_population(n, lambda)?,
            None => cmaes::default_params(n)?,
        };
        Ok(Self {
            config,
            layout,
            params,
            slots,
            defaults,
            models,
        })
    }

    fn instance(models: &Models, scenario: PricingScenario) -> AnyEnv {
        match models {
            Models::Grid(m) => AnyEnv::Grid(GridEnv::new(m.clone())),
            Models::Heating { scenarios } => {
                let idx = PricingScenario::ALL
                    .iter()
                    .position(|s| *s == scenario)
                    .expect("scenario is listed");
                AnyEnv::Heating(HeatingEnv::new(scenarios[idx].clone()))
            }
        }
    }

    /// Fresh environment for training episodes.
    pub fn training_env(&self) -> AnyEnv {
        Self::instance(&self.models, self.config.schedule.scenario)
    }

    pub fn genome_len(&self) -> usize {
        self.layout.genome_len()
    }

    pub fn controller(&self, ensemble: TreeEnsemble) -> Result<Controller, TrainError> {
        if ensemble.features != self.layout.features {
            return Err(TrainError::Mismatch("feature catalog differs".into()));
        }
        let names: Vec<&str> = ensemble.channels.iter().map(|c| c.action.name.as_str()).collect();
        let expected: Vec<&str> = self.layout.actions.iter().map(|a| a.name.as_str()).collect();
        if names != expected {
            return Err(TrainError::Mismatch(format!(
                "channels {names:?}, expected {expected:?}"
            )));
        }
        Ok(Controller {
            ensemble,
            slots: self.slots.clone(),
            defaults: self.defaults.clone(),
        })
    }

    pub fn decode(&self, genome: &Genome) -> Result<Controller, TrainError> {
        self.controller(self.layout.decode(genome)?)
    }

    /// Seed of restart `index`.
    pub fn restart_seed(&self, index: usize) -> u64 {
        seed::derive(seed::derive(self.config.seed, RESTART_SALT), index as u64)
    }

    /// Training episode used by every candidate of generation `g` in the
    /// restart keyed by `run_seed`.
    pub fn schedule_episode(&self, generation: usize, run_seed: u64) -> EpisodeConfig {
        match self.config.environment {
            EnvironmentKind::Grid => {
                let key = if self.config.schedule.per_generation_start {
                    seed::derive(run_seed ^ SCHEDULE_SALT, generation as u64)
                } else {
                    run_seed ^ SCHEDULE_SALT
                };
                EpisodeConfig {
                    start: grid::start_step(key),
                    length: self.config.schedule.training_steps,
                    warmup: 0,
                    seed: key,
                }
            }
            EnvironmentKind::Heating => self.config.schedule.period.training(),
        }
    }

    /// Training objective of one genome on one episode.
    pub fn score(&self, genome: &Genome, episode: &EpisodeConfig) -> Result<f64, TrainError> {
        let mut policy = self.decode(genome)?;
        let mut env = self.training_env();
        let report = evaluate_episode(&mut env, &mut policy, episode, false);
        if let Some(e) = report.error {
            return Err(TrainError::Episode(e));
        }
        Ok(report.summary.objective(env.objective()))
    }

    fn run_restart(&self, index: usize) -> Result<RestartResult, TrainError> {
        let run_seed = self.restart_seed(index);
        let params = &self.params;
        let mut state = CmaesState::new(params.dimension);
        let mut history = Vec::with_capacity(self.config.generations);
        let wrap = |e: TrainError| TrainError::Restart {
            index,
            message: e.to_string(),
        };
        for g in 0..self.config.generations {
            let episode = self.schedule_episode(g, run_seed);
            let candidates = state.ask(params, cmaes::generation_seed(run_seed, g));
            let scores = candidates
                .par_iter()
                .map(|c| self.score(&c.genome, &episode))
                .collect::<Result<Vec<f64>, _>>()
                .map_err(wrap)?;
            let median_score = median(&scores);
            let scored: Vec<_> = candidates.into_iter().zip(scores).map(|(c, s)| c.scored(s)).collect();
            state
                .tell(params, &scored)
                .map_err(|e| wrap(TrainError::Cmaes(e)))?;
            let best = state.best.as_ref().expect("best is set after tell");
            history.push(HistoryRecord {
                generation: g,
                best_score: best.score,
                median_score,
                sigma: state.sigma,
            });
        }
        let best = state.best.expect("at least one generation ran");
        Ok(RestartResult {
            index,
            seed: run_seed,
            episode: self.schedule_episode(best.generation, run_seed),
            best_generation: best.generation,
            best_score: best.score,
            genome: best.genome,
            history,
        })
    }

    /// Runs every restart on a pool of `workers` threads, keeps the best,
    /// prunes it on a replay of its training episode and validates it.
    pub fn train(&self, workers: usize) -> Result<TrainOutput, TrainError> {
        let pool = thread_pool(workers)?;
        let restarts = pool.install(|| {
            (0..self.config.restarts)
                .into_par_iter()
                .map(|r| self.run_restart(r))
                .collect::<Result<Vec<_>, _>>()
        })?;
        let winner = restarts
            .iter()
            .min_by(|a, b| a.best_score.total_cmp(&b.best_score).then(a.index.cmp(&b.index)))
            .expect("restarts >= 1");

        let mut unpruned = self.decode(&winner.genome)?;
        let mut env = self.training_env();
        let replay = evaluate_episode(&mut env, &mut unpruned.recording(), &winner.episode, true);
        if let Some(e) = replay.error {
            return Err(TrainError::Episode(e));
        }
        let pruned = self.controller(unpruned.ensemble.prune()?)?;
        let validation = pool.install(|| self.validate(&pruned));
        let ems = TrainedEms {
            schema_version: EMS_SCHEMA_VERSION,
            environment: self.config.environment,
            seed: self.config.seed,
            winner: winner.index,
            training_score: winner.best_score,
            replay_score: replay.summary.objective(env.objective()),
            unpruned_leaves: unpruned.ensemble.leaf_count(),
            controller: pruned,
            restarts: restarts
                .iter()
                .map(|r| RestartSummary {
                    index: r.index,
                    seed: r.seed,
                    best_score: r.best_score,
                    best_generation: r.best_generation,
                    episode_start: r.episode.start,
                })
                .collect(),
            validation: validation.summary,
        };
        Ok(TrainOutput {
            ems,
            restarts,
            unpruned,
            replay,
            validation_reports: validation.reports,
        })
    }

    /// Validation episodes in reporting order with their labels.
    pub fn validation_episodes(&self) -> Vec<(ValidationLabel, EpisodeConfig)> {
        match self.config.environment {
            EnvironmentKind::Grid => (0..self.config.schedule.validation_seeds)
                .map(|s| (ValidationLabel::Seed(s), self.grid_validation_episode(s)))
                .collect(),
            EnvironmentKind::Heating => PricingScenario::ALL
                .iter()
                .flat_map(|&sc| {
                    Period::ALL
                        .iter()
                        .map(move |&p| (ValidationLabel::Scenario { scenario: sc, period: p }, p.validation()))
                })
                .collect(),
        }
    }

    /// Grid validation episode for `seed`.
    pub fn grid_validation_episode(&self, seed: u64) -> EpisodeConfig {
        EpisodeConfig {
            start: grid::start_step(seed),
            length: self.config.schedule.validation_steps,
            warmup: 0,
            seed,
        }
    }

    fn env_for(&self, label: &ValidationLabel) -> AnyEnv {
        match label {
            ValidationLabel::Seed(_) => self.training_env(),
            ValidationLabel::Scenario { scenario, .. } => Self::instance(&self.models, *scenario),
        }
    }

    /// Validation of a trained controller.
    pub fn validate(&self, controller: &Controller) -> Validation {
        self.validate_with(self.validation_episodes(), |_| Box::new(controller.clone()))
    }

    /// Runs `policy_for(label)` on each labelled episode in parallel and
    /// summarizes in a fixed order.
    pub fn validate_with<F>(&self, episodes: Vec<(ValidationLabel, EpisodeConfig)>, policy_for: F) -> Validation
    where
        F: Fn(&ValidationLabel) -> Box<dyn Policy + Send> + Sync,
    {
        let reports: Vec<(ValidationLabel, EvalReport)> = episodes
            .into_par_iter()
            .map(|(label, ep)| {
                let mut env = self.env_for(&label);
                let mut policy = policy_for(&label);
                let report = evaluate_episode(&mut env, policy.as_mut(), &ep, true);
                (label, report)
            })
            .collect();
        Validation {
            summary: ValidationSummary::from_reports(&reports),
            reports,
        }
    }

    /// Random-action baseline on `episodes`, seeded per episode.
    pub fn random_baseline(&self, episodes: Vec<(ValidationLabel, EpisodeConfig)>) -> Validation {
        let actions = self.training_env().actions().to_vec();
        let master = self.config.seed;
        self.validate_with(episodes, |label| {
            let key = match label {
                ValidationLabel::Seed(s) => *s,
                ValidationLabel::Scenario { scenario, period } => {
                    (*scenario as u64) * 2 + *period as u64
                }
            };
            Box::new(RandomPolicy::new(&actions, seed::derive(master, key)))
        })
    }

    /// Thermostat baseline; heating only.
    pub fn thermostat_baseline(&self) -> Option<Validation> {
        if self.config.environment != EnvironmentKind::Heating {
            return None;
        }
        let setpoint = self.config.heating.thermostat_setpoint;
        Some(self.validate_with(self.validation_episodes(), |_| {
            Box::new(heating::ThermostatPolicy { setpoint })
        }))
    }
}

/// Worker pool with `workers` threads (at least one).
pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, TrainError> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?)
}

/// Runs `f` on a pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, TrainError> {
    Ok(thread_pool(workers)?.install(f))
}

#[derive(Debug, Clone)]
pub struct RestartResult {
    pub index: usize,
    pub seed: u64,
    /// Training episode on which the best genome was scored.
    pub episode: EpisodeConfig,
    pub best_generation: usize,
    pub best_score: f64,
    pub genome: Genome,
    pub history: Vec<HistoryRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub seed: u64,
    pub best_score: f64,
    pub best_generation: usize,
    pub episode_start: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValidationLabel {
    Seed(u64),
    Scenario { scenario: PricingScenario, period: Period },
}

impl ValidationLabel {
    /// File-name friendly label.
    pub fn slug(&self) -> String {
        match self {
            ValidationLabel::Seed(s) => format!("seed_{s}"),
            ValidationLabel::Scenario { scenario, period } => format!("{}_{}", scenario.name(), period.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEpisodeRow {
    pub seed: u64,
    pub start: usize,
    pub steps: usize,
    pub discounted_score: f64,
    pub collapsed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingRow {
    pub scenario: PricingScenario,
    pub period: Period,
    /// EUR/m².
    pub cost: f64,
    /// Kh.
    pub discomfort: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "environment", rename_all = "snake_case")]
pub enum ValidationSummary {
    Grid {
        episodes: Vec<GridEpisodeRow>,
        mean: f64,
        /// Sample standard deviation.
        std_dev: f64,
        collapsed: usize,
    },
    Heating { rows: Vec<HeatingRow> },
}

impl ValidationSummary {
    pub fn from_reports(reports: &[(ValidationLabel, EvalReport)]) -> Self {
        let heating: Vec<HeatingRow> = reports
            .iter()
            .filter_map(|(label, r)| match label {
                ValidationLabel::Scenario { scenario, period } => Some(HeatingRow {
                    scenario: *scenario,
                    period: *period,
                    cost: r.summary.cost,
                    discomfort: r.summary.discomfort,
                    weighted: r.summary.weighted,
                }),
                ValidationLabel::Seed(_) => None,
            })
            .collect();
        if !heating.is_empty() {
            return ValidationSummary::Heating { rows: heating };
        }
        let episodes: Vec<GridEpisodeRow> = reports
            .iter()
            .map(|(label, r)| GridEpisodeRow {
                seed: match label {
                    ValidationLabel::Seed(s) => *s,
                    ValidationLabel::Scenario { .. } => 0,
                },
                start: r.config.start,
                steps: r.summary.steps,
                discounted_score: r.summary.discounted_score,
                collapsed: r.summary.collapsed,
            })
            .collect();
        let scores: Vec<f64> = episodes.iter().map(|e| e.discounted_score).collect();
        let (mean, std_dev) = mean_std(&scores);
        ValidationSummary::Grid {
            collapsed: episodes.iter().filter(|e| e.collapsed).count(),
            episodes,
            mean,
            std_dev,
        }
    }

    pub fn grid_mean(&self) -> Option<f64> {
        match self {
            ValidationSummary::Grid { mean, .. } => Some(*mean),
            ValidationSummary::Heating { .. } => None,
        }
    }

    pub fn heating_row(&self, scenario: PricingScenario, period: Period) -> Option<&HeatingRow> {
        match self {
            ValidationSummary::Heating { rows } => {
                rows.iter().find(|r| r.scenario == scenario && r.period == period)
            }
            ValidationSummary::Grid { .. } => None,
        }
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub summary: ValidationSummary,
    pub reports: Vec<(ValidationLabel, EvalReport)>,
}

/// Persisted training result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedEms {
    pub schema_version: u32,
    pub environment: EnvironmentKind,
    pub seed: u64,
    /// Index of the winning restart.
    pub winner: usize,
    pub training_score: f64,
    /// Score of the unpruned winner on the recording replay.
    pub replay_score: f64,
    pub unpruned_leaves: usize,
    pub controller: Controller,
    pub restarts: Vec<RestartSummary>,
    pub validation: ValidationSummary,
}

#[derive(Debug, thiserror::Error)]
pub enum EmsIoError {
    #[error("unsupported ems schema_version {0} (expected {EMS_SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("stored ensemble is inconsistent")]
    Inconsistent,
    #[error("malformed ems file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TrainedEms {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ems serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, EmsIoError> {
        #[derive(Deserialize)]
        struct Probe {
            schema_version: u32,
        }
        let probe: Probe = serde_json::from_str(text)?;
        if probe.schema_version != EMS_SCHEMA_VERSION {
            return Err(EmsIoError::SchemaVersion(probe.schema_version));
        }
        let ems: Self = serde_json::from_str(text)?;
        let c = &ems.controller;
        if !c.ensemble.is_consistent()
            || c.slots.len() != c.ensemble.channel_count()
            || c.slots.iter().any(|&s| s >= c.defaults.len())
        {
            return Err(EmsIoError::Inconsistent);
        }
        Ok(ems)
    }

    pub fn save(&self, path: &Path) -> Result<(), EmsIoError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EmsIoError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub ems: TrainedEms,
    pub restarts: Vec<RestartResult>,
    /// Winner before pruning, with visit counts from the replay.
    pub unpruned: Controller,
    pub replay: EvalReport,
    pub validation_reports: Vec<(ValidationLabel, EvalReport)>,
}
