//! Decision-tree energy management controllers trained with CMA-ES, and the
//! surrogate grid and heating environments they are trained in.

pub mod cmaes;
pub mod env;
pub mod genome;
pub mod seed;
pub mod trainer;
pub mod tree;

pub use cmaes::{CmaesParams, CmaesState};
pub use env::{evaluate_episode, Environment, EpisodeConfig, EpisodeSummary, EvalReport, Objective, Observation, Policy};
pub use genome::Genome;
pub use trainer::{EnvironmentKind, Experiment, ExperimentConfig, TrainedEms, ValidationSummary};
pub use tree::{ActionSpec, EnsembleLayout, FeatureSpec, TreeEnsemble};
