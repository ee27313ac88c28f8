//! Environment contract and the closed-loop episode runner shared by the
//! grid and heating cases.

pub mod grid;
pub mod heating;
pub mod objective;

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tree::{ActionKind, ActionSpec, EvalError, FeatureSpec, TreeEnsemble};

pub use objective::{
    band_distance, clipped_reward, discounted_score, electricity_cost, total_discomfort,
    training_sum, weighted_objective,
};

/// Feature values in catalog order, plus the absolute step index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: usize,
    pub values: Vec<f64>,
}

impl Observation {
    /// Looks a feature up by name in `catalog`.
    pub fn get(&self, catalog: &[FeatureSpec], name: &str) -> Option<f64> {
        catalog
            .iter()
            .position(|f| f.name == name)
            .and_then(|i| self.values.get(i).copied())
    }
}

/// Cost terms produced by one transition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepCosts {
    /// Energy loss ΔE, per-unit energy.
    pub energy_loss: f64,
    /// Constraint penalty φ ≥ 0, per-unit.
    pub penalty: f64,
    /// Electricity price, EUR/kWh.
    pub price: f64,
    /// Electric energy drawn, kWh.
    pub energy: f64,
    /// Comfort-band violation, Kh.
    pub discomfort: f64,
    pub collapsed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub costs: StepCosts,
    /// Some action was outside its channel domain and was snapped.
    pub clamped: bool,
}

/// Which aggregate a training run minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Undiscounted sum of clipped rewards.
    RewardSum,
    /// `100·D + 192·E`.
    Weighted,
}

/// Simulated steps `start .. start + warmup + length`; the first `warmup`
/// steps are excluded from every aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub start: usize,
    pub length: usize,
    pub warmup: usize,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EnvError {
    #[error("expected {expected} actions, got {actual}")]
    ActionCount { expected: usize, actual: usize },
    #[error("step {step} is outside the simulated horizon of {horizon} steps")]
    Horizon { step: usize, horizon: usize },
    #[error("environment is not reset")]
    NotReset,
}

pub trait Environment {
    fn features(&self) -> &[FeatureSpec];
    fn actions(&self) -> &[ActionSpec];
    fn objective(&self) -> Objective;

    /// Divisor applied to `Σ p·e` before reporting; floor area for the
    /// heating case.
    fn cost_normalization(&self) -> f64 {
        1.0
    }

    fn reset(&mut self, cfg: &EpisodeConfig) -> Result<Observation, EnvError>;
    fn step(&mut self, actions: &[f64]) -> Result<StepOutcome, EnvError>;

    /// Action applied during warm-up in place of the policy, if the
    /// environment drives its own warm-up.
    fn warmup_action(&self, _obs: &Observation, _out: &mut [f64]) -> bool {
        false
    }
}

/// Anything that maps observations to one value per action channel.
pub trait Policy {
    fn act(&mut self, obs: &Observation, out: &mut [f64]) -> Result<(), EvalError>;
}

impl Policy for TreeEnsemble {
    fn act(&mut self, obs: &Observation, out: &mut [f64]) -> Result<(), EvalError> {
        TreeEnsemble::act(self, obs, out)
    }
}

/// Ensemble policy that counts leaf visits.
pub struct Recording<'a>(pub &'a mut TreeEnsemble);

impl Policy for Recording<'_> {
    fn act(&mut self, obs: &Observation, out: &mut [f64]) -> Result<(), EvalError> {
        self.0.act_recording(obs, out)
    }
}

/// Independent uniform draw per channel and step.
pub struct RandomPolicy {
    actions: Vec<ActionSpec>,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(actions: &[ActionSpec], seed: u64) -> Self {
        Self {
            actions: actions.to_vec(),
            rng: crate::seed::rng(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _obs: &Observation, out: &mut [f64]) -> Result<(), EvalError> {
        if out.len() != self.actions.len() {
            return Err(EvalError::ChannelCount {
                expected: self.actions.len(),
                actual: out.len(),
            });
        }
        for (slot, spec) in out.iter_mut().zip(&self.actions) {
            *slot = match &spec.kind {
                ActionKind::Continuous { lo, hi } => self.rng.random_range(*lo..=*hi),
                ActionKind::Discrete { values } => values[self.rng.random_range(0..values.len())],
            };
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub observation: Vec<f64>,
    pub actions: Vec<f64>,
    pub costs: StepCosts,
    pub reward: f64,
    pub clamped: bool,
}

/// Aggregates over the scored (post-warm-up) steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub steps: usize,
    /// `Σ r_t`.
    pub training_sum: f64,
    /// `Σ r_t · 0.995^t`.
    pub discounted_score: f64,
    /// `Σ p_t·e_t` divided by the environment's cost normalization.
    pub cost: f64,
    /// `Σ δ_t`, Kh.
    pub discomfort: f64,
    /// `100·D + 192·E`.
    pub weighted: f64,
    pub collapsed: bool,
}

impl EpisodeSummary {
    pub fn objective(&self, objective: Objective) -> f64 {
        match objective {
            Objective::RewardSum => self.training_sum,
            Objective::Weighted => self.weighted,
        }
    }

    /// Recomputes every aggregate from a scored trace.
    pub fn from_trace(trace: &[TraceRow], cost_normalization: f64) -> Self {
        let rewards: Vec<f64> = trace.iter().map(|r| r.reward).collect();
        let cost = electricity_cost(trace.iter().map(|r| (r.costs.price, r.costs.energy)))
            / cost_normalization;
        let discomfort = total_discomfort(trace.iter().map(|r| r.costs.discomfort));
        Self {
            steps: trace.len(),
            training_sum: training_sum(&rewards),
            discounted_score: discounted_score(&rewards),
            cost,
            discomfort,
            weighted: weighted_objective(discomfort, cost),
            collapsed: trace.iter().any(|r| r.costs.collapsed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EpisodeConfig,
    /// Scored steps only; empty when the trace was not kept.
    pub trace: Vec<TraceRow>,
    pub summary: EpisodeSummary,
    /// Set when the rollout stopped early on an environment or policy
    /// failure; the summary then covers the partial trace.
    pub error: Option<String>,
}

/// Running aggregates, updated step by step so traces are optional.
struct Accumulator {
    summary: EpisodeSummary,
    price_energy: f64,
    factor: f64,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            summary: EpisodeSummary::default(),
            price_energy: 0.0,
            factor: 1.0,
        }
    }

    fn push(&mut self, costs: &StepCosts, reward: f64) {
        let s = &mut self.summary;
        s.steps += 1;
        s.training_sum += reward;
        s.discounted_score += reward * self.factor;
        self.factor *= objective::DISCOUNT;
        self.price_energy += costs.price * costs.energy;
        s.discomfort += costs.discomfort;
        s.collapsed |= costs.collapsed;
    }

    fn finish(mut self, cost_normalization: f64) -> EpisodeSummary {
        self.summary.cost = self.price_energy / cost_normalization;
        self.summary.weighted = weighted_objective(self.summary.discomfort, self.summary.cost);
        self.summary
    }
}

/// Closed-loop rollout: observe, act on every channel, step. Warm-up steps
/// are simulated but not scored. The episode stops at collapse.
pub fn evaluate_episode<E, P>(env: &mut E, policy: &mut P, cfg: &EpisodeConfig, keep_trace: bool) -> EvalReport
where
    E: Environment + ?Sized,
    P: Policy + ?Sized,
{
    let mut acc = Accumulator::new();
    let mut trace = Vec::new();
    let mut actions = vec![0.0; env.actions().len()];
    let fail = |trace, acc: Accumulator, env: &E, msg: String| EvalReport {
        config: *cfg,
        trace,
        summary: acc.finish(env.cost_normalization()),
        error: Some(msg),
    };

    let mut obs = match env.reset(cfg) {
        Ok(o) => o,
        Err(e) => return fail(trace, acc, env, e.to_string()),
    };
    for k in 0..cfg.warmup + cfg.length {
        let scored = k >= cfg.warmup;
        if scored || !env.warmup_action(&obs, &mut actions) {
            if let Err(e) = policy.act(&obs, &mut actions) {
                return fail(trace, acc, env, e.to_string());
            }
        }
        let outcome = match env.step(&actions) {
            Ok(o) => o,
            Err(e) => return fail(trace, acc, env, e.to_string()),
        };
        if scored {
            let c = &outcome.costs;
            let reward = clipped_reward(c.energy_loss, c.penalty, c.collapsed);
            acc.push(c, reward);
            if keep_trace {
                trace.push(TraceRow {
                    step: obs.step,
                    observation: obs.values.clone(),
                    actions: actions.clone(),
                    costs: *c,
                    reward,
                    clamped: outcome.clamped,
                });
            }
        }
        if outcome.costs.collapsed {
            break;
        }
        obs = outcome.observation;
    }
    EvalReport {
        config: *cfg,
        trace,
        summary: acc.finish(env.cost_normalization()),
        error: None,
    }
}

/// One CSV row per scored step: step, features, actions, cost terms.
pub fn write_trace_csv<W: Write>(
    report: &EvalReport,
    features: &[FeatureSpec],
    actions: &[ActionSpec],
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string()];
    header.extend(features.iter().map(|f| format!("obs_{}", f.name)));
    header.extend(actions.iter().map(|a| format!("action_{}", a.name)));
    header.extend(
        [
            "energy_loss",
            "penalty",
            "price",
            "energy",
            "discomfort",
            "collapsed",
            "reward",
            "clamped",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for row in &report.trace {
        let mut rec = vec![row.step.to_string()];
        rec.extend(row.observation.iter().map(|v| v.to_string()));
        rec.extend(row.actions.iter().map(|v| v.to_string()));
        let c = &row.costs;
        rec.extend([
            c.energy_loss.to_string(),
            c.penalty.to_string(),
            c.price.to_string(),
            c.energy.to_string(),
            c.discomfort.to_string(),
            c.collapsed.to_string(),
            row.reward.to_string(),
            row.clamped.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
