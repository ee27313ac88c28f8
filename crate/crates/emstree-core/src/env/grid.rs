//! Surrogate of a six-device distribution feeder: three loads, curtailable
//! PV and wind, a battery, and a slack connection to the upstream grid.
//!
//! Losses are quadratic in branch apparent power. Constraint violations are
//! branch overloads plus a voltage surrogate that penalizes net reactive
//! power drawn through the slack beyond a deadband. The grid collapses when
//! the penalty stays above a threshold for several consecutive steps.
//! Power values are in MW / MVAr, energies in per-unit hours on the system
//! base.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EnvError, Environment, EpisodeConfig, Objective, Observation, StepCosts, StepOutcome};
use crate::seed;
use crate::tree::{ActionSpec, FeatureSpec};

pub const STEPS_PER_DAY: usize = 96;
pub const STEP_HOURS: f64 = 0.25;
const START_SALT: u64 = 0x6772_6964;

pub const FEATURE_NAMES: [&str; 18] = [
    "p_industrial",
    "q_industrial",
    "p_residential",
    "q_residential",
    "p_ev",
    "q_ev",
    "p_pv",
    "q_pv",
    "p_wind",
    "q_wind",
    "p_battery",
    "q_battery",
    "p_slack",
    "q_slack",
    "pv_potential",
    "wind_potential",
    "soc",
    "time_of_day",
];

pub const ACTION_NAMES: [&str; 6] = ["pv_p", "pv_q", "wind_p", "wind_q", "battery_p", "battery_q"];

#[derive(Debug, thiserror::Error)]
pub enum GridConfigError {
    #[error("invalid grid config: {0}")]
    Invalid(String),
    #[error("profile CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Exogenous powers at one hour of the day, MW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilePoint {
    pub hour: f64,
    pub industrial: f64,
    pub residential: f64,
    pub ev: f64,
    pub pv: f64,
    pub wind: f64,
}

impl ProfilePoint {
    const fn new(hour: f64, industrial: f64, residential: f64, ev: f64, pv: f64, wind: f64) -> Self {
        Self {
            hour,
            industrial,
            residential,
            ev,
            pv,
            wind,
        }
    }

    fn lerp(&self, other: &Self, w: f64) -> Self {
        let f = |a: f64, b: f64| a + w * (b - a);
        Self {
            hour: f(self.hour, other.hour),
            industrial: f(self.industrial, other.industrial),
            residential: f(self.residential, other.residential),
            ev: f(self.ev, other.ev),
            pv: f(self.pv, other.pv),
            wind: f(self.wind, other.wind),
        }
    }
}

/// Windy night, morning and evening peaks, sunny working hours.
pub fn default_profile() -> Vec<ProfilePoint> {
    let night = |h| ProfilePoint::new(h, 4.0, 3.0, 0.0, 0.0, 32.0);
    let peak = |h| ProfilePoint::new(h, 12.0, 16.0, 24.0, 4.0, 4.0);
    let work = |h| ProfilePoint::new(h, 24.0, 4.0, 0.0, 34.0, 26.0);
    vec![
        night(6.0),
        peak(8.0),
        peak(11.0),
        work(13.0),
        work(16.0),
        peak(18.0),
        peak(21.0),
        night(23.0),
    ]
}

/// Reads `hour,industrial,residential,ev,pv,wind` rows.
pub fn read_profile_csv(path: &Path) -> Result<Vec<ProfilePoint>, GridConfigError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<ProfilePoint>, _>>()?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryConfig {
    pub capacity_mwh: f64,
    /// Initial state of charge as a fraction of capacity.
    pub initial_soc: f64,
    pub max_p: f64,
    pub max_q: f64,
    pub round_trip_efficiency: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            capacity_mwh: 100.0,
            initial_soc: 0.5,
            max_p: 30.0,
            max_q: 15.0,
            round_trip_efficiency: 0.92,
        }
    }
}

impl BatteryConfig {
    /// One-way efficiency.
    pub fn eta(&self) -> f64 {
        self.round_trip_efficiency.sqrt()
    }
}

/// Apparent-power limit of each branch, MVA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchLimits {
    pub industrial: f64,
    pub residential: f64,
    pub ev: f64,
    pub pv: f64,
    pub wind: f64,
    pub battery: f64,
    pub main: f64,
}

impl Default for BranchLimits {
    fn default() -> Self {
        Self {
            industrial: 40.0,
            residential: 40.0,
            ev: 40.0,
            pv: 30.0,
            wind: 28.0,
            battery: 35.0,
            main: 50.0,
        }
    }
}

impl BranchLimits {
    fn as_array(&self) -> [f64; 7] {
        [
            self.industrial,
            self.residential,
            self.ev,
            self.pv,
            self.wind,
            self.battery,
            self.main,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub base_mva: f64,
    pub profile: Vec<ProfilePoint>,
    /// CSV file replacing `profile` when set.
    pub profile_csv: Option<PathBuf>,
    /// Reactive-to-real power ratio of the industrial, residential and EV
    /// loads.
    pub load_q_ratio: [f64; 3],
    /// Upper bound of the PV and wind curtailment setpoints, MW.
    pub renewable_max_p: f64,
    pub renewable_max_q: f64,
    pub battery: BatteryConfig,
    pub limits: BranchLimits,
    /// Loss coefficient per device branch and for the main line, per unit.
    pub device_loss: f64,
    pub main_loss: f64,
    /// Count curtailed renewable energy as a loss.
    pub curtailment_loss: bool,
    pub voltage_deadband_pu: f64,
    pub voltage_coefficient: f64,
    pub collapse_threshold: f64,
    pub collapse_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            base_mva: 100.0,
            profile: default_profile(),
            profile_csv: None,
            load_q_ratio: [0.3, 0.25, 0.2],
            renewable_max_p: 40.0,
            renewable_max_q: 15.0,
            battery: BatteryConfig::default(),
            limits: BranchLimits::default(),
            device_loss: 0.01,
            main_loss: 0.02,
            curtailment_loss: true,
            voltage_deadband_pu: 0.05,
            voltage_coefficient: 125.0,
            collapse_threshold: 5.0,
            collapse_steps: 3,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), GridConfigError> {
        let bad = |m: &str| Err(GridConfigError::Invalid(m.to_string()));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !pos(self.base_mva) {
            return bad("base_mva must be positive");
        }
        if self.profile.is_empty() {
            return bad("profile is empty");
        }
        for (i, p) in self.profile.iter().enumerate() {
            if !(0.0..24.0).contains(&p.hour) {
                return bad("profile hours must lie in [0, 24)");
            }
            if i > 0 && p.hour <= self.profile[i - 1].hour {
                return bad("profile hours must be strictly increasing");
            }
            if ![p.industrial, p.residential, p.ev, p.pv, p.wind]
                .into_iter()
                .all(nonneg)
            {
                return bad("profile powers must be finite and non-negative");
            }
        }
        if !self.load_q_ratio.into_iter().all(nonneg) {
            return bad("load_q_ratio must be non-negative");
        }
        if !pos(self.renewable_max_p) || !pos(self.renewable_max_q) {
            return bad("renewable action limits must be positive");
        }
        let b = &self.battery;
        if !pos(b.capacity_mwh) || !pos(b.max_p) || !pos(b.max_q) {
            return bad("battery limits must be positive");
        }
        if !(0.0..=1.0).contains(&b.initial_soc) {
            return bad("battery.initial_soc must lie in [0, 1]");
        }
        if !(b.round_trip_efficiency > 0.0 && b.round_trip_efficiency <= 1.0) {
            return bad("battery.round_trip_efficiency must lie in (0, 1]");
        }
        if !self.limits.as_array().into_iter().all(pos) {
            return bad("branch limits must be positive");
        }
        if ![
            self.device_loss,
            self.main_loss,
            self.voltage_deadband_pu,
            self.voltage_coefficient,
        ]
        .into_iter()
        .all(nonneg)
        {
            return bad("loss and voltage coefficients must be non-negative");
        }
        if !pos(self.collapse_threshold) || self.collapse_steps == 0 {
            return bad("collapse threshold and step count must be positive");
        }
        Ok(())
    }

    /// Exogenous powers at `hour`, interpolated linearly and periodic over
    /// a day.
    pub fn profile_at(&self, hour: f64) -> ProfilePoint {
        let hour = hour.rem_euclid(24.0);
        let pts = &self.profile;
        let next = pts.iter().position(|p| p.hour > hour).unwrap_or(pts.len());
        let (a, b, span) = if next == 0 || next == pts.len() {
            let a = pts[pts.len() - 1];
            let b = pts[0];
            (a, b, b.hour + 24.0 - a.hour)
        } else {
            (pts[next - 1], pts[next], pts[next].hour - pts[next - 1].hour)
        };
        let offset = (hour - a.hour).rem_euclid(24.0);
        let w = if span > 0.0 { offset / span } else { 0.0 };
        let mut p = a.lerp(&b, w);
        p.hour = hour;
        p
    }

    pub fn features(&self) -> Vec<FeatureSpec> {
        let r = self.renewable_max_p;
        let rq = self.renewable_max_q;
        let b = &self.battery;
        let load_p = self
            .profile
            .iter()
            .map(|p| p.industrial.max(p.residential).max(p.ev))
            .fold(1.0, f64::max);
        let load_q = load_p * self.load_q_ratio.into_iter().fold(0.0, f64::max);
        let slack_p = 2.0 * self.limits.main;
        let ranges = [
            (-load_p, 0.0),
            (-load_q.max(1.0), 0.0),
            (-load_p, 0.0),
            (-load_q.max(1.0), 0.0),
            (-load_p, 0.0),
            (-load_q.max(1.0), 0.0),
            (0.0, r),
            (-rq, rq),
            (0.0, r),
            (-rq, rq),
            (-b.max_p, b.max_p),
            (-b.max_q, b.max_q),
            (-slack_p, slack_p),
            (-self.limits.main, self.limits.main),
            (0.0, r),
            (0.0, r),
            (0.0, b.capacity_mwh),
            (0.0, 24.0),
        ];
        FEATURE_NAMES
            .iter()
            .zip(ranges)
            .map(|(n, (lo, hi))| FeatureSpec::new(*n, lo, hi).expect("ranges are ordered"))
            .collect()
    }

    pub fn actions(&self) -> Vec<ActionSpec> {
        let r = self.renewable_max_p;
        let rq = self.renewable_max_q;
        let b = &self.battery;
        let ranges = [(0.0, r), (-rq, rq), (0.0, r), (-rq, rq), (-b.max_p, b.max_p), (-b.max_q, b.max_q)];
        ACTION_NAMES
            .iter()
            .zip(ranges)
            .map(|(n, (lo, hi))| ActionSpec::continuous(*n, lo, hi).expect("ranges are ordered"))
            .collect()
    }
}

/// Start step within the day for a validation seed.
pub fn start_step(seed: u64) -> usize {
    (seed::derive(seed, START_SALT) % STEPS_PER_DAY as u64) as usize
}

/// Dynamic state between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    /// Absolute step index.
    pub step: usize,
    /// Stored energy, MWh.
    pub soc: f64,
    /// Previous-step injections (loads negative) of industrial, residential,
    /// EV, PV, wind, battery and slack.
    pub p: [f64; 7],
    pub q: [f64; 7],
    /// Consecutive steps with penalty above the collapse threshold.
    pub violation_run: usize,
}

/// Immutable data shared by every instance built from one config.
#[derive(Debug)]
pub struct GridModel {
    pub config: GridConfig,
    features: Vec<FeatureSpec>,
    actions: Vec<ActionSpec>,
    day: Vec<ProfilePoint>,
}

impl GridModel {
    pub fn new(mut config: GridConfig) -> Result<Arc<Self>, GridConfigError> {
        if let Some(path) = config.profile_csv.take() {
            config.profile = read_profile_csv(&path)?;
        }
        config.validate()?;
        let day = (0..STEPS_PER_DAY)
            .map(|k| config.profile_at(k as f64 * STEP_HOURS))
            .collect();
        Ok(Arc::new(Self {
            features: config.features(),
            actions: config.actions(),
            config,
            day,
        }))
    }

    pub fn exogenous(&self, step: usize) -> &ProfilePoint {
        &self.day[step % STEPS_PER_DAY]
    }

    fn load_injections(&self, step: usize) -> ([f64; 3], [f64; 3]) {
        let ex = self.exogenous(step);
        let r = self.config.load_q_ratio;
        let p = [-ex.industrial, -ex.residential, -ex.ev];
        (p, [r[0] * p[0], r[1] * p[1], r[2] * p[2]])
    }

    /// State at `start` with devices at their uncontrolled operating point.
    pub fn initial_state(&self, start: usize) -> GridState {
        let (lp, lq) = self.load_injections(start);
        let ex = self.exogenous(start);
        let mut p = [lp[0], lp[1], lp[2], ex.pv, ex.wind, 0.0, 0.0];
        let mut q = [lq[0], lq[1], lq[2], 0.0, 0.0, 0.0, 0.0];
        p[6] = -p[..6].iter().sum::<f64>();
        q[6] = -q[..6].iter().sum::<f64>();
        GridState {
            step: start,
            soc: self.config.battery.initial_soc * self.config.battery.capacity_mwh,
            p,
            q,
            violation_run: 0,
        }
    }

    pub fn observe(&self, s: &GridState) -> Observation {
        let ex = self.exogenous(s.step);
        let mut values = Vec::with_capacity(18);
        for k in 0..7 {
            values.push(s.p[k]);
            values.push(s.q[k]);
        }
        values.extend([
            ex.pv,
            ex.wind,
            s.soc,
            (s.step % STEPS_PER_DAY) as f64 * STEP_HOURS,
        ]);
        Observation {
            step: s.step,
            values,
        }
    }

    /// Advances `s` by one step; `actions` must already lie in the channel
    /// domains.
    pub fn transition(&self, s: &mut GridState, actions: &[f64; 6]) -> StepCosts {
        let cfg = &self.config;
        let ex = *self.exogenous(s.step);
        let (lp, lq) = self.load_injections(s.step);
        let base = cfg.base_mva;

        let pv = ex.pv.min(actions[0]);
        let wind = ex.wind.min(actions[2]);
        let curtailed = (ex.pv - pv) + (ex.wind - wind);

        let bat = &cfg.battery;
        let eta = bat.eta();
        let (p_bat, bat_loss) = if actions[4] >= 0.0 {
            let p = actions[4].min(s.soc * eta / STEP_HOURS);
            s.soc -= p * STEP_HOURS / eta;
            (p, p * STEP_HOURS * (1.0 / eta - 1.0))
        } else {
            let c = (-actions[4]).min((bat.capacity_mwh - s.soc) / (eta * STEP_HOURS));
            s.soc += eta * c * STEP_HOURS;
            (-c, c * STEP_HOURS * (1.0 - eta))
        };
        s.soc = s.soc.clamp(0.0, bat.capacity_mwh);

        let mut p = [lp[0], lp[1], lp[2], pv, wind, p_bat, 0.0];
        let mut q = [lq[0], lq[1], lq[2], actions[1], actions[3], actions[5], 0.0];
        p[6] = -p[..6].iter().sum::<f64>();
        q[6] = -q[..6].iter().sum::<f64>();

        let limits = cfg.limits.as_array();
        let mut losses = 0.0;
        let mut penalty = 0.0;
        for k in 0..7 {
            let s_mva = p[k].hypot(q[k]);
            let coeff = if k == 6 { cfg.main_loss } else { cfg.device_loss };
            losses += coeff * (s_mva / base).powi(2);
            penalty += ((s_mva - limits[k]) / limits[k]).max(0.0);
        }
        let excess = (q[6].abs() / base - cfg.voltage_deadband_pu).max(0.0);
        penalty += cfg.voltage_coefficient * excess * excess;

        let mut energy_loss = STEP_HOURS * losses + bat_loss / base;
        if cfg.curtailment_loss {
            energy_loss += curtailed * STEP_HOURS / base;
        }

        s.violation_run = if penalty > cfg.collapse_threshold {
            s.violation_run + 1
        } else {
            0
        };
        s.p = p;
        s.q = q;
        s.step += 1;
        StepCosts {
            energy_loss,
            penalty,
            collapsed: s.violation_run >= cfg.collapse_steps,
            ..StepCosts::default()
        }
    }
}

/// One simulation instance; cheap to create from a shared model.
#[derive(Debug, Clone)]
pub struct GridEnv {
    model: Arc<GridModel>,
    state: Option<GridState>,
}

impl GridEnv {
    pub fn new(model: Arc<GridModel>) -> Self {
        Self { model, state: None }
    }

    pub fn model(&self) -> &Arc<GridModel> {
        &self.model
    }

    pub fn state(&self) -> Option<&GridState> {
        self.state.as_ref()
    }
}

impl Environment for GridEnv {
    fn features(&self) -> &[FeatureSpec] {
        &self.model.features
    }

    fn actions(&self) -> &[ActionSpec] {
        &self.model.actions
    }

    fn objective(&self) -> Objective {
        Objective::RewardSum
    }

    fn reset(&mut self, cfg: &EpisodeConfig) -> Result<Observation, EnvError> {
        let s = self.model.initial_state(cfg.start);
        let obs = self.model.observe(&s);
        self.state = Some(s);
        Ok(obs)
    }

    fn step(&mut self, actions: &[f64]) -> Result<StepOutcome, EnvError> {
        if actions.len() != 6 {
            return Err(EnvError::ActionCount {
                expected: 6,
                actual: actions.len(),
            });
        }
        let s = self.state.as_mut().ok_or(EnvError::NotReset)?;
        let mut applied = [0.0; 6];
        let mut clamped = false;
        for (k, spec) in self.model.actions.iter().enumerate() {
            let (v, moved) = spec.snap(actions[k]);
            applied[k] = v;
            clamped |= moved;
        }
        let costs = self.model.transition(s, &applied);
        Ok(StepOutcome {
            observation: self.model.observe(s),
            costs,
            clamped,
        })
    }
}
