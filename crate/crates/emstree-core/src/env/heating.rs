//! Surrogate of a single-zone house heated by a modulating heat pump.
//!
//! The envelope is a first-order RC network integrated exactly over each
//! 15-minute step with inputs held constant, so a constant-input rollout
//! reproduces the continuous solution `T_ss + (T0 − T_ss)·exp(−t/RC)`.
//! Exogenous series (outdoor temperature, solar gain, price) are hourly and
//! cover one year starting at midnight on January 1.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::objective::band_distance;
use super::{EnvError, Environment, EpisodeConfig, Objective, Observation, Policy, StepCosts, StepOutcome};
use crate::seed;
use crate::tree::{ActionSpec, EvalError, FeatureSpec};

pub const STEPS_PER_HOUR: usize = 4;
pub const STEPS_PER_DAY: usize = 96;
pub const STEP_HOURS: f64 = 0.25;
pub const HOURS_PER_YEAR: usize = 8760;
pub const PERIOD_DAYS: usize = 14;
/// Days between the start of the training window and the validation
/// period it precedes.
pub const TRAINING_OFFSET_DAYS: usize = 15;
pub const WARMUP_DAYS: usize = 1;
pub const MODULATION_LEVELS: usize = 11;

pub const FEATURE_NAMES: [&str; 5] = ["price", "t_in", "lower_band", "upper_band", "time_of_week"];
const T_IN: usize = 1;

const WEATHER_SALT: u64 = 0x7765_6174;
const PRICE_SALT: u64 = 0x7072_6963;

#[derive(Debug, thiserror::Error)]
pub enum HeatingConfigError {
    #[error("invalid heating config: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: expected {expected} hourly rows, found {found}")]
    SeriesLength {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum CopModel {
    Constant { value: f64 },
    /// `max(floor, intercept + slope·T_out)`.
    Affine { intercept: f64, slope: f64, floor: f64 },
}

impl CopModel {
    pub fn cop(&self, t_out: f64) -> f64 {
        match *self {
            CopModel::Constant { value } => value,
            CopModel::Affine {
                intercept,
                slope,
                floor,
            } => (intercept + slope * t_out).max(floor),
        }
    }

    pub fn affine_default() -> Self {
        CopModel::Affine {
            intercept: 6.0,
            slope: 0.1,
            floor: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HouseConfig {
    /// Envelope resistance, K/kW.
    pub resistance: f64,
    /// Thermal capacitance, kWh/K.
    pub capacitance: f64,
    /// Heat delivered at full modulation, kW.
    pub nominal_power: f64,
    pub cop: CopModel,
    /// Fan and circulation pump draw while the heat pump runs, kW.
    pub auxiliary_power: f64,
    pub floor_area: f64,
    pub initial_temperature: f64,
}

impl Default for HouseConfig {
    fn default() -> Self {
        Self {
            resistance: 5.0,
            capacitance: 10.0,
            nominal_power: 15.0,
            cop: CopModel::Constant { value: 3.0 },
            auxiliary_power: 0.1,
            floor_area: 192.0,
            initial_temperature: 21.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PricingScenario {
    Constant,
    Dynamic,
    HighlyDynamic,
}

impl PricingScenario {
    pub const ALL: [PricingScenario; 3] = [
        PricingScenario::Constant,
        PricingScenario::Dynamic,
        PricingScenario::HighlyDynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PricingScenario::Constant => "constant",
            PricingScenario::Dynamic => "dynamic",
            PricingScenario::HighlyDynamic => "highly_dynamic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PricingConfig {
    pub constant: f64,
    pub on_peak: f64,
    pub off_peak: f64,
    /// On-peak window `[peak_start, peak_end)`, hours.
    pub peak_start: f64,
    pub peak_end: f64,
    /// Quantile knots `(q, price)` of the synthetic highly dynamic series.
    pub quantiles: Vec<(f64, f64)>,
    /// Hourly `(hour, price)` series replacing the synthetic one.
    pub highly_dynamic_csv: Option<PathBuf>,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            constant: 0.2535,
            on_peak: 0.2666,
            off_peak: 0.2383,
            peak_start: 7.0,
            peak_end: 22.0,
            quantiles: vec![
                (0.0, 0.18),
                (0.25, 0.2317),
                (0.5, 0.2389),
                (0.75, 0.2392),
                (1.0, 0.32),
            ],
            highly_dynamic_csv: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComfortSchedule {
    pub occupied: (f64, f64),
    pub unoccupied: (f64, f64),
    /// Weekday occupancy ends at this hour ...
    pub occupied_until: f64,
    /// ... and resumes at this one.
    pub occupied_from: f64,
    /// Weekday of January 1, Monday = 0.
    pub first_weekday: usize,
}

impl Default for ComfortSchedule {
    fn default() -> Self {
        Self {
            occupied: (21.0, 24.0),
            unoccupied: (15.0, 30.0),
            occupied_until: 7.0,
            occupied_from: 20.0,
            first_weekday: 1,
        }
    }
}

impl ComfortSchedule {
    pub fn weekday(&self, day: usize) -> usize {
        (day + self.first_weekday) % 7
    }

    pub fn is_occupied(&self, day: usize, hour: f64) -> bool {
        self.weekday(day) >= 5 || hour < self.occupied_until || hour >= self.occupied_from
    }

    /// Active band at absolute step `step`.
    pub fn band(&self, step: usize) -> (f64, f64) {
        let day = step / STEPS_PER_DAY;
        let hour = (step % STEPS_PER_DAY) as f64 * STEP_HOURS;
        if self.is_occupied(day, hour) {
            self.occupied
        } else {
            self.unoccupied
        }
    }

    /// Hours since Monday 00:00.
    pub fn time_of_week(&self, step: usize) -> f64 {
        let day = step / STEPS_PER_DAY;
        (self.weekday(day) * 24) as f64 + (step % STEPS_PER_DAY) as f64 * STEP_HOURS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeatherConfig {
    pub seed: u64,
    /// Annual mean outdoor temperature, °C.
    pub mean: f64,
    pub seasonal_amplitude: f64,
    /// Day of year with the lowest seasonal temperature.
    pub coldest_day: f64,
    pub daily_amplitude: f64,
    /// Stationary standard deviation of the hourly AR(1) noise, K.
    pub noise: f64,
    pub noise_correlation: f64,
    /// Clear-sky solar gain at noon in winter and in summer, kW.
    pub solar_winter: f64,
    pub solar_summer: f64,
    /// Hourly `(hour, t_out, solar)` series replacing the synthetic one.
    pub csv: Option<PathBuf>,
}

impl Default for WeatherConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mean: 9.0,
            seasonal_amplitude: 9.0,
            coldest_day: 20.0,
            daily_amplitude: 3.0,
            noise: 2.0,
            noise_correlation: 0.95,
            solar_winter: 1.0,
            solar_summer: 3.0,
            csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatingConfig {
    pub house: HouseConfig,
    pub pricing: PricingConfig,
    pub comfort: ComfortSchedule,
    pub weather: WeatherConfig,
    /// Baseline thermostat switches on below this temperature.
    pub thermostat_setpoint: f64,
}

impl Default for HeatingConfig {
    fn default() -> Self {
        Self {
            house: HouseConfig::default(),
            pricing: PricingConfig::default(),
            comfort: ComfortSchedule::default(),
            weather: WeatherConfig::default(),
            thermostat_setpoint: 21.2,
        }
    }
}

impl HeatingConfig {
    pub fn validate(&self) -> Result<(), HeatingConfigError> {
        let bad = |m: &str| Err(HeatingConfigError::Invalid(m.to_string()));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let h = &self.house;
        if !pos(h.resistance) || !pos(h.capacitance) {
            return bad("house resistance and capacitance must be positive");
        }
        if !pos(h.nominal_power) || !pos(h.floor_area) {
            return bad("nominal power and floor area must be positive");
        }
        if !(h.auxiliary_power.is_finite() && h.auxiliary_power >= 0.0) {
            return bad("auxiliary power must be non-negative");
        }
        let cop_ok = match h.cop {
            CopModel::Constant { value } => value.is_finite() && value >= 1.0,
            CopModel::Affine {
                intercept,
                slope,
                floor,
            } => intercept.is_finite() && slope.is_finite() && floor >= 1.0,
        };
        if !cop_ok {
            return bad("COP must be at least 1");
        }
        let p = &self.pricing;
        if ![p.constant, p.on_peak, p.off_peak].into_iter().all(pos) {
            return bad("prices must be positive");
        }
        let q = &p.quantiles;
        if q.len() < 2
            || q[0].0 != 0.0
            || q[q.len() - 1].0 != 1.0
            || q.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 < w[0].1)
            || q.iter().any(|k| !pos(k.1))
        {
            return bad("price quantiles must run from q=0 to q=1 with increasing q and non-decreasing positive prices");
        }
        let c = &self.comfort;
        if c.occupied.0 >= c.occupied.1 || c.unoccupied.0 >= c.unoccupied.1 {
            return bad("comfort bands need lower < upper");
        }
        if c.first_weekday > 6 {
            return bad("first_weekday must be 0..=6");
        }
        let w = &self.weather;
        if !(0.0..1.0).contains(&w.noise_correlation) || w.noise < 0.0 {
            return bad("weather noise must be non-negative with correlation in [0, 1)");
        }
        Ok(())
    }
}

/// Hourly exogenous series over one year.
#[derive(Debug, Clone, PartialEq)]
pub struct Exogenous {
    pub t_out: Vec<f64>,
    pub solar: Vec<f64>,
    /// Hourly prices for each scenario, indexed like [`PricingScenario::ALL`].
    pub prices: [Vec<f64>; 3],
}

fn read_hourly(path: &Path, columns: usize) -> Result<Vec<Vec<f64>>, HeatingConfigError> {
    let wrap = |source| HeatingConfigError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(wrap)?;
    let mut rows = Vec::new();
    for rec in reader.deserialize::<Vec<f64>>() {
        let rec = rec.map_err(wrap)?;
        if rec.len() != columns + 1 {
            return Err(HeatingConfigError::Invalid(format!(
                "{}: expected {} columns, found {}",
                path.display(),
                columns + 1,
                rec.len()
            )));
        }
        rows.push(rec[1..].to_vec());
    }
    if rows.len() != HOURS_PER_YEAR {
        return Err(HeatingConfigError::SeriesLength {
            path: path.to_path_buf(),
            expected: HOURS_PER_YEAR,
            found: rows.len(),
        });
    }
    Ok(rows)
}

fn seasonal(day: f64, coldest: f64) -> f64 {
    -(2.0 * std::f64::consts::PI * (day - coldest) / 365.0).cos()
}

/// Synthetic outdoor temperature and solar gain.
pub fn synthetic_weather(w: &WeatherConfig) -> (Vec<f64>, Vec<f64>) {
    let mut rng = seed::rng(seed::derive(w.seed, WEATHER_SALT));
    let innovation = w.noise * (1.0 - w.noise_correlation.powi(2)).sqrt();
    let mut noise = 0.0;
    let mut t_out = Vec::with_capacity(HOURS_PER_YEAR);
    let mut solar = Vec::with_capacity(HOURS_PER_YEAR);
    let mut cloud = 1.0;
    for h in 0..HOURS_PER_YEAR {
        let day = (h / 24) as f64;
        let hour = (h % 24) as f64;
        if h % 24 == 0 {
            cloud = rng.random_range(0.3..=1.0);
        }
        let z: f64 = rng.sample(StandardNormal);
        noise = w.noise_correlation * noise + innovation * z;
        let s = seasonal(day, w.coldest_day);
        let daily = (2.0 * std::f64::consts::PI * (hour - 15.0) / 24.0).cos();
        t_out.push(w.mean + w.seasonal_amplitude * s + w.daily_amplitude * daily + noise);

        // Day length from 8 h in winter to 16 h in summer, centred on noon.
        let daylen = 12.0 - 4.0 * -s;
        let peak = 0.5 * (w.solar_winter + w.solar_summer) + 0.5 * (w.solar_summer - w.solar_winter) * s;
        let x = (hour + 0.5 - (12.0 - daylen / 2.0)) / daylen;
        let clear = if (0.0..=1.0).contains(&x) {
            (std::f64::consts::PI * x).sin()
        } else {
            0.0
        };
        solar.push(peak * clear * cloud);
    }
    (t_out, solar)
}

/// Piecewise-linear inverse CDF through `(q, value)` knots.
fn inverse_cdf(knots: &[(f64, f64)], q: f64) -> f64 {
    let i = knots
        .windows(2)
        .position(|w| q <= w[1].0)
        .unwrap_or(knots.len() - 2);
    let (a, b) = (knots[i], knots[i + 1]);
    a.1 + (q - a.0) / (b.0 - a.0) * (b.1 - a.1)
}

/// Hourly series with a morning and an evening hump plus noise, mapped by
/// rank onto the configured price quantiles.
pub fn synthetic_highly_dynamic(pricing: &PricingConfig, weather_seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive(weather_seed, PRICE_SALT));
    let raw: Vec<f64> = (0..HOURS_PER_YEAR)
        .map(|h| {
            let hour = (h % 24) as f64;
            let hump = |c: f64, w: f64| (-((hour - c) / w).powi(2)).exp();
            let z: f64 = rng.sample(StandardNormal);
            hump(8.0, 2.0) + 1.3 * hump(19.0, 2.5) + 0.6 * z
        })
        .collect();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
    let mut prices = vec![0.0; raw.len()];
    let last = (raw.len() - 1) as f64;
    for (rank, &h) in order.iter().enumerate() {
        prices[h] = inverse_cdf(&pricing.quantiles, rank as f64 / last);
    }
    prices
}

impl Exogenous {
    pub fn build(cfg: &HeatingConfig) -> Result<Self, HeatingConfigError> {
        let (t_out, solar) = match &cfg.weather.csv {
            Some(path) => {
                let rows = read_hourly(path, 2)?;
                (rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
            }
            None => synthetic_weather(&cfg.weather),
        };
        let p = &cfg.pricing;
        let constant = vec![p.constant; HOURS_PER_YEAR];
        let dynamic = (0..HOURS_PER_YEAR)
            .map(|h| {
                let hour = (h % 24) as f64;
                if hour >= p.peak_start && hour < p.peak_end {
                    p.on_peak
                } else {
                    p.off_peak
                }
            })
            .collect();
        let highly = match &p.highly_dynamic_csv {
            Some(path) => read_hourly(path, 1)?.into_iter().map(|r| r[0]).collect(),
            None => synthetic_highly_dynamic(p, cfg.weather.seed),
        };
        Ok(Self {
            t_out,
            solar,
            prices: [constant, dynamic, highly],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    /// January 17 to 31.
    Peak,
    /// April 19 to May 3.
    Typical,
}

impl Period {
    pub const ALL: [Period; 2] = [Period::Peak, Period::Typical];

    /// Zero-based day of year on which validation starts.
    pub fn first_day(self) -> usize {
        match self {
            Period::Peak => 16,
            Period::Typical => 108,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Period::Peak => "peak",
            Period::Typical => "typical",
        }
    }

    fn episode(first_day: usize) -> EpisodeConfig {
        EpisodeConfig {
            start: (first_day - WARMUP_DAYS) * STEPS_PER_DAY,
            length: PERIOD_DAYS * STEPS_PER_DAY,
            warmup: WARMUP_DAYS * STEPS_PER_DAY,
            seed: 0,
        }
    }

    /// Validation period preceded by one warm-up day.
    pub fn validation(self) -> EpisodeConfig {
        Self::episode(self.first_day())
    }

    /// Training window starting 15 days before validation, preceded by one
    /// warm-up day.
    pub fn training(self) -> EpisodeConfig {
        Self::episode(self.first_day() - TRAINING_OFFSET_DAYS)
    }
}

/// Bang-bang heating on one temperature threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermostatPolicy {
    pub setpoint: f64,
}

impl ThermostatPolicy {
    pub fn modulation(&self, t_in: f64) -> f64 {
        if t_in < self.setpoint {
            1.0
        } else {
            0.0
        }
    }
}

impl Policy for ThermostatPolicy {
    fn act(&mut self, obs: &Observation, out: &mut [f64]) -> Result<(), EvalError> {
        if out.len() != 1 {
            return Err(EvalError::ChannelCount {
                expected: 1,
                actual: out.len(),
            });
        }
        out[0] = self.modulation(obs.values[T_IN]);
        Ok(())
    }
}

/// Immutable data shared by every instance for one pricing scenario.
#[derive(Debug)]
pub struct HeatingModel {
    pub config: HeatingConfig,
    pub scenario: PricingScenario,
    exogenous: Arc<Exogenous>,
    features: Vec<FeatureSpec>,
    actions: Vec<ActionSpec>,
    decay: f64,
}

pub fn features() -> Vec<FeatureSpec> {
    let ranges = [(0.15, 0.35), (15.0, 27.0), (15.0, 21.0), (24.0, 30.0), (0.0, 168.0)];
    FEATURE_NAMES
        .iter()
        .zip(ranges)
        .map(|(n, (lo, hi))| FeatureSpec::new(*n, lo, hi).expect("ranges are ordered"))
        .collect()
}

pub fn actions() -> Vec<ActionSpec> {
    vec![ActionSpec::levels("modulation", 0.0, 1.0, MODULATION_LEVELS).expect("valid levels")]
}

impl HeatingModel {
    pub fn new(config: HeatingConfig, scenario: PricingScenario) -> Result<Arc<Self>, HeatingConfigError> {
        config.validate()?;
        let exogenous = Arc::new(Exogenous::build(&config)?);
        Ok(Self::with_exogenous(config, scenario, exogenous))
    }

    /// Shares already built series between scenarios.
    pub fn with_exogenous(config: HeatingConfig, scenario: PricingScenario, exogenous: Arc<Exogenous>) -> Arc<Self> {
        let h = &config.house;
        let decay = (-STEP_HOURS / (h.resistance * h.capacitance)).exp();
        Arc::new(Self {
            config,
            scenario,
            exogenous,
            features: features(),
            actions: actions(),
            decay,
        })
    }

    pub fn exogenous(&self) -> &Arc<Exogenous> {
        &self.exogenous
    }

    pub fn horizon(&self) -> usize {
        self.exogenous.t_out.len() * STEPS_PER_HOUR
    }

    pub fn price(&self, step: usize) -> f64 {
        let idx = PricingScenario::ALL
            .iter()
            .position(|s| *s == self.scenario)
            .expect("scenario is listed");
        self.exogenous.prices[idx][step / STEPS_PER_HOUR]
    }

    pub fn outdoor(&self, step: usize) -> (f64, f64) {
        let h = step / STEPS_PER_HOUR;
        (self.exogenous.t_out[h], self.exogenous.solar[h])
    }

    /// Indoor temperature after one step from `t_in` under constant inputs.
    pub fn advance(&self, t_in: f64, t_out: f64, heat: f64) -> f64 {
        let steady = t_out + self.config.house.resistance * heat;
        steady + (t_in - steady) * self.decay
    }

    pub fn observe(&self, step: usize, t_in: f64) -> Observation {
        let (lo, hi) = self.config.comfort.band(step);
        Observation {
            step,
            values: vec![
                self.price(step),
                t_in,
                lo,
                hi,
                self.config.comfort.time_of_week(step),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingState {
    pub step: usize,
    pub t_in: f64,
}

#[derive(Debug, Clone)]
pub struct HeatingEnv {
    model: Arc<HeatingModel>,
    state: Option<HeatingState>,
}

impl HeatingEnv {
    pub fn new(model: Arc<HeatingModel>) -> Self {
        Self { model, state: None }
    }

    pub fn model(&self) -> &Arc<HeatingModel> {
        &self.model
    }

    pub fn state(&self) -> Option<&HeatingState> {
        self.state.as_ref()
    }

    pub fn thermostat(&self) -> ThermostatPolicy {
        ThermostatPolicy {
            setpoint: self.model.config.thermostat_setpoint,
        }
    }
}

impl Environment for HeatingEnv {
    fn features(&self) -> &[FeatureSpec] {
        &self.model.features
    }

    fn actions(&self) -> &[ActionSpec] {
        &self.model.actions
    }

    fn objective(&self) -> Objective {
        Objective::Weighted
    }

    fn cost_normalization(&self) -> f64 {
        self.model.config.house.floor_area
    }

    fn reset(&mut self, cfg: &EpisodeConfig) -> Result<Observation, EnvError> {
        let horizon = self.model.horizon();
        let end = cfg.start + cfg.warmup + cfg.length;
        if end > horizon {
            return Err(EnvError::Horizon { step: end, horizon });
        }
        let s = HeatingState {
            step: cfg.start,
            t_in: self.model.config.house.initial_temperature,
        };
        self.state = Some(s);
        Ok(self.model.observe(s.step, s.t_in))
    }

    fn step(&mut self, actions: &[f64]) -> Result<StepOutcome, EnvError> {
        if actions.len() != 1 {
            return Err(EnvError::ActionCount {
                expected: 1,
                actual: actions.len(),
            });
        }
        let m = &self.model;
        let s = self.state.as_mut().ok_or(EnvError::NotReset)?;
        if s.step >= m.horizon() {
            return Err(EnvError::Horizon {
                step: s.step,
                horizon: m.horizon(),
            });
        }
        let (u, clamped) = m.actions[0].snap(actions[0]);
        let house = &m.config.house;
        let (t_out, solar) = m.outdoor(s.step);
        let q_hp = u * house.nominal_power;
        let aux = if u > 0.0 { house.auxiliary_power } else { 0.0 };
        let energy = (q_hp / house.cop.cop(t_out) + aux) * STEP_HOURS;
        let price = m.price(s.step);

        s.t_in = m.advance(s.t_in, t_out, q_hp + solar);
        s.step += 1;
        let (lo, hi) = m.config.comfort.band(s.step);
        let discomfort = band_distance(s.t_in, lo, hi) * STEP_HOURS;
        Ok(StepOutcome {
            observation: m.observe(s.step, s.t_in),
            costs: StepCosts {
                price,
                energy,
                discomfort,
                ..StepCosts::default()
            },
            clamped,
        })
    }

    fn warmup_action(&self, obs: &Observation, out: &mut [f64]) -> bool {
        out[0] = self.thermostat().modulation(obs.values[T_IN]);
        true
    }
}
