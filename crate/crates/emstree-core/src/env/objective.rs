//! Per-step reward and episode-level scores. All of them are costs: lower
//! is better.

/// Reward assigned to the step at which the grid collapses.
pub const COLLAPSE_REWARD: f64 = 20_000.0;
pub const REWARD_CLIP: f64 = 100.0;
/// Weight of the constraint penalty relative to the energy loss.
pub const PENALTY_WEIGHT: f64 = 1000.0;
pub const DISCOUNT: f64 = 0.995;
/// Horizon of the discounted validation score.
pub const VALIDATION_STEPS: usize = 3000;
/// Horizon of the undiscounted training sum on the grid case.
pub const TRAINING_STEPS: usize = 300;
/// Weight on total discomfort (Kh).
pub const DISCOMFORT_WEIGHT: f64 = 100.0;
/// Weight on normalized electricity cost (EUR/m²).
pub const COST_WEIGHT: f64 = 192.0;

/// `clip(ΔE + 1000·φ, −100, 100)`, or 20 000 on collapse.
pub fn clipped_reward(energy_loss: f64, penalty: f64, collapsed: bool) -> f64 {
    if collapsed {
        COLLAPSE_REWARD
    } else {
        (energy_loss + PENALTY_WEIGHT * penalty).clamp(-REWARD_CLIP, REWARD_CLIP)
    }
}

/// `Σ r_t · 0.995^t`.
pub fn discounted_score(rewards: &[f64]) -> f64 {
    let mut factor = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += r * factor;
        factor *= DISCOUNT;
    }
    total
}

/// Plain sum of rewards.
pub fn training_sum(rewards: &[f64]) -> f64 {
    rewards.iter().sum()
}

/// `Σ p_t · e_t` over `(price, energy)` pairs.
pub fn electricity_cost(price_energy: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    price_energy.into_iter().map(|(p, e)| p * e).sum()
}

/// `Σ δ_t`.
pub fn total_discomfort(discomfort: impl IntoIterator<Item = f64>) -> f64 {
    discomfort.into_iter().sum()
}

/// `100·D + 192·E`.
pub fn weighted_objective(discomfort: f64, cost: f64) -> f64 {
    DISCOMFORT_WEIGHT * discomfort + COST_WEIGHT * cost
}

/// Distance from `value` to the band `[lower, upper]`; zero inside.
pub fn band_distance(value: f64, lower: f64, upper: f64) -> f64 {
    if value < lower {
        lower - value
    } else if value > upper {
        value - upper
    } else {
        0.0
    }
}
