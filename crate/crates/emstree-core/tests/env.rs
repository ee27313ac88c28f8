mod common;

use std::sync::Arc;

use emstree_core::env::grid::{self, GridConfig, GridEnv, GridModel};
use emstree_core::env::heating::{self, HeatingConfig, HeatingEnv, HeatingModel, Period, PricingScenario, ThermostatPolicy};
use emstree_core::env::objective::{band_distance, clipped_reward, discounted_score, weighted_objective};
use emstree_core::env::{evaluate_episode, EpisodeSummary, RandomPolicy};
use emstree_core::{Environment, EpisodeConfig};
use proptest::prelude::*;

fn grid_env(cfg: GridConfig) -> GridEnv {
    GridEnv::new(GridModel::new(cfg).unwrap())
}

fn episode(start: usize, length: usize) -> EpisodeConfig {
    EpisodeConfig {
        start,
        length,
        warmup: 0,
        seed: 0,
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn assert_summary_matches_trace(summary: &EpisodeSummary, recomputed: &EpisodeSummary) {
    let tol = 1e-12 * summary.steps.max(1) as f64;
    assert_eq!(summary.steps, recomputed.steps);
    assert_eq!(summary.collapsed, recomputed.collapsed);
    for (a, b) in [
        (summary.training_sum, recomputed.training_sum),
        (summary.discounted_score, recomputed.discounted_score),
        (summary.cost, recomputed.cost),
        (summary.discomfort, recomputed.discomfort),
        (summary.weighted, recomputed.weighted),
    ] {
        assert!(close(a, b, tol), "{a} vs {b}");
    }
}

#[test]
fn objective_oracles_on_random_traces() {
    common::objective_oracles(300, 30).unwrap();
}

#[test]
fn rc_model_matches_analytic_solution() {
    common::rc_physics().unwrap();
}

#[test]
fn grid_aggregates_recompute_from_trace() {
    let mut env = grid_env(GridConfig::default());
    for seed in 0..20 {
        let mut policy = RandomPolicy::new(env.actions(), seed);
        let r = evaluate_episode(&mut env, &mut policy, &episode(grid::start_step(seed), 300), true);
        assert!(r.error.is_none());
        assert_eq!(r.trace.len(), r.summary.steps);
        assert_summary_matches_trace(&r.summary, &EpisodeSummary::from_trace(&r.trace, 1.0));
        for row in &r.trace {
            assert_eq!(row.reward, clipped_reward(row.costs.energy_loss, row.costs.penalty, row.costs.collapsed));
            assert!(row.costs.energy_loss >= 0.0 && row.costs.penalty >= 0.0);
        }
    }
}

#[test]
fn random_policy_collapses_the_grid() {
    let mut env = grid_env(GridConfig::default());
    let mut collapsed = 0;
    let mut steps = 0;
    for seed in 0..200 {
        let mut policy = RandomPolicy::new(env.actions(), seed);
        let r = evaluate_episode(&mut env, &mut policy, &episode(grid::start_step(seed), 3000), true);
        if r.summary.collapsed {
            collapsed += 1;
            steps += r.summary.steps;
            assert_eq!(r.trace.last().unwrap().reward, 20_000.0);
            assert!(r.trace[..r.trace.len() - 1].iter().all(|t| !t.costs.collapsed));
        }
    }
    assert!(collapsed >= 190, "{collapsed}/200 collapsed");
    println!("random policy: {collapsed}/200 collapse after {:.1} steps on average", steps as f64 / collapsed as f64);
}

#[test]
fn lossless_feeder_without_violations_is_free() {
    let cfg = GridConfig {
        device_loss: 0.0,
        main_loss: 0.0,
        curtailment_loss: false,
        battery: grid::BatteryConfig {
            round_trip_efficiency: 1.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut env = grid_env(cfg);
    let mut rng = common::rng(1);
    use rand::Rng;
    let mut free = 0;
    for start in (0..96).step_by(7) {
        env.reset(&episode(start, 50)).unwrap();
        for _ in 0..50 {
            let a = [
                rng.random_range(0.0..40.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(0.0..40.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-2.0..2.0),
            ];
            let out = env.step(&a).unwrap();
            if out.costs.penalty == 0.0 {
                free += 1;
                assert_eq!(out.costs.energy_loss, 0.0);
                assert_eq!(clipped_reward(out.costs.energy_loss, out.costs.penalty, out.costs.collapsed), 0.0);
            }
        }
    }
    assert!(free > 100, "{free} violation-free steps");
}

#[test]
fn heating_aggregates_and_cost_accounting() {
    let model = HeatingModel::new(HeatingConfig::default(), PricingScenario::Dynamic).unwrap();
    let area = model.config.house.floor_area;
    let mut env = HeatingEnv::new(model);
    for period in Period::ALL {
        for (cfg, seed) in [(period.validation(), 1), (period.training(), 2)] {
            let mut policy = RandomPolicy::new(env.actions(), seed);
            let r = evaluate_episode(&mut env, &mut policy, &cfg, true);
            assert!(r.error.is_none());
            assert_eq!(r.summary.steps, heating::PERIOD_DAYS * heating::STEPS_PER_DAY);
            assert_eq!(r.trace.first().unwrap().step, cfg.start + cfg.warmup);
            assert_summary_matches_trace(&r.summary, &EpisodeSummary::from_trace(&r.trace, area));
            let e = common::oracle_sum(r.trace.iter().map(|t| t.costs.price * t.costs.energy)) / area;
            assert!(close(r.summary.cost, e, 1e-12));
        }
    }
}

#[test]
fn thermostat_keeps_discomfort_low() {
    for scenario in PricingScenario::ALL {
        let mut env = HeatingEnv::new(HeatingModel::new(HeatingConfig::default(), scenario).unwrap());
        let setpoint = HeatingConfig::default().thermostat_setpoint;
        for period in Period::ALL {
            let r = evaluate_episode(&mut env, &mut ThermostatPolicy { setpoint }, &period.validation(), false);
            assert!(r.summary.discomfort < 0.5, "{scenario:?} {period:?}: {}", r.summary.discomfort);
        }
    }
}

#[test]
fn warmup_is_excluded_and_rollouts_are_deterministic() {
    let mut env = HeatingEnv::new(HeatingModel::new(HeatingConfig::default(), PricingScenario::Constant).unwrap());
    let cfg = Period::Peak.training();
    let run = |env: &mut HeatingEnv| evaluate_episode(env, &mut RandomPolicy::new(&heating::actions(), 4), &cfg, true);
    let a = run(&mut env);
    let b = run(&mut env);
    assert_eq!(a, b);
    assert_eq!(a.trace.len(), cfg.length);
    assert_eq!(a.trace[0].step, cfg.start + heating::STEPS_PER_DAY);
    assert_eq!(
        Period::Peak.validation().start - cfg.start,
        heating::TRAINING_OFFSET_DAYS * heating::STEPS_PER_DAY
    );
}

fn constant_model(t_out: f64) -> Arc<HeatingModel> {
    HeatingModel::with_exogenous(HeatingConfig::default(), PricingScenario::Constant, common::constant_weather(t_out))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn clipped_reward_image(de in -1e4f64..1e4, phi in 0.0f64..50.0, collapsed in any::<bool>()) {
        let r = clipped_reward(de, phi, collapsed);
        prop_assert!(r == 20_000.0 || (-100.0..=100.0).contains(&r));
        prop_assert_eq!(r == 20_000.0, collapsed);
    }

    #[test]
    fn discounted_score_is_monotone(base in prop::collection::vec(-100.0f64..100.0, 0..400), gaps in prop::collection::vec(0.0f64..50.0, 400)) {
        let lower: Vec<f64> = base.iter().zip(&gaps).map(|(b, g)| b - g).collect();
        prop_assert!(discounted_score(&lower) <= discounted_score(&base));
    }

    #[test]
    fn weighted_objective_is_linear(d1 in 0.0f64..10.0, d2 in 0.0f64..10.0, e1 in 0.0f64..2.0, e2 in 0.0f64..2.0, k in 0.0f64..5.0) {
        let lhs = weighted_objective(d1 + k * d2, e1 + k * e2);
        let rhs = weighted_objective(d1, e1) + k * weighted_objective(d2, e2);
        prop_assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn band_distance_vanishes_inside_and_is_continuous(lo in 10.0f64..25.0, width in 0.5f64..10.0, t in 0.0f64..40.0, eps in 0.0f64..1e-3) {
        let hi = lo + width;
        let d = band_distance(t, lo, hi);
        prop_assert!(d >= 0.0);
        if (lo..=hi).contains(&t) {
            prop_assert_eq!(d, 0.0);
        }
        prop_assert!((band_distance(t + eps, lo, hi) - d).abs() <= eps + 1e-12);
    }

    #[test]
    fn temperature_increment_is_linear_in_net_flux(t in 0.0f64..35.0, t_out in -20.0f64..20.0, q in -20.0f64..40.0) {
        let m = constant_model(t_out);
        let r = m.config.house.resistance;
        let net = q - (t - t_out) / r;
        let step = m.advance(t, t_out, q) - t;
        let doubled = m.advance(t, t_out, q + net) - t;
        prop_assert!((doubled - 2.0 * step).abs() <= 1e-12 * (1.0 + step.abs()));
    }

    #[test]
    fn more_heating_never_cools(seq in prop::collection::vec((0usize..=10, 0usize..=10), 1..200), t_out in -15.0f64..15.0) {
        let mut low = HeatingEnv::new(constant_model(t_out));
        let mut high = low.clone();
        let cfg = episode(0, seq.len());
        low.reset(&cfg).unwrap();
        high.reset(&cfg).unwrap();
        for (a, b) in seq {
            let (u_lo, u_hi) = (a.min(b) as f64 / 10.0, a.max(b) as f64 / 10.0);
            let tl = low.step(&[u_lo]).unwrap().observation.values[1];
            let th = high.step(&[u_hi]).unwrap().observation.values[1];
            prop_assert!(th >= tl);
        }
    }

    #[test]
    fn curtailment_never_raises_renewable_output(start in 0usize..96, pv in 0.0f64..40.0, cut in 0.0f64..40.0, wind in 0.0f64..40.0, cut_w in 0.0f64..40.0) {
        let model = GridModel::new(GridConfig::default()).unwrap();
        let mut a = GridEnv::new(model.clone());
        let mut b = GridEnv::new(model);
        a.reset(&episode(start, 1)).unwrap();
        b.reset(&episode(start, 1)).unwrap();
        let oa = a.step(&[pv, 0.0, wind, 0.0, 0.0, 0.0]).unwrap().observation;
        let ob = b.step(&[pv.min(cut), 0.0, wind.min(cut_w), 0.0, 0.0, 0.0]).unwrap().observation;
        prop_assert!(ob.values[6] <= oa.values[6]);
        prop_assert!(ob.values[8] <= oa.values[8]);
    }

    #[test]
    fn grid_is_periodic_in_the_day(start in 0usize..96, seed in any::<u64>(), steps in 1usize..60) {
        let model = GridModel::new(GridConfig::default()).unwrap();
        let mut a = GridEnv::new(model.clone());
        let mut b = GridEnv::new(model);
        let oa0 = a.reset(&episode(start, steps)).unwrap();
        let ob0 = b.reset(&episode(start + grid::STEPS_PER_DAY, steps)).unwrap();
        prop_assert_eq!(&oa0.values, &ob0.values);
        let mut pa = RandomPolicy::new(a.actions(), seed);
        let mut obs = oa0.clone();
        use emstree_core::Policy;
        let mut act = vec![0.0; 6];
        for _ in 0..steps {
            pa.act(&obs, &mut act).unwrap();
            let sa = a.step(&act).unwrap();
            let sb = b.step(&act).unwrap();
            prop_assert_eq!(&sa.observation.values, &sb.observation.values);
            prop_assert_eq!(sa.costs, sb.costs);
            obs = sa.observation;
        }
    }

    #[test]
    fn battery_energy_is_conserved(start in 0usize..96, powers in prop::collection::vec(-40.0f64..40.0, 1..100)) {
        let model = GridModel::new(GridConfig::default()).unwrap();
        let eta = model.config.battery.eta();
        let mut env = GridEnv::new(model);
        let mut soc = env.reset(&episode(start, powers.len())).unwrap().values[16];
        for p in powers {
            let o = env.step(&[0.0, 0.0, 0.0, 0.0, p, 0.0]).unwrap().observation;
            let delivered = o.values[10];
            let next = o.values[16];
            let expected = if delivered >= 0.0 {
                soc - delivered * grid::STEP_HOURS / eta
            } else {
                soc - eta * delivered * grid::STEP_HOURS
            };
            prop_assert!((next - expected).abs() <= 1e-9, "{} vs {}", next, expected);
            prop_assert!((0.0..=100.0).contains(&next));
            soc = next;
        }
    }
}
