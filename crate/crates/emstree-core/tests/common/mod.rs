//! Independent oracles and acceptance checks shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emstree_core::cmaes::{self, default_params, default_population_size, minimize};
use emstree_core::env::heating::{self, Exogenous, HeatingConfig, HeatingEnv, HeatingModel, Period, PricingScenario};
use emstree_core::env::objective::{
    band_distance, clipped_reward, discounted_score, electricity_cost, total_discomfort, training_sum,
    weighted_objective,
};
use emstree_core::env::{grid, EpisodeSummary, StepCosts, TraceRow};
use emstree_core::genome::Genome;
use emstree_core::trainer::{Experiment, ExperimentConfig, TrainOutput, ValidationSummary};
use emstree_core::tree::{ActionSpec, DecisionTree, EnsembleLayout, FeatureSpec, Node, TreeEnsemble};
use emstree_core::{Environment, EpisodeConfig, Observation};

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_genes(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

pub fn obs(values: &[f64]) -> Observation {
    Observation {
        step: 0,
        values: values.to_vec(),
    }
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn load_experiment(name: &str) -> Experiment {
    let cfg = ExperimentConfig::load(&config_path(name)).expect("shipped config parses");
    Experiment::new(cfg).expect("shipped config is valid")
}

pub fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn rel_close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * scale.max(b.abs()).max(1e-300)
}

// ---- objective oracles ----

#[allow(clippy::manual_clamp)]
pub fn oracle_reward(delta_e: f64, phi: f64, collapsed: bool) -> f64 {
    if collapsed {
        return 20_000.0;
    }
    let raw = delta_e + 1000.0 * phi;
    if raw > 100.0 {
        100.0
    } else if raw < -100.0 {
        -100.0
    } else {
        raw
    }
}

/// Backward Horner evaluation of `Σ r_t γ^t`.
pub fn oracle_discounted(rewards: &[f64]) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + 0.995 * acc)
}

pub fn oracle_sum(values: impl DoubleEndedIterator<Item = f64>) -> f64 {
    values.rev().fold(0.0, |a, v| a + v)
}

pub struct RandomTrace {
    pub rows: Vec<TraceRow>,
    pub area: f64,
    pub temperatures: Vec<(f64, f64, f64)>,
}

/// Random trace with grid-like rewards and heating-like costs. Discomfort is
/// derived from random temperatures and bands.
pub fn random_trace(rng: &mut impl Rng, max_len: usize) -> RandomTrace {
    let len = rng.random_range(0..=max_len);
    let area = rng.random_range(50.0..300.0);
    let mut rows = Vec::with_capacity(len);
    let mut temperatures = Vec::with_capacity(len);
    for step in 0..len {
        let collapsed = step + 1 == len && rng.random_bool(0.2);
        let delta_e = rng.random_range(-0.2..0.5);
        let phi = if rng.random_bool(0.3) { rng.random_range(0.0..0.2) } else { 0.0 };
        let t = rng.random_range(12.0..28.0);
        let lo = rng.random_range(15.0..21.0);
        let hi = lo + rng.random_range(2.0..9.0);
        temperatures.push((t, lo, hi));
        let costs = StepCosts {
            energy_loss: delta_e,
            penalty: phi,
            price: rng.random_range(0.15..0.35),
            energy: rng.random_range(0.0..4.0),
            discomfort: band_distance(t, lo, hi) * 0.25,
            collapsed,
        };
        rows.push(TraceRow {
            step,
            observation: vec![],
            actions: vec![],
            costs,
            reward: clipped_reward(delta_e, phi, collapsed),
            clamped: false,
        });
    }
    RandomTrace {
        rows,
        area,
        temperatures,
    }
}

pub fn oracle_band_distance(t: f64, lo: f64, hi: f64) -> f64 {
    if t < lo {
        lo - t
    } else if t > hi {
        t - hi
    } else {
        0.0
    }
}

// ---- codec oracles ----

/// Axis-aligned box `[lo, hi)` per feature reached by each leaf slot,
/// enumerated from the root by splitting boxes.
pub fn leaf_regions(tree: &DecisionTree, n_features: usize) -> Vec<(usize, Vec<(f64, f64)>)> {
    let mut out = Vec::new();
    let mut stack = vec![(0usize, vec![(f64::NEG_INFINITY, f64::INFINITY); n_features])];
    while let Some((slot, region)) = stack.pop() {
        match &tree.nodes()[slot] {
            Node::Leaf { .. } => out.push((slot, region)),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let (lo, hi) = region[*feature];
                let mut l = region.clone();
                l[*feature] = (lo, hi.min(*threshold));
                let mut r = region;
                r[*feature] = (lo.max(*threshold), hi);
                stack.push((*left, l));
                stack.push((*right, r));
            }
        }
    }
    out
}

pub fn region_of(regions: &[(usize, Vec<(f64, f64)>)], point: &[f64]) -> Vec<usize> {
    regions
        .iter()
        .filter(|(_, b)| b.iter().zip(point).all(|((lo, hi), x)| *lo <= *x && *x < *hi))
        .map(|(s, _)| *s)
        .collect()
}

/// Traversal vs region enumeration for every heap tree with up to 7 splits
/// (depth ≤ 3) over two features in `[0,1]`, splits drawn from
/// {0.25, 0.5, 0.75} on either feature.
pub fn brute_force_regions() -> Check {
    let features = vec![FeatureSpec::new("x", 0.0, 1.0).unwrap(), FeatureSpec::new("y", 0.0, 1.0).unwrap()];
    let choices: Vec<(f64, f64)> = [0.25, 0.75]
        .iter()
        .flat_map(|&f| [0.25, 0.5, 0.75].map(move |v| (f, v)))
        .collect();
    let grid: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    let points: Vec<[f64; 2]> = grid.iter().flat_map(|&x| grid.iter().map(move |&y| [x, y])).collect();
    let mut trees = 0usize;
    for splits in 0..=7usize {
        let leaves = splits + 1;
        let action = ActionSpec::discrete("leaf", (0..leaves).map(|i| i as f64).collect()).unwrap();
        let leaf_genes: Vec<f64> = (0..leaves).map(|i| (i as f64 + 0.5) / leaves as f64).collect();
        let combos = choices.len().pow(splits as u32);
        for mut code in 0..combos {
            let mut fg = Vec::with_capacity(splits);
            let mut vg = Vec::with_capacity(splits);
            for _ in 0..splits {
                let (f, v) = choices[code % choices.len()];
                code /= choices.len();
                fg.push(f);
                vg.push(v);
            }
            let block: Vec<f64> = fg.into_iter().chain(vg).chain(leaf_genes.iter().copied()).collect();
            let tree = DecisionTree::decode(&block, &features, &action, splits).map_err(|e| e.to_string())?;
            let regions = leaf_regions(&tree, 2);
            for p in &points {
                let owners = region_of(&regions, p);
                if owners.len() != 1 {
                    return Err(format!("regions of {block:?} do not partition the plane at {p:?}"));
                }
                let slot = owners[0];
                let expected = slot - splits;
                let got = tree.act(&obs(p)).map_err(|e| e.to_string())?;
                let path = tree.path(&obs(p)).map_err(|e| e.to_string())?;
                if got != expected as f64 || *path.last().unwrap() != slot {
                    return Err(format!("tree {block:?} at {p:?}: leaf {got}, regions say {expected}"));
                }
            }
            trees += 1;
        }
    }
    Ok(format!("{trees} trees x {} points", points.len()))
}

// ---- pruning ----

/// Random heating-shaped tree with `splits` nodes and a trace of
/// observations clustered in a sub-box of the feature ranges so that some
/// leaves stay unvisited.
pub fn random_tree_and_trace(rng: &mut impl Rng, splits: usize, len: usize) -> (DecisionTree, Vec<FeatureSpec>, Vec<Observation>) {
    let features = heating::features();
    let action = heating::actions().remove(0);
    let block = random_genes(rng, 3 * splits + 1);
    let tree = DecisionTree::decode(&block, &features, &action, splits).unwrap();
    let centre: Vec<f64> = features.iter().map(|f| rng.random_range(f.lower..f.upper)).collect();
    let trace = (0..len)
        .map(|step| {
            let values = features
                .iter()
                .zip(&centre)
                .map(|(f, c)| c + rng.random_range(-0.2..0.2) * (f.upper - f.lower))
                .collect();
            Observation { step, values }
        })
        .collect();
    (tree, features, trace)
}

pub fn pruning_pairs(pairs: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut shrunk = 0;
    for i in 0..pairs {
        let splits = rng.random_range(1..=20);
        let len = rng.random_range(1..=300);
        let (mut tree, _, trace) = random_tree_and_trace(&mut rng, splits, len);
        let before: Vec<f64> = trace.iter().map(|o| tree.act(o).unwrap()).collect();
        for o in &trace {
            tree.act_recording(o).unwrap();
        }
        let pruned = tree.prune().map_err(|e| format!("pair {i}: {e}"))?;
        let twice = pruned.prune().map_err(|e| format!("pair {i}: {e}"))?;
        ensure(twice == pruned, || format!("pair {i}: prune is not idempotent"))?;
        let after: Vec<f64> = trace.iter().map(|o| pruned.act(o).unwrap()).collect();
        ensure(before == after, || format!("pair {i}: pruned actions differ on the trace"))?;
        ensure(pruned.visits().iter().all(|&v| v > 0), || format!("pair {i}: unvisited leaf kept"))?;
        ensure(pruned.visits().iter().sum::<u64>() == len as u64, || format!("pair {i}: visits lost"))?;
        if pruned.leaf_count() < tree.leaf_count() {
            shrunk += 1;
        }
    }
    ensure(shrunk > 0, || "no pair exercised leaf removal".into())?;
    Ok(format!("{pairs} pairs, {shrunk} shrunk"))
}

/// One split on `t_in` whose left leaf is never reached collapses to the
/// right leaf alone.
pub fn single_leaf_case() -> Check {
    let features = vec![FeatureSpec::new("t_in", 15.0, 27.0).unwrap()];
    let action = ActionSpec::levels("modulation", 0.0, 1.0, 11).unwrap();
    let mut tree = DecisionTree::decode(&[0.5, 0.5, 0.95, 0.05], &features, &action, 1).unwrap();
    for t in [22.0, 23.5, 25.0] {
        tree.act_recording(&obs(&[t])).unwrap();
    }
    let pruned = tree.prune().map_err(|e| e.to_string())?;
    match pruned.nodes() {
        [Node::Leaf { action, visits: 3 }] if *action == 0.0 => Ok("split -> single leaf".into()),
        other => Err(format!("unexpected pruned shape {other:?}")),
    }
}

// ---- RC physics ----

pub fn constant_weather(t_out: f64) -> Arc<Exogenous> {
    let n = heating::HOURS_PER_YEAR;
    Arc::new(Exogenous {
        t_out: vec![t_out; n],
        solar: vec![0.0; n],
        prices: [vec![0.2535; n], vec![0.2535; n], vec![0.2535; n]],
    })
}

pub fn heating_env(config: HeatingConfig, t_out: f64) -> HeatingEnv {
    HeatingEnv::new(HeatingModel::with_exogenous(config, PricingScenario::Constant, constant_weather(t_out)))
}

/// `T(t) = T_ss + (T_0 − T_ss)·exp(−t/(RC))`, `T_ss = T_out + R·Q`.
pub fn rc_analytic(t0: f64, t_out: f64, q: f64, r: f64, c: f64, hours: f64) -> f64 {
    let ss = t_out + r * q;
    ss + (t0 - ss) * (-hours / (r * c)).exp()
}

pub fn rc_rollout(config: &HeatingConfig, t_out: f64, u: f64, steps: usize) -> Result<Vec<f64>, String> {
    let mut env = heating_env(config.clone(), t_out);
    env.reset(&EpisodeConfig {
        start: 0,
        length: steps,
        warmup: 0,
        seed: 0,
    })
    .map_err(|e| e.to_string())?;
    (0..steps)
        .map(|_| {
            env.step(&[u])
                .map(|o| o.observation.values[1])
                .map_err(|e| e.to_string())
        })
        .collect()
}

pub fn rc_physics() -> Check {
    let steps = heating::PERIOD_DAYS * heating::STEPS_PER_DAY;
    let mut worst: f64 = 0.0;
    for (t_out, u, t0) in [(-5.0, 0.4, 21.0), (8.0, 0.0, 21.0), (0.0, 1.0, 15.0), (-10.0, 0.7, 30.0)] {
        let mut cfg = HeatingConfig::default();
        cfg.house.initial_temperature = t0;
        let h = cfg.house;
        let temps = rc_rollout(&cfg, t_out, u, steps)?;
        for (k, t) in temps.iter().enumerate() {
            let hours = (k + 1) as f64 * heating::STEP_HOURS;
            let exact = rc_analytic(t0, t_out, u * h.nominal_power, h.resistance, h.capacitance, hours);
            let err = (t - exact).abs() / exact.abs().max(1.0);
            worst = worst.max(err);
            ensure(err <= 1e-6, || {
                format!("T_out={t_out} u={u}: step {k} gives {t}, analytic {exact}")
            })?;
        }
    }
    for (t_out, u) in [(-10.0, 0.4), (5.0, 0.1), (0.0, 1.0)] {
        let mut cfg = HeatingConfig::default();
        let q = u * cfg.house.nominal_power;
        cfg.house.initial_temperature = t_out + cfg.house.resistance * q;
        let temps = rc_rollout(&cfg, t_out, u, 96)?;
        for t in temps {
            let residual = (t - t_out) - cfg.house.resistance * q;
            ensure(residual.abs() <= 1e-9, || format!("steady state drifts by {residual}"))?;
        }
    }
    Ok(format!("max rel. error {worst:.1e} over 14 days"))
}

// ---- end-to-end ----

pub fn heating_end_to_end(exp: &Experiment, out: &TrainOutput) -> Check {
    let thermostat = exp.thermostat_baseline().expect("heating config").summary;
    let scenario = exp.config.schedule.scenario;
    let leaves = out.ems.controller.ensemble.leaf_count();
    let mut detail = Vec::new();
    for period in Period::ALL {
        let w = out
            .ems
            .validation
            .heating_row(scenario, period)
            .ok_or("missing validation row")?;
        let t = thermostat.heating_row(scenario, period).ok_or("missing baseline row")?;
        ensure(w.discomfort < 1.0, || {
            format!("{} {}: D = {:.3} Kh", scenario.name(), period.name(), w.discomfort)
        })?;
        detail.push(format!(
            "{}: {:.3} vs thermostat {:.3}, D {:.3}",
            period.name(),
            w.weighted,
            t.weighted,
            w.discomfort
        ));
    }
    let period = exp.config.schedule.period;
    let w = out.ems.validation.heating_row(scenario, period).unwrap();
    let t = thermostat.heating_row(scenario, period).unwrap();
    ensure(w.weighted < t.weighted, || {
        format!("{} {}: winner {:.4} not below thermostat {:.4}", scenario.name(), period.name(), w.weighted, t.weighted)
    })?;
    ensure(leaves <= 10, || format!("pruned tree has {leaves} leaves"))?;
    Ok(format!("{}; {leaves} leaves", detail.join("; ")))
}

pub fn random_grid_mean(exp: &Experiment, runs: u64) -> (f64, usize) {
    let episodes = (0..runs)
        .map(|s| (emstree_core::trainer::ValidationLabel::Seed(s), exp.grid_validation_episode(s)))
        .collect();
    match exp.random_baseline(episodes).summary {
        ValidationSummary::Grid {
            mean, collapsed, ..
        } => (mean, collapsed),
        _ => unreachable!("grid experiment"),
    }
}

pub fn grid_end_to_end(exp: &Experiment, out: &TrainOutput) -> Check {
    let (random_mean, random_collapsed) = random_grid_mean(exp, 50);
    let ValidationSummary::Grid {
        mean,
        std_dev,
        collapsed,
        ref episodes,
    } = out.ems.validation
    else {
        return Err("grid validation expected".into());
    };
    ensure(episodes.len() == 10, || format!("{} validation episodes", episodes.len()))?;
    ensure(collapsed == 0, || format!("{collapsed} validation seeds collapse"))?;
    ensure(mean < 0.01 * random_mean, || {
        format!("mean {mean:.2} not below 1% of random mean {random_mean:.1}")
    })?;
    Ok(format!(
        "S = {mean:.2} +/- {std_dev:.2}, random {random_mean:.0} ({random_collapsed}/50 collapse)"
    ))
}

// ---- small helpers used by the criteria ----

pub fn population_sizes() -> Check {
    let heating = default_population_size(61);
    let grid = default_population_size(366);
    ensure(heating == 16, || format!("n=61 gives {heating}"))?;
    ensure(grid == 19, || format!("n=366 gives {grid}"))?;
    ensure(default_params(61).unwrap().population_size == 16, || "default_params(61)".into())?;
    let exp = load_experiment("grid.toml");
    ensure(exp.genome_len() == 366, || format!("grid genome length {}", exp.genome_len()))?;
    ensure(exp.params.population_size == 21, || format!("grid override gives {}", exp.params.population_size))?;
    let exp = load_experiment("heating.toml");
    ensure(exp.genome_len() == 61, || format!("heating genome length {}", exp.genome_len()))?;
    ensure(exp.params.population_size == 16, || format!("heating gives {}", exp.params.population_size))?;
    Ok("16 (n=61), 19 (n=366), override 21".into())
}

pub fn sphere(x: &Genome) -> f64 {
    x.iter().map(|v| (v - 0.7).powi(2)).sum()
}

/// Rosenbrock on `[-0.75, 1.75]^n` mapped onto the unit box; optimum at 0.7.
pub fn rosenbrock(x: &Genome) -> f64 {
    let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 0.75).collect();
    y.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn cmaes_convergence() -> Check {
    let p = default_params(10).unwrap();
    let generations = 3000 / p.population_size;
    let sphere_ok = (0..10)
        .filter(|&s| minimize(sphere, &p, generations, s).unwrap().best_score < 1e-8)
        .count();
    let rosen_ok = (0..10)
        .filter(|&s| cmaes::run(rosenbrock, 5, 600, s).unwrap().best_score < 1e-4)
        .count();
    ensure(sphere_ok >= 9, || format!("sphere converged for {sphere_ok}/10 seeds"))?;
    ensure(rosen_ok >= 9, || format!("Rosenbrock converged for {rosen_ok}/10 seeds"))?;
    Ok(format!("sphere {sphere_ok}/10, Rosenbrock {rosen_ok}/10"))
}

pub fn objective_oracles(traces: usize, seed: u64) -> Check {
    let examples = [
        (clipped_reward(0.0, 0.0, false), 0.0),
        (clipped_reward(0.05, 0.2, false), 100.0),
        (clipped_reward(0.05, 0.2, true), 20_000.0),
        (discounted_score(&[100.0]), 100.0),
        (training_sum(&[1.0; 300]), 300.0),
        (electricity_cost([(0.2535, 1.0)]), 0.2535),
        (weighted_objective(1.0, 1.0), 292.0),
        (
            total_discomfort((0..4).map(|_| band_distance(21.0 - 0.42, 21.0, 24.0) * 0.25)),
            0.42,
        ),
    ];
    for (i, (got, want)) in examples.iter().enumerate() {
        ensure(rel_close(*got, *want, 1e-12, 1.0), || format!("example {i}: {got} != {want}"))?;
    }
    let geometric = (1.0 - 0.995f64.powi(3000)) / 0.005;
    ensure(rel_close(discounted_score(&[1.0; 3000]), geometric, 1e-12, 0.0), || {
        "geometric series".into()
    })?;

    let mut rng = rng(seed);
    for i in 0..traces {
        let t = random_trace(&mut rng, 3000);
        let rows = &t.rows;
        for r in rows {
            let want = oracle_reward(r.costs.energy_loss, r.costs.penalty, r.costs.collapsed);
            ensure(r.reward == want, || format!("trace {i}: reward {} != {want}", r.reward))?;
        }
        for &(temp, lo, hi) in &t.temperatures {
            ensure(band_distance(temp, lo, hi) == oracle_band_distance(temp, lo, hi), || {
                format!("trace {i}: band distance at {temp}")
            })?;
        }
        let rewards: Vec<f64> = rows.iter().map(|r| r.reward).collect();
        let abs_sum: f64 = rewards.iter().map(|r| r.abs()).sum();
        let summary = EpisodeSummary::from_trace(rows, t.area);
        let d = oracle_sum(rows.iter().map(|r| r.costs.discomfort));
        let e = oracle_sum(rows.iter().map(|r| r.costs.price * r.costs.energy)) / t.area;
        let per_step = oracle_sum(
            rows.iter()
                .map(|r| 100.0 * r.costs.discomfort + 192.0 * r.costs.price * r.costs.energy / t.area),
        );
        let checks = [
            ("discounted", discounted_score(&rewards), oracle_discounted(&rewards), abs_sum),
            ("training sum", training_sum(&rewards), oracle_sum(rewards.iter().copied()), abs_sum),
            ("summary discounted", summary.discounted_score, oracle_discounted(&rewards), abs_sum),
            ("summary sum", summary.training_sum, oracle_sum(rewards.iter().copied()), abs_sum),
            ("E", summary.cost, e, e),
            ("D", summary.discomfort, d, d),
            ("weighted", summary.weighted, 100.0 * d + 192.0 * e, 100.0 * d + 192.0 * e),
            ("weighted per step", weighted_objective(d, e), per_step, per_step),
        ];
        for (name, got, want, scale) in checks {
            ensure(rel_close(got, want, 1e-12, scale), || format!("trace {i}: {name} {got} vs {want}"))?;
        }
        ensure(summary.steps == rows.len(), || format!("trace {i}: step count"))?;
    }
    Ok(format!("{traces} random traces"))
}

pub fn codec_properties(genomes: usize, seed: u64) -> Check {
    let heating = EnsembleLayout {
        features: heating::features(),
        actions: heating::actions(),
        splits: 20,
    };
    let grid_cfg = grid::GridConfig::default();
    let grid = EnsembleLayout {
        features: grid_cfg.features(),
        actions: grid_cfg.actions(),
        splits: 20,
    };
    ensure(heating.genome_len() == 61 && grid.genome_len() == 366, || "layout lengths".into())?;
    for (layout, ok_len) in [(&heating, 61), (&grid, 366)] {
        for len in 0..=400 {
            let accepted = Genome::new(vec![0.5; len]).is_ok_and(|g| layout.decode(&g).is_ok());
            ensure(accepted == (len == ok_len), || format!("length {len} accepted = {accepted}"))?;
        }
    }
    let mut rng = rng(seed);
    for i in 0..genomes {
        let layout = if i % 2 == 0 { &heating } else { &grid };
        let g = Genome::new(random_genes(&mut rng, layout.genome_len())).unwrap();
        let a = layout.decode(&g).map_err(|e| format!("genome {i}: {e}"))?;
        let b = layout.decode(&g).unwrap();
        ensure(a == b, || format!("genome {i}: decode is not deterministic"))?;
        ensure(well_formed(&a), || format!("genome {i}: decoded values out of range"))?;
    }
    let regions = brute_force_regions()?;
    Ok(format!("{genomes} genomes; lengths 61/366 only; {regions}"))
}

pub fn well_formed(e: &TreeEnsemble) -> bool {
    e.is_consistent()
        && e.channels.iter().all(|ch| {
            ch.tree.nodes().iter().all(|n| match n {
                Node::Split {
                    feature, threshold, ..
                } => e.features.get(*feature).is_some_and(|f| f.lower <= *threshold && *threshold <= f.upper),
                Node::Leaf { action, .. } => ch.action.contains(*action),
            })
        })
}
