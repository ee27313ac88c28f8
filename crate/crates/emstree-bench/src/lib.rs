//! Fixtures shared by the benchmarks.

use emstree_core::env::grid::GridConfig;
use emstree_core::env::heating;
use emstree_core::tree::EnsembleLayout;
use emstree_core::{Genome, Observation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Six-channel grid layout with 20 splits per tree (366 genes).
pub fn grid_layout() -> EnsembleLayout {
    let cfg = GridConfig::default();
    EnsembleLayout {
        features: cfg.features(),
        actions: cfg.actions(),
        splits: 20,
    }
}

/// Single-channel heating layout with 20 splits (61 genes).
pub fn heating_layout() -> EnsembleLayout {
    EnsembleLayout {
        features: heating::features(),
        actions: heating::actions(),
        splits: 20,
    }
}

pub fn random_genome(len: usize, seed: u64) -> Genome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Genome::new((0..len).map(|_| rng.random::<f64>()).collect()).expect("values in [0, 1]")
}

/// Observations drawn uniformly from the layout's feature ranges.
pub fn random_observations(layout: &EnsembleLayout, count: usize, seed: u64) -> Vec<Observation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|step| Observation {
            step,
            values: layout
                .features
                .iter()
                .map(|f| rng.random_range(f.lower..f.upper))
                .collect(),
        })
        .collect()
}
