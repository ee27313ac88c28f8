//! Covariance matrix adaptation evolution strategy with an ask/tell
//! interface.
//!
//! Search points live in the unit box. `ask` samples from the current
//! Gaussian and repairs each sample by clamping; `tell` updates the
//! distribution from the *unrepaired* samples of the μ best candidates and
//! then projects the mean back into the box.
//! All learning rates follow the standard defaults (Hansen & Ostermeier
//! style weights `ln(μ + ½) − ln i`).

use std::cmp::Ordering;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::genome::Genome;
use crate::seed;

/// Floor applied to covariance eigenvalues before taking square roots.
pub const EIGEN_FLOOR: f64 = 1e-12;
/// Allowed asymmetry of C, relative to its largest entry.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

pub const INITIAL_MEAN: f64 = 0.5;
pub const INITIAL_SIGMA: f64 = 0.3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CmaesError {
    #[error("dimension must be at least 1")]
    InvalidDimension,
    #[error("population size {0} is below the minimum of 4")]
    PopulationTooSmall(usize),
    #[error("expected {expected} scored candidates, got {actual}")]
    WrongPopulation { expected: usize, actual: usize },
    #[error("candidate {index} has length {actual}, expected {expected}")]
    WrongLength {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("candidate {index} has non-finite score {score}")]
    NonFiniteScore { index: usize, score: f64 },
    #[error("objective returned non-finite value for candidate {candidate} in generation {generation}")]
    NonFiniteObjective { generation: usize, candidate: usize },
    #[error("covariance matrix lost symmetry (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("generation budget must be at least 1")]
    EmptyBudget,
}

/// Strategy constants. Build with [`default_params`] or
/// [`CmaesParams::with_population`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaesParams {
    pub dimension: usize,
    pub population_size: usize,
    pub parent_count: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    /// Expected norm of an n-dimensional standard normal vector.
    pub chi_n: f64,
}

/// `4 + 3⌊ln n⌋`.
pub fn default_population_size(n: usize) -> usize {
    4 + 3 * (n as f64).ln().floor() as usize
}

/// Standard parameterization for an `n`-dimensional problem.
pub fn default_params(n: usize) -> Result<CmaesParams, CmaesError> {
    if n == 0 {
        return Err(CmaesError::InvalidDimension);
    }
    CmaesParams::with_population(n, default_population_size(n))
}

impl CmaesParams {
    /// Standard constants with an explicit population size.
    pub fn with_population(n: usize, lambda: usize) -> Result<Self, CmaesError> {
        if n == 0 {
            return Err(CmaesError::InvalidDimension);
        }
        if lambda < 4 {
            return Err(CmaesError::PopulationTooSmall(lambda));
        }
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

        Ok(Self {
            dimension: n,
            population_size: lambda,
            parent_count: mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        })
    }
}

/// One sample drawn by [`CmaesState::ask`].
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Unrepaired sample; used by the distribution update.
    pub point: Vec<f64>,
    /// Sample clamped into the unit box; this is what gets evaluated.
    pub genome: Genome,
}

impl Candidate {
    pub fn scored(self, score: f64) -> ScoredCandidate {
        ScoredCandidate {
            point: self.point,
            genome: self.genome,
            score,
        }
    }
}

/// A candidate with its objective value (lower is better).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub point: Vec<f64>,
    pub genome: Genome,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestEver {
    pub genome: Genome,
    pub score: f64,
    /// Generation (0-based) in which this candidate was evaluated.
    pub generation: usize,
}

/// Search distribution plus the best candidate seen so far.
#[derive(Debug, Clone)]
pub struct CmaesState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub covariance: DMatrix<f64>,
    pub path_sigma: DVector<f64>,
    pub path_c: DVector<f64>,
    /// Orthonormal eigenvectors of the covariance (columns).
    pub basis: DMatrix<f64>,
    /// Square roots of the (floored) covariance eigenvalues.
    pub scales: DVector<f64>,
    /// Smallest eigenvalue seen at the last refresh, before flooring.
    pub min_eigenvalue: f64,
    pub generation: usize,
    pub best: Option<BestEver>,
}

impl CmaesState {
    /// `m = (0.5, …, 0.5)`, `σ = 0.3`, `C = I`.
    pub fn new(n: usize) -> Self {
        Self::with_initial(DVector::from_element(n, INITIAL_MEAN), INITIAL_SIGMA)
    }

    pub fn with_initial(mean: DVector<f64>, sigma: f64) -> Self {
        let n = mean.len();
        Self {
            mean,
            sigma,
            covariance: DMatrix::identity(n, n),
            path_sigma: DVector::zeros(n),
            path_c: DVector::zeros(n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            min_eigenvalue: 1.0,
            generation: 0,
            best: None,
        }
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Draws `λ` candidates `m + σ·B·D·z`. Deterministic in `(self, seed)`.
    pub fn ask(&self, params: &CmaesParams, seed: u64) -> Vec<Candidate> {
        let n = self.dimension();
        let mut rng = seed::rng(seed);
        let bd = &self.basis * DMatrix::from_diagonal(&self.scales);
        (0..params.population_size)
            .map(|_| {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                let x = &self.mean + self.sigma * (&bd * z);
                let point: Vec<f64> = x.iter().copied().collect();
                let genome = Genome::repaired(&point);
                Candidate { point, genome }
            })
            .collect()
    }

    /// Rank-based update of mean, paths, covariance and step size.
    ///
    /// The state is left untouched when validation fails.
    pub fn tell(&mut self, params: &CmaesParams, scored: &[ScoredCandidate]) -> Result<(), CmaesError> {
        let n = self.dimension();
        if scored.len() != params.population_size {
            return Err(CmaesError::WrongPopulation {
                expected: params.population_size,
                actual: scored.len(),
            });
        }
        for (index, c) in scored.iter().enumerate() {
            if !c.score.is_finite() {
                return Err(CmaesError::NonFiniteScore { index, score: c.score });
            }
            if c.point.len() != n || c.genome.len() != n {
                return Err(CmaesError::WrongLength {
                    index,
                    expected: n,
                    actual: c.point.len().min(c.genome.len()),
                });
            }
        }

        let order = rank(scored);

        let best = &scored[order[0]];
        if self.best.as_ref().is_none_or(|b| best.score < b.score) {
            self.best = Some(BestEver {
                genome: best.genome.clone(),
                score: best.score,
                generation: self.generation,
            });
        }

        let steps: Vec<DVector<f64>> = order[..params.parent_count]
            .iter()
            .map(|&i| (DVector::from_column_slice(&scored[i].point) - &self.mean) / self.sigma)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in params.weights.iter().zip(&steps) {
            y_w.axpy(*w, y, 1.0);
        }

        self.mean += self.sigma * &y_w;
        // Keep the mean inside the box; otherwise a coordinate drifting past
        // a bound sits on the clamped plateau and never recovers.
        self.mean.apply(|v| *v = v.clamp(0.0, 1.0));

        // C^{-1/2} y_w = B D^{-1} B^T y_w
        let mut whitened = self.basis.tr_mul(&y_w);
        whitened.component_div_assign(&self.scales);
        let c_inv_sqrt_y = &self.basis * whitened;

        let cs = params.c_sigma;
        self.path_sigma *= 1.0 - cs;
        self.path_sigma
            .axpy((cs * (2.0 - cs) * params.mu_eff).sqrt(), &c_inv_sqrt_y, 1.0);

        let ps_norm = self.path_sigma.norm();
        let decay = 1.0 - (1.0 - cs).powi(2 * (self.generation as i32 + 1));
        let h_sigma = if ps_norm / decay.sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * params.chi_n {
            1.0
        } else {
            0.0
        };

        let cc = params.c_c;
        self.path_c *= 1.0 - cc;
        self.path_c
            .axpy(h_sigma * (cc * (2.0 - cc) * params.mu_eff).sqrt(), &y_w, 1.0);

        let c1 = params.c_1;
        let cmu = params.c_mu;
        let stall = (1.0 - h_sigma) * cc * (2.0 - cc);
        self.covariance *= 1.0 - c1 - cmu + c1 * stall;
        self.covariance.ger(c1, &self.path_c, &self.path_c, 1.0);
        for (w, y) in params.weights.iter().zip(&steps) {
            self.covariance.ger(cmu * w, y, y, 1.0);
        }

        self.sigma *= ((cs / params.d_sigma) * (ps_norm / params.chi_n - 1.0)).exp();
        self.generation += 1;
        self.eigen_refresh()
    }

    /// Recomputes `B` and `D` from `C`. Eigenvalues below
    /// [`EIGEN_FLOOR`] are raised to it, in which case `C` is rebuilt from
    /// the floored decomposition.
    pub fn eigen_refresh(&mut self) -> Result<(), CmaesError> {
        let n = self.dimension();
        let scale = self.covariance.amax().max(f64::MIN_POSITIVE);
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                asym = asym.max((self.covariance[(i, j)] - self.covariance[(j, i)]).abs());
            }
        }
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(CmaesError::Asymmetric(asym));
        }
        self.covariance = (&self.covariance + self.covariance.transpose()) * 0.5;

        let eig = SymmetricEigen::new(self.covariance.clone());
        self.min_eigenvalue = eig.eigenvalues.min();
        let floored = self.min_eigenvalue < EIGEN_FLOOR;
        self.scales = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR).sqrt());
        self.basis = eig.eigenvectors;
        if floored {
            let d2 = DMatrix::from_diagonal(&self.scales.map(|d| d * d));
            self.covariance = &self.basis * d2 * self.basis.transpose();
        }
        Ok(())
    }
}

/// Candidate indices sorted by score; ties keep candidate order.
fn rank(scored: &[ScoredCandidate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[a]
            .score
            .partial_cmp(&scored[b].score)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub generation: usize,
    /// Best-ever score after this generation.
    pub best_score: f64,
    pub median_score: f64,
    pub sigma: f64,
}

/// Writes `generation,best_score,median_score,sigma` rows.
pub fn write_history_csv<W: Write>(history: &[HistoryRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in history {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: Genome,
    pub best_score: f64,
    pub history: Vec<HistoryRecord>,
    pub state: CmaesState,
}

/// Seed used for the `ask` of generation `g` in a run keyed by `run_seed`.
pub fn generation_seed(run_seed: u64, generation: usize) -> u64 {
    seed::derive(run_seed, generation as u64)
}

/// Minimizes `objective` over `[0,1]^n` for `generations` generations with
/// the given parameters. Returns the best-ever candidate.
pub fn minimize<F>(
    mut objective: F,
    params: &CmaesParams,
    generations: usize,
    run_seed: u64,
) -> Result<RunResult, CmaesError>
where
    F: FnMut(&Genome) -> f64,
{
    minimize_batched(
        |genomes| genomes.iter().map(&mut objective).collect(),
        params,
        generations,
        run_seed,
    )
}

/// Like [`minimize`], but hands each generation's repaired genomes to
/// `evaluate` as one batch so the caller can score them in parallel. The
/// returned scores must be in candidate order.
pub fn minimize_batched<F>(
    mut evaluate: F,
    params: &CmaesParams,
    generations: usize,
    run_seed: u64,
) -> Result<RunResult, CmaesError>
where
    F: FnMut(&[Genome]) -> Vec<f64>,
{
    if generations == 0 {
        return Err(CmaesError::EmptyBudget);
    }
    let mut state = CmaesState::new(params.dimension);
    let mut history = Vec::with_capacity(generations);
    for g in 0..generations {
        let candidates = state.ask(params, generation_seed(run_seed, g));
        let genomes: Vec<Genome> = candidates.iter().map(|c| c.genome.clone()).collect();
        let scores = evaluate(&genomes);
        assert_eq!(scores.len(), candidates.len(), "evaluator must score every candidate");
        if let Some(candidate) = scores.iter().position(|s| !s.is_finite()) {
            return Err(CmaesError::NonFiniteObjective {
                generation: g,
                candidate,
            });
        }
        let median_score = median(&scores);
        let scored: Vec<ScoredCandidate> = candidates
            .into_iter()
            .zip(scores)
            .map(|(c, s)| c.scored(s))
            .collect();
        state.tell(params, &scored)?;
        let best = state.best.as_ref().expect("best is set after tell");
        history.push(HistoryRecord {
            generation: g,
            best_score: best.score,
            median_score,
            sigma: state.sigma,
        });
    }
    let best = state.best.clone().expect("at least one generation ran");
    Ok(RunResult {
        best: best.genome,
        best_score: best.score,
        history,
        state,
    })
}

/// [`minimize`] with default parameters for dimension `n`.
pub fn run<F>(objective: F, n: usize, generations: usize, run_seed: u64) -> Result<RunResult, CmaesError>
where
    F: FnMut(&Genome) -> f64,
{
    let params = default_params(n)?;
    minimize(objective, &params, generations, run_seed)
}
