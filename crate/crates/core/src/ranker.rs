//! Damped power iteration over tag adjacency matrices, and recommendation
//! by the difference between seed-biased and uniform stationary scores.
//!
//! Mass flows along rows: one step computes `r'_j = Σ_i A(i, j) r_i`, i.e.
//! multiplication by the transpose of the row-normalized matrix. After each
//! step the vector is rescaled to the preference mass, which returns the
//! mass lost through dangling rows.

use rayon::prelude::*;
use thiserror::Error;

use crate::matrix::AdjacencyMatrix;
use crate::scored::{top_n, Recommendation, ScoredTag};

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("invalid iteration config: {0}")]
    InvalidConfig(String),
    #[error("preference vector must have positive mass and non-negative finite entries")]
    InvalidPreference,
    #[error("preference length {got} does not match {expected} tags")]
    LengthMismatch { expected: usize, got: usize },
    #[error("seed tag set is empty")]
    EmptySeed,
    #[error("seed tag {tag} outside vocabulary of {tags}")]
    SeedOutOfRange { tag: usize, tags: usize },
    #[error("requested zero recommendations")]
    ZeroCount,
    #[error("non-finite value at iteration {0}")]
    NonFinite(usize),
}

pub type Result<T> = std::result::Result<T, RankError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    pub alpha: f64,
    pub max_iterations: usize,
    /// Stop once the L1 change between iterates, divided by the preference
    /// mass, drops below this.
    pub tolerance: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            alpha: 0.85,
            max_iterations: 100,
            tolerance: 1e-9,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(RankError::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.max_iterations == 0 {
            return Err(RankError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(RankError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Teleport distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceVector {
    values: Vec<f64>,
    mass: f64,
}

impl PreferenceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RankError::InvalidPreference);
        }
        let mass: f64 = values.iter().sum();
        if mass <= 0.0 || !mass.is_finite() {
            return Err(RankError::InvalidPreference);
        }
        Ok(PreferenceVector { values, mass })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Every entry `mass / tags`.
pub fn uniform_preference(tags: usize, mass: f64) -> Result<PreferenceVector> {
    if tags == 0 {
        return Err(RankError::InvalidPreference);
    }
    PreferenceVector::new(vec![mass / tags as f64; tags])
}

/// 1 on each seed tag, 0 elsewhere.
pub fn indicator_preference(seeds: &[usize], tags: usize) -> Result<PreferenceVector> {
    if seeds.is_empty() {
        return Err(RankError::EmptySeed);
    }
    let mut values = vec![0.0; tags];
    for &s in seeds {
        if s >= tags {
            return Err(RankError::SeedOutOfRange { tag: s, tags });
        }
        values[s] = 1.0;
    }
    PreferenceVector::new(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankVector(pub Vec<f64>);

impl RankVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// `r¹ − r⁰`; entries may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDelta(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRun {
    pub rank: RankVector,
    pub iterations: usize,
    pub converged: bool,
    /// Mass-relative L1 change of the last iteration.
    pub final_delta: f64,
    /// Σr after each iteration.
    pub masses: Vec<f64>,
}

pub fn power_iterate(
    a: &AdjacencyMatrix,
    p: &PreferenceVector,
    cfg: &IterationConfig,
) -> Result<IterationRun> {
    cfg.validate()?;
    let t = a.num_tags();
    if p.len() != t {
        return Err(RankError::LengthMismatch {
            expected: t,
            got: p.len(),
        });
    }
    let mass = p.mass();
    let matrix = a.matrix();
    let mut r = vec![mass / t as f64; t];
    let mut next = vec![0.0; t];
    let mut masses = Vec::new();
    let mut delta = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iterations {
        iterations = it;
        matrix.transpose_mul_vec_into(&r, &mut next);
        for (x, &pj) in next.iter_mut().zip(p.values()) {
            *x = cfg.alpha * *x + (1.0 - cfg.alpha) * pj;
        }
        let sum: f64 = next.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(RankError::NonFinite(it));
        }
        let scale = mass / sum;
        next.iter_mut().for_each(|x| *x *= scale);
        delta = r.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>() / mass;
        if !delta.is_finite() {
            return Err(RankError::NonFinite(it));
        }
        std::mem::swap(&mut r, &mut next);
        masses.push(r.iter().sum());
        if delta < cfg.tolerance {
            converged = true;
            break;
        }
    }
    Ok(IterationRun {
        rank: RankVector(r),
        iterations,
        converged,
        final_delta: delta,
        masses,
    })
}

/// Global ranking with a unit-mass uniform preference.
pub fn rank_all(a: &AdjacencyMatrix, cfg: &IterationConfig) -> Result<Vec<ScoredTag>> {
    let p = uniform_preference(a.num_tags(), 1.0)?;
    let run = power_iterate(a, &p, cfg)?;
    let all: Vec<ScoredTag> = run
        .rank
        .0
        .iter()
        .enumerate()
        .map(|(tag, &score)| ScoredTag { tag, score })
        .collect();
    let n = all.len();
    Ok(top_n(all, n).items)
}

/// Output of [`Recommender::recommend_detailed`].
#[derive(Debug, Clone)]
pub struct RecommendDetail {
    pub recommendation: Recommendation,
    pub delta: ScoreDelta,
    pub seeded: IterationRun,
}

/// Recommends against one adjacency matrix, caching the unit-mass uniform
/// iteration.
#[derive(Debug)]
pub struct Recommender<'a> {
    adjacency: &'a AdjacencyMatrix,
    config: IterationConfig,
    baseline: IterationRun,
}

impl<'a> Recommender<'a> {
    pub fn new(adjacency: &'a AdjacencyMatrix, config: IterationConfig) -> Result<Self> {
        let p = uniform_preference(adjacency.num_tags(), 1.0)?;
        let baseline = power_iterate(adjacency, &p, &config)?;
        Ok(Recommender {
            adjacency,
            config,
            baseline,
        })
    }

    pub fn adjacency(&self) -> &AdjacencyMatrix {
        self.adjacency
    }

    /// Uniform-preference scores for unit mass.
    pub fn baseline(&self) -> &IterationRun {
        &self.baseline
    }

    pub fn recommend(&self, seeds: &[usize], n: usize) -> Result<Recommendation> {
        Ok(self.recommend_detailed(seeds, n)?.recommendation)
    }

    pub fn recommend_detailed(&self, seeds: &[usize], n: usize) -> Result<RecommendDetail> {
        if n == 0 {
            return Err(RankError::ZeroCount);
        }
        let t = self.adjacency.num_tags();
        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        seeds.dedup();
        let p = indicator_preference(&seeds, t)?;
        let seeded = power_iterate(self.adjacency, &p, &self.config)?;
        // the uniform run is homogeneous in the preference mass
        let mass = p.mass();
        let delta = ScoreDelta(
            seeded
                .rank
                .0
                .iter()
                .zip(self.baseline.rank.values())
                .map(|(r1, r0)| r1 - mass * r0)
                .collect(),
        );
        let reach = reachable(self.adjacency, &seeds);
        let candidates = (0..t)
            .filter(|&j| reach[j] && seeds.binary_search(&j).is_err())
            .map(|tag| ScoredTag {
                tag,
                score: delta.0[tag],
            })
            .collect();
        Ok(RecommendDetail {
            recommendation: top_n(candidates, n),
            delta,
            seeded,
        })
    }

    /// Runs independent seed sets in parallel; output order follows input.
    pub fn recommend_batch(&self, seeds: &[Vec<usize>], n: usize) -> Vec<Result<Recommendation>> {
        seeds.par_iter().map(|s| self.recommend(s, n)).collect()
    }
}

/// Tags reachable from `seeds` along positive adjacency entries.
fn reachable(a: &AdjacencyMatrix, seeds: &[usize]) -> Vec<bool> {
    let m = a.matrix();
    let mut seen = vec![false; a.num_tags()];
    let mut stack: Vec<usize> = Vec::new();
    for &s in seeds {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(i) = stack.pop() {
        for (j, _) in m.row(i) {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// One-shot recommendation; prefer [`Recommender`] for repeated seeds.
pub fn recommend(
    a: &AdjacencyMatrix,
    seeds: &[usize],
    n: usize,
    cfg: &IterationConfig,
) -> Result<Recommendation> {
    Recommender::new(a, *cfg)?.recommend(seeds, n)
}
