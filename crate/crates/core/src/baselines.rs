//! Comparison recommenders: conditional co-occurrence voting (Tagcoor),
//! cosine-neighbour collaborative filtering, and CF re-weighted by per-tag
//! weights learned with ridge regression on `log(1 + views)`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::Corpus;
use crate::scored::{top_n, Recommendation, ScoredTag};

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("seed tag set is empty")]
    EmptySeed,
    #[error("no seed tag is present in the co-occurrence statistics")]
    NoUsableSeed,
    #[error("neighbour count must be >= 1")]
    ZeroNeighbors,
    #[error("weight training needs at least 2 posts, got {0}")]
    TooFewPosts(usize),
    #[error("regularization must be positive, got {0}")]
    InvalidLambda(f64),
}

pub type Result<T> = std::result::Result<T, BaselineError>;

fn dedup_seeds(seeds: &[usize]) -> Result<Vec<usize>> {
    if seeds.is_empty() {
        return Err(BaselineError::EmptySeed);
    }
    let mut s = seeds.to_vec();
    s.sort_unstable();
    s.dedup();
    Ok(s)
}

/// Per-tag post counts and symmetric pair counts `|t_i ∩ t_j|` (i ≠ j),
/// stored row-compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceStats {
    tag_post_counts: Vec<u64>,
    offsets: Vec<usize>,
    partners: Vec<usize>,
    counts: Vec<u64>,
}

impl CooccurrenceStats {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let t = corpus.num_tags();
        let mut tag_post_counts = vec![0u64; t];
        let mut rows: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); t];
        for post in corpus.posts() {
            for &i in &post.tags {
                tag_post_counts[i] += 1;
                for &j in &post.tags {
                    if i != j {
                        *rows[i].entry(j).or_insert(0) += 1;
                    }
                }
            }
        }
        let mut offsets = Vec::with_capacity(t + 1);
        offsets.push(0);
        let mut partners = Vec::new();
        let mut counts = Vec::new();
        for row in rows {
            for (j, c) in row {
                partners.push(j);
                counts.push(c);
            }
            offsets.push(partners.len());
        }
        CooccurrenceStats {
            tag_post_counts,
            offsets,
            partners,
            counts,
        }
    }

    pub fn num_tags(&self) -> usize {
        self.tag_post_counts.len()
    }

    /// `|t_i|`, zero for unknown tags.
    pub fn tag_count(&self, i: usize) -> u64 {
        self.tag_post_counts.get(i).copied().unwrap_or(0)
    }

    /// Tags co-occurring with `i`, with their pair counts.
    pub fn partners(&self, i: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let (lo, hi) = if i < self.num_tags() {
            (self.offsets[i], self.offsets[i + 1])
        } else {
            (0, 0)
        };
        self.partners[lo..hi]
            .iter()
            .copied()
            .zip(self.counts[lo..hi].iter().copied())
    }

    /// `|t_i ∩ t_j|`; the diagonal is `|t_i|`.
    pub fn pair_count(&self, i: usize, j: usize) -> u64 {
        if i == j {
            return self.tag_count(i);
        }
        if i >= self.num_tags() {
            return 0;
        }
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        match self.partners[lo..hi].binary_search(&j) {
            Ok(k) => self.counts[lo + k],
            Err(_) => 0,
        }
    }

    /// `P(t_j | t_i) = |t_i ∩ t_j| / |t_i|`.
    pub fn conditional(&self, j: usize, i: usize) -> f64 {
        match self.tag_count(i) {
            0 => 0.0,
            n => self.pair_count(i, j) as f64 / n as f64,
        }
    }
}

/// Tagcoor output plus the seeds that were skipped as unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct TagcoorResult {
    pub recommendation: Recommendation,
    pub skipped_seeds: Vec<usize>,
}

/// Sums `P(t_j | t_i)` over seed tags `i`; lists positive-score non-seed
/// tags only.
pub fn tagcoor_recommend(stats: &CooccurrenceStats, seeds: &[usize], n: usize) -> Result<TagcoorResult> {
    let seeds = dedup_seeds(seeds)?;
    let (usable, skipped): (Vec<usize>, Vec<usize>) =
        seeds.iter().partition(|&&s| stats.tag_count(s) > 0);
    if usable.is_empty() {
        return Err(BaselineError::NoUsableSeed);
    }
    if !skipped.is_empty() {
        log::warn!("tagcoor: skipped {} unknown seed tag(s)", skipped.len());
    }
    let mut scores: BTreeMap<usize, f64> = BTreeMap::new();
    for &i in &usable {
        let base = stats.tag_count(i) as f64;
        for (j, c) in stats.partners(i) {
            if seeds.binary_search(&j).is_err() {
                *scores.entry(j).or_insert(0.0) += c as f64 / base;
            }
        }
    }
    let candidates = scores
        .into_iter()
        .map(|(tag, score)| ScoredTag { tag, score })
        .collect();
    Ok(TagcoorResult {
        recommendation: top_n(candidates, n),
        skipped_seeds: skipped,
    })
}

/// Cosine similarity of two binary tag vectors given as sorted sets.
pub fn cosine_binary(a: &[usize], b: &[usize]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut shared) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    shared as f64 / ((a.len() * b.len()) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Position of the post in the corpus.
    pub post: usize,
    pub similarity: f64,
}

/// Neighbour posts and the multiset of their non-seed tags.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Candidates {
    pub neighbors: Vec<Neighbor>,
    pub counts: BTreeMap<usize, usize>,
}

impl Candidates {
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Tag → posts inverted index with sorted per-post tag sets, for
/// neighbour search.
#[derive(Debug, Clone)]
pub struct CfIndex {
    post_tags: Vec<Vec<usize>>,
    posts_by_tag: Vec<Vec<usize>>,
}

impl CfIndex {
    pub fn new(corpus: &Corpus) -> Self {
        let mut posts_by_tag = vec![Vec::new(); corpus.num_tags()];
        let post_tags = corpus
            .posts()
            .iter()
            .enumerate()
            .map(|(d, p)| {
                for &t in &p.tags {
                    posts_by_tag[t].push(d);
                }
                let mut tags = p.tags.clone();
                tags.sort_unstable();
                tags
            })
            .collect();
        CfIndex {
            post_tags,
            posts_by_tag,
        }
    }

    /// Top `m_neighbors` posts by cosine similarity to the seed set (ties by
    /// post order, zero-similarity posts never used) and their tags minus
    /// the seeds, with multiplicity.
    pub fn candidates(&self, seeds: &[usize], m_neighbors: usize) -> Result<Candidates> {
        let seeds = dedup_seeds(seeds)?;
        if m_neighbors == 0 {
            return Err(BaselineError::ZeroNeighbors);
        }
        let mut touched: Vec<usize> = seeds
            .iter()
            .filter_map(|&s| self.posts_by_tag.get(s))
            .flatten()
            .copied()
            .collect();
        touched.sort_unstable();
        touched.dedup();
        let mut neighbors: Vec<Neighbor> = touched
            .into_iter()
            .map(|post| Neighbor {
                post,
                similarity: cosine_binary(&seeds, &self.post_tags[post]),
            })
            .filter(|n| n.similarity > 0.0)
            .collect();
        neighbors.sort_by(|a, b| {
            b.similarity
                .partial_cmp(&a.similarity)
                .unwrap()
                .then(a.post.cmp(&b.post))
        });
        neighbors.truncate(m_neighbors);
        let mut counts = BTreeMap::new();
        for n in &neighbors {
            for &t in &self.post_tags[n.post] {
                if seeds.binary_search(&t).is_err() {
                    *counts.entry(t).or_insert(0) += 1;
                }
            }
        }
        Ok(Candidates { neighbors, counts })
    }
}

pub fn cf_candidates(corpus: &Corpus, seeds: &[usize], m_neighbors: usize) -> Result<Candidates> {
    CfIndex::new(corpus).candidates(seeds, m_neighbors)
}

/// Ranks candidates by multiplicity.
pub fn cf_frequency_rank(candidates: &Candidates, n: usize) -> Recommendation {
    let scored = candidates
        .counts
        .iter()
        .map(|(&tag, &c)| ScoredTag {
            tag,
            score: c as f64,
        })
        .collect();
    top_n(scored, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagWeights(pub Vec<f64>);

impl TagWeights {
    pub fn get(&self, tag: usize) -> f64 {
        self.0.get(tag).copied().unwrap_or(0.0)
    }
}

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_NEIGHBORS: usize = 25;

struct Design<'a> {
    rows: Vec<&'a [usize]>,
    tags: usize,
}

impl Design<'_> {
    /// `out = (XᵀX + λI) w` without materializing `XᵀX`.
    fn gram_apply(&self, w: &[f64], lambda: f64, out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(w) {
            *o = lambda * x;
        }
        for row in &self.rows {
            let xw: f64 = row.iter().map(|&t| w[t]).sum();
            for &t in row.iter() {
                out[t] += xw;
            }
        }
    }
}

/// Ridge regression of `log(1 + views)` on binary tag vectors (no
/// intercept), solved by conjugate gradients on the normal equations.
pub fn train_tag_weights(corpus: &Corpus, lambda: f64) -> Result<TagWeights> {
    if corpus.num_posts() < 2 {
        return Err(BaselineError::TooFewPosts(corpus.num_posts()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(BaselineError::InvalidLambda(lambda));
    }
    let t = corpus.num_tags();
    let design = Design {
        rows: corpus.posts().iter().map(|p| p.tags.as_slice()).collect(),
        tags: t,
    };
    let mut rhs = vec![0.0; t];
    for post in corpus.posts() {
        let y = (post.popularity as f64).ln_1p();
        for &tag in &post.tags {
            rhs[tag] += y;
        }
    }
    Ok(TagWeights(conjugate_gradient(&design, lambda, &rhs)))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(design: &Design<'_>, lambda: f64, rhs: &[f64]) -> Vec<f64> {
    let t = design.tags;
    let mut w = vec![0.0; t];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; t];
    let mut rr = dot(&r, &r);
    let stop = 1e-28 * rr.max(f64::MIN_POSITIVE);
    // exact arithmetic terminates in t steps; allow slack for rounding
    for _ in 0..(2 * t + 10) {
        if rr <= stop {
            break;
        }
        design.gram_apply(&p, lambda, &mut ap);
        let step = rr / dot(&p, &ap);
        for i in 0..t {
            w[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for i in 0..t {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
    }
    w
}

/// Ranks candidates by `multiplicity × weight`.
pub fn cf_dfw_rank(candidates: &Candidates, weights: &TagWeights, n: usize) -> Recommendation {
    let scored = candidates
        .counts
        .iter()
        .map(|(&tag, &c)| ScoredTag {
            tag,
            score: c as f64 * weights.get(tag),
        })
        .collect();
    top_n(scored, n)
}
