//! Popularity-weighted tag co-occurrence matrices.
//!
//! Content side: `C_p` (T × posts) spreads each tag's weight over the posts
//! carrying it in proportion to `views + k`; `C_t` (T × posts) splits each
//! post evenly over its tags. `A_FP = C_p · C_tᵀ`.
//!
//! User side: `U_p` (T × users) spreads each tag's weight over the users who
//! used it in proportion to `popularity + k`; `U_t` (T × users) is each
//! user's tag-usage distribution. `A_UP = U_p · U_tᵀ`.
//!
//! Every assembled adjacency matrix is row-normalized; rows that end up
//! empty are recorded as dangling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::sparse::{SparseError, SparseMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("smoothing parameter must be finite and >= 0, got {0}")]
    InvalidSmoothing(f64),
    #[error("corpus has no {0}")]
    EmptyCorpus(&'static str),
    #[error("adjacency matrices cover different vocabularies ({left} vs {right} tags)")]
    VocabularyMismatch { left: usize, right: usize },
    #[error("unknown variant {0:?}")]
    UnknownVariant(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

pub type Result<T> = std::result::Result<T, MatrixError>;

/// Additive popularity smoothing `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing(f64);

impl Smoothing {
    pub fn new(k: f64) -> Result<Self> {
        if k.is_finite() && k >= 0.0 {
            Ok(Smoothing(k))
        } else {
            Err(MatrixError::InvalidSmoothing(k))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BuildConfig {
    pub smoothing: Smoothing,
    /// Drop self-pairs `(i, i)` before normalization.
    pub zero_diagonal: bool,
    /// Add `k` only to the numerator of the popularity weights, leaving the
    /// per-tag denominator as the raw popularity sum.
    pub literal_k: bool,
}

impl BuildConfig {
    pub fn with_k(k: f64) -> Result<Self> {
        Ok(BuildConfig {
            smoothing: Smoothing::new(k)?,
            ..Default::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Content popularity only.
    Fp,
    /// User popularity only (`A_UP`).
    U,
    /// `A_FP + A_UP`, renormalized.
    UfpPlus,
    /// `A_FP ⊙ A_UP`, renormalized.
    UfpProduct,
    /// Unweighted post co-occurrence counts.
    Cooccurrence,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Fp,
        Variant::U,
        Variant::UfpPlus,
        Variant::UfpProduct,
        Variant::Cooccurrence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Fp => "fp",
            Variant::U => "u",
            Variant::UfpPlus => "ufp-plus",
            Variant::UfpProduct => "ufp-product",
            Variant::Cooccurrence => "cooccurrence",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Variant::Fp => 0,
            Variant::U => 1,
            Variant::UfpPlus => 2,
            Variant::UfpProduct => 3,
            Variant::Cooccurrence => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.code() == code)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = MatrixError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| MatrixError::UnknownVariant(s.to_string()))
    }
}

/// How `combine` merges the content- and user-side matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    U,
    UfpPlus,
    UfpProduct,
}

/// Row-normalized T × T tag adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    matrix: SparseMatrix,
    variant: Variant,
    config: BuildConfig,
    dangling: Vec<usize>,
}

impl AdjacencyMatrix {
    /// Normalizes `raw` by rows (after dropping the diagonal if configured).
    pub fn from_raw(raw: SparseMatrix, variant: Variant, config: BuildConfig) -> Result<Self> {
        if raw.n_rows() != raw.n_cols() {
            return Err(SparseError::DimensionMismatch {
                left: raw.shape(),
                right: (raw.n_cols(), raw.n_rows()),
            }
            .into());
        }
        let mut matrix = if config.zero_diagonal {
            raw.without_diagonal()
        } else {
            raw
        };
        let dangling = matrix.normalize_rows_in_place();
        Ok(AdjacencyMatrix {
            matrix,
            variant,
            config,
            dangling,
        })
    }

    /// Wraps an already-normalized matrix, recomputing the dangling rows.
    pub fn from_normalized(matrix: SparseMatrix, variant: Variant, config: BuildConfig) -> Self {
        let dangling = (0..matrix.n_rows()).filter(|&r| matrix.row_nnz(r) == 0).collect();
        AdjacencyMatrix {
            matrix,
            variant,
            config,
            dangling,
        }
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn config(&self) -> BuildConfig {
        self.config
    }

    pub fn dangling(&self) -> &[usize] {
        &self.dangling
    }

    pub fn num_tags(&self) -> usize {
        self.matrix.n_rows()
    }
}

/// Per-tag normalizers for popularity weights. With `literal_k` the sum
/// excludes `k`; a zero sum leaves the row unscaled.
fn weight_denominators<'a>(
    groups: impl Iterator<Item = &'a [f64]>,
    k: f64,
    literal_k: bool,
) -> Vec<f64> {
    groups
        .map(|pops| {
            let sum: f64 = if literal_k {
                pops.iter().sum()
            } else {
                pops.iter().map(|p| p + k).sum()
            };
            if sum > 0.0 {
                sum
            } else {
                1.0
            }
        })
        .collect()
}

/// Builds `(C_p, C_t)`, both T × |D|.
pub fn build_content_submatrices(
    corpus: &Corpus,
    config: &BuildConfig,
) -> Result<(SparseMatrix, SparseMatrix)> {
    let (t, n) = (corpus.num_tags(), corpus.num_posts());
    if t == 0 {
        return Err(MatrixError::EmptyCorpus("tags"));
    }
    if n == 0 {
        return Err(MatrixError::EmptyCorpus("posts"));
    }
    let k = config.smoothing.value();
    let mut pops_by_tag: Vec<Vec<f64>> = vec![Vec::new(); t];
    for post in corpus.posts() {
        for &tag in &post.tags {
            pops_by_tag[tag].push(post.popularity as f64);
        }
    }
    let denom = weight_denominators(pops_by_tag.iter().map(Vec::as_slice), k, config.literal_k);
    drop(pops_by_tag);

    let attachments: usize = corpus.posts().iter().map(|p| p.tags.len()).sum();
    let mut cp = Vec::with_capacity(attachments);
    let mut ct = Vec::with_capacity(attachments);
    for (d, post) in corpus.posts().iter().enumerate() {
        let w = post.popularity as f64 + k;
        let share = 1.0 / post.tags.len() as f64;
        for &tag in &post.tags {
            cp.push((tag, d, w / denom[tag]));
            ct.push((tag, d, share));
        }
    }
    Ok((
        SparseMatrix::from_triplets(t, n, cp),
        SparseMatrix::from_triplets(t, n, ct),
    ))
}

/// Builds `(U_p, U_t)`, both T × |L|, with users in corpus order.
pub fn build_user_submatrices(
    corpus: &Corpus,
    config: &BuildConfig,
) -> Result<(SparseMatrix, SparseMatrix)> {
    let (t, n) = (corpus.num_tags(), corpus.num_users());
    if t == 0 {
        return Err(MatrixError::EmptyCorpus("tags"));
    }
    if n == 0 {
        return Err(MatrixError::EmptyCorpus("users"));
    }
    let k = config.smoothing.value();
    let mut pops_by_tag: Vec<Vec<f64>> = vec![Vec::new(); t];
    for user in corpus.users() {
        for &tag in user.tag_usage.keys() {
            pops_by_tag[tag].push(user.popularity as f64);
        }
    }
    let denom = weight_denominators(pops_by_tag.iter().map(Vec::as_slice), k, config.literal_k);
    drop(pops_by_tag);

    let mut up = Vec::new();
    let mut ut = Vec::new();
    for (l, user) in corpus.users().enumerate() {
        let w = user.popularity as f64 + k;
        let total = user.total_usage as f64;
        for (&tag, &count) in &user.tag_usage {
            up.push((tag, l, w / denom[tag]));
            ut.push((tag, l, count as f64 / total));
        }
    }
    Ok((
        SparseMatrix::from_triplets(t, n, up),
        SparseMatrix::from_triplets(t, n, ut),
    ))
}

/// `(tag, post)` popularity shares `(views + k) / tags_on_post` before any
/// per-tag normalization.
pub fn content_popularity_shares(corpus: &Corpus, k: Smoothing) -> SparseMatrix {
    let mut trip = Vec::new();
    for (d, post) in corpus.posts().iter().enumerate() {
        let share = (post.popularity as f64 + k.value()) / post.tags.len() as f64;
        for &tag in &post.tags {
            trip.push((tag, d, share));
        }
    }
    SparseMatrix::from_triplets(corpus.num_tags(), corpus.num_posts(), trip)
}

/// `(tag, user)` popularity shares `(popularity + k) · usage / total_usage`.
pub fn user_popularity_shares(corpus: &Corpus, k: Smoothing) -> SparseMatrix {
    let mut trip = Vec::new();
    for (l, user) in corpus.users().enumerate() {
        let w = user.popularity as f64 + k.value();
        for (&tag, &count) in &user.tag_usage {
            trip.push((tag, l, w * count as f64 / user.total_usage as f64));
        }
    }
    SparseMatrix::from_triplets(corpus.num_tags(), corpus.num_users(), trip)
}

pub fn assemble_fp(
    c_p: &SparseMatrix,
    c_t: &SparseMatrix,
    config: &BuildConfig,
) -> Result<AdjacencyMatrix> {
    let raw = c_p.mul_transpose(c_t)?;
    AdjacencyMatrix::from_raw(raw, Variant::Fp, *config)
}

pub fn assemble_up(
    u_p: &SparseMatrix,
    u_t: &SparseMatrix,
    config: &BuildConfig,
) -> Result<AdjacencyMatrix> {
    let raw = u_p.mul_transpose(u_t)?;
    AdjacencyMatrix::from_raw(raw, Variant::U, *config)
}

/// Merges the normalized content- and user-side matrices.
pub fn combine(
    a_fp: &AdjacencyMatrix,
    a_up: &AdjacencyMatrix,
    mode: CombineMode,
) -> Result<AdjacencyMatrix> {
    if a_fp.num_tags() != a_up.num_tags() {
        return Err(MatrixError::VocabularyMismatch {
            left: a_fp.num_tags(),
            right: a_up.num_tags(),
        });
    }
    let config = a_up.config;
    match mode {
        CombineMode::U => Ok(a_up.clone()),
        CombineMode::UfpPlus => {
            AdjacencyMatrix::from_raw(a_fp.matrix.add(&a_up.matrix)?, Variant::UfpPlus, config)
        }
        CombineMode::UfpProduct => AdjacencyMatrix::from_raw(
            a_fp.matrix.hadamard(&a_up.matrix)?,
            Variant::UfpProduct,
            config,
        ),
    }
}

/// Row-normalized plain co-occurrence: entry `(i, j)` counts the posts
/// carrying both tags.
pub fn build_cooccurrence(corpus: &Corpus, config: &BuildConfig) -> Result<AdjacencyMatrix> {
    let (t, n) = (corpus.num_tags(), corpus.num_posts());
    if t == 0 {
        return Err(MatrixError::EmptyCorpus("tags"));
    }
    let mut trip = Vec::new();
    for (d, post) in corpus.posts().iter().enumerate() {
        for &tag in &post.tags {
            trip.push((tag, d, 1.0));
        }
    }
    let incidence = SparseMatrix::from_triplets(t, n, trip);
    let raw = incidence.mul_transpose(&incidence)?;
    AdjacencyMatrix::from_raw(raw, Variant::Cooccurrence, *config)
}

/// Builds each requested variant, sharing the content- and user-side
/// products between them. Output follows the order of `variants` with
/// duplicates removed.
pub fn build_variants(
    corpus: &Corpus,
    variants: &[Variant],
    config: &BuildConfig,
) -> Result<Vec<AdjacencyMatrix>> {
    let mut wanted: Vec<Variant> = Vec::new();
    for &v in variants {
        if !wanted.contains(&v) {
            wanted.push(v);
        }
    }
    let needs_fp = wanted
        .iter()
        .any(|v| matches!(v, Variant::Fp | Variant::UfpPlus | Variant::UfpProduct));
    let needs_up = wanted
        .iter()
        .any(|v| matches!(v, Variant::U | Variant::UfpPlus | Variant::UfpProduct));

    let a_fp = if needs_fp {
        let (c_p, c_t) = build_content_submatrices(corpus, config)?;
        Some(assemble_fp(&c_p, &c_t, config)?)
    } else {
        None
    };
    let a_up = if needs_up {
        let (u_p, u_t) = build_user_submatrices(corpus, config)?;
        Some(assemble_up(&u_p, &u_t, config)?)
    } else {
        None
    };

    // Combinations first, while both sides are still borrowed; the plain
    // sides are then moved out rather than cloned.
    let mut out: Vec<Option<AdjacencyMatrix>> = Vec::with_capacity(wanted.len());
    for &v in &wanted {
        out.push(match v {
            Variant::UfpPlus => Some(combine(
                a_fp.as_ref().unwrap(),
                a_up.as_ref().unwrap(),
                CombineMode::UfpPlus,
            )?),
            Variant::UfpProduct => Some(combine(
                a_fp.as_ref().unwrap(),
                a_up.as_ref().unwrap(),
                CombineMode::UfpProduct,
            )?),
            Variant::Cooccurrence => Some(build_cooccurrence(corpus, config)?),
            Variant::Fp | Variant::U => None,
        });
    }
    let (mut a_fp, mut a_up) = (a_fp, a_up);
    Ok(wanted
        .iter()
        .zip(out)
        .map(|(v, built)| match v {
            Variant::Fp => a_fp.take().unwrap(),
            Variant::U => a_up.take().unwrap(),
            _ => built.unwrap(),
        })
        .collect())
}

pub fn build_variant(corpus: &Corpus, variant: Variant, config: &BuildConfig) -> Result<AdjacencyMatrix> {
    Ok(build_variants(corpus, &[variant], config)?.remove(0))
}
