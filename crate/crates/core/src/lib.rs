//! Tag ranking and recommendation driven by social popularity.
//!
//! Tags are scored by damped power iteration over a tag adjacency matrix
//! whose co-occurrence weights come from the popularity of the posts that
//! carry the tags and of the users who use them. Recommendations for a post
//! are the tags whose score rises most when the iteration is biased towards
//! the post's existing tags.
//!
//! Pipeline: [`corpus::ingest`] → [`matrix::build_variants`] →
//! [`ranker::Recommender`]; [`baselines`] holds the comparison methods and
//! [`eval`] the offline comparison harness.

pub mod baselines;
pub mod corpus;
pub mod eval;
pub mod fixtures;
pub mod index;
pub mod matrix;
pub mod ranker;
pub mod scored;
pub mod sparse;
pub mod synth;

pub use corpus::{Corpus, Vocabulary};
pub use matrix::{AdjacencyMatrix, BuildConfig, Smoothing, Variant};
pub use ranker::{IterationConfig, Recommender};
pub use scored::{Recommendation, ScoredTag};
pub use sparse::SparseMatrix;
