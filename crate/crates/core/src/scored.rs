//! Ranked tag lists shared by every recommender.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredTag {
    pub tag: usize,
    pub score: f64,
}

/// Ordered recommendations. `shortfall` is set when fewer than the
/// requested number of eligible tags existed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Recommendation {
    pub items: Vec<ScoredTag>,
    pub shortfall: bool,
}

impl Recommendation {
    pub fn tags(&self) -> Vec<usize> {
        self.items.iter().map(|s| s.tag).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Descending score, ties by ascending tag index.
pub fn by_score_desc(a: &ScoredTag, b: &ScoredTag) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then(a.tag.cmp(&b.tag))
}

/// Sorts `candidates` and keeps the first `n`.
pub fn top_n(mut candidates: Vec<ScoredTag>, n: usize) -> Recommendation {
    candidates.sort_by(by_score_desc);
    let shortfall = candidates.len() < n;
    candidates.truncate(n);
    Recommendation {
        items: candidates,
        shortfall,
    }
}
