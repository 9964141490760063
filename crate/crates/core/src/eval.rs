//! Offline comparison of recommendation runs.
//!
//! Live view counts are unavailable offline, so methods are compared by
//! pairwise overlap, by a popularity proxy computed from the source corpus,
//! and by the global rank of the tags they recommend. The proxy is labelled
//! as such in every report.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

pub const PROXY_DISCLAIMER: &str = "PROXY: popularity_proxy is the mean source-corpus views of posts carrying each recommended tag; it is not a measured view count";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("runs cover different posts ({0})")]
    PostSetMismatch(String),
    #[error("runs use different list lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// One post's recommended tags, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecommendations {
    pub post_id: String,
    pub tags: Vec<String>,
}

/// All recommendations one method produced, with the settings that
/// reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub method: String,
    pub n: usize,
    pub config: BTreeMap<String, String>,
    pub posts: Vec<PostRecommendations>,
}

impl MethodRun {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub per_post: Vec<(String, f64)>,
    pub mean: f64,
}

/// Jaccard similarity of two tag lists as sets; two empty lists count as
/// identical.
pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    let sa: std::collections::BTreeSet<&String> = a.iter().collect();
    let sb: std::collections::BTreeSet<&String> = b.iter().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

pub fn overlap(a: &MethodRun, b: &MethodRun) -> Result<Overlap> {
    if a.n != b.n {
        return Err(EvalError::LengthMismatch(a.n, b.n));
    }
    if a.posts.len() != b.posts.len() {
        return Err(EvalError::PostSetMismatch(format!(
            "{} vs {} posts",
            a.posts.len(),
            b.posts.len()
        )));
    }
    let mut per_post = Vec::with_capacity(a.posts.len());
    for (pa, pb) in a.posts.iter().zip(&b.posts) {
        if pa.post_id != pb.post_id {
            return Err(EvalError::PostSetMismatch(format!(
                "{:?} vs {:?}",
                pa.post_id, pb.post_id
            )));
        }
        per_post.push((pa.post_id.clone(), jaccard(&pa.tags, &pb.tags)));
    }
    let mean = if per_post.is_empty() {
        0.0
    } else {
        per_post.iter().map(|(_, j)| j).sum::<f64>() / per_post.len() as f64
    };
    Ok(Overlap { per_post, mean })
}

/// Mean views of the posts carrying each tag.
#[derive(Debug, Clone)]
pub struct TagViewTable {
    means: HashMap<String, f64>,
}

impl TagViewTable {
    pub fn new(corpus: &Corpus) -> Self {
        let t = corpus.num_tags();
        let mut sum = vec![0.0f64; t];
        let mut count = vec![0u64; t];
        for post in corpus.posts() {
            for &tag in &post.tags {
                sum[tag] += post.popularity as f64;
                count[tag] += 1;
            }
        }
        let means = corpus
            .vocabulary()
            .iter()
            .enumerate()
            .filter(|&(i, _)| count[i] > 0)
            .map(|(i, tag)| (tag.to_string(), sum[i] / count[i] as f64))
            .collect();
        TagViewTable { means }
    }

    pub fn mean_views(&self, tag: &str) -> Option<f64> {
        self.means.get(tag).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyScore {
    pub score: f64,
    /// Fraction of recommended tags found in the corpus.
    pub coverage: f64,
    pub recommended: usize,
}

pub fn popularity_proxy(run: &MethodRun, table: &TagViewTable) -> ProxyScore {
    let mut total = 0.0;
    let mut found = 0usize;
    let mut recommended = 0usize;
    for post in &run.posts {
        for tag in &post.tags {
            recommended += 1;
            if let Some(m) = table.mean_views(tag) {
                total += m;
                found += 1;
            }
        }
    }
    if recommended == 0 {
        return ProxyScore {
            score: 0.0,
            coverage: 0.0,
            recommended: 0,
        };
    }
    ProxyScore {
        score: total / recommended as f64,
        coverage: found as f64 / recommended as f64,
        recommended,
    }
}

/// Mean 1-based position of recommended tags in `global_rank` (tag →
/// position); tags absent from it are ignored. `None` when nothing matched.
pub fn mean_global_rank(run: &MethodRun, global_rank: &HashMap<String, usize>) -> Option<f64> {
    let ranks: Vec<usize> = run
        .posts
        .iter()
        .flat_map(|p| p.tags.iter())
        .filter_map(|t| global_rank.get(t))
        .map(|r| r + 1)
        .collect();
    if ranks.is_empty() {
        None
    } else {
        Some(ranks.iter().sum::<usize>() as f64 / ranks.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub proxy: ProxyScore,
    pub mean_global_rank: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub method_a: String,
    pub method_b: String,
    pub overlap: Overlap,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub disclaimer: String,
    pub methods: Vec<MethodSummary>,
    pub pairs: Vec<PairOverlap>,
}

/// Summaries for every run and overlaps for every unordered pair, in input
/// order.
pub fn compare(
    runs: &[MethodRun],
    corpus: &Corpus,
    global_rank: &HashMap<String, usize>,
) -> Result<ComparisonReport> {
    let table = TagViewTable::new(corpus);
    let methods = runs
        .iter()
        .map(|r| MethodSummary {
            method: r.method.clone(),
            proxy: popularity_proxy(r, &table),
            mean_global_rank: mean_global_rank(r, global_rank),
        })
        .collect();
    let mut pairs = Vec::new();
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            pairs.push(PairOverlap {
                method_a: a.method.clone(),
                method_b: b.method.clone(),
                overlap: overlap(a, b)?,
            });
        }
    }
    Ok(ComparisonReport {
        disclaimer: PROXY_DISCLAIMER.to_string(),
        methods,
        pairs,
    })
}

pub const REPORT_HEADER: [&str; 5] = ["table", "method", "metric", "post_id", "value"];

/// Writes the report as CSV with columns `table,method,metric,post_id,value`.
/// Summary rows come first, then per-post overlap rows. A report without
/// methods or pairs is written as the header alone.
pub fn emit_report<W: Write>(report: &ComparisonReport, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(REPORT_HEADER)?;
    if !report.methods.is_empty() || !report.pairs.is_empty() {
        w.write_record(["summary", "", "disclaimer", "", report.disclaimer.as_str()])?;
    }
    for m in &report.methods {
        let rows = [
            ("popularity_proxy", Some(m.proxy.score)),
            ("proxy_coverage", Some(m.proxy.coverage)),
            ("recommended_tags", Some(m.proxy.recommended as f64)),
            ("mean_global_rank", m.mean_global_rank),
        ];
        for (metric, value) in rows {
            let value = value.map(|v| v.to_string()).unwrap_or_default();
            w.write_record(["summary", m.method.as_str(), metric, "", value.as_str()])?;
        }
    }
    for p in &report.pairs {
        let name = format!("{}|{}", p.method_a, p.method_b);
        w.write_record([
            "summary",
            name.as_str(),
            "mean_jaccard",
            "",
            p.overlap.mean.to_string().as_str(),
        ])?;
    }
    for p in &report.pairs {
        let name = format!("{}|{}", p.method_a, p.method_b);
        for (post, j) in &p.overlap.per_post {
            w.write_record(["overlap", name.as_str(), "jaccard", post.as_str(), j.to_string().as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}
