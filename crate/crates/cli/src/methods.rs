use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use tagrank::baselines::{
    cf_dfw_rank, cf_frequency_rank, tagcoor_recommend, train_tag_weights, CfIndex,
    CooccurrenceStats, TagWeights,
};
use tagrank::index::TagIndex;
use tagrank::{IterationConfig, Recommendation, Recommender, Variant, Vocabulary};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Graph(Variant),
    Tagcoor,
    Cf,
    CfDfw,
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "tagcoor" => Ok(Method::Tagcoor),
            "cf" => Ok(Method::Cf),
            "cf-dfw" => Ok(Method::CfDfw),
            other => other
                .parse::<Variant>()
                .map(Method::Graph)
                .map_err(|_| CliError::Config(format!("unknown method {other:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Graph(v) => write!(f, "{v}"),
            Method::Tagcoor => f.write_str("tagcoor"),
            Method::Cf => f.write_str("cf"),
            Method::CfDfw => f.write_str("cf-dfw"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MethodParams {
    pub iteration: IterationConfig,
    pub neighbors: usize,
    pub lambda: f64,
}

pub enum Engine<'a> {
    Graph(Recommender<'a>),
    Tagcoor(CooccurrenceStats),
    Cf(CfIndex, usize),
    CfDfw(CfIndex, usize, TagWeights),
}

impl<'a> Engine<'a> {
    pub fn new(index: &'a TagIndex, method: Method, params: &MethodParams) -> Result<Self, CliError> {
        let corpus = &index.corpus;
        Ok(match method {
            Method::Graph(v) => Engine::Graph(Recommender::new(index.get(v)?, params.iteration)?),
            Method::Tagcoor => Engine::Tagcoor(CooccurrenceStats::from_corpus(corpus)),
            Method::Cf => Engine::Cf(CfIndex::new(corpus), params.neighbors),
            Method::CfDfw => Engine::CfDfw(
                CfIndex::new(corpus),
                params.neighbors,
                train_tag_weights(corpus, params.lambda)?,
            ),
        })
    }

    pub fn recommend(&self, seeds: &[usize], n: usize) -> Result<Recommendation, CliError> {
        Ok(match self {
            Engine::Graph(r) => r.recommend(seeds, n)?,
            Engine::Tagcoor(stats) => tagcoor_recommend(stats, seeds, n)?.recommendation,
            Engine::Cf(idx, m) => cf_frequency_rank(&idx.candidates(seeds, *m)?, n),
            Engine::CfDfw(idx, m, w) => cf_dfw_rank(&idx.candidates(seeds, *m)?, w, n),
        })
    }

    /// Recommends for every seed set, keeping input order.
    pub fn recommend_all(&self, seeds: &[Vec<usize>], n: usize) -> Result<Vec<Recommendation>, CliError> {
        match self {
            Engine::Graph(r) => r
                .recommend_batch(seeds, n)
                .into_iter()
                .map(|r| r.map_err(CliError::from))
                .collect(),
            _ => seeds.iter().map(|s| self.recommend(s, n)).collect(),
        }
    }
}

/// A post to recommend for: its id and raw tag strings.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedPost {
    pub post_id: String,
    pub tags: Vec<String>,
}

pub fn parse_inline_seeds(raw: &str) -> SeedPost {
    SeedPost {
        post_id: "query".to_string(),
        tags: raw.split(',').map(str::to_string).collect(),
    }
}

/// Reads `post_id \t tag1,tag2,...` lines; blank lines are skipped.
pub fn read_seed_file<R: BufRead>(reader: R) -> Result<Vec<SeedPost>, CliError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let Some((id, tags)) = line.split_once('\t') else {
            return Err(CliError::Data(format!(
                "seed file line {}: expected `post_id<TAB>tags`",
                i + 1
            )));
        };
        if tags.contains('\t') {
            return Err(CliError::Data(format!("seed file line {}: too many columns", i + 1)));
        }
        out.push(SeedPost {
            post_id: id.trim().to_string(),
            tags: tags.split(',').map(str::to_string).collect(),
        });
    }
    Ok(out)
}

/// Maps seed strings onto the vocabulary; returns the indices and the
/// strings that were not found.
pub fn resolve_seeds(vocab: &Vocabulary, post: &SeedPost) -> (Vec<usize>, Vec<String>) {
    let mut known = Vec::new();
    let mut unknown = Vec::new();
    for raw in &post.tags {
        let norm = tagrank::corpus::normalize_tag(raw);
        if norm.is_empty() {
            continue;
        }
        match vocab.index_of(&norm) {
            Some(i) if !known.contains(&i) => known.push(i),
            Some(_) => {}
            None => unknown.push(norm),
        }
    }
    (known, unknown)
}
