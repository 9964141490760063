//! Post/user/tag source data.
//!
//! A [`Corpus`] is built once by [`ingest`] (or [`Corpus::from_posts`]) and is
//! read-only afterwards. User aggregates are always derived from the posts.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate post id {post_id:?}")]
    DuplicatePost { line: usize, post_id: String },
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("invalid post {post_id:?}: {reason}")]
    InvalidPost { post_id: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Trims and lowercases a raw tag string.
pub fn normalize_tag(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Bijection between tag strings and dense indices `0..len()`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tags: IndexMap<String, ()>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `tag`, inserting it if absent. The tag must
    /// already be normalized.
    pub fn intern(&mut self, tag: &str) -> usize {
        match self.tags.get_index_of(tag) {
            Some(i) => i,
            None => self.tags.insert_full(tag.to_string(), ()).0,
        }
    }

    pub fn index_of(&self, tag: &str) -> Option<usize> {
        self.tags.get_index_of(tag)
    }

    /// Looks a raw (unnormalized) tag up.
    pub fn lookup(&self, raw: &str) -> Option<usize> {
        self.index_of(&normalize_tag(raw))
    }

    pub fn tag(&self, index: usize) -> Option<&str> {
        self.tags.get_index(index).map(|(t, _)| t.as_str())
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tags.keys().map(String::as_str)
    }
}

impl FromIterator<String> for Vocabulary {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        let mut v = Vocabulary::new();
        for t in iter {
            v.intern(&t);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub post_id: String,
    pub user_id: String,
    /// View count.
    pub popularity: u64,
    /// Distinct tag indices in first-seen order.
    pub tags: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct User {
    pub user_id: String,
    /// Sum of the views of the user's posts.
    pub popularity: u64,
    /// Number of the user's posts carrying each tag.
    pub tag_usage: BTreeMap<usize, u64>,
    pub total_usage: u64,
    pub post_count: usize,
}

impl User {
    fn empty(user_id: &str) -> Self {
        User {
            user_id: user_id.to_string(),
            popularity: 0,
            tag_usage: BTreeMap::new(),
            total_usage: 0,
            post_count: 0,
        }
    }

    fn absorb(&mut self, post: &Post) {
        self.popularity += post.popularity;
        self.post_count += 1;
        for &t in &post.tags {
            *self.tag_usage.entry(t).or_insert(0) += 1;
            self.total_usage += 1;
        }
    }
}

/// Posts, their users and the tag vocabulary.
///
/// Users are kept in first-appearance order; that order defines the user
/// column index of the user-side matrices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    posts: Vec<Post>,
    users: IndexMap<String, User>,
    vocabulary: Vocabulary,
}

impl Corpus {
    /// Builds a corpus from posts over `vocabulary`, deriving every user
    /// aggregate. Fails on duplicate post ids, empty or repeated tag lists,
    /// or out-of-range tag indices.
    pub fn from_posts(posts: Vec<Post>, vocabulary: Vocabulary) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(posts.len());
        let mut users: IndexMap<String, User> = IndexMap::new();
        for post in &posts {
            if !seen.insert(post.post_id.as_str()) {
                return Err(CorpusError::DuplicatePost {
                    line: 0,
                    post_id: post.post_id.clone(),
                });
            }
            check_post(post, vocabulary.len())?;
            users
                .entry(post.user_id.clone())
                .or_insert_with(|| User::empty(&post.user_id))
                .absorb(post);
        }
        Ok(Corpus {
            posts,
            users,
            vocabulary,
        })
    }

    /// Assembles a corpus from parts without checking consistency. Only
    /// [`validate`] should be trusted on the result.
    pub fn from_parts_unchecked(
        posts: Vec<Post>,
        users: Vec<User>,
        vocabulary: Vocabulary,
    ) -> Self {
        Corpus {
            posts,
            users: users.into_iter().map(|u| (u.user_id.clone(), u)).collect(),
            vocabulary,
        }
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn users(&self) -> impl ExactSizeIterator<Item = &User> {
        self.users.values()
    }

    pub fn user(&self, user_id: &str) -> Option<&User> {
        self.users.get(user_id)
    }

    /// Dense index of a user in first-appearance order.
    pub fn user_index(&self, user_id: &str) -> Option<usize> {
        self.users.get_index_of(user_id)
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn num_tags(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn num_posts(&self) -> usize {
        self.posts.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn tag_names(&self, tags: &[usize]) -> Vec<String> {
        tags.iter()
            .map(|&t| self.vocabulary.tag(t).unwrap_or("?").to_string())
            .collect()
    }

    /// Returns a copy with every post's views multiplied by `factor`.
    pub fn scale_views(&self, factor: u64) -> Corpus {
        let posts = self
            .posts
            .iter()
            .map(|p| Post {
                popularity: p.popularity * factor,
                ..p.clone()
            })
            .collect();
        Corpus::from_posts(posts, self.vocabulary.clone()).expect("scaling keeps validity")
    }
}

fn check_post(post: &Post, vocab_len: usize) -> Result<()> {
    let invalid = |reason: &str| CorpusError::InvalidPost {
        post_id: post.post_id.clone(),
        reason: reason.to_string(),
    };
    if post.tags.is_empty() {
        return Err(invalid("empty tag list"));
    }
    if post.tags.iter().any(|&t| t >= vocab_len) {
        return Err(invalid("tag index outside vocabulary"));
    }
    let mut sorted = post.tags.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("duplicate tag index"));
    }
    Ok(())
}

/// Result of [`ingest`].
#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    /// Number of repeated tags dropped within single records.
    pub collapsed_duplicate_tags: usize,
    pub header_skipped: bool,
}

/// Reads `post_id \t user_id \t views \t tag1,tag2,...` records.
///
/// A first line whose views column is not an integer is treated as a header.
/// Blank lines are ignored.
pub fn ingest<R: BufRead>(reader: R) -> Result<Ingested> {
    let mut vocabulary = Vocabulary::new();
    let mut posts = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut collapsed = 0usize;
    let mut header_skipped = false;
    let mut first_record = true;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| CorpusError::Malformed {
            line: lineno,
            reason,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(malformed(format!("expected 4 columns, found {}", cols.len())));
        }
        let views_raw = cols[2].trim();
        if first_record {
            first_record = false;
            if views_raw.parse::<i128>().is_err() {
                header_skipped = true;
                continue;
            }
        }
        let views: i128 = views_raw
            .parse()
            .map_err(|_| malformed(format!("views {views_raw:?} is not an integer")))?;
        if views < 0 {
            return Err(malformed(format!("negative views {views}")));
        }
        let views = u64::try_from(views).map_err(|_| malformed("views overflow".into()))?;

        let post_id = cols[0].trim();
        let user_id = cols[1].trim();
        if post_id.is_empty() {
            return Err(malformed("empty post id".into()));
        }
        if user_id.is_empty() {
            return Err(malformed("empty user id".into()));
        }
        if !seen.insert(post_id.to_string()) {
            return Err(CorpusError::DuplicatePost {
                line: lineno,
                post_id: post_id.to_string(),
            });
        }

        let mut tags = Vec::new();
        for raw in cols[3].split(',') {
            let tag = normalize_tag(raw);
            if tag.is_empty() {
                continue;
            }
            let idx = vocabulary.intern(&tag);
            if tags.contains(&idx) {
                collapsed += 1;
            } else {
                tags.push(idx);
            }
        }
        if tags.is_empty() {
            return Err(malformed("empty tag list".into()));
        }
        posts.push(Post {
            post_id: post_id.to_string(),
            user_id: user_id.to_string(),
            popularity: views,
            tags,
        });
    }
    if collapsed > 0 {
        log::warn!("collapsed {collapsed} duplicate tag(s) within records");
    }
    let corpus = Corpus::from_posts(posts, vocabulary)?;
    Ok(Ingested {
        corpus,
        collapsed_duplicate_tags: collapsed,
        header_skipped,
    })
}

/// Writes the corpus in the ingestion format, without a header.
pub fn write_tsv<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for post in corpus.posts() {
        let tags = corpus.tag_names(&post.tags).join(",");
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            post.post_id, post.user_id, post.popularity, tags
        )?;
    }
    Ok(())
}

/// Total views of a user's posts.
pub fn user_popularity(corpus: &Corpus, user_id: &str) -> Result<u64> {
    corpus
        .user(user_id)
        .map(|u| u.popularity)
        .ok_or_else(|| CorpusError::UnknownUser(user_id.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DanglingUser { post_id: String, user_id: String },
    PopularityMismatch { user_id: String, stored: u64, derived: u64 },
    UsageMismatch { user_id: String },
    BadPost { post_id: String, reason: String },
}

/// Dataset shape summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusStats {
    pub num_tags: usize,
    pub num_posts: usize,
    pub num_users: usize,
    pub mean_tags_per_post: f64,
    pub mean_views_per_post: f64,
    pub mean_posts_per_user: f64,
    pub mean_views_per_user: f64,
}

impl std::fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "unique tags           {}", self.num_tags)?;
        writeln!(f, "posts                 {}", self.num_posts)?;
        writeln!(f, "users                 {}", self.num_users)?;
        writeln!(f, "mean tags per post    {:.3}", self.mean_tags_per_post)?;
        writeln!(f, "mean views per post   {:.3}", self.mean_views_per_post)?;
        writeln!(f, "mean posts per user   {:.3}", self.mean_posts_per_user)?;
        write!(f, "mean views per user   {:.3}", self.mean_views_per_user)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub stats: CorpusStats,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn dangling_users(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| matches!(v, Violation::DanglingUser { .. }))
            .count()
    }
}

/// Checks every corpus invariant and computes summary statistics.
pub fn validate(corpus: &Corpus) -> ValidationReport {
    let mut violations = Vec::new();
    let mut derived: IndexMap<&str, User> = IndexMap::new();
    for post in corpus.posts() {
        if let Err(CorpusError::InvalidPost { post_id, reason }) =
            check_post(post, corpus.num_tags())
        {
            violations.push(Violation::BadPost { post_id, reason });
        }
        if corpus.user(&post.user_id).is_none() {
            violations.push(Violation::DanglingUser {
                post_id: post.post_id.clone(),
                user_id: post.user_id.clone(),
            });
            continue;
        }
        derived
            .entry(post.user_id.as_str())
            .or_insert_with(|| User::empty(&post.user_id))
            .absorb(post);
    }
    for user in corpus.users() {
        let fresh = derived
            .get(user.user_id.as_str())
            .cloned()
            .unwrap_or_else(|| User::empty(&user.user_id));
        if fresh.popularity != user.popularity {
            violations.push(Violation::PopularityMismatch {
                user_id: user.user_id.clone(),
                stored: user.popularity,
                derived: fresh.popularity,
            });
        }
        let sum: u64 = user.tag_usage.values().sum();
        if fresh.tag_usage != user.tag_usage
            || fresh.total_usage != user.total_usage
            || sum != user.total_usage
        {
            violations.push(Violation::UsageMismatch {
                user_id: user.user_id.clone(),
            });
        }
    }

    let n_posts = corpus.num_posts();
    let n_users = corpus.num_users();
    let attachments: usize = corpus.posts().iter().map(|p| p.tags.len()).sum();
    let views: u64 = corpus.posts().iter().map(|p| p.popularity).sum();
    let ratio = |num: f64, den: usize| if den == 0 { 0.0 } else { num / den as f64 };
    let stats = CorpusStats {
        num_tags: corpus.num_tags(),
        num_posts: n_posts,
        num_users: n_users,
        mean_tags_per_post: ratio(attachments as f64, n_posts),
        mean_views_per_post: ratio(views as f64, n_posts),
        mean_posts_per_user: ratio(n_posts as f64, n_users),
        mean_views_per_user: ratio(views as f64, n_users),
    };
    ValidationReport { violations, stats }
}
