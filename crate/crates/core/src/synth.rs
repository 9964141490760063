//! Seeded synthetic corpora with a heavy-tailed shape (Zipf tag usage,
//! log-normal views, skewed posts per user).

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson, Zipf};

use crate::corpus::{Corpus, Post, Vocabulary};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub posts: usize,
    pub users: usize,
    /// Every one of these tags is attached to at least one post.
    pub tags: usize,
    pub mean_tags_per_post: f64,
    /// Parameters of the log-normal view distribution.
    pub log_views_mu: f64,
    pub log_views_sigma: f64,
    pub tag_zipf_exponent: f64,
    pub user_zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            posts: 10_000,
            users: 2_000,
            tags: 20_000,
            mean_tags_per_post: 12.0,
            log_views_mu: 8.0,
            log_views_sigma: 1.5,
            tag_zipf_exponent: 1.05,
            user_zipf_exponent: 0.8,
            seed: 7,
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Corpus {
    assert!(cfg.posts >= 1 && cfg.users >= 1 && cfg.tags >= 1);
    assert!(cfg.users <= cfg.posts, "every user needs a post");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocabulary: Vocabulary = (0..cfg.tags).map(|i| format!("t{i}")).collect();

    let tag_zipf = Zipf::new(cfg.tags as f64, cfg.tag_zipf_exponent).unwrap();
    let user_zipf = Zipf::new(cfg.users as f64, cfg.user_zipf_exponent).unwrap();
    let views_dist = LogNormal::new(cfg.log_views_mu, cfg.log_views_sigma).unwrap();
    let extra = Poisson::new(cfg.mean_tags_per_post.max(1.0)).unwrap();
    // per-user popularity multiplier
    let user_boost: Vec<f64> = (0..cfg.users)
        .map(|_| LogNormal::new(0.0, 0.75).unwrap().sample(&mut rng))
        .collect();

    let coverage_per_post = cfg.tags.div_ceil(cfg.posts);
    let mut posts = Vec::with_capacity(cfg.posts);
    for d in 0..cfg.posts {
        let user = if d < cfg.users {
            d
        } else {
            user_zipf.sample(&mut rng) as usize - 1
        };
        let mut tags: Vec<usize> = (0..coverage_per_post)
            .map(|j| d * coverage_per_post + j)
            .filter(|&t| t < cfg.tags)
            .collect();
        let wanted = (extra.sample(&mut rng) as usize).max(1);
        while tags.len() < wanted {
            let t = tag_zipf.sample(&mut rng) as usize - 1;
            if !tags.contains(&t) {
                tags.push(t);
            }
        }
        let views = (views_dist.sample(&mut rng) * user_boost[user]).round() as u64;
        posts.push(Post {
            post_id: format!("p{d}"),
            user_id: format!("u{user}"),
            popularity: views,
            tags,
        });
    }
    Corpus::from_posts(posts, vocabulary).expect("generator emits valid posts")
}

/// Seed tag sets drawn from random corpus posts (between 1 and `max_tags`
/// tags each).
pub fn sample_seeds(corpus: &Corpus, count: usize, max_tags: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let post = corpus.posts().choose(&mut rng).expect("non-empty corpus");
            let take = rng.random_range(1..=max_tags.min(post.tags.len()).max(1));
            post.tags.choose_multiple(&mut rng, take).copied().collect()
        })
        .collect()
}
