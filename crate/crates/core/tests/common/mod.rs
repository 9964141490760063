//! Independent dense oracles. Nothing here calls into the sparse pipeline:
//! every quantity is recomputed from the raw post list.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use tagrank::corpus::{Corpus, Post, Vocabulary};

pub type Dense = Vec<Vec<f64>>;

/// Random small corpus: 1..=max_posts posts, 1..=max_tags tags in the
/// vocabulary (some possibly unused), 1..=max_users users.
pub fn random_corpus<R: Rng>(rng: &mut R, max_posts: usize, max_tags: usize, max_users: usize) -> Corpus {
    let n_posts = rng.random_range(1..=max_posts);
    let n_tags = rng.random_range(1..=max_tags);
    let n_users = rng.random_range(1..=max_users);
    let vocab: Vocabulary = (0..n_tags).map(|i| format!("t{i}")).collect();
    let all: Vec<usize> = (0..n_tags).collect();
    let posts = (0..n_posts)
        .map(|d| {
            let count = rng.random_range(1..=n_tags);
            let mut tags: Vec<usize> = all.choose_multiple(rng, count).copied().collect();
            tags.shuffle(rng);
            let views = if rng.random_bool(0.15) { 0 } else { rng.random_range(0..=5000) };
            Post {
                post_id: format!("d{d}"),
                user_id: format!("u{}", rng.random_range(0..n_users)),
                popularity: views,
                tags,
            }
        })
        .collect();
    Corpus::from_posts(posts, vocab).expect("generator emits valid corpora")
}

fn has(post: &Post, tag: usize) -> bool {
    post.tags.contains(&tag)
}

pub fn normalize(mut a: Dense) -> Dense {
    for row in &mut a {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
    a
}

fn finish(mut a: Dense, zero_diagonal: bool) -> Dense {
    if zero_diagonal {
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 0.0;
        }
    }
    normalize(a)
}

fn denom_or_one(s: f64) -> f64 {
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Content side: Σ_d [i,j ∈ d] (v_d + k) / Σ_{d' ∋ i}(v_d' + k) · 1/|d|.
pub fn dense_fp(c: &Corpus, k: f64, literal_k: bool, zero_diagonal: bool) -> Dense {
    let t = c.num_tags();
    let posts = c.posts();
    let mut a = vec![vec![0.0; t]; t];
    for i in 0..t {
        let denom: f64 = posts
            .iter()
            .filter(|p| has(p, i))
            .map(|p| p.popularity as f64 + if literal_k { 0.0 } else { k })
            .sum();
        let denom = denom_or_one(denom);
        for j in 0..t {
            for p in posts {
                if has(p, i) && has(p, j) {
                    a[i][j] += (p.popularity as f64 + k) / denom * (1.0 / p.tags.len() as f64);
                }
            }
        }
    }
    finish(a, zero_diagonal)
}

struct DenseUser {
    popularity: f64,
    usage: Vec<f64>,
    total: f64,
}

/// Regroups posts by user id from scratch.
fn dense_users(c: &Corpus) -> Vec<DenseUser> {
    let t = c.num_tags();
    let mut ids: Vec<&str> = Vec::new();
    let mut users: Vec<DenseUser> = Vec::new();
    for p in c.posts() {
        let idx = match ids.iter().position(|u| *u == p.user_id) {
            Some(i) => i,
            None => {
                ids.push(&p.user_id);
                users.push(DenseUser {
                    popularity: 0.0,
                    usage: vec![0.0; t],
                    total: 0.0,
                });
                users.len() - 1
            }
        };
        let u = &mut users[idx];
        u.popularity += p.popularity as f64;
        for &tag in &p.tags {
            u.usage[tag] += 1.0;
            u.total += 1.0;
        }
    }
    users
}

/// User side: Σ_l [l uses i, j] (pop_l + k) / Σ_{l' uses i}(pop_l' + k) · usage(l, j) / total(l).
pub fn dense_up(c: &Corpus, k: f64, literal_k: bool, zero_diagonal: bool) -> Dense {
    let t = c.num_tags();
    let users = dense_users(c);
    let mut a = vec![vec![0.0; t]; t];
    for i in 0..t {
        let denom: f64 = users
            .iter()
            .filter(|u| u.usage[i] > 0.0)
            .map(|u| u.popularity + if literal_k { 0.0 } else { k })
            .sum();
        let denom = denom_or_one(denom);
        for j in 0..t {
            for u in &users {
                if u.usage[i] > 0.0 && u.usage[j] > 0.0 {
                    a[i][j] += (u.popularity + k) / denom * (u.usage[j] / u.total);
                }
            }
        }
    }
    finish(a, zero_diagonal)
}

pub fn dense_plus(fp: &Dense, up: &Dense, zero_diagonal: bool) -> Dense {
    let a = fp
        .iter()
        .zip(up)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect();
    finish(a, zero_diagonal)
}

pub fn dense_product(fp: &Dense, up: &Dense, zero_diagonal: bool) -> Dense {
    let a = fp
        .iter()
        .zip(up)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x * y).collect())
        .collect();
    finish(a, zero_diagonal)
}

pub fn dense_cooccurrence(c: &Corpus, zero_diagonal: bool) -> Dense {
    let t = c.num_tags();
    let mut a = vec![vec![0.0; t]; t];
    for p in c.posts() {
        for &i in &p.tags {
            for &j in &p.tags {
                a[i][j] += 1.0;
            }
        }
    }
    finish(a, zero_diagonal)
}

pub fn max_abs_diff(a: &Dense, b: &Dense) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| {
            assert_eq!(r.len(), s.len());
            r.iter().zip(s).map(|(x, y)| (x - y).abs())
        })
        .fold(0.0, f64::max)
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Plain dense damped iteration with mass restoration, run for a fixed
/// number of steps.
pub fn dense_iterate(a: &Dense, p: &[f64], alpha: f64, steps: usize) -> Vec<f64> {
    let t = p.len();
    let m: f64 = p.iter().sum();
    let mut r = vec![m / t as f64; t];
    for _ in 0..steps {
        let mut next = vec![0.0; t];
        for j in 0..t {
            let mut s = 0.0;
            for i in 0..t {
                s += a[i][j] * r[i];
            }
            next[j] = alpha * s + (1.0 - alpha) * p[j];
        }
        let total: f64 = next.iter().sum();
        r = next.into_iter().map(|x| x * m / total).collect();
    }
    r
}

/// Direct solve of `(I − αAᵀ) r = (1 − α) p`; only meaningful when every
/// row of `a` sums to one, since then no mass is lost.
pub fn dense_solve(a: &Dense, p: &[f64], alpha: f64) -> Vec<f64> {
    let t = p.len();
    let at = DMatrix::from_fn(t, t, |i, j| a[j][i]);
    let lhs = DMatrix::identity(t, t) - at * alpha;
    let rhs = DVector::from_iterator(t, p.iter().map(|x| x * (1.0 - alpha)));
    lhs.lu().solve(&rhs).expect("I − αAᵀ is nonsingular for α < 1").iter().copied().collect()
}

pub fn is_stochastic(a: &Dense) -> bool {
    a.iter().all(|r| (r.iter().sum::<f64>() - 1.0).abs() < 1e-12)
}

/// Reference stationary vector: direct solve for stochastic matrices,
/// otherwise a long dense iteration.
pub fn dense_reference(a: &Dense, p: &[f64], alpha: f64) -> Vec<f64> {
    if is_stochastic(a) {
        dense_solve(a, p, alpha)
    } else {
        dense_iterate(a, p, alpha, 20_000)
    }
}

/// Dense oracle for the preference-difference score `r¹ − r⁰`.
pub fn dense_delta(a: &Dense, seeds: &[usize], alpha: f64) -> Vec<f64> {
    let t = a.len();
    let mut p1 = vec![0.0; t];
    for &s in seeds {
        p1[s] = 1.0;
    }
    let m = seeds.len() as f64;
    let p0 = vec![m / t as f64; t];
    let r1 = dense_reference(a, &p1, alpha);
    let r0 = dense_reference(a, &p0, alpha);
    r1.iter().zip(&r0).map(|(x, y)| x - y).collect()
}

/// Dobrushin ergodicity coefficient `1 − min_{i,k} Σ_j min(a_ij, a_kj)`.
/// For a row-stochastic matrix the damped iteration error contracts by at
/// least `α·τ` per step.
pub fn ergodicity_coefficient(a: &Dense) -> f64 {
    let mut worst: f64 = 0.0;
    for x in a {
        for y in a {
            let overlap: f64 = x.iter().zip(y).map(|(u, v)| u.min(*v)).sum();
            worst = worst.max(1.0 - overlap);
        }
    }
    worst
}
