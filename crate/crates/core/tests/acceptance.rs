//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p tagrank --test acceptance`.

mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use tagrank::baselines::{cf_candidates, cf_frequency_rank, tagcoor_recommend, train_tag_weights, CooccurrenceStats};
use tagrank::fixtures::{six_post_corpus, toy_corpus};
use tagrank::matrix::{build_variants, combine, content_popularity_shares, user_popularity_shares, CombineMode};
use tagrank::ranker::{indicator_preference, power_iterate, rank_all, uniform_preference, PreferenceVector};
use tagrank::synth::{generate, sample_seeds, SynthConfig};
use tagrank::{AdjacencyMatrix, BuildConfig, Corpus, IterationConfig, Recommender, Smoothing, SparseMatrix, Variant};

// Heap accounting for the structural memory check.
struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static LARGEST: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let live = LIVE.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(live, Ordering::Relaxed);
            LARGEST.fetch_max(layout.size(), Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:?}, limit {limit:?}"))?;
    Ok(format!("{detail}; {:.2?}", took))
}

fn cfg() -> IterationConfig {
    IterationConfig::default()
}

fn dense(a: &AdjacencyMatrix) -> Dense {
    a.matrix().to_dense()
}

fn tag(c: &Corpus, name: &str) -> usize {
    c.vocabulary().index_of(name).expect("fixture tag")
}

fn criterion_1() -> Check {
    timed(Duration::from_secs(1), || {
        let c = toy_corpus();
        let k0 = Smoothing::new(0.0).unwrap();
        let q = c.user("Q").ok_or("user Q missing")?;
        let nature = tag(&c, "nature");
        let expected_user = Ratio::new(q.tag_usage[&nature], q.total_usage) * Ratio::from_integer(q.popularity);
        ensure(expected_user == Ratio::new(45, 2), format!("hand value {expected_user}"))?;
        let up = user_popularity_shares(&c, k0);
        let got = up.get(nature, c.user_index("Q").unwrap());
        ensure(
            Ratio::<i64>::approximate_float(got) == Some(Ratio::new(45, 2)) && got == 22.5,
            format!("user share {got}"),
        )?;

        let post1 = &c.posts()[0];
        let expected_split = Ratio::new(post1.popularity, post1.tags.len() as u64);
        ensure(expected_split == Ratio::new(15, 2), format!("hand split {expected_split}"))?;
        let cp = content_popularity_shares(&c, k0);
        for &t in &post1.tags {
            let got = cp.get(t, 0);
            ensure(
                Ratio::<i64>::approximate_float(got) == Some(Ratio::new(15, 2)) && got == 7.5,
                format!("content share {got}"),
            )?;
        }
        Ok("nature←Q = 45/2, post #1 split = 15/2 per tag".into())
    })
}

fn criterion_2() -> Check {
    timed(Duration::from_secs(30), || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst: f64 = 0.0;
        let corpora = 300;
        for n in 0..corpora {
            let c = random_corpus(&mut rng, 10, 8, 5);
            let k = [0.0, 0.5, 1.0][n % 3];
            let config = BuildConfig {
                smoothing: Smoothing::new(k).unwrap(),
                zero_diagonal: rng.random_bool(0.3),
                literal_k: rng.random_bool(0.2),
            };
            let built = build_variants(&c, &Variant::ALL, &config).map_err(|e| e.to_string())?;
            let a_u = combine(&built[0], &built[1], CombineMode::U).map_err(|e| e.to_string())?;
            let zd = config.zero_diagonal;
            let fp = dense_fp(&c, k, config.literal_k, zd);
            let up = dense_up(&c, k, config.literal_k, zd);
            let oracle = [
                fp.clone(),
                up.clone(),
                dense_plus(&fp, &up, zd),
                dense_product(&fp, &up, zd),
                dense_cooccurrence(&c, zd),
            ];
            for (a, o) in built.iter().zip(&oracle) {
                let d = max_abs_diff(&dense(a), o);
                worst = worst.max(d);
                ensure(d <= 1e-12, format!("corpus {n} {}: max diff {d:e}", a.variant()))?;
            }
            let d = max_abs_diff(&dense(&a_u), &up);
            worst = worst.max(d);
            ensure(d <= 1e-12, format!("corpus {n} A^u: max diff {d:e}"))?;
        }
        Ok(format!("{corpora} corpora × 6 matrices, worst entrywise diff {worst:.1e}"))
    })
}

struct SystemStats {
    systems: usize,
    worst_err: f64,
    worst_mass: f64,
    max_iterations: usize,
    over_budget: usize,
    unsettled: usize,
    failures: Vec<String>,
}

impl SystemStats {
    fn new() -> Self {
        SystemStats {
            systems: 0,
            worst_err: 0.0,
            worst_mass: 0.0,
            max_iterations: 0,
            over_budget: 0,
            unsettled: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, label: &str, a: &AdjacencyMatrix, p: &PreferenceVector, config: &IterationConfig) {
        self.systems += 1;
        let run = power_iterate(a, p, config).expect("valid system");
        let reference = dense_reference(&dense(a), p.values(), config.alpha);
        let err = linf(run.rank.values(), &reference);
        let mass = run
            .masses
            .iter()
            .map(|m| (m - p.mass()).abs())
            .fold(0.0, f64::max);
        if run.converged {
            self.worst_err = self.worst_err.max(err);
        }
        self.worst_mass = self.worst_mass.max(mass);
        self.max_iterations = self.max_iterations.max(run.iterations);
        if run.iterations > 100 {
            self.over_budget += 1;
        }
        if !run.converged {
            self.unsettled += 1;
        }
        // a run that never settles has no fixed point to agree with
        if (run.converged && err > 1e-8) || mass > 1e-12 {
            self.failures.push(format!(
                "{label}: err {err:.1e}, mass {mass:.1e}, {} iterations, converged {}",
                run.iterations, run.converged
            ));
        }
    }

    fn summary(&self) -> String {
        format!(
            "{} systems, worst L∞ {:.1e}, worst mass drift {:.1e}, max {} iterations",
            self.systems, self.worst_err, self.worst_mass, self.max_iterations
        )
    }
}

/// A random T ≤ 8 system: either a matrix built from a random corpus or an
/// arbitrary sparse row-normalized matrix, with a uniform, random positive
/// or single-seed preference.
fn random_system(rng: &mut ChaCha8Rng) -> (AdjacencyMatrix, PreferenceVector) {
    let a = if rng.random_bool(0.5) {
        let c = random_corpus(rng, 10, 8, 5);
        let config = BuildConfig {
            smoothing: Smoothing::new([0.0, 0.5, 1.0][rng.random_range(0..3)]).unwrap(),
            zero_diagonal: rng.random_bool(0.3),
            literal_k: false,
        };
        let v = Variant::ALL[rng.random_range(0..Variant::ALL.len())];
        build_variants(&c, &[v], &config).unwrap().remove(0)
    } else {
        let t = rng.random_range(1..=8);
        let density = rng.random_range(0.3..=1.0);
        let mut trip = Vec::new();
        for i in 0..t {
            for j in 0..t {
                if rng.random_bool(density) {
                    trip.push((i, j, rng.random_range(0.0..1.0)));
                }
            }
        }
        let raw = SparseMatrix::from_triplets(t, t, trip);
        AdjacencyMatrix::from_raw(raw, Variant::Fp, BuildConfig::default()).unwrap()
    };
    let t = a.num_tags();
    let p = match rng.random_range(0..3) {
        0 => uniform_preference(t, rng.random_range(1..=t) as f64).unwrap(),
        1 => PreferenceVector::new((0..t).map(|_| rng.random_range(0.01..1.0)).collect()).unwrap(),
        _ => indicator_preference(&[rng.random_range(0..t)], t).unwrap(),
    };
    (a, p)
}

/// Whether the system has a spectral gap that guarantees the 100-iteration
/// budget: with τ ≤ 0.9 the mass-relative change after 100 steps is below
/// 2(1 + α)(ατ)^100 ≈ 9e-12.
fn has_gap(a: &AdjacencyMatrix) -> bool {
    a.dangling().is_empty() && ergodicity_coefficient(&dense(a)) <= 0.9
}

/// Default budget on gapped systems; long runs on every system.
fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut gapped = SystemStats::new();
    let mut long = SystemStats::new();
    // Slowly mixing systems stop further from the fixed point for a given
    // step size, so the long runs also tighten the tolerance.
    let long_cfg = IterationConfig {
        max_iterations: 10_000,
        tolerance: 1e-12,
        ..cfg()
    };
    let mut drawn = 0;
    while gapped.systems < 200 || long.systems < 300 {
        let (a, p) = random_system(&mut rng);
        drawn += 1;
        if has_gap(&a) && gapped.systems < 200 {
            gapped.check(&format!("system {drawn}"), &a, &p, &cfg());
        }
        if long.systems < 300 {
            long.check(&format!("system {drawn}"), &a, &p, &long_cfg);
        }
    }
    if let Some(f) = gapped.failures.first() {
        return Err(format!("{} of {} gapped systems failed, first: {f}", gapped.failures.len(), gapped.systems));
    }
    ensure(
        gapped.over_budget == 0 && gapped.unsettled == 0,
        format!("gapped systems over budget: {}", gapped.summary()),
    )?;
    // Outside the gap only the 100-iteration bound may be missed. A few
    // dangling, periodic systems never settle: the rescale can lift a
    // period-2 mode to modulus one, and the returned flag says so.
    if let Some(f) = long.failures.first() {
        return Err(format!("long run failed: {f}"));
    }
    Ok(format!(
        "gapped (τ ≤ 0.9): {}; all systems, tolerance 1e-12 and 10k budget: {}, {} exceed 100 iterations, {} never settle",
        gapped.summary(),
        long.summary(),
        long.over_budget,
        long.unsettled
    ))
}

/// Systems without a gap can need more than 100 iterations whatever the
/// implementation: with A = I and a single seed the off-seed mass decays as
/// α^t exactly.
fn criterion_3_witness() -> String {
    let a = AdjacencyMatrix::from_normalized(SparseMatrix::identity(2), Variant::Fp, BuildConfig::default());
    let p = indicator_preference(&[0], 2).unwrap();
    let run = power_iterate(&a, &p, &IterationConfig { max_iterations: 10_000, ..cfg() }).unwrap();
    format!(
        "two unconnected tags with one seed need {} iterations to reach tolerance {:e} (α^t decay)",
        run.iterations,
        cfg().tolerance
    )
}

fn all_seed_sets(t: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << t))
        .map(|mask| (0..t).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

fn criterion_4() -> Check {
    let toy = toy_corpus();
    let built = build_variants(&toy, &Variant::ALL, &BuildConfig::default()).unwrap();
    let mut checked = 0;
    for a in &built {
        let rec = Recommender::new(a, cfg()).unwrap();
        for seeds in all_seed_sets(toy.num_tags()) {
            for n in 1..=toy.num_tags() {
                let out = rec.recommend(&seeds, n).map_err(|e| e.to_string())?;
                ensure(
                    out.items.iter().all(|s| !seeds.contains(&s.tag)),
                    format!("{} returned a seed for {seeds:?}", a.variant()),
                )?;
                checked += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let c = random_corpus(&mut rng, 10, 8, 5);
        for a in build_variants(&c, &Variant::ALL, &BuildConfig::default()).unwrap() {
            let seeds: Vec<usize> = (0..c.num_tags()).filter(|_| rng.random_bool(0.4)).collect();
            if seeds.is_empty() {
                continue;
            }
            let out = tagrank::ranker::recommend(&a, &seeds, c.num_tags(), &cfg()).map_err(|e| e.to_string())?;
            ensure(out.items.iter().all(|s| !seeds.contains(&s.tag)), "random corpus returned a seed")?;
            checked += 1;
        }
    }

    let order = |v: Variant| -> Vec<usize> {
        let a = built.iter().find(|a| a.variant() == v).unwrap();
        rank_all(a, &cfg()).unwrap().iter().map(|s| s.tag).collect()
    };
    let (fp, u) = (order(Variant::Fp), order(Variant::U));
    ensure(fp != u, format!("fp and u rank identically: {fp:?}"))?;
    let seed = [tag(&toy, "nature")];
    let rec_fp = tagrank::ranker::recommend(&built[0], &seed, 3, &cfg()).unwrap().tags();
    let rec_u = tagrank::ranker::recommend(&built[1], &seed, 3, &cfg()).unwrap().tags();
    ensure(rec_fp != rec_u, "fp and u recommend identically for {nature}")?;

    for a in &built {
        let first = Recommender::new(a, cfg()).unwrap();
        let sets = all_seed_sets(toy.num_tags());
        let base: Vec<_> = sets.iter().map(|s| first.recommend(s, 4).unwrap()).collect();
        for _ in 0..5 {
            let again = Recommender::new(a, cfg()).unwrap();
            let batch: Vec<_> = again.recommend_batch(&sets, 4).into_iter().map(Result::unwrap).collect();
            ensure(batch == base, format!("{} not deterministic", a.variant()))?;
        }
    }
    Ok(format!(
        "{checked} lists seed-free; rank fp {} vs u {}; repeated runs bit-identical",
        toy.tag_names(&fp).join(">"),
        toy.tag_names(&u).join(">")
    ))
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut corpora = vec![toy_corpus(), six_post_corpus()];
    for _ in 0..100 {
        corpora.push(random_corpus(&mut rng, 10, 8, 5));
    }
    for (n, c) in corpora.iter().enumerate() {
        let k = [0.0, 0.5, 1.0][n % 3];
        let scaled = c.scale_views(10);
        let base = build_variants(c, &Variant::ALL, &BuildConfig::with_k(k).unwrap()).unwrap();
        let big = build_variants(&scaled, &Variant::ALL, &BuildConfig::with_k(10.0 * k).unwrap()).unwrap();
        for (a, b) in base.iter().zip(&big) {
            ensure(a.matrix() == b.matrix(), format!("corpus {n} {} differs", a.variant()))?;
            let seeds = vec![n % c.num_tags()];
            let ra = tagrank::ranker::recommend(a, &seeds, 5, &cfg()).unwrap();
            let rb = tagrank::ranker::recommend(b, &seeds, 5, &cfg()).unwrap();
            ensure(ra.tags() == rb.tags(), format!("corpus {n} {} lists differ", a.variant()))?;
        }
    }
    Ok(format!("{} corpora: matrices bit-identical, lists identical", corpora.len()))
}

fn criterion_6() -> Check {
    let toy = toy_corpus();
    let (building, nature, outdoor) = (tag(&toy, "building"), tag(&toy, "nature"), tag(&toy, "outdoor"));
    let stats = CooccurrenceStats::from_corpus(&toy);
    let p = stats.conditional(nature, building);
    ensure(p == 0.5, format!("P(nature|building) = {p}"))?;
    let tc = tagcoor_recommend(&stats, &[building], 3).unwrap().recommendation;
    ensure(tc.tags() == vec![nature], format!("tagcoor {:?}", tc.tags()))?;

    // Seed {nature}: posts #1 and #2 share one of two tags, cosine 1/√2.
    let cand = cf_candidates(&toy, &[nature], 25).unwrap();
    let sims: Vec<(usize, f64)> = cand.neighbors.iter().map(|n| (n.post, n.similarity)).collect();
    let h = 1.0 / 2f64.sqrt();
    ensure(
        sims.len() == 2 && sims[0].0 == 0 && sims[1].0 == 1 && sims.iter().all(|s| (s.1 - h).abs() < 1e-15),
        format!("neighbours {sims:?}"),
    )?;
    ensure(
        cand.counts.get(&building) == Some(&1) && cand.counts.get(&outdoor) == Some(&1) && cand.counts.len() == 2,
        format!("candidates {:?}", cand.counts),
    )?;
    // Seed {building}: post #3 is the exact match (1), post #1 scores 1/√2.
    let cand = cf_candidates(&toy, &[building], 1).unwrap();
    ensure(
        cand.neighbors.len() == 1 && cand.neighbors[0].post == 2 && cand.neighbors[0].similarity == 1.0,
        format!("top neighbour {:?}", cand.neighbors),
    )?;
    ensure(cf_frequency_rank(&cand, 5).is_empty(), "post #3 has no non-seed tags")?;

    let six = six_post_corpus();
    let w = train_tag_weights(&six, 1.0).unwrap();
    let hot = tag(&six, "hot");
    let top = (0..six.num_tags())
        .max_by(|&a, &b| w.get(a).partial_cmp(&w.get(b)).unwrap())
        .unwrap();
    ensure(top == hot, format!("top weight is {:?}", six.vocabulary().tag(top)))?;
    Ok(format!(
        "P(nature|building) = 1/2; cosine 1/√2 fixtures; weight(hot) = {:.3} ranks first",
        w.get(hot)
    ))
}

fn criterion_7() -> Check {
    let synth = SynthConfig {
        posts: 10_000,
        users: 2_000,
        tags: 20_000,
        ..SynthConfig::default()
    };
    let corpus = generate(&synth);
    let t = corpus.num_tags();
    ensure(t == 20_000, format!("synthetic corpus has {t} tags"))?;
    let seeds = sample_seeds(&corpus, 100, 5, 11);
    let live_before = LIVE.load(Ordering::Relaxed);
    PEAK.store(live_before, Ordering::Relaxed);
    LARGEST.store(0, Ordering::Relaxed);

    let start = Instant::now();
    let built = build_variants(&corpus, &Variant::ALL, &BuildConfig::default()).map_err(|e| e.to_string())?;
    let build_time = start.elapsed();
    let product = built.iter().find(|a| a.variant() == Variant::UfpProduct).unwrap();
    let rec = Recommender::new(product, cfg()).map_err(|e| e.to_string())?;
    let out = rec.recommend_batch(&seeds, 10);
    let total = start.elapsed();
    for r in &out {
        r.as_ref().map_err(|e| e.to_string())?;
    }

    let dense_bytes = t * t * std::mem::size_of::<f64>();
    let peak = PEAK.load(Ordering::Relaxed) - live_before;
    let largest = LARGEST.load(Ordering::Relaxed);
    let max_nnz = built.iter().map(|a| a.matrix().nnz()).max().unwrap();
    let sparse_bytes: usize = built.iter().map(|a| a.matrix().heap_bytes()).sum();
    let detail = format!(
        "T={t}: build {build_time:.2?}, build+100 seeds {total:.2?}; max nnz {max_nnz} ({:.2}% of T²), peak heap {:.0} MiB (matrices {:.0} MiB, dense T² {:.0} MiB), largest block {:.1} MiB",
        100.0 * max_nnz as f64 / (t * t) as f64,
        peak as f64 / 1048576.0,
        sparse_bytes as f64 / 1048576.0,
        dense_bytes as f64 / 1048576.0,
        largest as f64 / 1048576.0
    );
    ensure(total < Duration::from_secs(60), format!("too slow: {detail}"))?;
    // A dense T×T matrix needs T² values; a single row-major buffer or the
    // sum over rows would both show up here.
    ensure(largest < dense_bytes / 2, format!("largest allocation: {detail}"))?;
    // Sparse budget: the peak is bounded by the finished matrices plus
    // transient products of the same order, not by T².
    ensure(peak < 2 * sparse_bytes + 64 * 1048576, format!("peak heap: {detail}"))?;
    ensure(max_nnz < t * t / 20, format!("nnz: {detail}"))?;
    Ok(detail)
}

fn run(id: &str, name: &str, f: impl FnOnce() -> Check) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match outcome {
        Ok(detail) => {
            println!("PASS  {id} {name}: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL  {id} {name}: {detail}");
            false
        }
    }
}

fn main() {
    let results = [
        run("1", "toy fidelity", criterion_1),
        run("2", "matrix oracle equivalence", criterion_2),
        run("3", "ranking oracle equivalence", criterion_3),
        run("4", "recommendation contract", criterion_4),
        run("5", "scale invariance", criterion_5),
        run("6", "baseline fixtures", criterion_6),
        run("7", "desk-scale performance", criterion_7),
    ];
    println!("INFO  3 {}", criterion_3_witness());
    println!(
        "N/A   8 live outcomes: view-count gains from real uploads with recommended tags need a \
         live audience and are NOT reproducible offline; criteria 1–6 and the labelled \
         popularity proxy of the eval module stand in for them"
    );
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {} failed", results.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
