use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use tagrank::corpus::{ingest, validate as validate_corpus, write_tsv};
use tagrank::eval::{compare as compare_runs, emit_report, MethodRun, PostRecommendations};
use tagrank::index::TagIndex;
use tagrank::ranker::rank_all;
use tagrank::synth::{generate, SynthConfig};
use tagrank::{BuildConfig, IterationConfig, Smoothing, Variant};

use crate::error::CliError;
use crate::methods::{parse_inline_seeds, read_seed_file, resolve_seeds, Engine, Method, MethodParams, SeedPost};
use crate::{BuildArgs, CompareArgs, RankArgs, RecommendArgs, SynthArgs, ValidateArgs};

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_config(pairs: &BTreeMap<String, String>) {
    let line: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("# config {}", line.join(" "));
}

fn build_config(args: &BuildArgs) -> Result<BuildConfig, CliError> {
    let smoothing = Smoothing::new(args.k).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(BuildConfig {
        smoothing,
        zero_diagonal: args.zero_diagonal,
        literal_k: args.literal_k,
    })
}

fn load_corpus(path: &Path) -> Result<tagrank::Corpus, CliError> {
    let ingested = ingest(BufReader::new(File::open(path)?))?;
    if ingested.collapsed_duplicate_tags > 0 {
        eprintln!(
            "warning: collapsed {} duplicate tag(s) within posts",
            ingested.collapsed_duplicate_tags
        );
    }
    Ok(ingested.corpus)
}

pub fn build(args: BuildArgs) -> Result<(), CliError> {
    let config = build_config(&args)?;
    let variants = args
        .variants
        .iter()
        .map(|v| v.trim().parse::<Variant>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    if variants.is_empty() {
        return Err(CliError::Config("no variants requested".into()));
    }
    let names: Vec<&str> = variants.iter().map(|v| v.name()).collect();
    print_config(&BTreeMap::from([
        ("command".into(), "build".into()),
        ("corpus".into(), args.corpus.display().to_string()),
        ("index".into(), args.index.display().to_string()),
        ("k".into(), config.smoothing.value().to_string()),
        ("zero_diagonal".into(), config.zero_diagonal.to_string()),
        ("literal_k".into(), config.literal_k.to_string()),
        ("variants".into(), names.join(",")),
    ]));

    let corpus = load_corpus(&args.corpus)?;
    let report = validate_corpus(&corpus);
    if !report.is_valid() {
        return Err(CliError::Data(format!("{} corpus violation(s)", report.violations.len())));
    }
    println!("{}", report.stats);
    let index = TagIndex::build(corpus, &variants, config)?;
    for m in &index.matrices {
        println!(
            "matrix {:<13} nnz {:>10}  dangling rows {}",
            m.variant().name(),
            m.matrix().nnz(),
            m.dangling().len()
        );
    }
    index.save(&args.index)?;
    println!("wrote {}", args.index.display());
    Ok(())
}

pub fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let corpus = load_corpus(&args.corpus)?;
    let report = validate_corpus(&corpus);
    println!("{}", report.stats);
    for v in &report.violations {
        println!("violation: {v:?}");
    }
    if report.is_valid() {
        println!("ok: 0 violations");
        Ok(())
    } else {
        Err(CliError::Data(format!("{} corpus violation(s)", report.violations.len())))
    }
}

fn method_params(rank: &RankArgs) -> Result<MethodParams, CliError> {
    if rank.n == 0 {
        return Err(CliError::Config("n must be >= 1".into()));
    }
    if rank.neighbors == 0 {
        return Err(CliError::Config("neighbors must be >= 1".into()));
    }
    if !(rank.lambda > 0.0 && rank.lambda.is_finite()) {
        return Err(CliError::Config("lambda must be positive".into()));
    }
    let iteration = IterationConfig {
        alpha: rank.alpha,
        max_iterations: rank.max_iterations,
        tolerance: rank.tolerance,
    };
    iteration.validate()?;
    Ok(MethodParams {
        iteration,
        neighbors: rank.neighbors,
        lambda: rank.lambda,
    })
}

fn config_snapshot(index: &TagIndex, method: Method, rank: &RankArgs) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("method".into(), method.to_string()),
        ("k".into(), index.config.smoothing.value().to_string()),
        ("zero_diagonal".into(), index.config.zero_diagonal.to_string()),
        ("literal_k".into(), index.config.literal_k.to_string()),
        ("alpha".into(), rank.alpha.to_string()),
        ("tolerance".into(), rank.tolerance.to_string()),
        ("max_iterations".into(), rank.max_iterations.to_string()),
        ("n".into(), rank.n.to_string()),
        ("neighbors".into(), rank.neighbors.to_string()),
        ("lambda".into(), rank.lambda.to_string()),
    ])
}

/// Resolves every seed post; posts without a single known tag are dropped
/// with a warning.
fn resolve_all(index: &TagIndex, posts: &[SeedPost]) -> Result<Vec<(String, Vec<usize>)>, CliError> {
    let vocab = index.corpus.vocabulary();
    let mut out = Vec::new();
    for post in posts {
        let (known, unknown) = resolve_seeds(vocab, post);
        if !unknown.is_empty() {
            eprintln!("warning: {}: skipped unknown seed tag(s) {}", post.post_id, unknown.join(","));
        }
        if known.is_empty() {
            eprintln!("warning: {}: no usable seed tags, post skipped", post.post_id);
            continue;
        }
        out.push((post.post_id.clone(), known));
    }
    if out.is_empty() {
        return Err(CliError::Data("no usable seed tags".into()));
    }
    Ok(out)
}

fn run_method(
    index: &TagIndex,
    method: Method,
    params: &MethodParams,
    rank: &RankArgs,
    seeds: &[(String, Vec<usize>)],
) -> Result<(MethodRun, Vec<tagrank::Recommendation>), CliError> {
    let engine = Engine::new(index, method, params)?;
    let sets: Vec<Vec<usize>> = seeds.iter().map(|(_, s)| s.clone()).collect();
    let recs = engine.recommend_all(&sets, rank.n)?;
    let posts = seeds
        .iter()
        .zip(&recs)
        .map(|((id, _), r)| PostRecommendations {
            post_id: id.clone(),
            tags: index.corpus.tag_names(&r.tags()),
        })
        .collect();
    let run = MethodRun {
        method: method.to_string(),
        n: rank.n,
        config: config_snapshot(index, method, rank),
        posts,
    };
    Ok((run, recs))
}

pub fn recommend(args: RecommendArgs) -> Result<(), CliError> {
    let method: Method = args.method.parse()?;
    let params = method_params(&args.rank)?;
    let index = TagIndex::load(&args.index)?;
    let mut snapshot = config_snapshot(&index, method, &args.rank);
    snapshot.insert("index".into(), args.index.display().to_string());
    print_config(&snapshot);

    let posts = match (&args.seeds, &args.seed_file) {
        (Some(s), _) => vec![parse_inline_seeds(s)],
        (None, Some(path)) => read_seed_file(BufReader::new(File::open(path)?))?,
        (None, None) => return Err(CliError::Config("give --seeds or --seed-file".into())),
    };
    let seeds = resolve_all(&index, &posts)?;
    let (_, recs) = run_method(&index, method, &params, &args.rank, &seeds)?;

    let mut out = open_out(args.out.as_deref())?;
    writeln!(out, "post_id\trank\ttag\tscore")?;
    for ((post_id, _), rec) in seeds.iter().zip(&recs) {
        if rec.shortfall {
            eprintln!("note: {post_id}: only {} of {} tags available", rec.len(), args.rank.n);
        }
        for (rank, item) in rec.items.iter().enumerate() {
            let tag = index.corpus.vocabulary().tag(item.tag).unwrap_or("?");
            writeln!(out, "{post_id}\t{}\t{tag}\t{}", rank + 1, item.score)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn compare(args: CompareArgs) -> Result<(), CliError> {
    if args.methods.len() < 2 {
        return Err(CliError::Config("compare needs at least 2 methods".into()));
    }
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    let rank_variant: Variant = args
        .rank_variant
        .parse()
        .map_err(|e: tagrank::matrix::MatrixError| CliError::Config(e.to_string()))?;
    let params = method_params(&args.rank)?;
    let index = TagIndex::load(&args.index)?;
    let names: Vec<String> = methods.iter().map(Method::to_string).collect();
    let mut snapshot = config_snapshot(&index, methods[0], &args.rank);
    snapshot.insert("method".into(), names.join(","));
    snapshot.insert("rank_variant".into(), rank_variant.to_string());
    snapshot.insert("index".into(), args.index.display().to_string());
    print_config(&snapshot);

    let posts = read_seed_file(BufReader::new(File::open(&args.seed_file)?))?;
    let seeds = resolve_all(&index, &posts)?;
    let mut runs = Vec::with_capacity(methods.len());
    for &m in &methods {
        runs.push(run_method(&index, m, &params, &args.rank, &seeds)?.0);
    }
    if let Some(dir) = &args.save_runs {
        std::fs::create_dir_all(dir)?;
        for (i, run) in runs.iter().enumerate() {
            let path = dir.join(format!("{:02}-{}.json", i, run.method));
            std::fs::write(path, run.to_json()?)?;
        }
    }

    let global: HashMap<String, usize> = rank_all(index.get(rank_variant)?, &params.iteration)?
        .into_iter()
        .enumerate()
        .map(|(pos, s)| (index.corpus.vocabulary().tag(s.tag).unwrap_or("?").to_string(), pos))
        .collect();
    let report = compare_runs(&runs, &index.corpus, &global)?;
    let out = open_out(args.out.as_deref())?;
    emit_report(&report, out)?;
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    if args.users == 0 || args.posts < args.users || args.tags == 0 {
        return Err(CliError::Config("need tags >= 1 and posts >= users >= 1".into()));
    }
    let corpus = generate(&SynthConfig {
        posts: args.posts,
        users: args.users,
        tags: args.tags,
        mean_tags_per_post: args.mean_tags,
        seed: args.seed,
        ..Default::default()
    });
    let mut out = open_out(args.out.as_deref())?;
    writeln!(out, "post_id\tuser_id\tviews\ttags")?;
    write_tsv(&corpus, &mut out)?;
    out.flush()?;
    Ok(())
}
