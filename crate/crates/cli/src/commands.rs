use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use corpus_distill::corpus::{Corpus, CorpusManifest, MalformedPolicy};
use corpus_distill::dedup::{cluster_size_histogram, histogram_svg, histogram_tsv, read_clusters};
use corpus_distill::fingerprint::{shingle, write_signature_cache, MinHasher};
use corpus_distill::lsh::BandingScheme;
use corpus_distill::pipeline::{
    accounting_report, compute_mixture, default_mixture, equalize_targets, run_pipeline,
    write_corpus, MinHashConfig, PipelineConfig, PipelineOutput, StageAccounting, StageName,
    SEED_ENV_VAR,
};
use corpus_distill::{Error, Result};
use rayon::prelude::*;
use serde_json::json;

use crate::{
    Command, CorpusArgs, DedupArgs, FilterArgs, FingerprintArgs, HashArgs, HistogramArgs,
    IngestArgs, MixtureArgs, PolicyArg, ReportArgs, RunArgs,
};

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Fingerprint(a) => fingerprint(a),
        Command::Dedup(a) => dedup(a),
        Command::Filter(a) => filter(a),
        Command::Report(a) => report(a),
        Command::Histogram(a) => histogram(a),
        Command::Mixture(a) => mixture(a),
        Command::Run(a) => run(a),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                Error::Config(format!("{SEED_ENV_VAR}={v:?} is not an unsigned integer"))
            })
        }
        Err(_) => Ok(None),
    }
}

fn seed(flag: Option<u64>) -> Result<u64> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    })
}

fn malformed(args: &CorpusArgs) -> MalformedPolicy {
    if args.fail_fast {
        MalformedPolicy::FailFast
    } else {
        MalformedPolicy::Skip
    }
}

fn stdout(text: &str) -> Result<()> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        })
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    stdout(&(serde_json::to_string_pretty(value).expect("json value serialises") + "\n"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_corpus(args: &CorpusArgs) -> Result<(CorpusManifest, Corpus)> {
    let manifest = CorpusManifest::load(&args.manifest)?;
    let corpus = Corpus::load(&manifest, malformed(args))?;
    Ok((manifest, corpus))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let (manifest, corpus) = load_corpus(&args.corpus)?;
    write_corpus(&args.corpus.output_dir, &corpus.sources, manifest.tokenizer)?;
    let sources: serde_json::Map<_, _> = corpus
        .sources
        .iter()
        .map(|s| {
            let tokens: u64 = s.documents.iter().map(|d| d.token_count).sum();
            (
                s.source.name.clone(),
                json!({"documents": s.documents.len(), "tokens": tokens}),
            )
        })
        .collect();
    print_json(&json!({"sources": sources, "malformed_skipped": corpus.malformed_skipped}))
}

fn fingerprint(args: FingerprintArgs) -> Result<()> {
    let (_, corpus) = load_corpus(&args.corpus)?;
    let seed = seed(args.hash.seed)?;
    let hasher = MinHasher::new(args.hash.num_perms, seed);
    let dir = &args.corpus.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut summary = serde_json::Map::new();
    for s in &corpus.sources {
        let sigs: Vec<_> = s
            .documents
            .par_iter()
            .map(|d| {
                let set = shingle(&d.text, args.hash.shingle_size);
                if set.is_empty() {
                    Ok(None)
                } else {
                    hasher.signature(&set).map(|sig| Some((d.id.as_str(), sig)))
                }
            })
            .collect::<Result<_>>()?;
        let written: Vec<_> = sigs.iter().flatten().map(|(id, sig)| (*id, sig)).collect();
        let path = dir.join(format!("{}.sigs", s.source.name));
        write_signature_cache(&path, written.iter().copied())?;
        log::info!("{}: {} signatures", path.display(), written.len());
        summary.insert(
            s.source.name.clone(),
            json!({"signatures": written.len(), "empty": s.documents.len() - written.len()}),
        );
    }
    print_json(&json!({"seed": seed, "num_perms": args.hash.num_perms, "sources": summary}))
}

fn base_config(corpus: &CorpusArgs) -> PipelineConfig {
    let mut config = PipelineConfig::new(&corpus.manifest, &corpus.output_dir);
    config.malformed = malformed(corpus);
    config
}

fn apply_hash(config: &mut PipelineConfig, hash: &HashArgs) -> Result<()> {
    config.seed = seed(hash.seed)?;
    config.minhash = MinHashConfig {
        shingle_size: hash.shingle_size,
        num_perms: hash.num_perms,
    };
    Ok(())
}

fn finish(output: &PipelineOutput) -> Result<()> {
    stdout(&accounting_report(&output.accounting)?.render_text())
}

fn dedup(args: DedupArgs) -> Result<()> {
    let mut config = base_config(&args.corpus);
    apply_hash(&mut config, &args.hash)?;
    config.stages = [
        (args.intra, StageName::IntraDedup),
        (args.cross, StageName::CrossDedup),
    ]
    .into_iter()
    .filter_map(|(on, s)| on.then_some(s))
    .collect();
    config.banding = BandingScheme::new(args.bands, args.rows)?;
    config.dedup.verify_threshold = args.threshold_verify;
    config.ranking = args.ranking;
    config.parallelism = args.parallelism;
    let output = run_pipeline(&config)?;
    for (stage, stats) in &output.dedup_stats {
        log::info!(
            "{stage}: {} candidate pairs, {} clusters, {} removed",
            stats.candidate_pairs,
            stats.clusters,
            stats.removed
        );
    }
    finish(&output)
}

fn filter(args: FilterArgs) -> Result<()> {
    let mut config = base_config(&args.corpus);
    if args.policy == PolicyArg::Edu {
        config.stages = vec![StageName::EduFilter];
        config.edu_filter.min_integer_score = args.min_edu_score;
        if let Some(scope) = args.applies_to {
            config.edu_filter.applies_to = scope.into_iter().collect();
        }
    } else {
        config.stages = vec![StageName::QualityFilter];
        let q = &mut config.quality_filter;
        q.policy = args.policy.kind();
        q.top_fraction = args.top_fraction;
        q.scores = args.scores;
        q.missing_score = args.missing_score.into();
        if let Some(scope) = args.applies_to {
            q.applies_to = scope.into_iter().collect();
        }
    }
    finish(&run_pipeline(&config)?)
}

fn report(args: ReportArgs) -> Result<()> {
    let acc = StageAccounting::load(&args.accounting)?;
    let report = accounting_report(&acc)?;
    if args.json {
        stdout(&report.to_json())
    } else {
        stdout(&report.render_text())
    }
}

fn histogram(args: HistogramArgs) -> Result<()> {
    let clusters = read_clusters(&args.clusters)?;
    let hist = cluster_size_histogram(&clusters);
    let tsv = histogram_tsv(&hist);
    if args.plot {
        let dir = args
            .output_dir
            .as_ref()
            .expect("clap enforces --output-dir");
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        let title = format!("{} cluster sizes", args.clusters.display());
        for (name, body) in [
            ("histogram.svg", histogram_svg(&hist, &title)),
            ("histogram.tsv", tsv.clone()),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::Io { path, source: e })?;
        }
    }
    stdout(&tsv)
}

fn native_counts(args: &MixtureArgs) -> Result<BTreeMap<String, u64>> {
    if let Some(path) = &args.native {
        return read_json(path);
    }
    let path = args
        .accounting
        .as_ref()
        .expect("clap enforces one of --native/--accounting");
    let acc = StageAccounting::load(path)?;
    acc.check()?;
    let last = *acc
        .stages()
        .last()
        .ok_or_else(|| Error::Mixture(format!("{} has no stages", path.display())))?;
    Ok(acc
        .sources()
        .into_iter()
        .map(|s| (s.to_string(), acc.get(last, s).expect("checked").tokens_out))
        .collect())
}

fn mixture(args: MixtureArgs) -> Result<()> {
    let native = native_counts(&args)?;
    let spec = if let Some(path) = &args.targets {
        compute_mixture(&native, &read_json(path)?)?
    } else if let Some(eq) = &args.equalize {
        let (up, reference) = eq.split_once('=').ok_or_else(|| {
            Error::Mixture(format!("--equalize expects UPWEIGHT=REFERENCE, got {eq:?}"))
        })?;
        compute_mixture(&native, &equalize_targets(&native, up, reference)?)?
    } else {
        default_mixture(&native)?
    };
    let entries: Vec<_> = spec
        .entries
        .iter()
        .map(|e| {
            json!({
                "source": e.source,
                "native_tokens": e.native_tokens,
                "target_proportion": e.target_proportion,
                "weight": e.weight,
                "effective_tokens": e.effective_tokens(),
            })
        })
        .collect();
    print_json(
        &json!({"entries": entries, "total_effective_tokens": spec.total_effective_tokens()}),
    )
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = PipelineConfig::load(&args.config)?;
    if let Some(s) = env_seed()? {
        config.seed = s;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.parallelism.is_some() {
        config.parallelism = args.parallelism;
    }
    log::info!(
        "seed {}, output {}",
        config.seed,
        config.output_dir.display()
    );
    finish(&run_pipeline(&config)?)
}
