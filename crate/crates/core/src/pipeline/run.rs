use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::accounting::{accounting_report, StageAccounting, StageCounts};
use super::config::{PipelineConfig, StageName};
use crate::corpus::{
    write_lines, write_shard, Corpus, CorpusManifest, Document, ManifestFile, ManifestSourceEntry,
    SourceCorpus, Tokenizer,
};
use crate::dedup::{
    cluster_size_histogram, deduplicate, histogram_svg, write_clusters, write_histogram_tsv,
    write_removal_log, DedupStats, DuplicateCluster, KeeperPolicy, RemovalRecord, SizeHistogram,
};
use crate::error::{Error, Result};
use crate::quality::{
    apply_policy, attach_scores, round_half_up, CommandScorer, FilterPolicy, FilterReport,
    ScoreTable, ScorerManifest,
};

const OUTPUT_DIRS: [&str; 4] = ["final", "logs", "clusters", "reports"];
const STAGING_DIR: &str = ".staging";
const QUARANTINE_DIR: &str = "quarantine";

/// A document dropped by a filter stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRemoval {
    pub id: String,
    pub source: String,
    /// `label:<label>`, `edu:<rounded score>` or `missing`.
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub accounting: StageAccounting,
    pub dedup_removals: BTreeMap<StageName, Vec<RemovalRecord>>,
    pub dedup_stats: BTreeMap<StageName, DedupStats>,
    pub histograms: BTreeMap<StageName, SizeHistogram>,
    pub filter_removals: BTreeMap<StageName, Vec<FilterRemoval>>,
    /// Final documents per source, rank order.
    pub sources: Vec<SourceCorpus>,
    pub output_dir: PathBuf,
}

/// Runs the configured stages and writes the build under `output_dir`:
///
/// - `final/<source>.jsonl` and `final/manifest.toml`: surviving documents
/// - `logs/<stage>.removals.jsonl`: one line per removed document
/// - `clusters/<stage>.clusters.jsonl`: duplicate clusters with keepers
/// - `reports/`: accounting table, histograms and per-stage statistics
///
/// Outputs are assembled in a staging directory and moved into place only
/// after every stage succeeds. On failure the staging directory is moved to
/// `quarantine/` and previous finals are left untouched.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let staging = out_dir.join(STAGING_DIR);
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    for sub in OUTPUT_DIRS {
        let d = staging.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    match pool.install(|| execute(config, &staging)) {
        Ok(mut output) => {
            publish(&staging, out_dir)?;
            output.output_dir = out_dir.clone();
            Ok(output)
        }
        Err(e) => {
            quarantine(&staging, out_dir);
            Err(e)
        }
    }
}

fn publish(staging: &Path, out_dir: &Path) -> Result<()> {
    for sub in OUTPUT_DIRS {
        let target = out_dir.join(sub);
        if target.exists() {
            fs::remove_dir_all(&target).map_err(|e| Error::io(&target, e))?;
        }
        let from = staging.join(sub);
        fs::rename(&from, &target).map_err(|e| Error::io(&from, e))?;
    }
    fs::remove_dir_all(staging).map_err(|e| Error::io(staging, e))
}

fn quarantine(staging: &Path, out_dir: &Path) {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let target = out_dir.join(QUARANTINE_DIR).join(format!("run-{stamp}"));
    let moved =
        fs::create_dir_all(out_dir.join(QUARANTINE_DIR)).and_then(|_| fs::rename(staging, &target));
    match moved {
        Ok(()) => log::warn!("partial outputs quarantined in {}", target.display()),
        Err(e) => log::warn!("could not quarantine {}: {e}", staging.display()),
    }
}

fn stage_err<'a>(stage: &'a str, scope: Option<&'a str>) -> impl FnOnce(Error) -> Error + 'a {
    move |e| Error::Stage {
        stage: stage.to_string(),
        scope: scope.map(str::to_string),
        source: Box::new(e),
    }
}

fn totals(docs: &[Document]) -> (u64, u64) {
    (docs.len() as u64, docs.iter().map(|d| d.token_count).sum())
}

fn execute(config: &PipelineConfig, staging: &Path) -> Result<PipelineOutput> {
    let mut manifest = CorpusManifest::load(&config.manifest).map_err(stage_err("ingest", None))?;
    if let Some(keep) = &config.sources {
        for name in keep {
            if manifest.source(name).is_none() {
                return Err(stage_err("ingest", None)(Error::UnknownSource(
                    name.clone(),
                )));
            }
        }
        manifest.sources.retain(|s| keep.contains(&s.id.name));
    }
    let corpus = Corpus::load(&manifest, config.malformed).map_err(stage_err("ingest", None))?;
    if corpus.malformed_skipped > 0 {
        log::warn!("skipped {} malformed records", corpus.malformed_skipped);
    }
    let names: Vec<String> = corpus
        .sources
        .iter()
        .map(|s| s.source.name.clone())
        .collect();
    let policy = match &config.ranking {
        Some(order) => KeeperPolicy::from_order(order)?,
        None => KeeperPolicy::from_order(&names)?,
    };
    if let Some(missing) = names.iter().find(|n| policy.rank_of(n).is_none()) {
        return Err(Error::Config(format!(
            "source {missing:?} is not in the keeper ranking"
        )));
    }

    let mut sources = corpus.sources;
    let mut output = PipelineOutput {
        accounting: StageAccounting::new(),
        dedup_removals: BTreeMap::new(),
        dedup_stats: BTreeMap::new(),
        histograms: BTreeMap::new(),
        filter_removals: BTreeMap::new(),
        sources: Vec::new(),
        output_dir: staging.to_path_buf(),
    };

    for &stage in &config.stages {
        log::info!("stage {stage}");
        let before: Vec<(u64, u64)> = sources.iter().map(|s| totals(&s.documents)).collect();
        match stage {
            StageName::IntraDedup | StageName::CrossDedup => {
                let (removals, clusters, stats) =
                    run_dedup(stage, config, &policy, &mut sources, staging)?;
                let hist = cluster_size_histogram(&clusters);
                let name = stage.as_str();
                let err = stage_err(name, None);
                write_removal_log(
                    staging.join("logs").join(format!("{name}.removals.jsonl")),
                    &removals,
                )
                .and_then(|_| {
                    write_clusters(
                        staging
                            .join("clusters")
                            .join(format!("{name}.clusters.jsonl")),
                        &clusters,
                    )
                })
                .and_then(|_| {
                    write_histogram_tsv(
                        staging
                            .join("reports")
                            .join(format!("{name}.histogram.tsv")),
                        &hist,
                    )
                })
                .and_then(|_| {
                    write_text(
                        &staging
                            .join("reports")
                            .join(format!("{name}.histogram.svg")),
                        &histogram_svg(&hist, &format!("{name} cluster sizes")),
                    )
                })
                .and_then(|_| {
                    write_text(
                        &staging.join("reports").join(format!("{name}.stats.json")),
                        &to_json(&stats),
                    )
                })
                .map_err(err)?;
                output.dedup_removals.insert(stage, removals);
                output.dedup_stats.insert(stage, stats);
                output.histograms.insert(stage, hist);
            }
            StageName::QualityFilter | StageName::EduFilter => {
                let (removals, reports) = run_filter(stage, config, &mut sources)?;
                let name = stage.as_str();
                write_lines(
                    removals
                        .iter()
                        .map(|r| Ok(serde_json::to_string(r).expect("removal serialises"))),
                    staging.join("logs").join(format!("{name}.removals.jsonl")),
                )
                .and_then(|_| {
                    write_text(
                        &staging.join("reports").join(format!("{name}.filter.json")),
                        &to_json(&reports),
                    )
                })
                .map_err(stage_err(name, None))?;
                output.filter_removals.insert(stage, removals);
            }
        }
        for (s, (docs_in, tokens_in)) in sources.iter().zip(before) {
            let (docs_out, tokens_out) = totals(&s.documents);
            output.accounting.record(
                stage.as_str(),
                &s.source.name,
                StageCounts {
                    documents_in: docs_in,
                    documents_out: docs_out,
                    tokens_in,
                    tokens_out,
                },
            );
        }
    }
    if config.stages.is_empty() {
        for s in &sources {
            let (d, t) = totals(&s.documents);
            output.accounting.record(
                "passthrough",
                &s.source.name,
                StageCounts {
                    documents_in: d,
                    documents_out: d,
                    tokens_in: t,
                    tokens_out: t,
                },
            );
        }
    }

    write_corpus(&staging.join("final"), &sources, manifest.tokenizer)
        .map_err(stage_err("finalize", None))?;
    let report = accounting_report(&output.accounting).map_err(stage_err("finalize", None))?;
    let reports = staging.join("reports");
    write_text(
        &reports.join("accounting.json"),
        &output.accounting.to_json(),
    )
    .and_then(|_| write_text(&reports.join("accounting.txt"), &report.render_text()))
    .and_then(|_| write_text(&reports.join("accounting.table.json"), &report.to_json()))
    .and_then(|_| write_text(&reports.join("run.json"), &run_record(config)))
    .map_err(stage_err("finalize", None))?;
    output.sources = sources;
    Ok(output)
}

type DedupResult = (Vec<RemovalRecord>, Vec<DuplicateCluster>, DedupStats);

fn run_dedup(
    stage: StageName,
    config: &PipelineConfig,
    policy: &KeeperPolicy,
    sources: &mut [SourceCorpus],
    staging: &Path,
) -> Result<DedupResult> {
    let spill_dir = staging.join("spill");
    let params = config.dedup_params(Some(&spill_dir));
    let name = stage.as_str();
    if stage == StageName::CrossDedup {
        let all: Vec<Document> = sources
            .iter_mut()
            .flat_map(|s| std::mem::take(&mut s.documents))
            .collect();
        let outcome = deduplicate(all, &params, policy).map_err(stage_err(name, None))?;
        let index: HashMap<String, usize> = sources
            .iter()
            .enumerate()
            .map(|(i, s)| (s.source.name.clone(), i))
            .collect();
        for doc in outcome.kept {
            let i = index[&doc.source];
            sources[i].documents.push(doc);
        }
        return Ok((outcome.removals, outcome.clusters, outcome.stats));
    }

    let mut removals = Vec::new();
    let mut clusters = Vec::new();
    let mut stats = DedupStats::default();
    for s in sources.iter_mut() {
        let selected = config
            .dedup
            .intra_sources
            .as_ref()
            .is_none_or(|l| l.contains(&s.source.name));
        if !selected {
            continue;
        }
        let scope = s.source.name.as_str();
        let own = KeeperPolicy::from_order(&[scope]).map_err(stage_err(name, Some(scope)))?;
        let outcome = deduplicate(std::mem::take(&mut s.documents), &params, &own)
            .map_err(stage_err(name, Some(scope)))?;
        s.documents = outcome.kept;
        removals.extend(outcome.removals);
        clusters.extend(outcome.clusters);
        add_stats(&mut stats, &outcome.stats);
    }
    // Ids are globally unique, so ordering by smallest member is a total order.
    clusters.sort_by(|a, b| a.smallest().cmp(b.smallest()));
    Ok((removals, clusters, stats))
}

fn add_stats(total: &mut DedupStats, part: &DedupStats) {
    total.documents += part.documents;
    total.unfingerprinted += part.unfingerprinted;
    total.candidate_pairs += part.candidate_pairs;
    total.rejected_pairs += part.rejected_pairs;
    total.oversized_buckets += part.oversized_buckets;
    total.clusters += part.clusters;
    total.removed += part.removed;
}

fn run_filter(
    stage: StageName,
    config: &PipelineConfig,
    sources: &mut [SourceCorpus],
) -> Result<(Vec<FilterRemoval>, BTreeMap<String, FilterReport>)> {
    let name = stage.as_str();
    let policy: FilterPolicy = match stage {
        StageName::QualityFilter => config.quality_filter.filter_policy(),
        _ => config.edu_filter.filter_policy(),
    };
    let in_scope = |s: &SourceCorpus| policy.applies_to.contains(&s.source.name);
    let table = if stage == StageName::QualityFilter {
        load_scores(config, sources.iter().filter(|s| in_scope(s)))
            .map_err(stage_err(name, None))?
    } else {
        None
    };

    let mut removals = Vec::new();
    let mut reports = BTreeMap::new();
    for s in sources.iter_mut().filter(|s| in_scope(s)) {
        let scope = s.source.name.clone();
        let err = || stage_err(name, Some(&scope));
        let mut docs = std::mem::take(&mut s.documents);
        if let Some(table) = &table {
            let (annotated, stats) =
                attach_scores(docs, table, config.quality_filter.missing_score).map_err(err())?;
            log::info!(
                "{scope}: {} documents scored, {} unscored",
                stats.annotated,
                stats.unscored
            );
            docs = annotated;
        }
        let before: Vec<Document> = docs.clone();
        let (kept, report) = apply_policy(docs, &policy).map_err(err())?;
        let kept_ids: HashSet<&str> = kept.iter().map(|d| d.id.as_str()).collect();
        removals.extend(
            before
                .iter()
                .filter(|d| !kept_ids.contains(d.id.as_str()))
                .map(|d| FilterRemoval {
                    id: d.id.clone(),
                    source: d.source.clone(),
                    reason: removal_reason(stage, d),
                }),
        );
        s.documents = kept;
        reports.insert(scope, report);
    }
    Ok((removals, reports))
}

fn removal_reason(stage: StageName, doc: &Document) -> String {
    match stage {
        StageName::EduFilter => match doc.edu_score {
            Some(s) => format!("edu:{}", round_half_up(s)),
            None => "missing".into(),
        },
        _ => match doc.quality_label {
            Some(l) => format!("label:{l}"),
            None => "missing".into(),
        },
    }
}

fn load_scores<'a>(
    config: &PipelineConfig,
    in_scope: impl Iterator<Item = &'a SourceCorpus>,
) -> Result<Option<ScoreTable>> {
    let q = &config.quality_filter;
    let table = if !q.scores.is_empty() {
        ScoreTable::load(&q.scores)?
    } else if let Some(cmd) = &q.scorer {
        let docs: Vec<Document> = in_scope.flat_map(|s| s.documents.iter().cloned()).collect();
        CommandScorer::new(&cmd.program, cmd.args.clone()).score(&docs)?
    } else {
        return Ok(None);
    };
    if let Some(path) = &q.scorer_manifest {
        table.check_labels(&ScorerManifest::load(path)?.thresholds)?;
    }
    Ok(Some(table))
}

/// Writes each source to `<dir>/<name>.jsonl` plus a `manifest.toml` listing
/// them with ranks renumbered from 1 in the given order.
pub fn write_corpus(dir: &Path, sources: &[SourceCorpus], tokenizer: Tokenizer) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut seen = BTreeSet::new();
    let mut entries = Vec::with_capacity(sources.len());
    for (s, rank) in sources.iter().zip(1u32..) {
        let name = &s.source.name;
        if name.is_empty()
            || name.contains(['/', '\\'])
            || name.starts_with('.')
            || !seen.insert(name)
        {
            return Err(Error::Manifest(format!(
                "source name {name:?} cannot be used as a file name"
            )));
        }
        let file = format!("{name}.jsonl");
        write_shard(&s.documents, dir.join(&file))?;
        entries.push(ManifestSourceEntry {
            name: name.clone(),
            rank,
            shards: vec![file],
        });
    }
    let manifest = ManifestFile {
        tokenizer,
        created_at: None,
        sources: entries,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Manifest(e.to_string()))?;
    write_text(&dir.join("manifest.toml"), &text)
}

/// Parameters that determine the output; thread count and paths are left out.
fn run_record(config: &PipelineConfig) -> String {
    to_json(&serde_json::json!({
        "seed": config.seed,
        "stages": config.stages,
        "sources": config.sources,
        "ranking": config.ranking,
        "minhash": config.minhash,
        "banding": config.banding,
        "dedup": config.dedup,
    }))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialises") + "\n"
}
