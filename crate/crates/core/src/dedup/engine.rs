use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    apply_dedup, ComponentBuilder, DedupPlan, DuplicateCluster, KeeperPolicy, RemovalRecord,
};
use crate::corpus::Document;
use crate::error::Result;
use crate::fingerprint::{
    exact_jaccard, shingle, MinHasher, ShingleSet, DEFAULT_NUM_PERMS, DEFAULT_SHINGLE_SIZE,
};
use crate::lsh::{
    BandingScheme, EmissionOptions, LshIndex, LshIndexBuilder, SpillOptions, DEFAULT_BUCKET_CAP,
};

/// Fingerprinting and banding parameters for one dedup pass.
#[derive(Debug, Clone)]
pub struct DedupParams {
    pub shingle_size: usize,
    pub num_perms: usize,
    pub seed: u64,
    pub banding: BandingScheme,
    /// When set, candidate pairs below this exact Jaccard are dropped.
    pub verify_threshold: Option<f64>,
    pub bucket_cap: usize,
    pub spill: Option<SpillOptions>,
}

impl Default for DedupParams {
    fn default() -> Self {
        Self {
            shingle_size: DEFAULT_SHINGLE_SIZE,
            num_perms: DEFAULT_NUM_PERMS,
            seed: 0,
            banding: BandingScheme::default(),
            verify_threshold: None,
            bucket_cap: DEFAULT_BUCKET_CAP,
            spill: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupStats {
    pub documents: usize,
    /// Empty documents, passed through without entering the graph.
    pub unfingerprinted: usize,
    pub candidate_pairs: usize,
    /// Pairs dropped by exact verification.
    pub rejected_pairs: usize,
    pub oversized_buckets: usize,
    pub clusters: usize,
    pub removed: usize,
}

#[derive(Debug, Clone)]
pub struct DedupOutcome {
    /// Surviving documents in input order.
    pub kept: Vec<Document>,
    pub removals: Vec<RemovalRecord>,
    /// Keeper-annotated clusters, ordered by smallest member.
    pub clusters: Vec<DuplicateCluster>,
    pub stats: DedupStats,
}

/// Fuzzy-deduplicates `docs` end to end: shingle, MinHash, band, cluster,
/// pick keepers, drop the rest.
///
/// Work is spread over the ambient rayon pool; results do not depend on the
/// number of threads.
pub fn deduplicate(
    docs: Vec<Document>,
    params: &DedupParams,
    policy: &KeeperPolicy,
) -> Result<DedupOutcome> {
    params.banding.check(params.num_perms)?;
    let hasher = MinHasher::new(params.num_perms, params.seed);
    let k = params.shingle_size;
    let keep_sets = params.verify_threshold.is_some();

    let fingerprints: Vec<Option<(Option<ShingleSet>, crate::fingerprint::MinHashSignature)>> =
        docs.par_iter()
            .map(|doc| {
                let set = shingle(&doc.text, k);
                if set.is_empty() {
                    return Ok(None);
                }
                let sig = hasher.signature(&set)?;
                Ok(Some((keep_sets.then_some(set), sig)))
            })
            .collect::<Result<_>>()?;

    let mut stats = DedupStats {
        documents: docs.len(),
        ..Default::default()
    };
    let mut sets: HashMap<&str, ShingleSet> = HashMap::new();
    let mut sigs = Vec::with_capacity(docs.len());
    for (doc, fp) in docs.iter().zip(fingerprints) {
        match fp {
            None => stats.unfingerprinted += 1,
            Some((set, sig)) => {
                if let Some(set) = set {
                    sets.insert(&doc.id, set);
                }
                sigs.push((doc.id.clone(), sig));
            }
        }
    }

    let mut builder = LshIndexBuilder::new(params.banding);
    if let Some(spill) = &params.spill {
        builder = builder.with_spill(spill.clone())?;
    }
    let index = LshIndex::build_with(builder, sigs)?;
    let candidates = index.emit_candidate_pairs(&EmissionOptions {
        bucket_cap: params.bucket_cap,
    })?;
    drop(index);
    stats.candidate_pairs = candidates.pairs.len();
    stats.oversized_buckets = candidates.oversized.len();

    let pairs = match params.verify_threshold {
        Some(threshold) => {
            let verified: Vec<_> = candidates
                .pairs
                .into_par_iter()
                .filter(|p| {
                    exact_jaccard(&sets[p.doc_a.as_str()], &sets[p.doc_b.as_str()]) >= threshold
                })
                .collect();
            stats.rejected_pairs = stats.candidate_pairs - verified.len();
            verified
        }
        None => candidates.pairs,
    };
    drop(sets);

    let mut components = ComponentBuilder::new();
    for p in &pairs {
        components.add_pair(&p.doc_a, &p.doc_b);
    }
    for bucket in &candidates.oversized {
        components.add_group(bucket.members.iter().map(String::as_str));
    }
    let mut clusters = components.finish();

    let lookup: HashMap<&str, &str> = docs
        .iter()
        .map(|d| (d.id.as_str(), d.source.as_str()))
        .collect();
    let plan = DedupPlan::new(&mut clusters, policy, &lookup)?;
    drop(lookup);
    let (kept, removals) = apply_dedup(docs, &plan);
    stats.clusters = clusters.len();
    stats.removed = removals.len();
    Ok(DedupOutcome {
        kept,
        removals,
        clusters,
        stats,
    })
}
