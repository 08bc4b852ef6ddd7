use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{select_keeper, DuplicateCluster, KeeperPolicy, SourceLookup};
use crate::corpus::{write_lines, Document};
use crate::error::{Error, Result};

/// One removed document and the cluster keeper that superseded it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalRecord {
    pub removed_id: String,
    pub keeper_id: String,
    pub cluster_size: usize,
    pub source_removed: String,
    pub source_kept: String,
}

/// Which documents a set of keeper-annotated clusters removes.
#[derive(Debug, Clone, Default)]
pub struct DedupPlan {
    removals: HashMap<String, RemovalRecord>,
}

impl DedupPlan {
    /// Fills in missing keepers with `policy` and records every non-keeper.
    pub fn new<L: SourceLookup + ?Sized>(
        clusters: &mut [DuplicateCluster],
        policy: &KeeperPolicy,
        sources: &L,
    ) -> Result<Self> {
        let mut removals = HashMap::new();
        for cluster in clusters.iter_mut() {
            let keeper = match &cluster.keeper {
                Some(k) => k.clone(),
                None => select_keeper(cluster, policy, sources)?,
            };
            let source_kept = sources
                .source_of(&keeper)
                .ok_or_else(|| Error::UnknownSource(format!("<source of document {keeper:?}>")))?
                .to_string();
            for member in cluster.members.iter().filter(|m| **m != keeper) {
                let source_removed = sources
                    .source_of(member)
                    .ok_or_else(|| {
                        Error::UnknownSource(format!("<source of document {member:?}>"))
                    })?
                    .to_string();
                removals.insert(
                    member.clone(),
                    RemovalRecord {
                        removed_id: member.clone(),
                        keeper_id: keeper.clone(),
                        cluster_size: cluster.size(),
                        source_removed,
                        source_kept: source_kept.clone(),
                    },
                );
            }
            cluster.keeper = Some(keeper);
        }
        Ok(Self { removals })
    }

    pub fn is_removed(&self, id: &str) -> bool {
        self.removals.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.removals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.removals.is_empty()
    }
}

/// Splits `docs` into kept documents and a removal log, both in input order.
pub fn apply_dedup<I>(docs: I, plan: &DedupPlan) -> (Vec<Document>, Vec<RemovalRecord>)
where
    I: IntoIterator<Item = Document>,
{
    let mut kept = Vec::new();
    let mut log = Vec::new();
    for doc in docs {
        match plan.removals.get(&doc.id) {
            Some(rec) => log.push(rec.clone()),
            None => kept.push(doc),
        }
    }
    (kept, log)
}

pub fn write_removal_log(path: impl AsRef<Path>, log: &[RemovalRecord]) -> Result<usize> {
    write_lines(
        log.iter()
            .map(|r| serde_json::to_string(r).map_err(|e| Error::Index(e.to_string()))),
        path,
    )
}

pub fn read_removal_log(path: impl AsRef<Path>) -> Result<Vec<RemovalRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(n, line)| {
            let line = line.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                path: path.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
