use std::collections::HashMap;
use std::hash::BuildHasher;

use super::DuplicateCluster;
use crate::corpus::{validate_sources, SourceId};
use crate::error::{Error, Result};

/// Default source keep order, best first.
pub const ZYDA2_RANKING: [&str; 4] = ["fineweb-edu2", "dclm", "zyda-1", "dolma-cc"];

/// Resolves a document id to its source name.
pub trait SourceLookup {
    fn source_of(&self, id: &str) -> Option<&str>;
}

impl<S: BuildHasher> SourceLookup for HashMap<String, String, S> {
    fn source_of(&self, id: &str) -> Option<&str> {
        self.get(id).map(String::as_str)
    }
}

impl<S: BuildHasher> SourceLookup for HashMap<&str, &str, S> {
    fn source_of(&self, id: &str) -> Option<&str> {
        self.get(id).copied()
    }
}

/// Chooses one document to keep per cluster: the member from the
/// best-ranked source, ties broken by the lexicographically smallest id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeeperPolicy {
    ranks: HashMap<String, u32>,
    ranking: Vec<SourceId>,
}

impl KeeperPolicy {
    pub fn new(mut ranking: Vec<SourceId>) -> Result<Self> {
        validate_sources(ranking.iter().map(|s| (s.name.as_str(), s.rank)))?;
        ranking.sort_by_key(|s| s.rank);
        let ranks = ranking.iter().map(|s| (s.name.clone(), s.rank)).collect();
        Ok(Self { ranks, ranking })
    }

    /// Policy from names listed best first.
    pub fn from_order<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(
            names
                .iter()
                .zip(1u32..)
                .map(|(n, r)| SourceId::new(n.as_ref(), r))
                .collect(),
        )
    }

    /// FineWeb-Edu2 > DCLM > Zyda-1 > Dolma-CC.
    pub fn default_ranking() -> Self {
        Self::from_order(&ZYDA2_RANKING).expect("static ranking is valid")
    }

    pub fn rank_of(&self, source: &str) -> Option<u32> {
        self.ranks.get(source).copied()
    }

    pub fn ranking(&self) -> &[SourceId] {
        &self.ranking
    }
}

/// The member of `cluster` to keep under `policy`.
pub fn select_keeper<L: SourceLookup + ?Sized>(
    cluster: &DuplicateCluster,
    policy: &KeeperPolicy,
    sources: &L,
) -> Result<String> {
    let mut best: Option<(u32, &str)> = None;
    for id in &cluster.members {
        let source = sources
            .source_of(id)
            .ok_or_else(|| Error::UnknownSource(format!("<source of document {id:?}>")))?;
        let rank = policy
            .rank_of(source)
            .ok_or_else(|| Error::UnknownSource(source.to_string()))?;
        let candidate = (rank, id.as_str());
        if best.is_none_or(|b| candidate < b) {
            best = Some(candidate);
        }
    }
    best.map(|(_, id)| id.to_string())
        .ok_or_else(|| Error::Index("empty cluster".into()))
}
