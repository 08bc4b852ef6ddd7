use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::UnionFind;
use crate::corpus::write_lines;
use crate::error::{Error, Result};
use crate::lsh::CandidatePair;

/// A connected component of the duplicate graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateCluster {
    /// Sorted ascending, at least two ids.
    pub members: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keeper: Option<String>,
}

impl DuplicateCluster {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn smallest(&self) -> &str {
        &self.members[0]
    }
}

/// Incremental union-find over document ids.
#[derive(Debug, Default)]
pub struct ComponentBuilder {
    index: HashMap<String, u32>,
    names: Vec<String>,
    sets: UnionFind,
}

impl ComponentBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.sets.push();
        self.index.insert(id.to_string(), i);
        self.names.push(id.to_string());
        i
    }

    pub fn add_pair(&mut self, a: &str, b: &str) {
        let (a, b) = (self.intern(a), self.intern(b));
        self.sets.union(a, b);
    }

    /// Joins every member of `group` into one component.
    pub fn add_group<'a>(&mut self, group: impl IntoIterator<Item = &'a str>) {
        let mut first = None;
        for id in group {
            let i = self.intern(id);
            match first {
                None => first = Some(i),
                Some(f) => {
                    self.sets.union(f, i);
                }
            }
        }
    }

    /// Components with two or more members, each sorted, ordered by smallest member.
    pub fn finish(mut self) -> Vec<DuplicateCluster> {
        let mut groups: HashMap<u32, Vec<String>> = HashMap::new();
        for (i, name) in std::mem::take(&mut self.names).into_iter().enumerate() {
            let root = self.sets.find(i as u32);
            groups.entry(root).or_default().push(name);
        }
        let mut clusters: Vec<DuplicateCluster> = groups
            .into_values()
            .filter(|m| m.len() > 1)
            .map(|mut members| {
                members.sort_unstable();
                DuplicateCluster {
                    members,
                    keeper: None,
                }
            })
            .collect();
        clusters.sort_unstable_by(|a, b| a.members[0].cmp(&b.members[0]));
        clusters
    }
}

/// Partitions the documents touched by `pairs` into connected components.
pub fn connected_components<I>(pairs: I) -> Vec<DuplicateCluster>
where
    I: IntoIterator<Item = CandidatePair>,
{
    let mut builder = ComponentBuilder::new();
    for p in pairs {
        builder.add_pair(&p.doc_a, &p.doc_b);
    }
    builder.finish()
}

/// Writes clusters as JSON lines `{"members": [...], "keeper": ...}`.
pub fn write_clusters(path: impl AsRef<Path>, clusters: &[DuplicateCluster]) -> Result<usize> {
    write_lines(
        clusters
            .iter()
            .map(|c| serde_json::to_string(c).map_err(|e| Error::Index(e.to_string()))),
        path,
    )
}

pub fn read_clusters(path: impl AsRef<Path>) -> Result<Vec<DuplicateCluster>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(n, line)| {
            let line = line.map_err(|e| Error::io(path, e))?;
            let c: DuplicateCluster =
                serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: e.to_string(),
                })?;
            if c.members.is_empty() {
                return Err(Error::MalformedRecord {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: "cluster has no members".into(),
                });
            }
            Ok(c)
        })
        .collect()
}
