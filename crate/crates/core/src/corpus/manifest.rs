use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{SourceId, Tokenizer};
use crate::error::{Error, Result};

/// On-disk manifest layout (TOML).
///
/// ```toml
/// tokenizer = "whitespace"        # or "external-counts"
/// created_at = "2024-10-01T00:00:00Z"
///
/// [[sources]]
/// name = "fineweb-edu2"
/// rank = 1
/// shards = ["fwe2/*.jsonl"]
/// ```
///
/// Shard patterns are globs resolved relative to the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    #[serde(default)]
    pub tokenizer: Tokenizer,
    #[serde(default)]
    pub created_at: Option<DateTime<Utc>>,
    pub sources: Vec<ManifestSourceEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSourceEntry {
    pub name: String,
    pub rank: u32,
    pub shards: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestSource {
    pub id: SourceId,
    /// Resolved shard files, sorted.
    pub shards: Vec<PathBuf>,
}

/// A validated manifest with every shard pattern expanded to existing files.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    /// Sources in rank order.
    pub sources: Vec<ManifestSource>,
    pub tokenizer: Tokenizer,
    pub created_at: Option<DateTime<Utc>>,
}

impl CorpusManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let file: ManifestFile =
            toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        Self::resolve(file, base_dir)
    }

    pub fn resolve(file: ManifestFile, base_dir: &Path) -> Result<Self> {
        validate_sources(file.sources.iter().map(|s| (s.name.as_str(), s.rank)))?;
        let mut sources = Vec::with_capacity(file.sources.len());
        for entry in file.sources {
            let mut shards = Vec::new();
            for pattern in &entry.shards {
                let full = base_dir.join(pattern);
                let full = full.to_string_lossy();
                let matches = glob::glob(&full)
                    .map_err(|e| Error::Manifest(format!("bad shard pattern {pattern:?}: {e}")))?;
                let before = shards.len();
                for m in matches {
                    let p = m.map_err(|e| Error::io(e.path().to_path_buf(), e.into()))?;
                    if p.is_file() {
                        shards.push(p);
                    }
                }
                if shards.len() == before {
                    return Err(Error::Manifest(format!(
                        "source {:?}: shard pattern {pattern:?} matches no files",
                        entry.name
                    )));
                }
            }
            shards.sort();
            shards.dedup();
            sources.push(ManifestSource {
                id: SourceId::new(entry.name, entry.rank),
                shards,
            });
        }
        sources.sort_by_key(|s| s.id.rank);
        Ok(Self {
            sources,
            tokenizer: file.tokenizer,
            created_at: file.created_at,
        })
    }

    pub fn source(&self, name: &str) -> Option<&SourceId> {
        self.sources.iter().map(|s| &s.id).find(|s| s.name == name)
    }

    /// Source ids in rank order.
    pub fn ranking(&self) -> Vec<SourceId> {
        self.sources.iter().map(|s| s.id.clone()).collect()
    }
}

/// Checks that names are non-empty and unique and ranks are exactly `1..=n`.
pub fn validate_sources<'a>(sources: impl IntoIterator<Item = (&'a str, u32)>) -> Result<()> {
    let mut names = HashSet::new();
    let mut ranks = Vec::new();
    for (name, rank) in sources {
        if name.is_empty() {
            return Err(Error::Manifest("source name must be non-empty".into()));
        }
        if !names.insert(name) {
            return Err(Error::Manifest(format!("duplicate source name {name:?}")));
        }
        ranks.push(rank);
    }
    if ranks.is_empty() {
        return Err(Error::Manifest("no sources listed".into()));
    }
    ranks.sort_unstable();
    for (expected, rank) in (1u32..).zip(&ranks) {
        if *rank != expected {
            return Err(Error::Manifest(format!(
                "source ranks must be unique and contiguous from 1, got {ranks:?}"
            )));
        }
    }
    Ok(())
}
