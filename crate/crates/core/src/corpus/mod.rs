//! Document model, shard I/O, manifests and token counting.

mod document;
mod manifest;
mod shard;
mod tokenize;

use std::collections::HashSet;
use std::path::PathBuf;

use rayon::prelude::*;

pub use document::{Document, QualityLabel, SourceId};
pub use manifest::{
    validate_sources, CorpusManifest, ManifestFile, ManifestSource, ManifestSourceEntry,
};
pub(crate) use shard::write_lines;
pub use shard::{
    encode_record, ingest_shard, write_shard, IngestOptions, MalformedPolicy, ShardReader,
};
pub use tokenize::{count_tokens, Tokenizer};

use crate::error::{Error, Result};

/// Documents of one source, in shard then line order.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceCorpus {
    pub source: SourceId,
    pub documents: Vec<Document>,
}

/// An in-memory multi-source corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    /// Sources in rank order.
    pub sources: Vec<SourceCorpus>,
    /// Malformed lines dropped while loading.
    pub malformed_skipped: usize,
}

impl Corpus {
    /// Loads every shard of `manifest`, shards in parallel.
    ///
    /// Document ids must be unique across the whole corpus; the first repeat
    /// (in rank, shard, line order) is reported as [`Error::DuplicateId`].
    pub fn load(manifest: &CorpusManifest, malformed: MalformedPolicy) -> Result<Self> {
        let options = IngestOptions {
            tokenizer: manifest.tokenizer,
            malformed,
        };
        let jobs: Vec<(usize, &SourceId, &PathBuf)> = manifest
            .sources
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.shards.iter().map(move |p| (i, &s.id, p)))
            .collect();
        let shards: Vec<(usize, PathBuf, Vec<Document>, usize)> = jobs
            .par_iter()
            .map(|&(i, source, path)| {
                log::info!("ingesting {}", path.display());
                let mut reader = ingest_shard(path, source, options)?;
                let docs = reader.by_ref().collect::<Result<Vec<_>>>()?;
                Ok((i, path.clone(), docs, reader.skipped()))
            })
            .collect::<Result<_>>()?;

        let mut corpus = Corpus {
            sources: manifest
                .sources
                .iter()
                .map(|s| SourceCorpus {
                    source: s.id.clone(),
                    documents: Vec::new(),
                })
                .collect(),
            malformed_skipped: 0,
        };
        let mut seen = HashSet::new();
        for (i, path, docs, skipped) in shards {
            corpus.malformed_skipped += skipped;
            for (n, doc) in docs.iter().enumerate() {
                if !seen.insert(doc.id.clone()) {
                    return Err(Error::DuplicateId {
                        id: doc.id.clone(),
                        path,
                        line: n + 1,
                    });
                }
            }
            corpus.sources[i].documents.extend(docs);
        }
        Ok(corpus)
    }

    pub fn from_sources(sources: Vec<SourceCorpus>) -> Self {
        Self {
            sources,
            malformed_skipped: 0,
        }
    }

    pub fn num_documents(&self) -> usize {
        self.sources.iter().map(|s| s.documents.len()).sum()
    }

    pub fn num_tokens(&self) -> u64 {
        self.documents().map(|d| d.token_count).sum()
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.sources.iter().flat_map(|s| s.documents.iter())
    }

    pub fn source(&self, name: &str) -> Option<&SourceCorpus> {
        self.sources.iter().find(|s| s.source.name == name)
    }

    pub fn ranking(&self) -> Vec<SourceId> {
        self.sources.iter().map(|s| s.source.clone()).collect()
    }
}
