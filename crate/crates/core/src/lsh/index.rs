use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use rayon::prelude::*;
use tempfile::TempDir;

use super::banding::{band_keys, BandingScheme};
use super::spill::{write_run, MergedBuckets};
use crate::error::{Error, Result};
use crate::fingerprint::MinHashSignature;

const INSERT_CHUNK: usize = 4096;

/// Bounds the in-memory bucket tables; once more than `max_entries_in_memory`
/// `(key, doc)` entries are buffered, every band flushes a sorted run to disk.
#[derive(Debug, Clone)]
pub struct SpillOptions {
    /// Parent directory for run files; the system temp dir when `None`.
    pub dir: Option<PathBuf>,
    pub max_entries_in_memory: usize,
}

#[derive(Debug, Default)]
struct BandTable {
    memory: HashMap<u64, Vec<u32>>,
    runs: Vec<PathBuf>,
}

/// Accumulates signatures band by band. Call [`LshIndexBuilder::finish`] to
/// seal the index before emitting pairs.
pub struct LshIndexBuilder {
    scheme: BandingScheme,
    seed: Option<u64>,
    ids: Vec<String>,
    id_set: HashSet<String>,
    tables: Vec<BandTable>,
    spill: Option<(SpillOptions, TempDir)>,
    buffered: usize,
}

impl LshIndexBuilder {
    pub fn new(scheme: BandingScheme) -> Self {
        Self {
            scheme,
            seed: None,
            ids: Vec::new(),
            id_set: HashSet::new(),
            tables: (0..scheme.bands).map(|_| BandTable::default()).collect(),
            spill: None,
            buffered: 0,
        }
    }

    pub fn with_spill(mut self, options: SpillOptions) -> Result<Self> {
        let dir = match &options.dir {
            Some(d) => {
                std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
                tempfile::Builder::new().prefix("lsh-spill").tempdir_in(d)
            }
            None => tempfile::Builder::new().prefix("lsh-spill").tempdir(),
        }
        .map_err(|e| Error::io(options.dir.clone().unwrap_or_else(std::env::temp_dir), e))?;
        self.spill = Some((options, dir));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, sig: MinHashSignature) -> Result<()> {
        self.insert_batch(vec![(id.into(), sig)])
    }

    /// Inserts a batch; band keys are computed in parallel and each band's
    /// table is updated by a single writer.
    pub fn insert_batch(&mut self, batch: Vec<(String, MinHashSignature)>) -> Result<()> {
        for (id, sig) in &batch {
            self.scheme.check(sig.len())?;
            match self.seed {
                None => self.seed = Some(sig.seed),
                Some(s) if s != sig.seed => {
                    return Err(Error::SignatureMismatch(format!(
                        "signature for {id:?} has seed {}, index holds seed {s}",
                        sig.seed
                    )))
                }
                Some(_) => {}
            }
        }
        let base = self.ids.len();
        if base + batch.len() > u32::MAX as usize {
            return Err(Error::Index("more than 2^32 documents".into()));
        }
        let scheme = self.scheme;
        let keys: Vec<Vec<u64>> = batch
            .par_iter()
            .map(|(_, sig)| {
                band_keys(sig, scheme).map(|ks| ks.into_iter().map(|k| k.key).collect())
            })
            .collect::<Result<_>>()?;
        for (id, _) in batch {
            if !self.id_set.insert(id.clone()) {
                return Err(Error::Index(format!("document {id:?} inserted twice")));
            }
            self.ids.push(id);
        }
        self.tables
            .par_iter_mut()
            .enumerate()
            .for_each(|(band, table)| {
                for (j, doc_keys) in keys.iter().enumerate() {
                    table
                        .memory
                        .entry(doc_keys[band])
                        .or_default()
                        .push((base + j) as u32);
                }
            });
        self.buffered += keys.len() * scheme.bands;
        if let Some((opts, _)) = &self.spill {
            if self.buffered > opts.max_entries_in_memory {
                self.flush()?;
            }
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        let Some((_, dir)) = &self.spill else {
            return Ok(());
        };
        let dir = dir.path().to_path_buf();
        self.tables
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(band, table)| -> Result<()> {
                if table.memory.is_empty() {
                    return Ok(());
                }
                let mut entries: Vec<(u64, u32)> = table
                    .memory
                    .drain()
                    .flat_map(|(k, docs)| docs.into_iter().map(move |d| (k, d)))
                    .collect();
                let path = dir.join(format!("band{band:03}-run{:05}", table.runs.len()));
                write_run(&path, &mut entries)?;
                table.runs.push(path);
                Ok(())
            })?;
        self.buffered = 0;
        Ok(())
    }

    pub fn finish(mut self) -> Result<LshIndex> {
        if self.tables.iter().any(|t| !t.runs.is_empty()) {
            self.flush()?;
        }
        Ok(LshIndex {
            scheme: self.scheme,
            seed: self.seed,
            ids: self.ids,
            tables: self.tables,
            _spill_dir: self.spill.map(|(_, d)| d),
        })
    }
}

/// A sealed banded index. Read-only; bucket scans are safe to run in parallel.
pub struct LshIndex {
    scheme: BandingScheme,
    seed: Option<u64>,
    ids: Vec<String>,
    tables: Vec<BandTable>,
    _spill_dir: Option<TempDir>,
}

impl LshIndex {
    /// Builds an in-memory index from `(id, signature)` pairs.
    pub fn build<I>(sigs: I, scheme: BandingScheme) -> Result<Self>
    where
        I: IntoIterator<Item = (String, MinHashSignature)>,
    {
        Self::build_with(LshIndexBuilder::new(scheme), sigs)
    }

    pub fn build_with<I>(mut builder: LshIndexBuilder, sigs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, MinHashSignature)>,
    {
        let mut chunk = Vec::with_capacity(INSERT_CHUNK);
        for item in sigs {
            chunk.push(item);
            if chunk.len() == INSERT_CHUNK {
                builder.insert_batch(std::mem::take(&mut chunk))?;
            }
        }
        if !chunk.is_empty() {
            builder.insert_batch(chunk)?;
        }
        builder.finish()
    }

    pub fn scheme(&self) -> BandingScheme {
        self.scheme
    }

    /// Seed shared by all indexed signatures; `None` for an empty index.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn is_spilled(&self) -> bool {
        self.tables.iter().any(|t| !t.runs.is_empty())
    }

    /// Calls `f(key, members)` for every bucket of `band`. Members are document
    /// indices into [`LshIndex::ids`].
    pub(crate) fn visit_buckets<F>(&self, band: usize, mut f: F) -> Result<()>
    where
        F: FnMut(u64, &[u32]) -> Result<()>,
    {
        let table = &self.tables[band];
        if table.runs.is_empty() {
            for (key, docs) in &table.memory {
                f(*key, docs)?;
            }
        } else {
            let mut merged = MergedBuckets::open(&table.runs)?;
            while let Some((key, docs)) = merged.next_bucket()? {
                f(key, &docs)?;
            }
        }
        Ok(())
    }

    /// Ids sharing `(band, key)`, in insertion order.
    pub fn bucket_members(&self, band: usize, key: u64) -> Result<Vec<&str>> {
        let mut out = Vec::new();
        self.visit_buckets(band, |k, docs| {
            if k == key {
                out.extend(docs.iter().map(|&d| self.ids[d as usize].as_str()));
            }
            Ok(())
        })?;
        Ok(out)
    }

    /// Number of non-empty buckets per band.
    pub fn bucket_counts(&self) -> Result<Vec<usize>> {
        (0..self.scheme.bands)
            .map(|band| {
                let mut n = 0;
                self.visit_buckets(band, |_, _| {
                    n += 1;
                    Ok(())
                })?;
                Ok(n)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::{shingle, MinHasher};
    use crate::lsh::band_keys;

    fn sig(text: &str) -> MinHashSignature {
        MinHasher::with_seed(1)
            .signature(&shingle(text, 5))
            .unwrap()
    }

    #[test]
    fn identical_docs_share_every_bucket() {
        let s = sig("an identical document body");
        let index = LshIndex::build(
            vec![("a".to_string(), s.clone()), ("b".to_string(), s.clone())],
            BandingScheme::default(),
        )
        .unwrap();
        for key in band_keys(&s, BandingScheme::default()).unwrap() {
            assert_eq!(
                index.bucket_members(key.band_index, key.key).unwrap(),
                ["a", "b"]
            );
        }
    }

    #[test]
    fn empty_index() {
        let index = LshIndex::build(Vec::new(), BandingScheme::default()).unwrap();
        assert!(index.is_empty());
        assert_eq!(index.bucket_counts().unwrap(), vec![0; 8]);
        assert_eq!(index.seed(), None);
    }

    #[test]
    fn mixed_seeds_are_rejected() {
        let s = shingle("some document", 5);
        let mut b = LshIndexBuilder::new(BandingScheme::default());
        b.insert("a", MinHasher::with_seed(1).signature(&s).unwrap())
            .unwrap();
        let err = b
            .insert("b", MinHasher::with_seed(2).signature(&s).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::SignatureMismatch(_)));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let mut b = LshIndexBuilder::new(BandingScheme::default());
        b.insert("a", sig("one")).unwrap();
        assert!(matches!(b.insert("a", sig("two")), Err(Error::Index(_))));
    }

    #[test]
    fn spilled_index_matches_memory_index() {
        let docs: Vec<(String, MinHashSignature)> = (0..300)
            .map(|i| {
                (
                    format!("d{i:03}"),
                    sig(&format!("document number {} body", i % 40)),
                )
            })
            .collect();
        let mem = LshIndex::build(docs.clone(), BandingScheme::default()).unwrap();
        let spill_builder = LshIndexBuilder::new(BandingScheme::default())
            .with_spill(SpillOptions {
                dir: None,
                max_entries_in_memory: 100,
            })
            .unwrap();
        let mut spilled_builder = spill_builder;
        for chunk in docs.chunks(25) {
            spilled_builder.insert_batch(chunk.to_vec()).unwrap();
        }
        let spilled = spilled_builder.finish().unwrap();
        assert!(spilled.is_spilled());
        assert!(!mem.is_spilled());
        assert_eq!(
            mem.bucket_counts().unwrap(),
            spilled.bucket_counts().unwrap()
        );
        for band in 0..8 {
            let mut a = Vec::new();
            mem.visit_buckets(band, |k, d| {
                a.push((k, d.to_vec()));
                Ok(())
            })
            .unwrap();
            let mut b = Vec::new();
            spilled
                .visit_buckets(band, |k, d| {
                    b.push((k, d.to_vec()));
                    Ok(())
                })
                .unwrap();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }
}
