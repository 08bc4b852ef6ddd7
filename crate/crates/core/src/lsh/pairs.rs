use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LshIndex;
use crate::corpus::{write_lines, Document};
use crate::error::{Error, Result};
use crate::fingerprint::{exact_jaccard, shingle};

/// Buckets with more members than this are not expanded into pairs.
pub const DEFAULT_BUCKET_CAP: usize = 50_000;

/// Two documents sharing at least one band bucket. `doc_a < doc_b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CandidatePair {
    pub doc_a: String,
    pub doc_b: String,
    pub colliding_bands: u32,
}

impl CandidatePair {
    /// Canonical pair; `None` for a self-pair.
    pub fn new(a: impl Into<String>, b: impl Into<String>, colliding_bands: u32) -> Option<Self> {
        let (a, b) = (a.into(), b.into());
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self {
                doc_a: a,
                doc_b: b,
                colliding_bands,
            }),
            std::cmp::Ordering::Greater => Some(Self {
                doc_a: b,
                doc_b: a,
                colliding_bands,
            }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// A bucket too large for pair enumeration. Its members are merged into one
/// cluster wholesale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OversizedBucket {
    pub band: usize,
    /// Sorted ascending.
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Candidates {
    /// Sorted by `(doc_a, doc_b)`, each unordered pair once.
    pub pairs: Vec<CandidatePair>,
    pub oversized: Vec<OversizedBucket>,
}

#[derive(Debug, Clone, Copy)]
pub struct EmissionOptions {
    pub bucket_cap: usize,
}

impl Default for EmissionOptions {
    fn default() -> Self {
        Self {
            bucket_cap: DEFAULT_BUCKET_CAP,
        }
    }
}

impl LshIndex {
    /// Expands every bucket into pairs, merging collisions across bands.
    pub fn emit_candidate_pairs(&self, options: &EmissionOptions) -> Result<Candidates> {
        let ids = self.ids();
        let mut order: Vec<u32> = (0..ids.len() as u32).collect();
        order.par_sort_unstable_by(|&a, &b| ids[a as usize].cmp(&ids[b as usize]));
        let mut rank = vec![0u32; ids.len()];
        for (r, &doc) in order.iter().enumerate() {
            rank[doc as usize] = r as u32;
        }

        let per_band: Vec<(Vec<(u32, u32)>, Vec<(usize, Vec<u32>)>)> = (0..self.scheme().bands)
            .into_par_iter()
            .map(|band| {
                let mut pairs = Vec::new();
                let mut oversized = Vec::new();
                self.visit_buckets(band, |_, docs| {
                    if docs.len() < 2 {
                        return Ok(());
                    }
                    let mut ranks: Vec<u32> = docs.iter().map(|&d| rank[d as usize]).collect();
                    ranks.sort_unstable();
                    if docs.len() > options.bucket_cap {
                        log::warn!(
                            "band {band}: bucket of {} documents exceeds cap {}",
                            docs.len(),
                            options.bucket_cap
                        );
                        oversized.push((band, ranks));
                        return Ok(());
                    }
                    for (i, &a) in ranks.iter().enumerate() {
                        for &b in &ranks[i + 1..] {
                            pairs.push((a, b));
                        }
                    }
                    Ok(())
                })?;
                Ok((pairs, oversized))
            })
            .collect::<Result<_>>()?;

        let mut all: Vec<(u32, u32)> =
            Vec::with_capacity(per_band.iter().map(|(p, _)| p.len()).sum());
        let mut oversized = Vec::new();
        for (pairs, over) in per_band {
            all.extend(pairs);
            oversized.extend(over);
        }
        all.par_sort_unstable();

        let name = |r: u32| ids[order[r as usize] as usize].clone();
        let mut pairs = Vec::new();
        let mut i = 0;
        while i < all.len() {
            let mut j = i + 1;
            while j < all.len() && all[j] == all[i] {
                j += 1;
            }
            let (a, b) = all[i];
            pairs.push(CandidatePair {
                doc_a: name(a),
                doc_b: name(b),
                colliding_bands: (j - i) as u32,
            });
            i = j;
        }
        oversized.sort();
        Ok(Candidates {
            pairs,
            oversized: oversized
                .into_iter()
                .map(|(band, ranks)| OversizedBucket {
                    band,
                    members: ranks.into_iter().map(name).collect(),
                })
                .collect(),
        })
    }
}

/// Exact check: shingle-set Jaccard of the two texts is at least `threshold`.
pub fn verify_pair(a: &Document, b: &Document, k: usize, threshold: f64) -> bool {
    exact_jaccard(&shingle(&a.text, k), &shingle(&b.text, k)) >= threshold
}

/// Writes pairs as JSON lines, sorted ascending by `(doc_a, doc_b)`.
pub fn write_candidate_pairs(path: impl AsRef<Path>, pairs: &[CandidatePair]) -> Result<usize> {
    let mut sorted: Vec<&CandidatePair> = pairs.iter().collect();
    sorted.sort();
    write_lines(
        sorted
            .into_iter()
            .map(|p| serde_json::to_string(p).map_err(|e| Error::Index(e.to_string()))),
        path,
    )
}

pub fn read_candidate_pairs(path: impl AsRef<Path>) -> Result<Vec<CandidatePair>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(n, line)| {
            let line = line.map_err(|e| Error::io(path, e))?;
            let pair: CandidatePair =
                serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: e.to_string(),
                })?;
            if pair.doc_a >= pair.doc_b {
                return Err(Error::MalformedRecord {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: "pair is not in canonical order".into(),
                });
            }
            Ok(pair)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::{MinHashSignature, MinHasher, ShingleSet};
    use crate::lsh::BandingScheme;

    fn sig_of(text: &str) -> MinHashSignature {
        MinHasher::with_seed(9)
            .signature(&shingle(text, 25))
            .unwrap()
    }

    fn index_of(docs: &[(&str, &str)]) -> LshIndex {
        LshIndex::build(
            docs.iter().map(|(id, t)| (id.to_string(), sig_of(t))),
            BandingScheme::default(),
        )
        .unwrap()
    }

    #[test]
    fn canonical_pairs() {
        let p = CandidatePair::new("b", "a", 1).unwrap();
        assert_eq!((p.doc_a.as_str(), p.doc_b.as_str()), ("a", "b"));
        assert!(CandidatePair::new("a", "a", 1).is_none());
    }

    #[test]
    fn one_pair_for_identical_docs() {
        let text = "a document that appears twice in the corpus, verbatim";
        let idx = index_of(&[
            ("C", "something else entirely and unrelated in content"),
            ("B", text),
            ("A", text),
        ]);
        let c = idx
            .emit_candidate_pairs(&EmissionOptions::default())
            .unwrap();
        assert_eq!(c.pairs, vec![CandidatePair::new("A", "B", 8).unwrap()]);
        assert!(c.oversized.is_empty());
    }

    #[test]
    fn complete_graph_in_one_bucket() {
        let text = "the same boilerplate footer text repeated on many pages";
        let docs: Vec<(String, &str)> = (0..12).map(|i| (format!("d{i:02}"), text)).collect();
        let idx = LshIndex::build(
            docs.iter().map(|(id, t)| (id.clone(), sig_of(t))),
            BandingScheme::default(),
        )
        .unwrap();
        let c = idx
            .emit_candidate_pairs(&EmissionOptions::default())
            .unwrap();
        assert_eq!(c.pairs.len(), 12 * 11 / 2);
        assert!(c
            .pairs
            .iter()
            .all(|p| p.doc_a < p.doc_b && p.colliding_bands == 8));
        assert!(c
            .pairs
            .windows(2)
            .all(|w| (&w[0].doc_a, &w[0].doc_b) < (&w[1].doc_a, &w[1].doc_b)));
    }

    #[test]
    fn oversized_buckets_are_not_expanded() {
        let text = "degenerate";
        let docs: Vec<(String, &str)> = (0..10).map(|i| (format!("d{i}"), text)).collect();
        let idx = LshIndex::build(
            docs.iter().map(|(id, t)| (id.clone(), sig_of(t))),
            BandingScheme::default(),
        )
        .unwrap();
        let c = idx
            .emit_candidate_pairs(&EmissionOptions { bucket_cap: 5 })
            .unwrap();
        assert!(c.pairs.is_empty());
        assert_eq!(c.oversized.len(), 8);
        assert!(c.oversized.iter().all(|b| b.members.len() == 10));
    }

    #[test]
    fn verify_pair_thresholds() {
        let a = Document::new(
            "a",
            "s",
            "an example document body long enough for some shingles",
        );
        let b = Document::new(
            "b",
            "s",
            "zzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzz",
        );
        assert!(verify_pair(&a, &a.clone(), 25, 0.85));
        assert!(!verify_pair(&a, &b, 25, 0.85));
    }

    #[test]
    fn verify_just_below_threshold() {
        // Construct shingle sets with |A ∩ B| = 84, |A ∪ B| = 100 exactly.
        let a = ShingleSet::from_hashes(1, 0..92);
        let b = ShingleSet::from_hashes(1, (8..92).chain(1000..1008));
        assert_eq!(a.intersection_len(&b), 84);
        let j = exact_jaccard(&a, &b);
        assert!((j - 0.84).abs() < 1e-12);
        assert!(j < 0.85);
        // The same holds on real texts: single characters with k = 1.
        let alpha: Vec<char> = (0..100)
            .map(|i| char::from_u32(0x4e00 + i).unwrap())
            .collect();
        let ta: String = alpha[..92].iter().collect();
        let tb: String = alpha[8..100].iter().collect();
        let (da, db) = (Document::new("a", "s", ta), Document::new("b", "s", tb));
        assert!((exact_jaccard(&shingle(&da.text, 1), &shingle(&db.text, 1)) - 0.84).abs() < 1e-12);
        assert!(!verify_pair(&da, &db, 1, 0.85));
        assert!(verify_pair(&da, &db, 1, 0.84));
    }

    #[test]
    fn pair_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.jsonl");
        let pairs = vec![
            CandidatePair::new("b", "c", 2).unwrap(),
            CandidatePair::new("a", "z", 1).unwrap(),
        ];
        write_candidate_pairs(&path, &pairs).unwrap();
        let back = read_candidate_pairs(&path).unwrap();
        assert_eq!(back, vec![pairs[1].clone(), pairs[0].clone()]);
    }
}
