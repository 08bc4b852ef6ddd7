use xxhash_rust::xxh3::xxh3_64_with_seed;

/// Seed of the XXH3-64 hash applied to each shingle's UTF-8 bytes.
pub const SHINGLE_HASH_SEED: u64 = 0;

/// Hashed set of character k-grams. Hashes are kept sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShingleSet {
    k: usize,
    hashes: Vec<u64>,
}

impl ShingleSet {
    /// Builds a set from raw hash values (duplicates collapse).
    pub fn from_hashes(k: usize, hashes: impl IntoIterator<Item = u64>) -> Self {
        let mut hashes: Vec<u64> = hashes.into_iter().collect();
        hashes.sort_unstable();
        hashes.dedup();
        Self { k, hashes }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn hashes(&self) -> &[u64] {
        &self.hashes
    }

    pub fn len(&self) -> usize {
        self.hashes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hashes.is_empty()
    }

    pub fn contains(&self, hash: u64) -> bool {
        self.hashes.binary_search(&hash).is_ok()
    }

    /// Size of the intersection with `other`.
    pub fn intersection_len(&self, other: &ShingleSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        let (a, b) = (&self.hashes, &other.hashes);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Hashes every distinct run of `k` Unicode scalar values in `text`.
///
/// Non-empty text shorter than `k` yields a single shingle covering all of it;
/// empty text yields an empty set. No case folding or normalisation is applied.
///
/// # Panics
///
/// Panics if `k == 0`.
pub fn shingle(text: &str, k: usize) -> ShingleSet {
    assert!(k >= 1, "shingle size must be at least 1");
    if text.is_empty() {
        return ShingleSet {
            k,
            hashes: Vec::new(),
        };
    }
    let bytes = text.as_bytes();
    let mut bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
    bounds.push(bytes.len());
    let chars = bounds.len() - 1;
    if chars < k {
        return ShingleSet {
            k,
            hashes: vec![xxh3_64_with_seed(bytes, SHINGLE_HASH_SEED)],
        };
    }
    let hashes = (0..=chars - k).map(|start| {
        xxh3_64_with_seed(&bytes[bounds[start]..bounds[start + k]], SHINGLE_HASH_SEED)
    });
    ShingleSet::from_hashes(k, hashes)
}

/// Exact Jaccard similarity `|A ∩ B| / |A ∪ B|`; 0 when both sets are empty.
pub fn exact_jaccard(a: &ShingleSet, b: &ShingleSet) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}
