use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ShingleSet, DEFAULT_NUM_PERMS};
use crate::error::{Error, Result};

/// The Mersenne prime 2^61 − 1, modulus of the permutation family.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[inline]
fn mod_mersenne(x: u128) -> u64 {
    // x < 2^123, two folds bring it below 2 * MERSENNE_61.
    let folded = (x as u64 & MERSENNE_61) as u128 + (x >> 61);
    let mut r = (folded as u64 & MERSENNE_61) + (folded >> 61) as u64;
    if r >= MERSENNE_61 {
        r -= MERSENNE_61;
    }
    r
}

#[inline]
fn reduce_hash(x: u64) -> u64 {
    let r = (x & MERSENNE_61) + (x >> 61);
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

/// A fixed family of `num_perms` hash permutations `x ↦ (a·x + b) mod (2^61 − 1)`.
///
/// Coefficients for permutation `i` come from a ChaCha8 stream keyed by `seed`
/// with stream number `i`, with `a ∈ [1, p)` and `b ∈ [0, p)`.
#[derive(Debug, Clone)]
pub struct MinHasher {
    seed: u64,
    a: Vec<u64>,
    b: Vec<u64>,
}

impl MinHasher {
    pub fn new(num_perms: usize, seed: u64) -> Self {
        let (a, b) = (0..num_perms)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                (rng.gen_range(1..MERSENNE_61), rng.gen_range(0..MERSENNE_61))
            })
            .unzip();
        Self { seed, a, b }
    }

    pub fn with_seed(seed: u64) -> Self {
        Self::new(DEFAULT_NUM_PERMS, seed)
    }

    pub fn num_perms(&self) -> usize {
        self.a.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Signature of a non-empty shingle set.
    pub fn signature(&self, shingles: &ShingleSet) -> Result<MinHashSignature> {
        if shingles.is_empty() {
            return Err(Error::Fingerprint("empty shingle set".into()));
        }
        let mut values = vec![u64::MAX; self.a.len()];
        for &h in shingles.hashes() {
            let x = reduce_hash(h) as u128;
            for ((v, &a), &b) in values.iter_mut().zip(&self.a).zip(&self.b) {
                let p = mod_mersenne(a as u128 * x + b as u128);
                if p < *v {
                    *v = p;
                }
            }
        }
        Ok(MinHashSignature {
            values,
            seed: self.seed,
        })
    }
}

/// Convenience wrapper building a one-off [`MinHasher`].
pub fn minhash(shingles: &ShingleSet, num_perms: usize, seed: u64) -> Result<MinHashSignature> {
    MinHasher::new(num_perms, seed).signature(shingles)
}

/// Per-permutation minima of a shingle set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MinHashSignature {
    pub values: Vec<u64>,
    pub seed: u64,
}

impl MinHashSignature {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check_compatible(&self, other: &MinHashSignature) -> Result<()> {
        if self.seed != other.seed {
            return Err(Error::SignatureMismatch(format!(
                "seeds {} and {} differ",
                self.seed, other.seed
            )));
        }
        if self.len() != other.len() {
            return Err(Error::SignatureMismatch(format!(
                "lengths {} and {} differ",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// Fraction of positions where the two signatures agree.
pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64> {
    a.check_compatible(b)?;
    if a.is_empty() {
        return Err(Error::SignatureMismatch("empty signatures".into()));
    }
    let agree = a
        .values
        .iter()
        .zip(&b.values)
        .filter(|(x, y)| x == y)
        .count();
    Ok(agree as f64 / a.len() as f64)
}
