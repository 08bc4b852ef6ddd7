//! Character n-gram shingling and MinHash signatures.

mod cache;
mod minhash;
mod shingle;

pub use cache::{read_signature_cache, write_signature_cache, SignatureCacheReader};
pub use minhash::{estimate_jaccard, minhash, MinHashSignature, MinHasher, MERSENNE_61};
pub use shingle::{exact_jaccard, shingle, ShingleSet, SHINGLE_HASH_SEED};

/// Shingle width in characters.
pub const DEFAULT_SHINGLE_SIZE: usize = 25;
/// Signature length.
pub const DEFAULT_NUM_PERMS: usize = 128;
