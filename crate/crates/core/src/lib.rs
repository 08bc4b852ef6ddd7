//! Fuzzy deduplication and quality filtering for LLM pretraining corpora.
//!
//! The crate is organised as the stages of a corpus build:
//!
//! - [`corpus`]: the document model, line-delimited shards, manifests and token counting.
//! - [`fingerprint`]: character n-gram shingling and MinHash signatures.
//! - [`lsh`]: banded locality-sensitive hashing producing candidate duplicate pairs.
//! - [`dedup`]: duplicate graph clustering, keeper selection by source rank, removal logs.
//! - [`quality`]: label-based and educational-score filtering driven by external score files.
//! - [`pipeline`]: stage orchestration, per-source token accounting and mixture weights.
//!
//! Defaults: 25-character shingles, 128 permutations,
//! 8 bands of 16 rows, and the keeper ranking FineWeb-Edu2 > DCLM > Zyda-1 > Dolma-CC.

pub mod corpus;
pub mod dedup;
pub mod error;
pub mod fingerprint;
pub mod lsh;
pub mod pipeline;
pub mod quality;

pub use error::{Error, ErrorCategory, Result};
