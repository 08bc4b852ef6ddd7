//! Banded locality-sensitive hashing over MinHash signatures.
//!
//! A signature of `bands × rows` values is cut into `bands` contiguous slices;
//! two documents become a candidate pair when any slice matches exactly. For
//! signatures agreeing at each position with probability `s` the pair collides
//! with probability `1 − (1 − s^rows)^bands` (see [`collision_probability`]).

mod banding;
mod index;
mod pairs;
mod spill;

pub use banding::{band_keys, collision_probability, BandKey, BandingScheme};
pub use index::{LshIndex, LshIndexBuilder, SpillOptions};
pub use pairs::{
    read_candidate_pairs, verify_pair, write_candidate_pairs, CandidatePair, Candidates,
    EmissionOptions, OversizedBucket, DEFAULT_BUCKET_CAP,
};
