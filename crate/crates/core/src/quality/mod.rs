//! Model-based quality filtering and educational-score filtering.
//!
//! The classifier runs outside this crate. Scores arrive as score files
//! (`{"id", "score", "label"}` JSON lines) or from a scorer process speaking the
//! same line protocol; [`attach_scores`] copies them onto documents and the
//! filters act on the attached labels and scores.

mod filter;
mod scores;

pub use filter::{
    apply_policy, filter_edu, filter_quality, filter_top_fraction, round_half_up, EduFilterResult,
    FilterKind, FilterPolicy, FilterReport, MissingFieldPolicy, QualityFilterResult,
};
pub use scores::{
    attach_scores, read_score_file, write_score_file, AttachStats, CommandScorer, LabelThresholds,
    MissingScorePolicy, ScoreRecord, ScoreTable, ScorerManifest,
};
