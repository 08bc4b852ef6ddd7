//! Stage orchestration, token accounting and mixture weights.

mod accounting;
mod config;
mod mixture;
mod run;

pub use accounting::{
    accounting_report, AccountingReport, ReportRow, StageAccounting, StageCounts, StageRecord,
};
pub use config::{
    DedupConfig, EduFilterConfig, MinHashConfig, PipelineConfig, QualityFilterConfig,
    ScorerCommandConfig, StageName, SEED_ENV_VAR,
};
pub use mixture::{compute_mixture, default_mixture, equalize_targets, MixtureEntry, MixtureSpec};
pub use run::{run_pipeline, write_corpus, FilterRemoval, PipelineOutput};
