use serde::{Deserialize, Serialize};

/// How token counts are obtained at ingest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tokenizer {
    /// Count maximal runs of non-whitespace (Unicode `White_Space`) characters.
    #[default]
    Whitespace,
    /// Counts are precomputed upstream (e.g. with the GPT-NeoX tokenizer) and
    /// every record must carry `token_count`.
    ExternalCounts,
}

impl Tokenizer {
    /// Count for a record without a precomputed value, `None` when the mode requires one.
    pub fn count(self, text: &str) -> Option<u64> {
        match self {
            Tokenizer::Whitespace => Some(count_tokens(text)),
            Tokenizer::ExternalCounts => None,
        }
    }
}

/// Whitespace token count.
pub fn count_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}
