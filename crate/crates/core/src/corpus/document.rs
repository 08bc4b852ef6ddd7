use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A named input dataset and its keep-priority (1 is kept first).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceId {
    pub name: String,
    pub rank: u32,
}

impl SourceId {
    pub fn new(name: impl Into<String>, rank: u32) -> Self {
        Self {
            name: name.into(),
            rank,
        }
    }
}

/// Coarse quality label emitted by the document classifier. Ordered `Low < Medium < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityLabel {
    Low,
    Medium,
    High,
}

impl QualityLabel {
    pub const ALL: [QualityLabel; 3] =
        [QualityLabel::Low, QualityLabel::Medium, QualityLabel::High];

    pub fn as_str(self) -> &'static str {
        match self {
            QualityLabel::Low => "low",
            QualityLabel::Medium => "medium",
            QualityLabel::High => "high",
        }
    }
}

impl fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QualityLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low" => Ok(QualityLabel::Low),
            "medium" => Ok(QualityLabel::Medium),
            "high" => Ok(QualityLabel::High),
            other => Err(format!("unknown quality label {other:?}")),
        }
    }
}

/// One corpus record.
///
/// `source` holds the [`SourceId::name`] of the dataset the document came from;
/// ranks are resolved through the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source: String,
    pub token_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edu_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_label: Option<QualityLabel>,
}

impl Document {
    /// Builds an unscored document, counting tokens on whitespace.
    pub fn new(id: impl Into<String>, source: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            id: id.into(),
            token_count: super::count_tokens(&text),
            text,
            source: source.into(),
            edu_score: None,
            quality_score: None,
            quality_label: None,
        }
    }
}
