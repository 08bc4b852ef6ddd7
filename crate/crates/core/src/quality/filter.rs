use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, QualityLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    /// Keep only `high`.
    KeepHigh,
    /// Drop only `low`.
    RemoveLow,
    /// Keep documents whose rounded edu score reaches the minimum.
    EduThreshold,
    /// Keep the best-scoring fraction of documents by `quality_score`.
    TopFraction,
    Passthrough,
}

/// How a filter treats a document lacking the field it filters on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingFieldPolicy {
    #[default]
    Fail,
    Keep,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterPolicy {
    pub kind: FilterKind,
    #[serde(default = "default_edu_min")]
    pub edu_min_integer_score: i64,
    /// Fraction retained by [`FilterKind::TopFraction`].
    #[serde(default = "default_top_fraction")]
    pub top_fraction: f64,
    /// Sources the filter acts on; documents of other sources pass untouched.
    pub applies_to: BTreeSet<String>,
    #[serde(default)]
    pub missing: MissingFieldPolicy,
}

fn default_edu_min() -> i64 {
    3
}

fn default_top_fraction() -> f64 {
    0.15
}

impl FilterPolicy {
    pub fn new<S: Into<String>>(kind: FilterKind, applies_to: impl IntoIterator<Item = S>) -> Self {
        Self {
            kind,
            edu_min_integer_score: default_edu_min(),
            top_fraction: default_top_fraction(),
            applies_to: applies_to.into_iter().map(Into::into).collect(),
            missing: MissingFieldPolicy::default(),
        }
    }

    /// Default model-based filter: keep `high` in Zyda-1 and Dolma-CC.
    pub fn default_quality() -> Self {
        Self::new(FilterKind::KeepHigh, ["zyda-1", "dolma-cc"])
    }

    /// FineWeb-Edu2 → FineWeb-Edu: edu score of at least 3.
    pub fn default_edu() -> Self {
        Self::new(FilterKind::EduThreshold, ["fineweb-edu2"])
    }
}

/// `⌊x + ½⌋`, so 2.5 rounds to 3.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualityFilterResult {
    pub kept: Vec<Document>,
    pub removed: BTreeMap<QualityLabel, usize>,
    /// Unlabelled documents dropped under [`MissingFieldPolicy::Drop`].
    pub removed_unlabeled: usize,
}

impl QualityFilterResult {
    pub fn removed_total(&self) -> usize {
        self.removed.values().sum::<usize>() + self.removed_unlabeled
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EduFilterResult {
    pub kept: Vec<Document>,
    pub removed: usize,
    pub removed_unscored: usize,
}

enum Verdict {
    Keep,
    Remove,
    Missing,
}

fn missing_field(
    doc: &Document,
    field: &'static str,
    policy: MissingFieldPolicy,
) -> Result<Verdict> {
    match policy {
        MissingFieldPolicy::Fail => Err(Error::MissingField {
            id: doc.id.clone(),
            field,
        }),
        MissingFieldPolicy::Keep => Ok(Verdict::Keep),
        MissingFieldPolicy::Drop => Ok(Verdict::Missing),
    }
}

/// Label-based filtering. `kind` must be `KeepHigh`, `RemoveLow` or `Passthrough`.
pub fn filter_quality<I>(
    docs: I,
    kind: FilterKind,
    missing: MissingFieldPolicy,
) -> Result<QualityFilterResult>
where
    I: IntoIterator<Item = Document>,
{
    let keep: fn(QualityLabel) -> bool = match kind {
        FilterKind::KeepHigh => |l| l == QualityLabel::High,
        FilterKind::RemoveLow => |l| l != QualityLabel::Low,
        FilterKind::Passthrough => |_| true,
        other => return Err(Error::Config(format!("{other:?} is not a label policy"))),
    };
    let mut out = QualityFilterResult::default();
    for doc in docs {
        let verdict = match doc.quality_label {
            Some(l) if keep(l) => Verdict::Keep,
            Some(l) => {
                *out.removed.entry(l).or_default() += 1;
                Verdict::Remove
            }
            None if kind == FilterKind::Passthrough => Verdict::Keep,
            None => missing_field(&doc, "quality_label", missing)?,
        };
        match verdict {
            Verdict::Keep => out.kept.push(doc),
            Verdict::Remove => {}
            Verdict::Missing => out.removed_unlabeled += 1,
        }
    }
    Ok(out)
}

/// Keeps documents with `round_half_up(edu_score) >= min_integer_score`.
pub fn filter_edu<I>(
    docs: I,
    min_integer_score: i64,
    missing: MissingFieldPolicy,
) -> Result<EduFilterResult>
where
    I: IntoIterator<Item = Document>,
{
    let mut out = EduFilterResult::default();
    for doc in docs {
        let verdict = match doc.edu_score {
            Some(s) if round_half_up(s) >= min_integer_score => Verdict::Keep,
            Some(_) => Verdict::Remove,
            None => missing_field(&doc, "edu_score", missing)?,
        };
        match verdict {
            Verdict::Keep => out.kept.push(doc),
            Verdict::Remove => out.removed += 1,
            Verdict::Missing => out.removed_unscored += 1,
        }
    }
    Ok(out)
}

/// Keeps the `⌈fraction · n⌉` documents with the highest `quality_score`
/// (ties broken by smaller id), preserving input order.
pub fn filter_top_fraction(
    docs: Vec<Document>,
    fraction: f64,
    missing: MissingFieldPolicy,
) -> Result<QualityFilterResult> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "top fraction {fraction} outside [0, 1]"
        )));
    }
    let mut scored: Vec<(f64, &str)> = Vec::new();
    for doc in &docs {
        match doc.quality_score {
            Some(s) => scored.push((s, &doc.id)),
            None => {
                missing_field(doc, "quality_score", missing)?;
            }
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let take = (fraction * scored.len() as f64).ceil() as usize;
    let winners: HashSet<String> = scored
        .iter()
        .take(take)
        .map(|(_, id)| id.to_string())
        .collect();
    let mut out = QualityFilterResult::default();
    for doc in docs {
        if doc.quality_score.is_none() {
            match missing {
                MissingFieldPolicy::Keep => out.kept.push(doc),
                _ => out.removed_unlabeled += 1,
            }
        } else if winners.contains(&doc.id) {
            out.kept.push(doc);
        } else {
            let label = doc.quality_label.unwrap_or(QualityLabel::Low);
            *out.removed.entry(label).or_default() += 1;
        }
    }
    Ok(out)
}

/// Per-policy removal counts, for reports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    /// Documents outside `applies_to`, passed through.
    pub out_of_scope: usize,
    pub removed_by_label: BTreeMap<QualityLabel, usize>,
    pub removed_below_edu: usize,
    pub removed_missing: usize,
}

impl FilterReport {
    pub fn removed_total(&self) -> usize {
        self.removed_by_label.values().sum::<usize>()
            + self.removed_below_edu
            + self.removed_missing
    }
}

/// Applies `policy` to the documents of the sources it covers, preserving the
/// relative order of all documents.
pub fn apply_policy(
    docs: Vec<Document>,
    policy: &FilterPolicy,
) -> Result<(Vec<Document>, FilterReport)> {
    let mut report = FilterReport {
        input: docs.len(),
        ..Default::default()
    };
    if policy.kind == FilterKind::Passthrough {
        report.kept = docs.len();
        report.out_of_scope = docs
            .iter()
            .filter(|d| !policy.applies_to.contains(&d.source))
            .count();
        return Ok((docs, report));
    }
    // Tag in-scope documents with their position so the output interleaves correctly.
    let mut in_scope = Vec::new();
    let mut positions = Vec::new();
    let mut slots: Vec<Option<Document>> = Vec::with_capacity(docs.len());
    for (i, doc) in docs.into_iter().enumerate() {
        if policy.applies_to.contains(&doc.source) {
            positions.push(i);
            in_scope.push(doc);
            slots.push(None);
        } else {
            report.out_of_scope += 1;
            slots.push(Some(doc));
        }
    }
    let ids: Vec<String> = in_scope.iter().map(|d| d.id.clone()).collect();
    let kept = match policy.kind {
        FilterKind::KeepHigh | FilterKind::RemoveLow => {
            let r = filter_quality(in_scope, policy.kind, policy.missing)?;
            report.removed_by_label = r.removed;
            report.removed_missing = r.removed_unlabeled;
            r.kept
        }
        FilterKind::TopFraction => {
            let r = filter_top_fraction(in_scope, policy.top_fraction, policy.missing)?;
            report.removed_by_label = r.removed;
            report.removed_missing = r.removed_unlabeled;
            r.kept
        }
        FilterKind::EduThreshold => {
            let r = filter_edu(in_scope, policy.edu_min_integer_score, policy.missing)?;
            report.removed_below_edu = r.removed;
            report.removed_missing = r.removed_unscored;
            r.kept
        }
        FilterKind::Passthrough => unreachable!(),
    };
    // Survivors are a subsequence of `in_scope`; walk both to recover positions.
    let mut survivors = kept.into_iter().peekable();
    for (pos, id) in positions.into_iter().zip(ids) {
        if survivors.peek().is_some_and(|d| d.id == id) {
            slots[pos] = survivors.next();
        }
    }
    let out: Vec<Document> = slots.into_iter().flatten().collect();
    report.kept = out.len();
    Ok((out, report))
}
