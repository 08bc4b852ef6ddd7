use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::AddAssign;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Document and token counts entering and leaving one stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    #[serde(default)]
    pub documents_in: u64,
    #[serde(default)]
    pub documents_out: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

impl StageCounts {
    pub fn documents_removed(&self) -> u64 {
        self.documents_in - self.documents_out
    }

    pub fn tokens_removed(&self) -> u64 {
        self.tokens_in - self.tokens_out
    }
}

impl AddAssign for StageCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.documents_in += rhs.documents_in;
        self.documents_out += rhs.documents_out;
        self.tokens_in += rhs.tokens_in;
        self.tokens_out += rhs.tokens_out;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub source: String,
    #[serde(flatten)]
    pub counts: StageCounts,
}

/// Per-(stage, source) bookkeeping in execution order.
///
/// Partial counts recorded for the same stage and source are summed, so
/// per-shard tallies can be merged in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageAccounting {
    pub records: Vec<StageRecord>,
}

impl StageAccounting {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, stage: &str, source: &str, counts: StageCounts) {
        match self
            .records
            .iter_mut()
            .find(|r| r.stage == stage && r.source == source)
        {
            Some(r) => r.counts += counts,
            None => self.records.push(StageRecord {
                stage: stage.to_string(),
                source: source.to_string(),
                counts,
            }),
        }
    }

    pub fn merge(&mut self, other: &StageAccounting) {
        for r in &other.records {
            self.record(&r.stage, &r.source, r.counts);
        }
    }

    /// Stage names in first-recorded order.
    pub fn stages(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.stage.as_str()) {
                out.push(&r.stage);
            }
        }
        out
    }

    /// Source names in first-recorded order.
    pub fn sources(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.source.as_str()) {
                out.push(&r.source);
            }
        }
        out
    }

    pub fn get(&self, stage: &str, source: &str) -> Option<&StageCounts> {
        self.records
            .iter()
            .find(|r| r.stage == stage && r.source == source)
            .map(|r| &r.counts)
    }

    /// Sum over sources for one stage.
    pub fn stage_total(&self, stage: &str) -> StageCounts {
        let mut total = StageCounts::default();
        for r in self.records.iter().filter(|r| r.stage == stage) {
            total += r.counts;
        }
        total
    }

    /// Fraction of the stage's input tokens it removed.
    pub fn token_removal_fraction(&self, stage: &str) -> f64 {
        let t = self.stage_total(stage);
        if t.tokens_in == 0 {
            0.0
        } else {
            t.tokens_removed() as f64 / t.tokens_in as f64
        }
    }

    /// Checks that no stage adds documents or tokens and that each stage's
    /// inputs equal the previous stage's outputs, per source.
    pub fn check(&self) -> Result<()> {
        let stages = self.stages();
        for source in self.sources() {
            let mut prev: Option<(&str, StageCounts)> = None;
            for &stage in &stages {
                let Some(c) = self.get(stage, source) else {
                    return Err(Error::Config(format!(
                        "accounting has no {stage} row for {source}"
                    )));
                };
                if c.documents_out > c.documents_in || c.tokens_out > c.tokens_in {
                    return Err(Error::Config(format!("{stage} grows {source}")));
                }
                if let Some((p, pc)) = prev {
                    if pc.documents_out != c.documents_in || pc.tokens_out != c.tokens_in {
                        return Err(Error::Config(format!(
                            "{source}: {stage} inputs differ from {p} outputs"
                        )));
                    }
                }
                prev = Some((stage, *c));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("accounting serialises") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub source: String,
    /// Tokens at the start and after each stage.
    pub tokens: Vec<u64>,
    pub documents: Vec<u64>,
}

/// The stage-by-source token table: one row per source, a column for the
/// starting counts and one per stage, and a totals row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountingReport {
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub totals: ReportRow,
    /// Token fraction removed by each stage, keyed by stage.
    pub removal_fractions: BTreeMap<String, f64>,
}

pub fn accounting_report(acc: &StageAccounting) -> Result<AccountingReport> {
    acc.check()?;
    let stages = acc.stages();
    let mut columns = vec!["start".to_string()];
    columns.extend(stages.iter().map(|s| s.to_string()));
    let rows: Vec<ReportRow> = acc
        .sources()
        .into_iter()
        .map(|source| {
            let counts: Vec<&StageCounts> = stages
                .iter()
                .map(|st| acc.get(st, source).expect("checked"))
                .collect();
            let mut row = ReportRow {
                source: source.to_string(),
                tokens: Vec::with_capacity(columns.len()),
                documents: Vec::with_capacity(columns.len()),
            };
            if let Some(first) = counts.first() {
                row.tokens.push(first.tokens_in);
                row.documents.push(first.documents_in);
            }
            for c in counts {
                row.tokens.push(c.tokens_out);
                row.documents.push(c.documents_out);
            }
            row
        })
        .collect();
    let width = if stages.is_empty() { 0 } else { columns.len() };
    let mut totals = ReportRow {
        source: "total".into(),
        tokens: vec![0; width],
        documents: vec![0; width],
    };
    for row in &rows {
        for i in 0..width {
            totals.tokens[i] += row.tokens[i];
            totals.documents[i] += row.documents[i];
        }
    }
    let removal_fractions = stages
        .iter()
        .map(|s| (s.to_string(), acc.token_removal_fraction(s)))
        .collect();
    Ok(AccountingReport {
        columns,
        rows,
        totals,
        removal_fractions,
    })
}

impl AccountingReport {
    /// Aligned text table in billions of tokens, three decimals, with a
    /// trailing row of per-stage token removal percentages.
    pub fn render_text(&self) -> String {
        let billions = |t: u64| format!("{:.3}", t as f64 / 1e9);
        let mut cells: Vec<Vec<String>> = vec![std::iter::once("source".to_string())
            .chain(self.columns.iter().cloned())
            .collect()];
        for row in self.rows.iter().chain(std::iter::once(&self.totals)) {
            cells.push(
                std::iter::once(row.source.clone())
                    .chain(row.tokens.iter().map(|&t| billions(t)))
                    .collect(),
            );
        }
        let mut removed = vec!["removed".to_string(), String::new()];
        removed.extend(
            self.columns
                .iter()
                .skip(1)
                .map(|s| format!("{:.2}%", 100.0 * self.removal_fractions[s])),
        );
        cells.push(removed);

        let ncols = cells[0].len();
        let widths: Vec<usize> = (0..ncols)
            .map(|i| {
                cells
                    .iter()
                    .filter_map(|r| r.get(i))
                    .map(|c| c.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::from("tokens (billions)\n");
        for row in &cells {
            let mut line = String::new();
            for (i, cell) in row.iter().enumerate() {
                if i == 0 {
                    let _ = write!(line, "{cell:<w$}", w = widths[0]);
                } else {
                    let _ = write!(line, "  {cell:>w$}", w = widths[i]);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }
}
