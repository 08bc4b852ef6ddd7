use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{encode_record, write_lines, Document, QualityLabel};
use crate::error::{Error, Result};

/// Classifier output for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    pub score: f64,
    pub label: QualityLabel,
}

/// Monotone score → label cut points: `score < medium` is low,
/// `medium ≤ score < high` is medium, otherwise high.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelThresholds {
    pub medium: f64,
    pub high: f64,
}

impl LabelThresholds {
    pub fn label(&self, score: f64) -> QualityLabel {
        if score < self.medium {
            QualityLabel::Low
        } else if score < self.high {
            QualityLabel::Medium
        } else {
            QualityLabel::High
        }
    }
}

/// Metadata a scorer publishes alongside its score files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerManifest {
    pub backend: String,
    #[serde(default)]
    pub version: Option<String>,
    pub thresholds: LabelThresholds,
}

impl ScorerManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Scorer(format!("{}: {e}", path.display())))
    }
}

fn parse_score_line(line: &str, path: &Path, n: usize) -> Result<ScoreRecord> {
    let malformed = |message: String| Error::MalformedRecord {
        path: path.to_path_buf(),
        line: n,
        message,
    };
    let rec: ScoreRecord = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    if !(0.0..=1.0).contains(&rec.score) {
        return Err(malformed(format!("score {} outside [0, 1]", rec.score)));
    }
    if rec.id.is_empty() {
        return Err(malformed("empty id".into()));
    }
    Ok(rec)
}

pub fn read_score_file(path: impl AsRef<Path>) -> Result<Vec<ScoreRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        out.push(parse_score_line(&line, path, n + 1)?);
    }
    Ok(out)
}

pub fn write_score_file(path: impl AsRef<Path>, records: &[ScoreRecord]) -> Result<usize> {
    write_lines(
        records
            .iter()
            .map(|r| serde_json::to_string(r).map_err(|e| Error::Scorer(e.to_string()))),
        path,
    )
}

/// Scores keyed by document id.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    scores: HashMap<String, ScoreRecord>,
}

impl ScoreTable {
    pub fn from_records(records: impl IntoIterator<Item = ScoreRecord>) -> Result<Self> {
        let mut scores = HashMap::new();
        for r in records {
            if let Some(prev) = scores.insert(r.id.clone(), r) {
                return Err(Error::Scorer(format!(
                    "document {:?} scored twice",
                    prev.id
                )));
            }
        }
        Ok(Self { scores })
    }

    pub fn load<P: AsRef<Path>>(paths: &[P]) -> Result<Self> {
        let mut records = Vec::new();
        for p in paths {
            records.extend(read_score_file(p)?);
        }
        Self::from_records(records)
    }

    pub fn get(&self, id: &str) -> Option<&ScoreRecord> {
        self.scores.get(id)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn merge(&mut self, other: ScoreTable) -> Result<()> {
        for (id, r) in other.scores {
            if self.scores.insert(id.clone(), r).is_some() {
                return Err(Error::Scorer(format!("document {id:?} scored twice")));
            }
        }
        Ok(())
    }

    /// Checks every label against `thresholds`.
    pub fn check_labels(&self, thresholds: &LabelThresholds) -> Result<()> {
        let mut bad: Vec<&ScoreRecord> = self
            .scores
            .values()
            .filter(|r| thresholds.label(r.score) != r.label)
            .collect();
        bad.sort_by(|a, b| a.id.cmp(&b.id));
        match bad.first() {
            None => Ok(()),
            Some(r) => Err(Error::Scorer(format!(
                "{} labels disagree with thresholds, e.g. {:?} score {} labelled {}",
                bad.len(),
                r.id,
                r.score,
                r.label
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingScorePolicy {
    #[default]
    Fail,
    /// Leave the document unscored.
    PassThrough,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachStats {
    pub annotated: usize,
    pub unscored: usize,
    /// Score records whose id is not in the corpus.
    pub unmatched_scores: usize,
}

/// Copies score and label onto each document that has a score record.
pub fn attach_scores(
    docs: Vec<Document>,
    scores: &ScoreTable,
    missing: MissingScorePolicy,
) -> Result<(Vec<Document>, AttachStats)> {
    let mut stats = AttachStats::default();
    let mut out = Vec::with_capacity(docs.len());
    for mut doc in docs {
        match scores.get(&doc.id) {
            Some(r) => {
                doc.quality_score = Some(r.score);
                doc.quality_label = Some(r.label);
                stats.annotated += 1;
            }
            None if missing == MissingScorePolicy::Fail => {
                return Err(Error::MissingScore { id: doc.id })
            }
            None => stats.unscored += 1,
        }
        out.push(doc);
    }
    stats.unmatched_scores = scores.len() - stats.annotated;
    if stats.unmatched_scores > 0 {
        log::warn!("{} score records match no document", stats.unmatched_scores);
    }
    Ok((out, stats))
}

/// Runs a scorer process over documents.
///
/// Documents are written to the child's stdin as shard lines; the child must
/// answer each with one score-record line on stdout, in order. A response line
/// of the form `{"error": ..., "line": n}` aborts scoring. Failed attempts are
/// retried with linear backoff before giving up.
#[derive(Debug, Clone)]
pub struct CommandScorer {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub retries: usize,
    pub backoff: Duration,
}

#[derive(Deserialize)]
struct ErrorResponse {
    error: String,
    #[serde(default)]
    line: Option<usize>,
}

impl CommandScorer {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
            retries: 2,
            backoff: Duration::from_millis(500),
        }
    }

    pub fn score(&self, docs: &[Document]) -> Result<ScoreTable> {
        let mut last = None;
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * attempt as u32);
                log::warn!("retrying scorer (attempt {})", attempt + 1);
            }
            match self.score_once(docs) {
                Ok(table) => return Ok(table),
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn score_once(&self, docs: &[Document]) -> Result<ScoreTable> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Scorer(format!("cannot start {}: {e}", self.program.display())))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let lines: Vec<String> = docs.iter().map(encode_record).collect::<Result<_>>()?;
        let writer = std::thread::spawn(move || -> std::io::Result<()> {
            let mut w = BufWriter::new(stdin);
            for line in lines {
                w.write_all(line.as_bytes())?;
                w.write_all(b"\n")?;
            }
            w.flush()
        });
        let stdout = child.stdout.take().expect("piped stdout");
        let origin = Path::new("<scorer>");
        let mut records = Vec::with_capacity(docs.len());
        let mut failure = None;
        for (n, line) in BufReader::new(stdout).lines().enumerate() {
            let line = line.map_err(|e| Error::Scorer(e.to_string()))?;
            if let Ok(err) = serde_json::from_str::<ErrorResponse>(&line) {
                failure = Some(Error::Scorer(format!(
                    "scorer rejected request line {}: {}",
                    err.line.map_or("?".to_string(), |l| l.to_string()),
                    err.error
                )));
                break;
            }
            match parse_score_line(&line, origin, n + 1) {
                Ok(r) => records.push(r),
                Err(e) => {
                    failure = Some(Error::Scorer(e.to_string()));
                    break;
                }
            }
        }
        let status = child.wait().map_err(|e| Error::Scorer(e.to_string()))?;
        let wrote = writer.join().expect("writer thread");
        if let Some(e) = failure {
            return Err(e);
        }
        if !status.success() {
            return Err(Error::Scorer(format!(
                "{} exited with {status}",
                self.program.display()
            )));
        }
        wrote.map_err(|e| Error::Scorer(format!("writing requests: {e}")))?;
        if records.len() != docs.len() {
            return Err(Error::Scorer(format!(
                "{} responses for {} requests",
                records.len(),
                docs.len()
            )));
        }
        for (doc, rec) in docs.iter().zip(&records) {
            if doc.id != rec.id {
                return Err(Error::Scorer(format!(
                    "response for {:?} arrived where {:?} was expected",
                    rec.id, doc.id
                )));
            }
        }
        ScoreTable::from_records(records)
    }
}
