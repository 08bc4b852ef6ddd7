//! Line-delimited shard files.
//!
//! One JSON object per line with fields `id`, `text`, `source` and the optional
//! `token_count`, `edu_score`, `quality_score`, `quality_label`. Control characters
//! (including newlines inside `text`) use standard JSON string escapes, so a record
//! never spans lines. Every record, including the last, is terminated by `\n`.

use std::borrow::Borrow;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Document, QualityLabel, SourceId, Tokenizer};
use crate::error::{Error, Result};

/// What to do with a line that does not parse as a record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MalformedPolicy {
    /// Drop the line and count it.
    #[default]
    Skip,
    /// Stop with a record-level error.
    FailFast,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    pub tokenizer: Tokenizer,
    pub malformed: MalformedPolicy,
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    text: String,
    source: String,
    token_count: Option<u64>,
    edu_score: Option<f64>,
    quality_score: Option<f64>,
    quality_label: Option<QualityLabel>,
}

/// Streaming reader over one shard. Yields documents in file order.
///
/// Duplicate ids within the shard end the stream with [`Error::DuplicateId`];
/// malformed lines are skipped or fatal depending on [`MalformedPolicy`].
pub struct ShardReader<R> {
    reader: R,
    path: PathBuf,
    shard_name: String,
    source: SourceId,
    options: IngestOptions,
    line: usize,
    seen: HashSet<String>,
    skipped: usize,
    buf: Vec<u8>,
    done: bool,
}

/// Opens `path` as a shard of `source`.
pub fn ingest_shard(
    path: impl AsRef<Path>,
    source: &SourceId,
    options: IngestOptions,
) -> Result<ShardReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(ShardReader::new(
        BufReader::new(file),
        path,
        source,
        options,
    ))
}

impl<R: BufRead> ShardReader<R> {
    pub fn new(
        reader: R,
        path: impl Into<PathBuf>,
        source: &SourceId,
        options: IngestOptions,
    ) -> Self {
        let path = path.into();
        let shard_name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self {
            reader,
            path,
            shard_name,
            source: source.clone(),
            options,
            line: 0,
            seen: HashSet::new(),
            skipped: 0,
            buf: Vec::new(),
            done: false,
        }
    }

    /// Number of malformed lines dropped so far (skip mode only).
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn malformed(&self, message: impl Into<String>) -> Error {
        Error::MalformedRecord {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    fn parse(&self, bytes: &[u8]) -> Result<Document> {
        let line = std::str::from_utf8(bytes)
            .map_err(|e| self.malformed(format!("invalid UTF-8: {e}")))?;
        let raw: RawRecord =
            serde_json::from_str(line).map_err(|e| self.malformed(e.to_string()))?;
        if raw.source != self.source.name {
            return Err(self.malformed(format!(
                "source {:?} does not match shard source {:?}",
                raw.source, self.source.name
            )));
        }
        let id = match raw.id {
            Some(id) if id.is_empty() => return Err(self.malformed("empty id")),
            Some(id) => id,
            None => format!("{}/{}/{}", self.source.name, self.shard_name, self.line),
        };
        if let Some(q) = raw.quality_score {
            if !(0.0..=1.0).contains(&q) {
                return Err(self.malformed(format!("quality_score {q} outside [0, 1]")));
            }
        }
        let token_count =
            match raw.token_count {
                Some(n) => n,
                None => self.options.tokenizer.count(&raw.text).ok_or_else(|| {
                    self.malformed("token_count required in external-counts mode")
                })?,
            };
        Ok(Document {
            id,
            text: raw.text,
            source: raw.source,
            token_count,
            edu_score: raw.edu_score,
            quality_score: raw.quality_score,
            quality_label: raw.quality_label,
        })
    }
}

impl<R: BufRead> Iterator for ShardReader<R> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::io(&self.path, e)));
                }
            }
            self.line += 1;
            let mut bytes = self.buf.as_slice();
            if let Some(rest) = bytes.strip_suffix(b"\n") {
                bytes = rest.strip_suffix(b"\r").unwrap_or(rest);
            }
            match self.parse(bytes) {
                Ok(doc) => {
                    if !self.seen.insert(doc.id.clone()) {
                        self.done = true;
                        return Some(Err(Error::DuplicateId {
                            id: doc.id,
                            path: self.path.clone(),
                            line: self.line,
                        }));
                    }
                    return Some(Ok(doc));
                }
                Err(e) => match self.options.malformed {
                    MalformedPolicy::Skip => {
                        log::debug!("skipping {e}");
                        self.skipped += 1;
                    }
                    MalformedPolicy::FailFast => {
                        self.done = true;
                        return Some(Err(e));
                    }
                },
            }
        }
        None
    }
}

/// Serialises one document as a shard line (without the trailing newline).
pub fn encode_record(doc: &Document) -> Result<String> {
    for (field, value) in [
        ("edu_score", doc.edu_score),
        ("quality_score", doc.quality_score),
    ] {
        if value.is_some_and(|v| !v.is_finite()) {
            return Err(Error::MalformedRecord {
                path: PathBuf::new(),
                line: 0,
                message: format!("document {:?}: {field} is not finite", doc.id),
            });
        }
    }
    serde_json::to_string(doc).map_err(|e| Error::MalformedRecord {
        path: PathBuf::new(),
        line: 0,
        message: e.to_string(),
    })
}

/// Writes `docs` to `path`, replacing it atomically. Returns the number written.
///
/// The shard is staged in a temporary file beside `path`; on any failure the
/// temporary file is removed and `path` is left untouched.
pub fn write_shard<I, D>(docs: I, path: impl AsRef<Path>) -> Result<usize>
where
    I: IntoIterator<Item = D>,
    D: Borrow<Document>,
{
    write_lines(docs.into_iter().map(|d| encode_record(d.borrow())), path)
}

/// Atomically writes pre-encoded lines, each followed by `\n`.
pub(crate) fn write_lines<I>(lines: I, path: impl AsRef<Path>) -> Result<usize>
where
    I: IntoIterator<Item = Result<String>>,
{
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BufWriter::new(tmp);
    let mut count = 0;
    for line in lines {
        let line = line?;
        out.write_all(line.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
        count += 1;
    }
    let tmp = out
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(count)
}
