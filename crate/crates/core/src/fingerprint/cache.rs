//! Binary signature cache.
//!
//! A cache file is a plain concatenation of records, all integers little-endian:
//!
//! | field     | width            |
//! |-----------|------------------|
//! | id length | u32              |
//! | id        | id length bytes, UTF-8 |
//! | seed      | u64              |
//! | count     | u32 (128 by default) |
//! | values    | count × u64      |
//!
//! There is no header or trailer; an empty file holds zero records.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};

use super::MinHashSignature;
use crate::error::{Error, Result};

/// Writes `(id, signature)` records to `path`. Returns the number written.
pub fn write_signature_cache<'a, I>(path: impl AsRef<Path>, records: I) -> Result<usize>
where
    I: IntoIterator<Item = (&'a str, &'a MinHashSignature)>,
{
    let path = path.as_ref();
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BufWriter::new(tmp);
    let mut n = 0;
    for (id, sig) in records {
        let io = |e| Error::io(path, e);
        let id_len = u32::try_from(id.len())
            .map_err(|_| Error::Fingerprint(format!("id too long: {} bytes", id.len())))?;
        out.write_all(&id_len.to_le_bytes()).map_err(io)?;
        out.write_all(id.as_bytes()).map_err(io)?;
        out.write_all(&sig.seed.to_le_bytes()).map_err(io)?;
        out.write_all(&(sig.values.len() as u32).to_le_bytes())
            .map_err(io)?;
        for v in &sig.values {
            out.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        n += 1;
    }
    let tmp = out
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(n)
}

/// Streaming reader over a cache file.
pub struct SignatureCacheReader<R> {
    inner: R,
    path: PathBuf,
    done: bool,
}

impl SignatureCacheReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(BufReader::new(file), path))
    }
}

impl<R: Read> SignatureCacheReader<R> {
    pub fn new(inner: R, path: impl Into<PathBuf>) -> Self {
        Self {
            inner,
            path: path.into(),
            done: false,
        }
    }

    fn read_exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == ErrorKind::UnexpectedEof {
                Error::Fingerprint(format!(
                    "{}: truncated signature record",
                    self.path.display()
                ))
            } else {
                Error::io(&self.path, e)
            }
        })
    }

    fn read_record(&mut self) -> Result<Option<(String, MinHashSignature)>> {
        let mut len = [0u8; 4];
        // A clean EOF is only allowed on a record boundary.
        match self.inner.read(&mut len[..1]) {
            Ok(0) => return Ok(None),
            Ok(_) => {}
            Err(e) => return Err(Error::io(&self.path, e)),
        }
        self.read_exact(&mut len[1..])?;
        let mut id = vec![0u8; u32::from_le_bytes(len) as usize];
        self.read_exact(&mut id)?;
        let id = String::from_utf8(id)
            .map_err(|_| Error::Fingerprint(format!("{}: id is not UTF-8", self.path.display())))?;
        let mut word = [0u8; 8];
        self.read_exact(&mut word)?;
        let seed = u64::from_le_bytes(word);
        self.read_exact(&mut len)?;
        let count = u32::from_le_bytes(len) as usize;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            self.read_exact(&mut word)?;
            values.push(u64::from_le_bytes(word));
        }
        Ok(Some((id, MinHashSignature { values, seed })))
    }
}

impl<R: Read> Iterator for SignatureCacheReader<R> {
    type Item = Result<(String, MinHashSignature)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let rec = self.read_record().transpose();
        if !matches!(rec, Some(Ok(_))) {
            self.done = true;
        }
        rec
    }
}

pub fn read_signature_cache(path: impl AsRef<Path>) -> Result<Vec<(String, MinHashSignature)>> {
    SignatureCacheReader::open(path)?.collect()
}
