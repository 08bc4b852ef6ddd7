//! Sorted on-disk runs of `(band key, document index)` entries.
//!
//! Each run is a sequence of 12-byte little-endian records (`u64` key, `u32`
//! document index) sorted ascending. A band's buckets are recovered by a k-way
//! merge of its runs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub(crate) fn write_run(path: &Path, entries: &mut [(u64, u32)]) -> Result<()> {
    entries.sort_unstable();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (key, doc) in entries.iter() {
        out.write_all(&key.to_le_bytes())
            .and_then(|_| out.write_all(&doc.to_le_bytes()))
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

struct RunReader {
    inner: BufReader<File>,
    path: PathBuf,
}

impl RunReader {
    fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            inner: BufReader::new(file),
            path: path.to_path_buf(),
        })
    }

    fn next_entry(&mut self) -> Result<Option<(u64, u32)>> {
        let mut rec = [0u8; 12];
        match self.inner.read_exact(&mut rec) {
            Ok(()) => Ok(Some((
                u64::from_le_bytes(rec[..8].try_into().unwrap()),
                u32::from_le_bytes(rec[8..].try_into().unwrap()),
            ))),
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => Ok(None),
            Err(e) => Err(Error::io(&self.path, e)),
        }
    }
}

/// Streams `(key, members)` buckets in ascending key order from a set of runs.
pub(crate) struct MergedBuckets {
    readers: Vec<RunReader>,
    heap: BinaryHeap<Reverse<((u64, u32), usize)>>,
}

impl MergedBuckets {
    pub(crate) fn open(runs: &[PathBuf]) -> Result<Self> {
        let mut readers = Vec::with_capacity(runs.len());
        let mut heap = BinaryHeap::new();
        for (i, path) in runs.iter().enumerate() {
            let mut r = RunReader::open(path)?;
            if let Some(entry) = r.next_entry()? {
                heap.push(Reverse((entry, i)));
            }
            readers.push(r);
        }
        Ok(Self { readers, heap })
    }

    fn pop(&mut self) -> Result<Option<(u64, u32)>> {
        let Some(Reverse((entry, i))) = self.heap.pop() else {
            return Ok(None);
        };
        if let Some(next) = self.readers[i].next_entry()? {
            self.heap.push(Reverse((next, i)));
        }
        Ok(Some(entry))
    }

    pub(crate) fn next_bucket(&mut self) -> Result<Option<(u64, Vec<u32>)>> {
        let Some((key, first)) = self.pop()? else {
            return Ok(None);
        };
        let mut members = vec![first];
        while let Some(Reverse(((k, _), _))) = self.heap.peek() {
            if *k != key {
                break;
            }
            let (_, doc) = self.pop()?.expect("peeked entry");
            members.push(doc);
        }
        Ok(Some((key, members)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_runs_into_buckets() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        write_run(&a, &mut [(5, 1), (1, 0), (9, 2)]).unwrap();
        write_run(&b, &mut [(5, 3), (2, 4)]).unwrap();
        let mut merged = MergedBuckets::open(&[a, b]).unwrap();
        let mut out = Vec::new();
        while let Some(bucket) = merged.next_bucket().unwrap() {
            out.push(bucket);
        }
        assert_eq!(
            out,
            vec![(1, vec![0]), (2, vec![4]), (5, vec![1, 3]), (9, vec![2])]
        );
    }
}
