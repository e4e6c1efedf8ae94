//! On-disk formats.
//!
//! * `EMB1` embeddings: magic, `u32` rows, `u32` dim, then `rows * dim`
//!   little-endian `f32` values, row-major.
//! * `SPW1` similarity: magic, `u32` size, `u32` nnz, `u64` row offsets
//!   (`size + 1`), `u32` column indices, `f32` values, all little-endian.
//! * Label and quality CSVs with headers `index,label` / `index,quality`,
//!   one row per item, indices contiguous from zero.
//! * Selection JSON as produced by [`SelectionResult::to_json`].
//!
//! Writers go through a temporary file in the destination directory and
//! rename on success, so a failed run never leaves a partial file behind.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::selection::SelectionResult;
use crate::sparse::SparseSimilarity;

const EMB_MAGIC: &[u8; 4] = b"EMB1";
const SPW_MAGIC: &[u8; 4] = b"SPW1";

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| format_err(format!("{}: truncated at byte {}", self.what, self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(format_err(format!(
                "{}: {} trailing bytes",
                self.what,
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn encode_embeddings(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * m.data().len());
    out.extend_from_slice(EMB_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.dim() as u32).to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let mut c = Cursor {
        buf: bytes,
        pos: 0,
        what: "EMB1",
    };
    if c.take(4)? != EMB_MAGIC {
        return Err(format_err("EMB1: bad magic"));
    }
    let rows = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let n = rows
        .checked_mul(dim)
        .ok_or_else(|| format_err("EMB1: size overflow"))?;
    let raw = c.take(
        n.checked_mul(4)
            .ok_or_else(|| format_err("EMB1: size overflow"))?,
    )?;
    c.finish()?;
    let data = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(rows, dim, data)
}

pub fn encode_similarity(s: &SparseSimilarity) -> Vec<u8> {
    let nnz = s.nnz();
    let mut out = Vec::with_capacity(12 + 8 * (s.size() + 1) + 8 * nnz);
    out.extend_from_slice(SPW_MAGIC);
    out.extend_from_slice(&(s.size() as u32).to_le_bytes());
    out.extend_from_slice(&(nnz as u32).to_le_bytes());
    for o in s.row_offsets() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    for c in s.column_indices() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for v in s.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_similarity(bytes: &[u8]) -> Result<SparseSimilarity> {
    let mut c = Cursor {
        buf: bytes,
        pos: 0,
        what: "SPW1",
    };
    if c.take(4)? != SPW_MAGIC {
        return Err(format_err("SPW1: bad magic"));
    }
    let size = c.u32()? as usize;
    let nnz = c.u32()? as usize;
    let offsets = c
        .take((size + 1) * 8)?
        .chunks_exact(8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let cols = c
        .take(nnz * 4)?
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let vals = c
        .take(nnz * 4)?
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    c.finish()?;
    SparseSimilarity::from_csr(size, offsets, cols, vals)
}

fn read_indexed_csv<T: std::str::FromStr>(reader: impl Read, value_header: &str) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| format_err(format!("csv header: {e}")))?
        .clone();
    if headers.len() != 2 || &headers[0] != "index" || &headers[1] != value_header {
        return Err(format_err(format!(
            "expected header \"index,{value_header}\", found {:?}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format_err(format!("csv row {}: {e}", row + 1)))?;
        if rec.len() != 2 {
            return Err(format_err(format!(
                "csv row {}: expected 2 fields",
                row + 1
            )));
        }
        let idx: usize = rec[0]
            .parse()
            .map_err(|_| format_err(format!("csv row {}: bad index {:?}", row + 1, &rec[0])))?;
        if idx != row {
            return Err(format_err(format!(
                "csv row {}: index {idx} breaks the contiguous 0..N sequence",
                row + 1
            )));
        }
        let v = rec[1].parse().map_err(|_| {
            format_err(format!(
                "csv row {}: bad {value_header} {:?}",
                row + 1,
                &rec[1]
            ))
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn parse_labels(reader: impl Read) -> Result<Vec<u32>> {
    read_indexed_csv(reader, "label")
}

pub fn parse_quality(reader: impl Read) -> Result<Vec<f64>> {
    let q: Vec<f64> = read_indexed_csv(reader, "quality")?;
    if let Some(v) = q.iter().find(|v| !v.is_finite()) {
        return Err(format_err(format!("non-finite quality value {v}")));
    }
    Ok(q)
}

pub fn encode_labels(labels: &[u32]) -> Vec<u8> {
    let mut out = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out.into_bytes()
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    decode_embeddings(&fs::read(path)?)
}

pub fn read_similarity(path: &Path) -> Result<SparseSimilarity> {
    decode_similarity(&fs::read(path)?)
}

pub fn read_labels(path: &Path) -> Result<Vec<u32>> {
    parse_labels(fs::File::open(path)?)
}

pub fn read_quality(path: &Path) -> Result<Vec<f64>> {
    parse_quality(fs::File::open(path)?)
}

pub fn read_selection(path: &Path) -> Result<SelectionResult> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| format_err(format!("selection json: {e}")))
}

/// Writes `bytes` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_layout_is_bit_exact() {
        let m = EmbeddingMatrix::new(1, 2, vec![1.0, -2.5]).unwrap();
        let bytes = encode_embeddings(&m);
        let mut want = b"EMB1".to_vec();
        want.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0]);
        want.extend_from_slice(&1.0f32.to_le_bytes());
        want.extend_from_slice(&(-2.5f32).to_le_bytes());
        assert_eq!(bytes, want);
        assert_eq!(decode_embeddings(&bytes).unwrap(), m);
    }

    #[test]
    fn similarity_layout_is_bit_exact() {
        let s = SparseSimilarity::from_triplets(2, [(1, 0, 0.5)]).unwrap();
        let bytes = encode_similarity(&s);
        let mut want = b"SPW1".to_vec();
        want.extend_from_slice(&2u32.to_le_bytes());
        want.extend_from_slice(&1u32.to_le_bytes());
        for o in [0u64, 0, 1] {
            want.extend_from_slice(&o.to_le_bytes());
        }
        want.extend_from_slice(&0u32.to_le_bytes());
        want.extend_from_slice(&0.5f32.to_le_bytes());
        assert_eq!(bytes, want);
    }

    #[test]
    fn truncated_and_bad_magic_rejected() {
        let s = SparseSimilarity::from_triplets(2, [(1, 0, 0.5)]).unwrap();
        let bytes = encode_similarity(&s);
        assert!(matches!(
            decode_similarity(&bytes[..bytes.len() - 1]),
            Err(Error::Format(_))
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_similarity(&extra).is_err());
        assert!(decode_embeddings(b"EMB2\0\0\0\0\0\0\0\0").is_err());
    }

    #[test]
    fn labels_csv() {
        let l = parse_labels("index,label\n0,1\n1,0\n2,3\n".as_bytes()).unwrap();
        assert_eq!(l, vec![1, 0, 3]);
        assert_eq!(parse_labels(&encode_labels(&l)[..]).unwrap(), l);
        assert!(parse_labels("index,label\n0,1\n2,0\n".as_bytes()).is_err());
        assert!(parse_labels("idx,label\n0,1\n".as_bytes()).is_err());
        assert!(parse_labels("index,label\n0,-1\n".as_bytes()).is_err());
    }

    #[test]
    fn quality_csv() {
        let q = parse_quality("index,quality\n0,0.5\n1,2\n".as_bytes()).unwrap();
        assert_eq!(q, vec![0.5, 2.0]);
        assert!(parse_quality("index,quality\n0,nan\n".as_bytes()).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.bin");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
