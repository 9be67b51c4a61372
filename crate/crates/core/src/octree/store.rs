//! Cell payload storage: blob encoding plus directory and in-memory stores.
//!
//! A cell blob is a 16 byte header followed by `count` little-endian `f32`
//! triplets holding coordinates relative to the manifest offset:
//!
//! ```text
//! offset  size  field
//! 0       4     magic  b"PCB1"
//! 4       4     count  u32 LE
//! 8       4     flags  u32 LE (bit 0: leaf)
//! 12      4     reserved, zero
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::octree::CellIndex;

pub const BLOB_MAGIC: [u8; 4] = *b"PCB1";
pub const BLOB_HEADER_LEN: usize = 16;
pub const FLAG_LEAF: u32 = 1;

pub type RawPoint = [f32; 3];

/// Decoded cell blob.
#[derive(Debug, Clone, PartialEq)]
pub struct CellBlob {
    pub leaf: bool,
    pub points: Vec<RawPoint>,
}

pub fn encode_blob(leaf: bool, points: &[RawPoint]) -> Vec<u8> {
    let mut out = Vec::with_capacity(BLOB_HEADER_LEN + points.len() * 12);
    out.extend_from_slice(&BLOB_MAGIC);
    out.extend_from_slice(&(points.len() as u32).to_le_bytes());
    out.extend_from_slice(&(if leaf { FLAG_LEAF } else { 0 }).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for p in points {
        for c in p {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

pub fn decode_blob(bytes: &[u8]) -> std::result::Result<CellBlob, String> {
    if bytes.len() < BLOB_HEADER_LEN {
        return Err("blob shorter than header".into());
    }
    if bytes[0..4] != BLOB_MAGIC {
        return Err("bad blob magic".into());
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let count = word(4) as usize;
    let flags = word(8);
    let body = &bytes[BLOB_HEADER_LEN..];
    if body.len() != count * 12 {
        return Err(format!("blob declares {count} points but holds {} bytes", body.len()));
    }
    let points = body
        .chunks_exact(12)
        .map(|c| {
            let f = |o: usize| f32::from_le_bytes(c[o..o + 4].try_into().unwrap());
            [f(0), f(4), f(8)]
        })
        .collect();
    Ok(CellBlob {
        leaf: flags & FLAG_LEAF != 0,
        points,
    })
}

/// Per-cell structural record kept in memory for navigation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellMeta {
    pub leaf: bool,
    /// Number of points in this cell's payload.
    pub payload: u32,
    /// Number of original points below (and in, for leaves) this cell.
    pub subtree: u64,
}

pub type Hierarchy = BTreeMap<CellIndex, CellMeta>;

const HIER_MAGIC: [u8; 4] = *b"PCH1";

pub fn encode_hierarchy(h: &Hierarchy) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + h.len() * 28);
    out.extend_from_slice(&HIER_MAGIC);
    out.extend_from_slice(&(h.len() as u32).to_le_bytes());
    for (idx, m) in h {
        out.push(idx.level);
        out.push(m.leaf as u8);
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&idx.i.to_le_bytes());
        out.extend_from_slice(&idx.j.to_le_bytes());
        out.extend_from_slice(&idx.k.to_le_bytes());
        out.extend_from_slice(&m.payload.to_le_bytes());
        out.extend_from_slice(&m.subtree.to_le_bytes());
    }
    out
}

pub fn decode_hierarchy(bytes: &[u8]) -> std::result::Result<Hierarchy, String> {
    if bytes.len() < 8 || bytes[0..4] != HIER_MAGIC {
        return Err("bad hierarchy header".into());
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() != n * 28 {
        return Err("hierarchy length mismatch".into());
    }
    let mut h = Hierarchy::new();
    for r in body.chunks_exact(28) {
        let u = |o: usize| u32::from_le_bytes(r[o..o + 4].try_into().unwrap());
        let idx = CellIndex::new(r[0], u(4), u(8), u(12));
        h.insert(
            idx,
            CellMeta {
                leaf: r[1] != 0,
                payload: u(16),
                subtree: u64::from_le_bytes(r[20..28].try_into().unwrap()),
            },
        );
    }
    Ok(h)
}

/// Read access to stored cell payloads.
pub trait CellStore: Send + Sync {
    fn get(&self, idx: &CellIndex) -> Result<CellBlob>;
}

/// Write access used by the builder.
pub trait CellSink {
    fn put(&mut self, idx: &CellIndex, leaf: bool, points: &[RawPoint]) -> Result<()>;
}

/// Flat directory of `cells/<key>.bin` blobs.
#[derive(Debug, Clone)]
pub struct DirStore {
    root: PathBuf,
}

impl DirStore {
    pub const CELL_DIR: &'static str = "cells";

    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root.join(Self::CELL_DIR))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn open(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn cell_path(&self, idx: &CellIndex) -> PathBuf {
        self.root
            .join(Self::CELL_DIR)
            .join(format!("{}.bin", idx.key()))
    }
}

impl CellStore for DirStore {
    fn get(&self, idx: &CellIndex) -> Result<CellBlob> {
        let path = self.cell_path(idx);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::CellNotFound(*idx))
            }
            Err(e) => return Err(e.into()),
        };
        decode_blob(&bytes).map_err(|reason| Error::Corrupt { path, reason })
    }
}

impl CellSink for DirStore {
    fn put(&mut self, idx: &CellIndex, leaf: bool, points: &[RawPoint]) -> Result<()> {
        let f = fs::File::create(self.cell_path(idx))?;
        let mut w = BufWriter::new(f);
        w.write_all(&encode_blob(leaf, points))?;
        w.flush()?;
        Ok(())
    }
}

/// Keeps encoded blobs in memory; used for in-core clouds and tests.
#[derive(Debug, Default)]
pub struct MemStore {
    blobs: RwLock<BTreeMap<CellIndex, Vec<u8>>>,
}

impl MemStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.blobs.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn raw(&self, idx: &CellIndex) -> Option<Vec<u8>> {
        self.blobs.read().unwrap().get(idx).cloned()
    }
}

impl CellStore for MemStore {
    fn get(&self, idx: &CellIndex) -> Result<CellBlob> {
        let g = self.blobs.read().unwrap();
        let bytes = g.get(idx).ok_or(Error::CellNotFound(*idx))?;
        decode_blob(bytes).map_err(|reason| Error::Corrupt {
            path: PathBuf::from(idx.key()),
            reason,
        })
    }
}

impl CellSink for MemStore {
    fn put(&mut self, idx: &CellIndex, leaf: bool, points: &[RawPoint]) -> Result<()> {
        self.blobs
            .write()
            .unwrap()
            .insert(*idx, encode_blob(leaf, points));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_header_layout() {
        let b = encode_blob(true, &[[1.0, 2.0, 3.0]]);
        assert_eq!(b.len(), 28);
        assert_eq!(&b[0..4], b"PCB1");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 1);
        assert_eq!(&b[16..20], &1.0f32.to_le_bytes());
    }

    #[test]
    fn blob_rejects_truncation() {
        let b = encode_blob(false, &[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert!(decode_blob(&b[..b.len() - 1]).is_err());
        assert!(decode_blob(&b[..10]).is_err());
    }

    #[test]
    fn missing_cell_is_not_found() {
        let s = MemStore::new();
        assert!(matches!(
            s.get(&CellIndex::ROOT),
            Err(Error::CellNotFound(_))
        ));
    }
}
