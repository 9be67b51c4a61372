use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::octree::CellIndex;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const HIERARCHY_FILE: &str = "hierarchy.bin";

/// Describes one built octree. Serialized as a TOML key-value document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OctreeManifest {
    pub format_version: u32,
    pub point_count: u64,
    pub cell_count: u64,
    pub budget: u32,
    pub max_level: u8,
    pub seed: u64,
    /// Added to stored relative coordinates to recover absolute positions.
    pub offset: [f64; 3],
    /// Minimum corner of the cubic root cell, relative to `offset`.
    pub root_min: [f64; 3],
    /// Edge length of the cubic root cell.
    pub root_size: f64,
    pub root_key: String,
}

impl OctreeManifest {
    pub fn offset(&self) -> Vec3 {
        Vec3::from_array(self.offset)
    }

    /// Edge length of cells at `level`.
    pub fn cell_size(&self, level: u8) -> f64 {
        self.root_size / (1u64 << level) as f64
    }

    /// Bounds of a cell in relative coordinates.
    pub fn relative_bounds(&self, idx: &CellIndex) -> Aabb {
        let s = self.cell_size(idx.level);
        let m = Vec3::from_array(self.root_min);
        let min = Vec3::new(
            m.x + idx.i as f64 * s,
            m.y + idx.j as f64 * s,
            m.z + idx.k as f64 * s,
        );
        Aabb::new(min, min + Vec3::splat(s))
    }

    /// Bounds of a cell in absolute coordinates.
    pub fn cell_bounds(&self, idx: &CellIndex) -> Aabb {
        let b = self.relative_bounds(idx);
        let o = self.offset();
        Aabb::new(b.min + o, b.max + o)
    }

    pub fn root_bounds(&self) -> Aabb {
        self.cell_bounds(&CellIndex::ROOT)
    }

    /// Lattice index of the cell at `level` containing absolute point `p`,
    /// clamped to the root cube.
    pub fn lattice_at(&self, p: Vec3, level: u8) -> CellIndex {
        let rel = p - self.offset() - Vec3::from_array(self.root_min);
        let s = self.cell_size(level);
        let n = (1u64 << level) as f64;
        let f = |v: f64| ((v / s).floor().clamp(0.0, n - 1.0)) as u32;
        CellIndex::new(level, f(rel.x), f(rel.y), f(rel.z))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(s: &str) -> std::result::Result<Self, String> {
        let m: Self = toml::from_str(s).map_err(|e| e.to_string())?;
        if m.format_version != FORMAT_VERSION {
            return Err(format!("unsupported format version {}", m.format_version));
        }
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(MANIFEST_FILE), self.to_toml())?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let s = fs::read_to_string(&path)?;
        Self::from_toml(&s).map_err(|reason| Error::Corrupt { path, reason })
    }
}
