use std::fmt;

use serde::{Deserialize, Serialize};

/// Level-indexed lattice address of an octree cell. Level 0 is the root;
/// at level `l` the lattice coordinates range over `0..2^l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub level: u8,
    pub i: u32,
    pub j: u32,
    pub k: u32,
}

impl CellIndex {
    pub const ROOT: CellIndex = CellIndex { level: 0, i: 0, j: 0, k: 0 };

    pub fn new(level: u8, i: u32, j: u32, k: u32) -> Self {
        Self { level, i, j, k }
    }

    /// Cells per axis at this level.
    pub fn extent(&self) -> u64 {
        1u64 << self.level
    }

    /// Child in octant `o` (bit 0 = +x, bit 1 = +y, bit 2 = +z).
    pub fn child(&self, o: u8) -> CellIndex {
        CellIndex {
            level: self.level + 1,
            i: 2 * self.i + (o & 1) as u32,
            j: 2 * self.j + ((o >> 1) & 1) as u32,
            k: 2 * self.k + ((o >> 2) & 1) as u32,
        }
    }

    pub fn children(&self) -> [CellIndex; 8] {
        std::array::from_fn(|o| self.child(o as u8))
    }

    pub fn parent(&self) -> Option<CellIndex> {
        (self.level > 0).then(|| CellIndex {
            level: self.level - 1,
            i: self.i / 2,
            j: self.j / 2,
            k: self.k / 2,
        })
    }

    /// Octant of this cell within its parent.
    pub fn octant(&self) -> u8 {
        ((self.i & 1) | ((self.j & 1) << 1) | ((self.k & 1) << 2)) as u8
    }

    /// Ancestor at `level` (which must not exceed this cell's level).
    pub fn ancestor_at(&self, level: u8) -> CellIndex {
        assert!(level <= self.level);
        let s = self.level - level;
        CellIndex {
            level,
            i: self.i >> s,
            j: self.j >> s,
            k: self.k >> s,
        }
    }

    pub fn is_ancestor_of(&self, other: &CellIndex) -> bool {
        other.level > self.level && other.ancestor_at(self.level) == *self
    }

    /// All in-range lattice neighbors at the same level (face, edge and vertex).
    pub fn lattice_neighbors(&self) -> Vec<CellIndex> {
        let n = self.extent() as i64;
        let mut out = Vec::with_capacity(26);
        for dk in -1i64..=1 {
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 && dk == 0 {
                        continue;
                    }
                    let (i, j, k) = (self.i as i64 + di, self.j as i64 + dj, self.k as i64 + dk);
                    if (0..n).contains(&i) && (0..n).contains(&j) && (0..n).contains(&k) {
                        out.push(CellIndex::new(self.level, i as u32, j as u32, k as u32));
                    }
                }
            }
        }
        out
    }

    /// True when the two same-level cells touch (share a face, edge or vertex).
    pub fn is_adjacent(&self, o: &CellIndex) -> bool {
        self.level == o.level
            && self != o
            && (self.i as i64 - o.i as i64).abs() <= 1
            && (self.j as i64 - o.j as i64).abs() <= 1
            && (self.k as i64 - o.k as i64).abs() <= 1
    }

    /// Storage key, also used as the blob file stem.
    pub fn key(&self) -> String {
        format!("L{}-{}-{}-{}", self.level, self.i, self.j, self.k)
    }

    pub fn parse_key(s: &str) -> Option<CellIndex> {
        let rest = s.strip_prefix('L')?;
        let mut it = rest.split('-');
        let level = it.next()?.parse().ok()?;
        let i = it.next()?.parse().ok()?;
        let j = it.next()?.parse().ok()?;
        let k = it.next()?.parse().ok()?;
        if it.next().is_some() {
            return None;
        }
        Some(CellIndex::new(level, i, j, k))
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parent_child_round_trip() {
        let c = CellIndex::new(3, 5, 2, 7);
        for ch in c.children() {
            assert_eq!(ch.parent(), Some(c));
            assert!(c.is_ancestor_of(&ch));
        }
        assert_eq!(CellIndex::ROOT.parent(), None);
    }

    #[test]
    fn neighbor_counts() {
        assert!(CellIndex::ROOT.lattice_neighbors().is_empty());
        assert_eq!(CellIndex::new(2, 1, 1, 1).lattice_neighbors().len(), 26);
        assert_eq!(CellIndex::new(2, 0, 0, 0).lattice_neighbors().len(), 7);
        assert_eq!(CellIndex::new(2, 0, 1, 1).lattice_neighbors().len(), 17);
    }

    #[test]
    fn key_round_trip() {
        let c = CellIndex::new(9, 300, 12, 0);
        assert_eq!(CellIndex::parse_key(&c.key()), Some(c));
        assert_eq!(CellIndex::parse_key("L1-2-3"), None);
    }
}
