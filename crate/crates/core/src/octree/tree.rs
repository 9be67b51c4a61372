use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3, Vec3};
use crate::octree::build::{BuildConfig, OctreeBuilder};
use crate::octree::manifest::{OctreeManifest, HIERARCHY_FILE};
use crate::octree::store::{
    decode_hierarchy, encode_blob, encode_hierarchy, CellMeta, CellStore, DirStore, Hierarchy, MemStore,
};
use crate::octree::CellIndex;

/// A loaded cell with its payload in absolute coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct OctreeCell {
    pub index: CellIndex,
    pub bounds: Aabb,
    pub points: Vec<Point3>,
    pub leaf: bool,
    /// Number of original points in and below this cell.
    pub point_count: u64,
}

impl OctreeCell {
    pub fn byte_size(&self) -> usize {
        self.points.len() * std::mem::size_of::<Point3>() + std::mem::size_of::<Self>()
    }

    /// FNV-1a over the payload bits, for cheap equality checks.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for p in &self.points {
            for c in [p.x, p.y, p.z] {
                for b in c.to_bits().to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

/// Snapshot of storage and cache counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IoStats {
    /// Payload reads that went to storage.
    pub loads: u64,
    pub cache_hits: u64,
    /// Distinct cells whose payload was ever requested.
    pub touched: usize,
    pub cached_bytes: usize,
    pub peak_cached_bytes: usize,
}

struct CellCache {
    capacity: usize,
    bytes: usize,
    peak: usize,
    tick: u64,
    entries: HashMap<CellIndex, (Arc<OctreeCell>, u64)>,
    order: BTreeMap<u64, CellIndex>,
}

impl CellCache {
    fn new(capacity: usize) -> Self {
        Self {
            capacity,
            bytes: 0,
            peak: 0,
            tick: 0,
            entries: HashMap::new(),
            order: BTreeMap::new(),
        }
    }

    fn get(&mut self, idx: &CellIndex) -> Option<Arc<OctreeCell>> {
        self.tick += 1;
        let tick = self.tick;
        let (cell, t) = self.entries.get_mut(idx)?;
        self.order.remove(t);
        *t = tick;
        self.order.insert(tick, *idx);
        Some(cell.clone())
    }

    fn insert(&mut self, cell: Arc<OctreeCell>) {
        self.tick += 1;
        let size = cell.byte_size();
        if let Some((old, t)) = self.entries.remove(&cell.index) {
            self.order.remove(&t);
            self.bytes -= old.byte_size();
        }
        while self.bytes + size > self.capacity {
            let Some((&t, &victim)) = self.order.iter().next() else { break };
            self.order.remove(&t);
            if let Some((old, _)) = self.entries.remove(&victim) {
                self.bytes -= old.byte_size();
            }
        }
        self.bytes += size;
        self.peak = self.peak.max(self.bytes);
        self.order.insert(self.tick, cell.index);
        self.entries.insert(cell.index, (cell, self.tick));
    }
}

/// Read-only octree over a cell store, with a bounded payload cache.
/// Safe to share between threads.
pub struct Octree {
    manifest: OctreeManifest,
    hierarchy: Hierarchy,
    store: Arc<dyn CellStore>,
    cache: Mutex<CellCache>,
    loads: AtomicU64,
    hits: AtomicU64,
    touched: Mutex<BTreeSet<CellIndex>>,
}

pub const DEFAULT_CACHE_BYTES: usize = 256 << 20;

impl std::fmt::Debug for Octree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Octree")
            .field("manifest", &self.manifest)
            .field("cells", &self.hierarchy.len())
            .finish()
    }
}

impl Octree {
    pub fn new(manifest: OctreeManifest, hierarchy: Hierarchy, store: Arc<dyn CellStore>) -> Self {
        Self {
            manifest,
            hierarchy,
            store,
            cache: Mutex::new(CellCache::new(DEFAULT_CACHE_BYTES)),
            loads: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            touched: Mutex::new(BTreeSet::new()),
        }
    }

    pub fn with_cache_capacity(self, bytes: usize) -> Self {
        *self.cache.lock().unwrap() = CellCache::new(bytes);
        self
    }

    /// Builds an in-memory octree from a point iterator.
    pub fn build_in_memory<I>(points: I, cfg: BuildConfig) -> Result<Self>
    where
        I: IntoIterator<Item = Point3>,
    {
        let mut b = OctreeBuilder::new(BuildConfig {
            spill_dir: None,
            ..cfg
        })?;
        for p in points {
            b.push(p)?;
        }
        let mut store = MemStore::new();
        let (m, h) = b.finish(&mut store)?;
        Ok(Self::new(m, h, Arc::new(store)))
    }

    /// Streams points into an on-disk octree under `dir`.
    pub fn build_to_dir<I>(points: I, dir: &Path, cfg: BuildConfig) -> Result<OctreeManifest>
    where
        I: IntoIterator<Item = Point3>,
    {
        let mut store = DirStore::create(dir)?;
        let spill = cfg.spill_dir.clone().unwrap_or_else(|| dir.join("tmp"));
        let mut b = OctreeBuilder::new(BuildConfig {
            spill_dir: Some(spill.clone()),
            ..cfg
        })?;
        for p in points {
            b.push(p)?;
        }
        let (m, h) = b.finish(&mut store)?;
        let _ = fs::remove_dir_all(&spill);
        fs::write(dir.join(HIERARCHY_FILE), encode_hierarchy(&h))?;
        m.write(dir)?;
        Ok(m)
    }

    pub fn open_dir(dir: &Path) -> Result<Self> {
        let manifest = OctreeManifest::read(dir)?;
        let hpath = dir.join(HIERARCHY_FILE);
        let bytes = fs::read(&hpath)?;
        let hierarchy =
            decode_hierarchy(&bytes).map_err(|reason| Error::Corrupt { path: hpath.clone(), reason })?;
        if hierarchy.len() as u64 != manifest.cell_count {
            return Err(Error::Corrupt {
                path: hpath,
                reason: "cell count disagrees with manifest".into(),
            });
        }
        Ok(Self::new(manifest, hierarchy, Arc::new(DirStore::open(dir))))
    }

    pub fn manifest(&self) -> &OctreeManifest {
        &self.manifest
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn cell_count(&self) -> usize {
        self.hierarchy.len()
    }

    pub fn exists(&self, idx: &CellIndex) -> bool {
        self.hierarchy.contains_key(idx)
    }

    pub fn meta(&self, idx: &CellIndex) -> Option<&CellMeta> {
        self.hierarchy.get(idx)
    }

    pub fn cell_bounds(&self, idx: &CellIndex) -> Aabb {
        self.manifest.cell_bounds(idx)
    }

    pub fn root_bounds(&self) -> Aabb {
        self.manifest.root_bounds()
    }

    pub fn parent_of(&self, idx: &CellIndex) -> Option<CellIndex> {
        idx.parent().filter(|p| self.exists(p))
    }

    pub fn children_of(&self, idx: &CellIndex) -> Vec<CellIndex> {
        idx.children().into_iter().filter(|c| self.exists(c)).collect()
    }

    /// Existing same-level lattice neighbors.
    pub fn cell_neighbors(&self, idx: &CellIndex) -> Vec<CellIndex> {
        idx.lattice_neighbors()
            .into_iter()
            .filter(|n| self.exists(n))
            .collect()
    }

    /// The deepest existing cell at or above `level` containing `p`.
    pub fn cell_containing(&self, p: Point3, level: u8) -> Option<CellIndex> {
        if !self.root_bounds().dilate(1e-9).contains(p) {
            return None;
        }
        let mut best = None;
        for l in 0..=level.min(self.manifest.max_level) {
            let c = self.manifest.lattice_at(p, l);
            if self.exists(&c) {
                best = Some(c);
            } else {
                break;
            }
        }
        best
    }

    /// Loads a cell payload, serving repeats from the cache.
    pub fn load_cell_at(&self, idx: &CellIndex) -> Result<Arc<OctreeCell>> {
        let meta = *self.hierarchy.get(idx).ok_or(Error::CellNotFound(*idx))?;
        self.touched.lock().unwrap().insert(*idx);
        if let Some(c) = self.cache.lock().unwrap().get(idx) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(c);
        }
        let blob = self.store.get(idx)?;
        self.loads.fetch_add(1, Ordering::Relaxed);
        let o = self.manifest.offset();
        let points = blob
            .points
            .iter()
            .map(|p| o + Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64))
            .collect();
        let cell = Arc::new(OctreeCell {
            index: *idx,
            bounds: self.cell_bounds(idx),
            points,
            leaf: blob.leaf,
            point_count: meta.subtree,
        });
        self.cache.lock().unwrap().insert(cell.clone());
        Ok(cell)
    }

    /// The stored blob of a cell, re-encoded byte for byte. Bypasses the
    /// cache and the touch counters; meant for streaming to viewers.
    pub fn cell_blob(&self, idx: &CellIndex) -> Result<Vec<u8>> {
        if !self.exists(idx) {
            return Err(Error::CellNotFound(*idx));
        }
        let blob = self.store.get(idx)?;
        Ok(encode_blob(blob.leaf, &blob.points))
    }

    /// Cells that hold the payload for `level` inside `region`: cells at that
    /// level, or leaves above it where the tree is shallower.
    pub fn cells_at_level(&self, region: &Aabb, level: u8) -> Vec<CellIndex> {
        let mut out = Vec::new();
        let mut stack = vec![CellIndex::ROOT];
        while let Some(c) = stack.pop() {
            let Some(meta) = self.hierarchy.get(&c) else { continue };
            if !self.cell_bounds(&c).intersects(region) {
                continue;
            }
            if c.level == level || meta.leaf {
                out.push(c);
            } else {
                stack.extend(self.children_of(&c));
            }
        }
        out.sort();
        out
    }

    /// All payload points at `level` (or the nearest coarser leaf) inside the
    /// sphere, tagged with their cell and payload position.
    pub fn query_sphere(
        &self,
        center: Point3,
        radius: f64,
        level: u8,
    ) -> Result<Vec<(CellIndex, usize, Point3)>> {
        let region = Aabb::new(center - Vec3::splat(radius), center + Vec3::splat(radius));
        let r2 = radius * radius;
        let mut out = Vec::new();
        for c in self.cells_at_level(&region, level) {
            if !self.cell_bounds(&c).intersects_sphere(center, radius) {
                continue;
            }
            let cell = self.load_cell_at(&c)?;
            for (i, p) in cell.points.iter().enumerate() {
                if p.distance_squared(center) <= r2 {
                    out.push((c, i, *p));
                }
            }
        }
        Ok(out)
    }

    pub fn io_stats(&self) -> IoStats {
        let cache = self.cache.lock().unwrap();
        IoStats {
            loads: self.loads.load(Ordering::Relaxed),
            cache_hits: self.hits.load(Ordering::Relaxed),
            touched: self.touched.lock().unwrap().len(),
            cached_bytes: cache.bytes,
            peak_cached_bytes: cache.peak,
        }
    }

    pub fn touched_cells(&self) -> BTreeSet<CellIndex> {
        self.touched.lock().unwrap().clone()
    }

    pub fn reset_io_stats(&self) {
        self.loads.store(0, Ordering::Relaxed);
        self.hits.store(0, Ordering::Relaxed);
        self.touched.lock().unwrap().clear();
        let mut c = self.cache.lock().unwrap();
        c.peak = c.bytes;
    }

    /// Drops every cached payload.
    pub fn clear_cache(&self) {
        let cap = self.cache.lock().unwrap().capacity;
        *self.cache.lock().unwrap() = CellCache::new(cap);
    }

    /// Rough spacing between payload points of a cell lying on a surface.
    pub fn surface_spacing_estimate(&self, idx: &CellIndex) -> Option<f64> {
        let meta = self.meta(idx)?;
        if meta.payload == 0 {
            return None;
        }
        let s = self.manifest.cell_size(idx.level);
        Some(s / (meta.payload as f64).sqrt())
    }
}
