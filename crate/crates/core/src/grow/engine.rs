use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};

use crate::error::Result;
use crate::geometry::{Aabb, Point3, Vec3};
use crate::grow::polygon::alpha_shape;
use crate::grow::seed::{fit_seed_planes, initial_level};
use crate::grow::trace::{GrowTrace, TraceEvent};
use crate::grow::{
    GrowParams, Segment, SegmentStats, DENSE_RATIO, SPACING_EMA_WEIGHT, SPARSE_RATIO,
};
use crate::octree::{CellIndex, Octree};
use crate::plane::Plane;
use crate::regression::IncrementalPlaneRegression;

const NONE: u32 = u32::MAX;

/// Cooperative cancellation flag, checked between cells.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

/// Snapshot handed to the progress callback after a cell gained points.
#[derive(Debug)]
pub struct GrowProgress<'a> {
    pub cell: CellIndex,
    pub cells_processed: usize,
    pub segments: &'a [Segment],
}

#[derive(Debug, Clone)]
pub struct GrowResult {
    pub segments: Vec<Segment>,
    pub trace: GrowTrace,
    pub cells_processed: usize,
    pub cancelled: bool,
}

struct SegState {
    regression: IncrementalPlaneRegression,
    plane: Plane,
    /// Border candidates; only ever shrinks by turning interior.
    border: Vec<u32>,
    /// Frame of the seed plane, fixed for the footprint grid.
    frame: Plane,
    footprint: BTreeMap<[i64; 2], Extremes>,
    inliers: u64,
}

/// Points of one footprint voxel that reach furthest in eight in-plane
/// directions, so the outline is not shrunk by thinning.
#[derive(Clone, Copy)]
struct Extremes([(f64, u32); 8]);

const DIRS: [[f64; 2]; 8] = {
    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;
    [[1.0, 0.0], [H, H], [0.0, 1.0], [-H, H], [-1.0, 0.0], [-H, -H], [0.0, -1.0], [H, -H]]
};

impl SegState {
    fn add_footprint(&mut self, id: u32, p: Point3, voxel: f64) {
        let uv = self.frame.to_local(p);
        let key = [(uv[0] / voxel).floor() as i64, (uv[1] / voxel).floor() as i64];
        let score = |k: usize| uv[0] * DIRS[k][0] + uv[1] * DIRS[k][1];
        let e = self
            .footprint
            .entry(key)
            .or_insert_with(|| Extremes([(f64::NEG_INFINITY, id); 8]));
        for k in 0..8 {
            let sc = score(k);
            if sc > e.0[k].0 {
                e.0[k] = (sc, id);
            }
        }
    }

    fn footprint_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = Vec::with_capacity(self.footprint.len() * 3);
        for e in self.footprint.values() {
            let start = ids.len();
            for (_, id) in e.0 {
                if !ids[start..].contains(&id) {
                    ids.push(id);
                }
            }
        }
        ids
    }
}

struct Lock {
    parents: HashSet<CellIndex>,
}

/// Mutable state of one growing session.
pub struct GrowState<'t> {
    tree: &'t Octree,
    params: GrowParams,
    spacing: f64,
    r2: f64,
    voxel: f64,
    pts: Vec<Point3>,
    owner: Vec<u32>,
    /// Bit `s` set once the point was tested against segment `s`.
    tested: Vec<u8>,
    in_heap: Vec<bool>,
    grid: HashMap<[i64; 3], Vec<u32>>,
    loaded: HashMap<CellIndex, (u32, u32)>,
    processed: HashSet<CellIndex>,
    /// Strict ancestors of processed cells.
    above_processed: HashSet<CellIndex>,
    queue: BinaryHeap<Reverse<(u64, CellIndex)>>,
    in_queue: HashSet<CellIndex>,
    deferred: Vec<CellIndex>,
    lock: Option<Lock>,
    /// Suppresses a new lock until a cell at the new level was processed.
    settling: bool,
    segments: Vec<SegState>,
    d_avg: f64,
    trace: GrowTrace,
    cells_processed: usize,
    dirty_bins: HashSet<[i64; 3]>,
    buf: Vec<(u32, f64)>,
}

impl<'t> GrowState<'t> {
    /// Fits the seed planes and queues the seed cells.
    pub fn new(tree: &'t Octree, params: GrowParams) -> Result<Self> {
        params.validate()?;
        let r = params.search_radius;
        let mut st = Self {
            tree,
            params,
            spacing: params.target_spacing(),
            r2: r * r,
            voxel: params.alpha() / 2.0,
            pts: Vec::new(),
            owner: Vec::new(),
            tested: Vec::new(),
            in_heap: Vec::new(),
            grid: HashMap::default(),
            loaded: HashMap::default(),
            processed: HashSet::default(),
            above_processed: HashSet::default(),
            queue: BinaryHeap::new(),
            in_queue: HashSet::default(),
            deferred: Vec::new(),
            lock: None,
            settling: false,
            segments: Vec::new(),
            d_avg: 0.0,
            trace: GrowTrace::default(),
            cells_processed: 0,
            dirty_bins: HashSet::default(),
            buf: Vec::new(),
        };
        let level = initial_level(tree, &params);
        let seed = params.seed_point;
        let rs = params.seed_radius;
        let sphere = Aabb::new(seed - Vec3::splat(rs), seed + Vec3::splat(rs));
        let cells: Vec<CellIndex> = tree
            .cells_at_level(&sphere, level)
            .into_iter()
            .filter(|c| tree.cell_bounds(c).intersects_sphere(seed, rs))
            .collect();
        let mut ids = Vec::new();
        for c in &cells {
            let (a, b) = st.ensure_loaded(c)?;
            ids.extend((a..b).filter(|&i| st.pts[i as usize].distance_squared(seed) <= rs * rs));
        }
        let seed_pts: Vec<Point3> = ids.iter().map(|&i| st.pts[i as usize]).collect();
        for sp in fit_seed_planes(&seed_pts, &params)? {
            let members: Vec<u32> = sp.members.iter().map(|&m| ids[m]).collect();
            let pts: Vec<Point3> = members.iter().map(|&i| st.pts[i as usize]).collect();
            let regression = IncrementalPlaneRegression::from_points(&pts)?;
            let Ok(plane) = regression.plane() else { continue };
            let s = st.segments.len() as u32;
            let mut seg = SegState {
                regression,
                plane,
                border: Vec::new(),
                frame: plane,
                footprint: BTreeMap::new(),
                inliers: members.len() as u64,
            };
            for &i in &members {
                st.owner[i as usize] = s;
                seg.border.push(i);
                seg.add_footprint(i, st.pts[i as usize], st.voxel);
            }
            st.segments.push(seg);
        }
        if st.segments.is_empty() {
            return Err(crate::error::Error::NoPlaneFound);
        }
        st.d_avg = st.seed_spacing();
        for c in cells {
            st.enqueue(c);
        }
        Ok(st)
    }

    pub fn params(&self) -> &GrowParams {
        &self.params
    }

    pub fn regressions(&self) -> Vec<IncrementalPlaneRegression> {
        self.segments.iter().map(|s| s.regression).collect()
    }

    /// Running average neighbor distance.
    pub fn d_avg(&self) -> f64 {
        self.d_avg
    }

    /// Observed over target spacing.
    pub fn spacing_ratio(&self) -> f64 {
        self.d_avg / self.spacing
    }

    pub fn trace(&self) -> &GrowTrace {
        &self.trace
    }

    pub fn cells_processed(&self) -> usize {
        self.cells_processed
    }

    /// Mean nearest-neighbor distance among the seed inliers of each plane.
    fn seed_spacing(&mut self) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for s in 0..self.segments.len() {
            for k in 0..self.segments[s].border.len() {
                let i = self.segments[s].border[k];
                let p = self.pts[i as usize];
                self.neighbors(p);
                let nn = self
                    .buf
                    .iter()
                    .filter(|(q, d2)| *q != i && self.owner[*q as usize] == s as u32 && *d2 > 0.0)
                    .map(|(_, d2)| *d2)
                    .fold(f64::INFINITY, f64::min);
                if nn.is_finite() {
                    sum += nn.sqrt();
                    n += 1;
                }
            }
        }
        if n == 0 {
            self.spacing
        } else {
            sum / n as f64
        }
    }

    fn bin(&self, p: Point3) -> [i64; 3] {
        voxel_key(p, self.params.seed_point, self.params.search_radius)
    }

    /// Fills `self.buf` with loaded points within the search radius.
    fn neighbors(&mut self, p: Point3) {
        self.buf.clear();
        let [x, y, z] = self.bin(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(v) = self.grid.get(&[x + dx, y + dy, z + dz]) {
                        for &q in v {
                            let d2 = self.pts[q as usize].distance_squared(p);
                            if d2 <= self.r2 {
                                self.buf.push((q, d2));
                            }
                        }
                    }
                }
            }
        }
    }

    /// Whether any loaded point within the search radius satisfies `f`.
    fn any_neighbor(&self, p: Point3, f: impl Fn(u32) -> bool) -> bool {
        let [x, y, z] = self.bin(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(v) = self.grid.get(&[x + dx, y + dy, z + dz]) {
                        if v.iter().any(|&q| f(q) && self.pts[q as usize].distance_squared(p) <= self.r2) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    fn ensure_loaded(&mut self, c: &CellIndex) -> Result<(u32, u32)> {
        if let Some(r) = self.loaded.get(c) {
            return Ok(*r);
        }
        let cell = self.tree.load_cell_at(c)?;
        let a = self.pts.len() as u32;
        for p in &cell.points {
            let id = self.pts.len() as u32;
            self.pts.push(*p);
            self.owner.push(NONE);
            self.tested.push(0);
            self.in_heap.push(false);
            let k = self.bin(*p);
            self.grid.entry(k).or_default().push(id);
        }
        let r = (a, self.pts.len() as u32);
        self.loaded.insert(*c, r);
        Ok(r)
    }

    fn covered(&self, c: &CellIndex) -> bool {
        if self.processed.contains(c) {
            return true;
        }
        let mut a = *c;
        while let Some(p) = a.parent() {
            if self.processed.contains(&p) {
                return true;
            }
            a = p;
        }
        false
    }

    /// Whether `y` lies in processed space or space without points.
    fn point_covered(&self, y: Point3) -> bool {
        if !self.tree.root_bounds().contains(y) {
            return true;
        }
        let m = self.tree.manifest();
        for l in 0..=m.max_level {
            let c = m.lattice_at(y, l);
            if self.processed.contains(&c) {
                return true;
            }
            match self.tree.meta(&c) {
                None => return true,
                Some(meta) if meta.leaf => return false,
                _ => {}
            }
        }
        false
    }

    fn is_border(&self, id: u32, s: u32) -> bool {
        let p = self.pts[id as usize];
        if self.any_neighbor(p, |q| self.owner[q as usize] != s) {
            return true;
        }
        let r = self.params.search_radius;
        for dx in [-r, 0.0, r] {
            for dy in [-r, 0.0, r] {
                for dz in [-r, 0.0, r] {
                    if !self.point_covered(p + Vec3::new(dx, dy, dz)) {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn enqueue(&mut self, c: CellIndex) {
        if self.covered(&c) || !self.in_queue.insert(c) {
            return;
        }
        let d = self.tree.cell_bounds(&c).distance_to(self.params.seed_point);
        self.queue.push(Reverse((d.to_bits(), c)));
    }

    fn enqueue_neighbors(&mut self, c: &CellIndex) {
        for n in c.lattice_neighbors() {
            if self.tree.exists(&n) {
                self.enqueue(n);
                continue;
            }
            // Missing cell: either empty space or below a coarser leaf.
            let mut a = n;
            while let Some(p) = a.parent() {
                if let Some(m) = self.tree.meta(&p) {
                    if m.leaf {
                        self.enqueue(p);
                    }
                    break;
                }
                a = p;
            }
        }
    }

    fn near_border(&self, c: &CellIndex) -> bool {
        let b = self.tree.cell_bounds(c);
        let r = self.params.search_radius;
        self.segments
            .iter()
            .any(|s| s.border.iter().any(|&i| b.distance_to(self.pts[i as usize]) <= r))
    }

    fn next_cell(&mut self) -> Option<CellIndex> {
        loop {
            match self.queue.pop() {
                Some(Reverse((_, c))) => {
                    if let Some(lock) = &self.lock {
                        let marked = c.parent().is_some_and(|p| lock.parents.contains(&p));
                        if !marked {
                            self.deferred.push(c);
                            continue;
                        }
                    }
                    self.in_queue.remove(&c);
                    return Some(c);
                }
                None if self.lock.is_some() => {
                    self.release_lock();
                    if self.queue.is_empty() {
                        return None;
                    }
                }
                None => return None,
            }
        }
    }

    fn release_lock(&mut self) {
        self.lock = None;
        let coarsen = self.spacing_ratio() < DENSE_RATIO;
        let mut replaced = 0;
        for c in std::mem::take(&mut self.deferred) {
            self.in_queue.remove(&c);
            if coarsen {
                if let Some(p) = c.parent() {
                    if self.tree.exists(&p) && !self.covered(&p) && !self.above_processed.contains(&p) {
                        self.enqueue(p);
                        replaced += 1;
                        continue;
                    }
                }
            }
            self.enqueue(c);
        }
        if coarsen {
            self.settling = replaced > 0;
            self.trace.events.push(TraceEvent::Coarsened { replaced });
        } else {
            self.trace.events.push(TraceEvent::Unlocked);
        }
    }

    /// Decides how a popped cell is handled under the spacing band. Returns
    /// `true` when the cell should be processed now; otherwise it has been
    /// replaced in, or returned to, the queue.
    pub fn adapt_resolution(&mut self, c: CellIndex) -> bool {
        if !self.params.adaptive || self.lock.is_some() {
            return true;
        }
        let q = self.spacing_ratio();
        let leaf = self.tree.meta(&c).map_or(true, |m| m.leaf);
        if q > SPARSE_RATIO {
            if leaf {
                self.trace.events.push(TraceEvent::AtLeafFloor { cell: c });
                return true;
            }
            for ch in self.tree.children_of(&c) {
                self.enqueue(ch);
            }
            self.trace.events.push(TraceEvent::Refined { cell: c });
            return false;
        }
        if q < DENSE_RATIO && c.level > 0 && !self.settling {
            // Only siblings of completed cells must finish at this level;
            // everything else may move up once the lock is released.
            let parents: HashSet<CellIndex> = self.processed.iter().filter_map(|x| x.parent()).collect();
            self.trace.events.push(TraceEvent::Locked {
                level: c.level,
                marked_parents: parents.len(),
            });
            self.lock = Some(Lock { parents });
            self.enqueue(c);
            return false;
        }
        true
    }

    fn accept(&mut self, id: u32, s: u32, discovery: f64) -> Result<()> {
        let p = self.pts[id as usize];
        let voxel = self.voxel;
        let seg = &mut self.segments[s as usize];
        seg.regression.update(p)?;
        if let Ok(pl) = seg.regression.plane() {
            seg.plane = pl;
        }
        seg.inliers += 1;
        seg.border.push(id);
        seg.add_footprint(id, p, voxel);
        self.owner[id as usize] = s;
        self.d_avg += SPACING_EMA_WEIGHT * (discovery - self.d_avg);
        let b = self.bin(p);
        self.dirty_bins.insert(b);
        Ok(())
    }

    fn wants(&self, q: u32) -> bool {
        self.owner[q as usize] == NONE && !self.in_heap[q as usize]
    }

    /// Visits candidate points of one cell in order of distance to the seed.
    fn process_cell(&mut self, c: CellIndex) -> Result<u64> {
        let (a, b) = self.ensure_loaded(&c)?;
        let seed = self.params.seed_point;
        let tp = self.params.plane_threshold;
        let mut heap: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
        for id in a..b {
            if !self.wants(id) {
                continue;
            }
            let t = self.tested[id as usize];
            let nominated = self.any_neighbor(self.pts[id as usize], |q| {
                let o = self.owner[q as usize];
                o != NONE && t & (1 << o) == 0
            });
            if nominated {
                self.in_heap[id as usize] = true;
                heap.push(Reverse((self.pts[id as usize].distance(seed).to_bits(), id)));
            }
        }
        let mut added = 0u64;
        while let Some(Reverse((_, id))) = heap.pop() {
            let i = id as usize;
            self.in_heap[i] = false;
            if self.owner[i] != NONE {
                continue;
            }
            let p = self.pts[i];
            self.neighbors(p);
            let mut nearest = [f64::INFINITY; 8];
            let mut mask = 0u8;
            for (q, d2) in &self.buf {
                let o = self.owner[*q as usize];
                if o != NONE && self.tested[i] & (1 << o) == 0 {
                    mask |= 1 << o;
                    nearest[o as usize] = nearest[o as usize].min(*d2);
                }
            }
            if mask == 0 {
                continue;
            }
            let mut best: Option<(u32, f64)> = None;
            for s in 0..self.segments.len() as u32 {
                if mask & (1 << s) == 0 {
                    continue;
                }
                let d = self.segments[s as usize].plane.distance(p);
                if d < tp && best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((s, d));
                }
            }
            self.tested[i] |= mask;
            let Some((s, _)) = best else { continue };
            let cand: Vec<u32> = self
                .buf
                .iter()
                .map(|(q, _)| *q)
                .filter(|&q| self.wants(q) && self.tested[q as usize] & (1 << s) == 0)
                .collect();
            self.accept(id, s, nearest[s as usize].sqrt())?;
            added += 1;
            for q in cand {
                self.in_heap[q as usize] = true;
                heap.push(Reverse((self.pts[q as usize].distance(seed).to_bits(), q)));
            }
        }
        self.processed.insert(c);
        let mut x = c;
        while let Some(p) = x.parent() {
            self.above_processed.insert(p);
            x = p;
        }
        self.cells_processed += 1;
        self.settling = false;
        self.refresh_borders(self.tree.cell_bounds(&c).dilate(self.params.search_radius));
        self.trace.events.push(TraceEvent::Processed {
            cell: c,
            added,
            ratio: self.spacing_ratio(),
        });
        Ok(added)
    }

    /// Re-checks border candidates that the last cell could have affected.
    fn refresh_borders(&mut self, region: Aabb) {
        let dirty = std::mem::take(&mut self.dirty_bins);
        for s in 0..self.segments.len() {
            let cands = std::mem::take(&mut self.segments[s].border);
            let mut keep = Vec::with_capacity(cands.len());
            for id in cands {
                let p = self.pts[id as usize];
                let [x, y, z] = self.bin(p);
                let near_dirty = (-1..=1).any(|dx| {
                    (-1..=1).any(|dy| (-1..=1).any(|dz| dirty.contains(&[x + dx, y + dy, z + dz])))
                });
                if (!near_dirty && !region.contains(p)) || self.is_border(id, s as u32) {
                    keep.push(id);
                }
            }
            self.segments[s].border = keep;
        }
    }

    /// Current segments, including their outlines.
    pub fn snapshot(&self) -> Vec<Segment> {
        let tp = self.params.plane_threshold;
        self.segments
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let border: Vec<Point3> = s
                    .border
                    .iter()
                    .map(|&i| self.pts[i as usize])
                    .filter(|p| s.plane.distance(*p) < tp)
                    .collect();
                let footprint: Vec<Point3> =
                    s.footprint_ids().into_iter().map(|i| self.pts[i as usize]).collect();
                let mut outline = footprint.clone();
                outline.extend_from_slice(&border);
                let polygon = alpha_shape(s.plane, &outline, self.params.alpha());
                Segment {
                    id: k as u32,
                    regression: s.regression,
                    plane: s.plane,
                    stats: SegmentStats {
                        point_count: s.regression.count,
                        polygon_area: polygon.area,
                        regression_variance: s.plane.eigenvalues[2],
                    },
                    border_points: border,
                    footprint,
                    inlier_count: s.inliers,
                    polygon,
                }
            })
            .collect()
    }

    /// Points currently owned by each segment, for inspection and tests.
    pub fn inlier_points(&self, segment: u32) -> Vec<Point3> {
        self.owner
            .iter()
            .enumerate()
            .filter(|(_, &o)| o == segment)
            .map(|(i, _)| self.pts[i])
            .collect()
    }

    /// Runs the loop until the queue is exhausted or `cancel` fires.
    pub fn run(
        &mut self,
        cancel: &CancelToken,
        mut callback: Option<&mut dyn FnMut(&GrowProgress)>,
    ) -> Result<bool> {
        while let Some(c) = self.next_cell() {
            if cancel.is_cancelled() {
                self.enqueue(c);
                return Ok(true);
            }
            if self.covered(&c) {
                continue;
            }
            if self.above_processed.contains(&c) {
                for ch in self.tree.children_of(&c) {
                    self.enqueue(ch);
                }
                continue;
            }
            if !self.near_border(&c) {
                self.trace.events.push(TraceEvent::Dropped { cell: c });
                continue;
            }
            if !self.adapt_resolution(c) {
                continue;
            }
            let added = self.process_cell(c)?;
            if added > 0 {
                self.enqueue_neighbors(&c);
                if let Some(cb) = callback.as_mut() {
                    let segments = self.snapshot();
                    cb(&GrowProgress {
                        cell: c,
                        cells_processed: self.cells_processed,
                        segments: &segments,
                    });
                }
            }
        }
        Ok(false)
    }
}

fn voxel_key(p: Point3, origin: Point3, size: f64) -> [i64; 3] {
    let d = (p - origin) / size;
    [d.x.floor() as i64, d.y.floor() as i64, d.z.floor() as i64]
}

/// Grows `state` to completion and returns the final segments.
pub fn grow(
    mut state: GrowState,
    cancel: &CancelToken,
    callback: Option<&mut dyn FnMut(&GrowProgress)>,
) -> Result<GrowResult> {
    let cancelled = state.run(cancel, callback)?;
    Ok(GrowResult {
        segments: state.snapshot(),
        cells_processed: state.cells_processed,
        trace: state.trace.clone(),
        cancelled,
    })
}
