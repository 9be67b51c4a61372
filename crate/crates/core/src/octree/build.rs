//! Streaming octree construction.
//!
//! Points are appended to a spool (in memory, or a file when a spill
//! directory is configured) while the bounds are tracked. `finish` then
//! partitions top-down. Every inner cell receives a uniform reservoir sample
//! of the points passing through it; cells at or below the budget become
//! leaves holding their points verbatim. File-backed partitions that exceed
//! the in-memory limit are split through per-child spool files, so memory
//! stays bounded by the limit plus write buffers regardless of input size.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3, Vec3};
use crate::octree::manifest::{OctreeManifest, FORMAT_VERSION};
use crate::octree::store::{CellMeta, CellSink, Hierarchy, RawPoint};
use crate::octree::CellIndex;

#[derive(Debug, Clone)]
pub struct BuildConfig {
    /// Maximum payload of an inner cell and split threshold of a leaf.
    pub budget: usize,
    pub seed: u64,
    /// Cells deeper than this stay leaves regardless of their size.
    pub max_level: u8,
    /// Directory for temporary spool files; `None` keeps everything in memory.
    pub spill_dir: Option<PathBuf>,
    /// Partitions up to this many points are split in memory.
    pub in_memory_limit: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            budget: 8192,
            seed: 0,
            max_level: 24,
            spill_dir: None,
            in_memory_limit: 4 << 20,
        }
    }
}

impl BuildConfig {
    pub fn with_budget(budget: usize) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }
}

enum Spool {
    Mem(Vec<RawPoint>),
    File { path: PathBuf, writer: BufWriter<File> },
}

enum Source {
    Mem(Vec<RawPoint>),
    File { path: PathBuf, count: usize },
}

impl Source {
    fn len(&self) -> usize {
        match self {
            Source::Mem(v) => v.len(),
            Source::File { count, .. } => *count,
        }
    }

    fn into_vec(self) -> Result<Vec<RawPoint>> {
        match self {
            Source::Mem(v) => Ok(v),
            Source::File { path, count } => {
                let mut v = Vec::with_capacity(count);
                for_each_spooled(&path, |p| v.push(p))?;
                fs::remove_file(&path)?;
                Ok(v)
            }
        }
    }
}

fn for_each_spooled(path: &Path, mut f: impl FnMut(RawPoint)) -> Result<()> {
    let mut r = BufReader::with_capacity(1 << 16, File::open(path)?);
    let mut buf = [0u8; 12 * 1024];
    loop {
        let mut filled = 0;
        while filled < buf.len() {
            let n = r.read(&mut buf[filled..])?;
            if n == 0 {
                break;
            }
            filled += n;
        }
        if filled % 12 != 0 {
            return Err(Error::Corrupt {
                path: path.to_path_buf(),
                reason: "truncated spool".into(),
            });
        }
        for c in buf[..filled].chunks_exact(12) {
            let g = |o: usize| f32::from_le_bytes(c[o..o + 4].try_into().unwrap());
            f([g(0), g(4), g(8)]);
        }
        if filled < buf.len() {
            return Ok(());
        }
    }
}

fn write_raw(w: &mut impl Write, p: &RawPoint) -> std::io::Result<()> {
    let mut b = [0u8; 12];
    b[0..4].copy_from_slice(&p[0].to_le_bytes());
    b[4..8].copy_from_slice(&p[1].to_le_bytes());
    b[8..12].copy_from_slice(&p[2].to_le_bytes());
    w.write_all(&b)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic per-cell generator, independent of traversal order.
fn cell_rng(seed: u64, idx: &CellIndex) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for v in [idx.level as u64, idx.i as u64, idx.j as u64, idx.k as u64] {
        h = splitmix(h ^ v);
    }
    ChaCha8Rng::seed_from_u64(h)
}

struct Reservoir {
    cap: usize,
    seen: u64,
    items: Vec<RawPoint>,
    rng: ChaCha8Rng,
}

impl Reservoir {
    fn new(cap: usize, rng: ChaCha8Rng) -> Self {
        Self {
            cap,
            seen: 0,
            items: Vec::with_capacity(cap),
            rng,
        }
    }

    fn offer(&mut self, p: RawPoint) {
        if self.items.len() < self.cap {
            self.items.push(p);
        } else {
            let j = self.rng.gen_range(0..=self.seen);
            if (j as usize) < self.cap {
                self.items[j as usize] = p;
            }
        }
        self.seen += 1;
    }
}

fn octant_of(p: &RawPoint, center: Vec3) -> usize {
    (p[0] as f64 >= center.x) as usize
        | (((p[1] as f64 >= center.y) as usize) << 1)
        | (((p[2] as f64 >= center.z) as usize) << 2)
}

/// Accepts points one at a time and writes the finished tree to a sink.
pub struct OctreeBuilder {
    cfg: BuildConfig,
    spool: Spool,
    offset: Option<Vec3>,
    bounds: Aabb,
    count: u64,
}

impl OctreeBuilder {
    pub fn new(cfg: BuildConfig) -> Result<Self> {
        if cfg.budget == 0 {
            return Err(Error::InvalidParameter("budget must be positive".into()));
        }
        let spool = match &cfg.spill_dir {
            None => Spool::Mem(Vec::new()),
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let path = dir.join("input.spool");
                let writer = BufWriter::with_capacity(1 << 20, File::create(&path)?);
                Spool::File { path, writer }
            }
        };
        Ok(Self {
            cfg,
            spool,
            offset: None,
            bounds: Aabb::empty(),
            count: 0,
        })
    }

    pub fn push(&mut self, p: Point3) -> Result<()> {
        if !p.is_finite() {
            return Err(Error::NonFinite);
        }
        let off = *self.offset.get_or_insert(p);
        let d = p - off;
        let raw = [d.x as f32, d.y as f32, d.z as f32];
        self.bounds
            .extend(Vec3::new(raw[0] as f64, raw[1] as f64, raw[2] as f64));
        match &mut self.spool {
            Spool::Mem(v) => v.push(raw),
            Spool::File { writer, .. } => write_raw(writer, &raw)?,
        }
        self.count += 1;
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Partitions the spooled points into the sink.
    pub fn finish(self, sink: &mut dyn CellSink) -> Result<(OctreeManifest, Hierarchy)> {
        let Some(offset) = self.offset else {
            return Err(Error::EmptyStream);
        };
        let source = match self.spool {
            Spool::Mem(v) => Source::Mem(v),
            Spool::File { path, mut writer } => {
                writer.flush()?;
                drop(writer);
                Source::File {
                    path,
                    count: self.count as usize,
                }
            }
        };
        let extent = self.bounds.size().max_element();
        let root_size = if extent > 0.0 { extent * (1.0 + 1e-9) } else { 1.0 };
        let root_min = self.bounds.min;
        let mut manifest = OctreeManifest {
            format_version: FORMAT_VERSION,
            point_count: self.count,
            cell_count: 0,
            budget: self.cfg.budget as u32,
            max_level: 0,
            seed: self.cfg.seed,
            offset: offset.to_array(),
            root_min: root_min.to_array(),
            root_size,
            root_key: CellIndex::ROOT.key(),
        };
        let mut ctx = Partitioner {
            cfg: &self.cfg,
            manifest: &manifest,
            sink,
            hierarchy: Hierarchy::new(),
        };
        ctx.process(CellIndex::ROOT, source)?;
        let hierarchy = ctx.hierarchy;
        manifest.cell_count = hierarchy.len() as u64;
        manifest.max_level = hierarchy.keys().map(|c| c.level).max().unwrap_or(0);
        Ok((manifest, hierarchy))
    }
}

struct Partitioner<'a> {
    cfg: &'a BuildConfig,
    manifest: &'a OctreeManifest,
    sink: &'a mut dyn CellSink,
    hierarchy: Hierarchy,
}

impl Partitioner<'_> {
    fn process(&mut self, idx: CellIndex, src: Source) -> Result<()> {
        let n = src.len();
        if n <= self.cfg.budget || idx.level >= self.cfg.max_level {
            let pts = src.into_vec()?;
            self.sink.put(&idx, true, &pts)?;
            self.hierarchy.insert(
                idx,
                CellMeta {
                    leaf: true,
                    payload: pts.len() as u32,
                    subtree: pts.len() as u64,
                },
            );
            return Ok(());
        }
        let center = self.manifest.relative_bounds(&idx).center();
        let mut reservoir = Reservoir::new(self.cfg.budget, cell_rng(self.cfg.seed, &idx));

        let children: Vec<(CellIndex, Source)> = match src {
            Source::File { path, count } if count > self.cfg.in_memory_limit => {
                let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
                let mut writers = Vec::with_capacity(8);
                let mut paths = Vec::with_capacity(8);
                for o in 0..8u8 {
                    let p = dir.join(format!("{}.spool", idx.child(o).key()));
                    writers.push(BufWriter::with_capacity(1 << 18, File::create(&p)?));
                    paths.push(p);
                }
                let mut counts = [0usize; 8];
                let mut io_err = None;
                for_each_spooled(&path, |p| {
                    reservoir.offer(p);
                    let o = octant_of(&p, center);
                    counts[o] += 1;
                    if io_err.is_none() {
                        if let Err(e) = write_raw(&mut writers[o], &p) {
                            io_err = Some(e);
                        }
                    }
                })?;
                if let Some(e) = io_err {
                    return Err(e.into());
                }
                for w in &mut writers {
                    w.flush()?;
                }
                drop(writers);
                fs::remove_file(&path)?;
                let mut out = Vec::new();
                for (o, p) in paths.into_iter().enumerate() {
                    if counts[o] == 0 {
                        fs::remove_file(&p)?;
                    } else {
                        out.push((idx.child(o as u8), Source::File { path: p, count: counts[o] }));
                    }
                }
                out
            }
            src => {
                let pts = src.into_vec()?;
                let mut parts: [Vec<RawPoint>; 8] = Default::default();
                for p in &pts {
                    reservoir.offer(*p);
                    parts[octant_of(p, center)].push(*p);
                }
                drop(pts);
                parts
                    .into_iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_empty())
                    .map(|(o, v)| (idx.child(o as u8), Source::Mem(v)))
                    .collect()
            }
        };

        self.sink.put(&idx, false, &reservoir.items)?;
        self.hierarchy.insert(
            idx,
            CellMeta {
                leaf: false,
                payload: reservoir.items.len() as u32,
                subtree: n as u64,
            },
        );
        drop(reservoir);
        for (child, src) in children {
            self.process(child, src)?;
        }
        Ok(())
    }
}
