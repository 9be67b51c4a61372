//! A terrestrial laser scanner inside an axis-aligned box room.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use pcrecon_core::{Line, Plane, Point3, Vec3};

use crate::error::{Error, Result};

/// Azimuth and elevation limits in radians. Azimuth is measured in the xy
/// plane from +x, elevation from the xy plane toward +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub azimuth: [f64; 2],
    pub elevation: [f64; 2],
}

impl ScanWindow {
    pub const FULL: ScanWindow = ScanWindow {
        azimuth: [0.0, std::f64::consts::TAU],
        elevation: [-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2],
    };

    /// A window of half-width `half` radians centered on direction `d`.
    pub fn around(d: Vec3, half: f64) -> ScanWindow {
        let (az, el) = angles(d);
        ScanWindow {
            azimuth: [az - half, az + half],
            elevation: [el - half, el + half],
        }
    }
}

/// Azimuth and elevation of a direction.
pub fn angles(d: Vec3) -> (f64, f64) {
    (d.y.atan2(d.x), d.z.atan2(d.x.hypot(d.y)))
}

pub fn direction(az: f64, el: f64) -> Vec3 {
    Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Room extent; the room spans `[0, room]` on every axis.
    pub room: [f64; 3],
    pub scanner: Point3,
    /// Step of the azimuth/elevation grid.
    pub angular_step: f64,
    /// Standard deviation of the range error.
    pub sigma_depth: f64,
    /// Standard deviation of the beam direction error per axis.
    pub sigma_angle: f64,
    pub window: ScanWindow,
    pub seed: u64,
}

impl ScanConfig {
    /// The 7 x 5 x 2.5 m room with the scanner off center at tripod height
    /// and about 10^5 points over the full sphere.
    pub fn paper_room(sigma_depth: f64, seed: u64) -> Self {
        Self {
            room: [7.0, 5.0, 2.5],
            scanner: Vec3::new(2.6, 1.9, 1.45),
            angular_step: (2.0 * std::f64::consts::PI.powi(2) / 1e5).sqrt(),
            sigma_depth,
            sigma_angle: 50e-6,
            window: ScanWindow::FULL,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.room.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(Error::Config("room dimensions must be positive".into()));
        }
        let s = self.scanner.to_array();
        if !(0..3).all(|i| s[i] > 0.0 && s[i] < self.room[i]) {
            return Err(Error::Config("scanner must be strictly inside the room".into()));
        }
        if !(self.angular_step > 0.0 && self.angular_step.is_finite()) {
            return Err(Error::Config("angular step must be positive".into()));
        }
        if !(self.sigma_depth >= 0.0 && self.sigma_angle >= 0.0) {
            return Err(Error::Config("noise levels must be non-negative".into()));
        }
        let w = self.window;
        if !(w.azimuth[1] > w.azimuth[0] && w.elevation[1] > w.elevation[0]) {
            return Err(Error::Config("scan window is empty".into()));
        }
        Ok(())
    }

    pub fn truth(&self) -> GroundTruth {
        GroundTruth::new(self.room)
    }
}

/// A true room edge between two corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthEdge {
    pub line: Line,
    pub start: Point3,
    pub end: Point3,
    /// Indices of the two faces that meet here.
    pub faces: [usize; 2],
}

impl TruthEdge {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }
}

/// Exact geometry of the room. Faces are numbered x=0, x=X, y=0, y=Y, z=0,
/// z=Z with inward normals. Corner `i` sits at the far side of axis `a`
/// when bit `a` of `i` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub room: [f64; 3],
    pub faces: [Plane; 6],
    pub corners: [Point3; 8],
    pub edges: Vec<TruthEdge>,
}

fn axis(a: usize) -> Vec3 {
    [Vec3::X, Vec3::Y, Vec3::Z][a]
}

impl GroundTruth {
    pub fn new(room: [f64; 3]) -> Self {
        let faces = std::array::from_fn(|f| {
            let a = f / 2;
            if f % 2 == 0 {
                Plane::from_normal(Vec3::ZERO, axis(a))
            } else {
                Plane::from_normal(axis(a) * room[a], -axis(a))
            }
        });
        let corners = std::array::from_fn(|i| {
            Vec3::new(
                if i & 1 != 0 { room[0] } else { 0.0 },
                if i & 2 != 0 { room[1] } else { 0.0 },
                if i & 4 != 0 { room[2] } else { 0.0 },
            )
        });
        let mut edges = Vec::with_capacity(12);
        for a in 0..3 {
            for i in (0..8).filter(|i| i & (1 << a) == 0) {
                let (s, e) = (corners[i], corners[i | (1 << a)]);
                let others: Vec<usize> = (0..3).filter(|&b| b != a).collect();
                let face = |b: usize| 2 * b + usize::from(i & (1 << b) != 0);
                edges.push(TruthEdge {
                    line: Line {
                        origin: s,
                        direction: axis(a),
                    },
                    start: s,
                    end: e,
                    faces: [face(others[0]), face(others[1])],
                });
            }
        }
        Self {
            room,
            faces,
            corners,
            edges,
        }
    }

    /// The three faces meeting at corner `i`.
    pub fn corner_faces(i: usize) -> [usize; 3] {
        std::array::from_fn(|a| 2 * a + usize::from(i & (1 << a) != 0))
    }

    /// Unit direction from corner `i` into the room along the space diagonal.
    pub fn inward(&self, i: usize) -> Vec3 {
        let s = |a: usize| if i & (1 << a) != 0 { -1.0 } else { 1.0 };
        Vec3::new(s(0), s(1), s(2)).normalize()
    }
}

/// Distance along `d` from `o` to the box wall, and the face index hit.
pub fn cast(room: [f64; 3], o: Point3, d: Vec3) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for a in 0..3 {
        let (oa, da) = (o[a], d[a]);
        if da == 0.0 {
            continue;
        }
        let (bound, face) = if da > 0.0 { (room[a], 2 * a + 1) } else { (0.0, 2 * a) };
        let t = (bound - oa) / da;
        if t > 0.0 && best.map_or(true, |(b, _)| t < b) {
            best = Some((t, face));
        }
    }
    best
}

/// One sample: the measured point and the face the beam actually hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub point: Point3,
    pub face: u8,
}

/// Samples in scan order: elevation rows from low to high, azimuth within a
/// row. Deterministic for a fixed seed.
pub struct ScanStream {
    cfg: ScanConfig,
    rng: ChaCha8Rng,
    angle: Option<Normal<f64>>,
    depth: Option<Normal<f64>>,
    rows: usize,
    cols: usize,
    next: usize,
}

impl ScanStream {
    pub fn new(cfg: ScanConfig) -> Result<Self> {
        cfg.validate()?;
        let count = |r: [f64; 2]| ((r[1] - r[0]) / cfg.angular_step).floor() as usize + 1;
        let noise = |s: f64| (s > 0.0).then(|| Normal::new(0.0, s).unwrap());
        Ok(Self {
            rows: count(cfg.window.elevation),
            cols: count(cfg.window.azimuth),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            angle: noise(cfg.sigma_angle),
            depth: noise(cfg.sigma_depth),
            cfg,
            next: 0,
        })
    }

    /// Number of beams fired, including any that miss.
    pub fn beams(&self) -> usize {
        self.rows * self.cols
    }
}

impl Iterator for ScanStream {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        let c = &self.cfg;
        while self.next < self.beams() {
            let k = self.next;
            self.next += 1;
            let el = c.window.elevation[0] + (k / self.cols) as f64 * c.angular_step;
            let az = c.window.azimuth[0] + (k % self.cols) as f64 * c.angular_step;
            let mut d = direction(az, el);
            if let Some(n) = &self.angle {
                let e1 = d.any_orthonormal();
                let e2 = d.cross(e1);
                d = (d + e1 * n.sample(&mut self.rng) + e2 * n.sample(&mut self.rng)).normalize();
            }
            let Some((t, face)) = cast(c.room, c.scanner, d) else {
                continue;
            };
            let t = match &self.depth {
                Some(n) => t + n.sample(&mut self.rng),
                None => t,
            };
            return Some(Sample {
                point: c.scanner + d * t,
                face: face as u8,
            });
        }
        None
    }
}

#[derive(Debug, Clone)]
pub struct Scan {
    pub points: Vec<Point3>,
    /// Face hit by each point's beam.
    pub faces: Vec<u8>,
    pub truth: GroundTruth,
}

pub fn simulate_scan(cfg: &ScanConfig) -> Result<Scan> {
    let stream = ScanStream::new(*cfg)?;
    let mut points = Vec::with_capacity(stream.beams());
    let mut faces = Vec::with_capacity(stream.beams());
    for s in stream {
        points.push(s.point);
        faces.push(s.face);
    }
    Ok(Scan {
        points,
        faces,
        truth: cfg.truth(),
    })
}
