//! Work polygons: constructed from snaps, moved or copied, and extruded.

use serde::{Deserialize, Serialize};

use pcrecon_core::{IncrementalPlaneRegression, Plane, Point3, Vec3};

use crate::error::{Error, Result};

/// Snapped vertices may deviate this far from their best-fit plane.
pub const COPLANAR_TOLERANCE: f64 = 1e-3;
/// Extrusion directions closer than this to the plane are rejected.
pub const MIN_EXTRUDE_DOT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Constructed,
    Moved { from: u32 },
    Copied { from: u32 },
}

/// A simple planar loop, counter-clockwise around `frame.normal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkPolygon {
    pub id: u32,
    pub frame: Plane,
    pub vertices: Vec<Point3>,
    pub provenance: Provenance,
}

impl WorkPolygon {
    pub fn local(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|&v| self.frame.to_local(v)).collect()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.local())
    }

    pub fn centroid(&self) -> Point3 {
        let sum = self.vertices.iter().fold(Vec3::ZERO, |a, &v| a + v);
        sum / self.vertices.len() as f64
    }
}

fn signed_area(p: &[[f64; 2]]) -> f64 {
    let mut a = 0.0;
    for i in 0..p.len() {
        let (u, v) = (p[i], p[(i + 1) % p.len()]);
        a += u[0] * v[1] - v[0] * u[1];
    }
    0.5 * a
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_touch(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2], eps: f64) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if ((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps)) && ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps)) {
        return true;
    }
    (o1.abs() <= eps && on_segment(a, b, c))
        || (o2.abs() <= eps && on_segment(a, b, d))
        || (o3.abs() <= eps && on_segment(c, d, a))
        || (o4.abs() <= eps && on_segment(c, d, b))
}

/// True when no two non-adjacent edges touch and no edge is degenerate.
pub fn is_simple(p: &[[f64; 2]]) -> bool {
    let n = p.len();
    let scale = p.iter().fold(0.0f64, |m, q| m.max(q[0].abs()).max(q[1].abs())).max(1.0);
    let eps = 1e-12 * scale * scale;
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_touch(a, b, p[j], p[(j + 1) % n], eps) {
                return false;
            }
        }
    }
    true
}

/// A polygon through snapped vertices, projected onto `plane` or, if none
/// is given, onto their best-fit plane.
pub fn polygon_construct(id: u32, points: &[Point3], plane: Option<Plane>) -> Result<WorkPolygon> {
    if points.len() < 3 {
        return Err(Error::TooFewVertices(points.len()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Core(pcrecon_core::Error::NonFinite));
    }
    let mut frame = match plane {
        Some(p) => p,
        None => {
            let r = IncrementalPlaneRegression::from_points(points).map_err(|_| Error::DegeneratePolygon)?;
            let p = r.plane().map_err(|_| Error::DegeneratePolygon)?;
            if p.rank_deficient {
                return Err(Error::DegeneratePolygon);
            }
            let off = points.iter().map(|&v| p.distance(v)).fold(0.0, f64::max);
            if off > COPLANAR_TOLERANCE {
                return Err(Error::NotCoplanar(off));
            }
            Plane { origin: r.centroid(), ..p }
        }
    };
    let mut local: Vec<[f64; 2]> = points.iter().map(|&v| frame.to_local(v)).collect();
    if !is_simple(&local) {
        return Err(Error::SelfIntersecting);
    }
    let area = signed_area(&local);
    let extent = local.iter().fold(0.0f64, |m, q| m.max(q[0].abs()).max(q[1].abs())).max(1e-300);
    if area.abs() <= 1e-12 * extent * extent {
        return Err(Error::DegeneratePolygon);
    }
    if area < 0.0 {
        frame.normal = -frame.normal;
        frame.bitangent = -frame.bitangent;
        for q in &mut local {
            q[1] = -q[1];
        }
    }
    Ok(WorkPolygon {
        id,
        frame,
        vertices: points.iter().map(|&v| frame.project(v)).collect(),
        provenance: Provenance::Constructed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Translation {
    /// From a snapped anchor to a snapped target, optionally restricted to
    /// the component along a unit direction.
    Snap {
        anchor: Point3,
        target: Point3,
        constraint: Option<Vec3>,
    },
    Direction { direction: Vec3, distance: f64 },
}

impl Translation {
    pub fn offset(&self) -> Vec3 {
        match *self {
            Translation::Snap {
                anchor,
                target,
                constraint,
            } => {
                let d = target - anchor;
                match constraint {
                    Some(u) => u * d.dot(u),
                    None => d,
                }
            }
            Translation::Direction { direction, distance } => direction * distance,
        }
    }
}

/// Rigid translation of `poly`. The result carries `id` and records where
/// it came from.
pub fn polygon_move_copy(poly: &WorkPolygon, t: &Translation, copy: bool, id: u32) -> WorkPolygon {
    let d = t.offset();
    let mut frame = poly.frame;
    frame.origin += d;
    WorkPolygon {
        id,
        frame,
        vertices: poly.vertices.iter().map(|&v| v + d).collect(),
        provenance: if copy {
            Provenance::Copied { from: poly.id }
        } else {
            Provenance::Moved { from: poly.id }
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtrudeStop {
    Length(f64),
    /// Extrude until the cap plane passes through this point.
    Target(Point3),
}

/// A polygon swept along a direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prism {
    pub id: u32,
    pub base: u32,
    pub direction: Vec3,
    pub length: f64,
}

impl Prism {
    /// Base, cap and side faces of the prism over `base`, each wound
    /// counter-clockwise seen from outside.
    pub fn faces(&self, base: &WorkPolygon) -> Vec<Vec<Point3>> {
        let d = self.direction * self.length;
        let mut ring = base.vertices.clone();
        if self.direction.dot(base.frame.normal) < 0.0 {
            ring.reverse();
        }
        let n = ring.len();
        let mut faces = Vec::with_capacity(n + 2);
        faces.push(ring.iter().rev().copied().collect());
        faces.push(ring.iter().map(|&v| v + d).collect());
        for i in 0..n {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            faces.push(vec![a, b, b + d, a + d]);
        }
        faces
    }
}

pub fn polygon_extrude(poly: &WorkPolygon, direction: Vec3, stop: ExtrudeStop, id: u32) -> Result<Prism> {
    let dir = direction
        .try_normalize()
        .ok_or(Error::ParallelDirection)?;
    let along = dir.dot(poly.frame.normal);
    if along.abs() <= MIN_EXTRUDE_DOT {
        return Err(Error::ParallelDirection);
    }
    let length = match stop {
        ExtrudeStop::Length(l) => l,
        ExtrudeStop::Target(t) => poly.frame.signed_distance(t) / along,
    };
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::NonPositiveLength(length));
    }
    Ok(Prism {
        id,
        base: poly.id,
        direction: dir,
        length,
    })
}
