//! Alpha-shape outline of a segment in its plane's tangent frame.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Point3;
use crate::plane::Plane;

/// Outline of a planar segment. Vertices live in the tangent coordinates of
/// `frame`; loops and triangles index into `vertices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPolygon {
    pub frame: Plane,
    pub vertices: Vec<[f64; 2]>,
    /// Closed boundary loops. Outer boundaries run counter-clockwise, holes
    /// clockwise.
    pub loops: Vec<Vec<u32>>,
    /// Counter-clockwise triangles covering the loop interiors.
    pub triangles: Vec<[u32; 3]>,
    pub area: f64,
}

impl BoundaryPolygon {
    pub fn empty(frame: Plane) -> Self {
        Self {
            frame,
            vertices: Vec::new(),
            loops: Vec::new(),
            triangles: Vec::new(),
            area: 0.0,
        }
    }

    pub fn lift(&self, v: u32) -> Point3 {
        self.frame.from_local(self.vertices[v as usize])
    }

    /// Loops as 3-D polylines.
    pub fn loops_3d(&self) -> Vec<Vec<Point3>> {
        self.loops
            .iter()
            .map(|l| l.iter().map(|&v| self.lift(v)).collect())
            .collect()
    }

    /// Signed area of one loop (positive for counter-clockwise).
    pub fn loop_area(&self, l: &[u32]) -> f64 {
        let mut a = 0.0;
        for (i, &v) in l.iter().enumerate() {
            let p = self.vertices[v as usize];
            let q = self.vertices[l[(i + 1) % l.len()] as usize];
            a += p[0] * q[1] - q[0] * p[1];
        }
        a * 0.5
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn circumradius(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let ab = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let bc = ((b[0] - c[0]).powi(2) + (b[1] - c[1]).powi(2)).sqrt();
    let ca = ((c[0] - a[0]).powi(2) + (c[1] - a[1]).powi(2)).sqrt();
    let area2 = orient(a, b, c).abs();
    if area2 == 0.0 {
        f64::INFINITY
    } else {
        ab * bc * ca / (2.0 * area2)
    }
}

/// Alpha shape of `points` projected into `frame`: Delaunay triangles whose
/// circumradius exceeds `alpha` are carved away. Collinear input yields an
/// empty polygon.
pub fn alpha_shape(frame: Plane, points: &[Point3], alpha: f64) -> BoundaryPolygon {
    let mut out = BoundaryPolygon::empty(frame);
    if points.len() < 3 {
        return out;
    }
    out.vertices = points.iter().map(|p| frame.to_local(*p)).collect();
    let dp: Vec<delaunator::Point> = out
        .vertices
        .iter()
        .map(|v| delaunator::Point { x: v[0], y: v[1] })
        .collect();
    let tri = delaunator::triangulate(&dp);
    let v = &out.vertices;
    let mut kept = Vec::new();
    for t in tri.triangles.chunks_exact(3) {
        let (mut a, b, mut c) = (t[0], t[1], t[2]);
        let o = orient(v[a], v[b], v[c]);
        if o == 0.0 {
            continue;
        }
        if o < 0.0 {
            std::mem::swap(&mut a, &mut c);
        }
        if circumradius(v[a], v[b], v[c]) <= alpha {
            kept.push([a as u32, b as u32, c as u32]);
            out.area += 0.5 * o.abs();
        }
    }
    out.loops = boundary_loops(&kept);
    out.triangles = kept;
    out
}

/// Chains the directed edges used by exactly one triangle into closed loops,
/// splitting at pinch vertices so each loop is simple.
fn boundary_loops(tris: &[[u32; 3]]) -> Vec<Vec<u32>> {
    let mut count: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for t in tris {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut next: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for t in tris {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 {
                next.entry(a).or_default().push(b);
            }
        }
    }
    let mut loops = Vec::new();
    let starts: Vec<u32> = next.keys().copied().collect();
    for start in starts {
        let mut path = vec![start];
        while let Some(n) = next.get_mut(path.last().unwrap()).and_then(|o| o.pop()) {
            match path.iter().position(|&p| p == n) {
                Some(pos) => {
                    loops.push(path[pos..].to_vec());
                    path.truncate(pos + 1);
                }
                None => path.push(n),
            }
        }
    }
    loops.retain(|l| l.len() >= 3);
    loops
}
