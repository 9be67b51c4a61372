use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vec3};

/// A plane with an orthonormal frame synthesized from a regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub origin: Point3,
    /// Unsigned normal; sign fixed by the eigenvector convention.
    pub normal: Vec3,
    pub tangent: Vec3,
    pub bitangent: Vec3,
    /// Covariance eigenvalues, descending. `eigenvalues[2]` is the variance
    /// of the points along the normal.
    pub eigenvalues: [f64; 3],
    /// Set when the points are (numerically) collinear and the normal is not
    /// determined by the data.
    pub rank_deficient: bool,
}

impl Plane {
    /// A plane through `origin` with the given normal and an arbitrary frame.
    pub fn from_normal(origin: Point3, normal: Vec3) -> Self {
        let normal = normal.normalize();
        let tangent = normal.any_orthonormal();
        let bitangent = normal.cross(tangent);
        Self {
            origin,
            normal,
            tangent,
            bitangent,
            eigenvalues: [0.0; 3],
            rank_deficient: false,
        }
    }

    /// Plane through three points.
    pub fn through(a: Point3, b: Point3, c: Point3) -> Option<Self> {
        let n = (b - a).cross(c - a).try_normalize()?;
        Some(Self::from_normal(a, n))
    }

    /// Signed offset `n . x` of the plane equation `n . x = offset`.
    pub fn offset(&self) -> f64 {
        self.normal.dot(self.origin)
    }

    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.normal.dot(p - self.origin)
    }

    /// Unsigned point-to-plane distance.
    pub fn distance(&self, p: Point3) -> f64 {
        self.signed_distance(p).abs()
    }

    pub fn project(&self, p: Point3) -> Point3 {
        p - self.normal * self.signed_distance(p)
    }

    /// Coordinates of `p` in the tangent frame, relative to the origin.
    pub fn to_local(&self, p: Point3) -> [f64; 2] {
        let d = p - self.origin;
        [d.dot(self.tangent), d.dot(self.bitangent)]
    }

    pub fn from_local(&self, uv: [f64; 2]) -> Point3 {
        self.origin + self.tangent * uv[0] + self.bitangent * uv[1]
    }

    pub fn regression_variance(&self) -> f64 {
        self.eigenvalues[2]
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        let unit = |v: Vec3| (v.norm() - 1.0).abs() <= tol;
        unit(self.normal)
            && unit(self.tangent)
            && unit(self.bitangent)
            && self.normal.dot(self.tangent).abs() <= tol
            && self.normal.dot(self.bitangent).abs() <= tol
            && self.tangent.dot(self.bitangent).abs() <= tol
    }

    /// Ray parameter of the intersection with this plane, if in front.
    pub fn intersect_ray(&self, origin: Point3, dir: Vec3) -> Option<f64> {
        let denom = self.normal.dot(dir);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = self.normal.dot(self.origin - origin) / denom;
        (t >= 0.0).then_some(t)
    }

    /// Returns the plane normal flipped, if needed, to face `viewer`.
    pub fn normal_toward(&self, viewer: Point3) -> Vec3 {
        if self.signed_distance(viewer) >= 0.0 {
            self.normal
        } else {
            -self.normal
        }
    }
}

/// Planes whose normals differ by less than this angle count as parallel.
pub const PARALLEL_TOLERANCE_RAD: f64 = std::f64::consts::PI / 180.0;

/// An infinite line with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub origin: Point3,
    pub direction: Vec3,
}

impl Line {
    pub fn parameter_of(&self, p: Point3) -> f64 {
        (p - self.origin).dot(self.direction)
    }

    pub fn point_at(&self, t: f64) -> Point3 {
        self.origin + self.direction * t
    }

    pub fn distance(&self, p: Point3) -> f64 {
        (p - self.point_at(self.parameter_of(p))).norm()
    }
}

fn normals_parallel(a: Vec3, b: Vec3, tol: f64) -> bool {
    let ang = a.angle(b);
    ang < tol || (std::f64::consts::PI - ang) < tol
}

/// Intersection line of two planes. The direction is `normalize(a.n x b.n)`;
/// the origin is the point on the line closest to the midpoint of the two
/// plane origins.
pub fn intersect_planes2(a: &Plane, b: &Plane) -> Result<Line> {
    if normals_parallel(a.normal, b.normal, PARALLEL_TOLERANCE_RAD) {
        return Err(Error::NoIntersection);
    }
    let dir = a
        .normal
        .cross(b.normal)
        .try_normalize()
        .ok_or(Error::NoIntersection)?;
    // Solve the 3x3 system [na; nb; dir] x = [oa; ob; dir . m].
    let m = (a.origin + b.origin) * 0.5;
    let origin = solve3(
        [a.normal, b.normal, dir],
        [a.offset(), b.offset(), dir.dot(m)],
    )
    .ok_or(Error::NoIntersection)?;
    Ok(Line { origin, direction: dir })
}

/// Condition bound on the triple product of unit normals for a corner.
pub const MIN_TRIPLE_PRODUCT: f64 = 1e-3;

/// Intersection point of three planes.
pub fn intersect_planes3(a: &Plane, b: &Plane, c: &Plane) -> Result<Point3> {
    for (p, q) in [(a, b), (a, c), (b, c)] {
        if normals_parallel(p.normal, q.normal, PARALLEL_TOLERANCE_RAD) {
            return Err(Error::NoIntersection);
        }
    }
    let triple = a.normal.dot(b.normal.cross(c.normal));
    if triple.abs() < MIN_TRIPLE_PRODUCT {
        return Err(Error::NoIntersection);
    }
    // Shift to a local origin so large coordinates do not cost precision.
    let base = (a.origin + b.origin + c.origin) / 3.0;
    let rhs = [
        a.normal.dot(a.origin - base),
        b.normal.dot(b.origin - base),
        c.normal.dot(c.origin - base),
    ];
    let x = solve3([a.normal, b.normal, c.normal], rhs).ok_or(Error::NoIntersection)?;
    Ok(base + refine3([a, b, c], base, x))
}

/// One step of residual correction for the three-plane system.
fn refine3(planes: [&Plane; 3], base: Point3, x: Vec3) -> Vec3 {
    let rows = [planes[0].normal, planes[1].normal, planes[2].normal];
    let r = [
        planes[0].normal.dot(planes[0].origin - base) - rows[0].dot(x),
        planes[1].normal.dot(planes[1].origin - base) - rows[1].dot(x),
        planes[2].normal.dot(planes[2].origin - base) - rows[2].dot(x),
    ];
    match solve3(rows, r) {
        Some(dx) => x + dx,
        None => x,
    }
}

/// Solves `rows * x = rhs` with Cramer's rule on row vectors.
pub fn solve3(rows: [Vec3; 3], rhs: [f64; 3]) -> Option<Vec3> {
    let [r0, r1, r2] = rows;
    let c12 = r1.cross(r2);
    let det = r0.dot(c12);
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let c20 = r2.cross(r0);
    let c01 = r0.cross(r1);
    Some((c12 * rhs[0] + c20 * rhs[1] + c01 * rhs[2]) / det)
}
