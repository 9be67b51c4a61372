//! Single-pass incremental plane regression.
//!
//! A regression keeps only running sums over the points added so far, all
//! expressed relative to a reference point (the first point added). The
//! covariance matrix, and from it the best-fit plane, can be synthesized at
//! any moment without revisiting points.

use serde::{Deserialize, Serialize};

use crate::eigen::{eig_sym3, SymMat3};
use crate::error::{Error, Result};
use crate::geometry::{Point3, Vec3};
use crate::plane::Plane;

/// `lambda1 / lambda0` below this marks a collinear point set.
pub const COLLINEAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementalPlaneRegression {
    /// Sum of relative coordinates.
    pub sum: Vec3,
    /// Componentwise sum of squared relative coordinates.
    pub sum_sq: Vec3,
    pub count: u64,
    /// Cross-product sums `(sum y*z, sum x*z, sum x*y)`.
    pub cross: Vec3,
    pub reference: Point3,
    pub last_point: Point3,
}

impl IncrementalPlaneRegression {
    /// Starts a regression at `p0`, which becomes the reference point.
    pub fn new(p0: Point3) -> Result<Self> {
        if !p0.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            sum: Vec3::ZERO,
            sum_sq: Vec3::ZERO,
            count: 1,
            cross: Vec3::ZERO,
            reference: p0,
            last_point: p0,
        })
    }

    /// Builds a regression from a non-empty slice of points.
    pub fn from_points(points: &[Point3]) -> Result<Self> {
        let (first, rest) = points.split_first().ok_or(Error::InsufficientPoints {
            needed: 1,
            have: 0,
        })?;
        let mut r = Self::new(*first)?;
        for p in rest {
            r.update(*p)?;
        }
        Ok(r)
    }

    /// Adds a point in constant time.
    pub fn update(&mut self, p: Point3) -> Result<()> {
        if !p.is_finite() {
            return Err(Error::NonFinite);
        }
        let q = p - self.reference;
        self.sum += q;
        self.sum_sq += q.mul_elem(q);
        self.count += 1;
        self.cross += Vec3::new(q.y * q.z, q.x * q.z, q.x * q.y);
        self.last_point = p;
        Ok(())
    }

    /// Returns a copy with `p` added.
    pub fn updated(mut self, p: Point3) -> Result<Self> {
        self.update(p)?;
        Ok(self)
    }

    /// Mean of all added points in absolute coordinates.
    pub fn centroid(&self) -> Point3 {
        self.reference + self.sum / self.count as f64
    }

    /// Sample covariance (divisor `c - 1`).
    pub fn covariance(&self) -> Result<SymMat3> {
        if self.count < 2 {
            return Err(Error::InsufficientPoints {
                needed: 2,
                have: self.count,
            });
        }
        let c = self.count as f64;
        let mean = self.sum / c;
        let (s, sq, d) = (self.sum, self.sum_sq, self.cross);
        let inv = 1.0 / (c - 1.0);
        Ok(SymMat3::new(
            (sq.x - mean.x * s.x) * inv,
            (sq.y - mean.y * s.y) * inv,
            (sq.z - mean.z * s.z) * inv,
            (d.z - mean.x * s.y) * inv,
            (d.y - mean.x * s.z) * inv,
            (d.x - mean.y * s.z) * inv,
        ))
    }

    /// Re-expresses the sums relative to a new reference point `r`.
    ///
    /// With `d = ref - r`, every relative coordinate `q` becomes `q + d`. The
    /// cross term over the `(x, y)` pair accumulates into `cross.z`, `(x, z)`
    /// into `cross.y` and `(y, z)` into `cross.x`.
    pub fn rebased(&self, r: Point3) -> Self {
        let d = self.reference - r;
        let c = self.count as f64;
        let s = self.sum;
        let xy = d.x * s.y + d.y * s.x + c * d.x * d.y;
        let xz = d.x * s.z + d.z * s.x + c * d.x * d.z;
        let yz = d.y * s.z + d.z * s.y + c * d.y * d.z;
        Self {
            sum: s + d * c,
            sum_sq: self.sum_sq + d.mul_elem(s) * 2.0 + d.mul_elem(d) * c,
            count: self.count,
            cross: self.cross + Vec3::new(yz, xz, xy),
            reference: r,
            last_point: self.last_point,
        }
    }

    /// Rebases onto the current centroid, the numerically best reference.
    pub fn recentered(&self) -> Self {
        self.rebased(self.centroid())
    }

    /// Best-fit plane through the added points.
    ///
    /// The normal is the eigenvector of the smallest covariance eigenvalue.
    /// The origin is the last added point projected onto the fitted plane.
    pub fn plane(&self) -> Result<Plane> {
        if self.count < 3 {
            return Err(Error::InsufficientPoints {
                needed: 3,
                have: self.count,
            });
        }
        let cov = self.covariance()?;
        let eig = eig_sym3(&cov);
        let [l0, l1, l2] = eig.values;
        let scale = self.sum_sq.max_element().max(1.0) / self.count as f64;
        if !(l0 > 1e-30 * scale) {
            return Err(Error::DegenerateRegression);
        }
        let rank_deficient = l1 / l0 < COLLINEAR_RATIO;
        let [tangent, bitangent, normal] = eig.vectors;
        let centroid = self.centroid();
        let off = normal.dot(self.last_point - centroid);
        Ok(Plane {
            origin: self.last_point - normal * off,
            normal,
            tangent,
            bitangent,
            eigenvalues: [l0, l1, l2.max(0.0)],
            rank_deficient,
        })
    }

    /// Regression variance along the normal, the smallest eigenvalue.
    pub fn variance(&self) -> Result<f64> {
        Ok(self.plane()?.eigenvalues[2])
    }
}
