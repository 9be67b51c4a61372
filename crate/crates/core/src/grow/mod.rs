//! Seeded incremental region growing over the octree.
//!
//! A session starts from a picked point: RANSAC over a spherical seed region
//! yields one to three plane regressions, which then absorb neighboring
//! points cell by cell in order of distance to the seed. The octree level
//! used per cell adapts to the observed neighbor spacing.

mod engine;
mod polygon;
mod seed;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vec3};
use crate::plane::Plane;
use crate::regression::IncrementalPlaneRegression;

pub use engine::{grow, CancelToken, GrowProgress, GrowResult, GrowState};
pub use polygon::{alpha_shape, BoundaryPolygon};
pub use seed::{init_seed, initial_level, SeedPlane};
pub use trace::{GrowTrace, TraceEvent};

/// Upper spacing ratio `d_avg / s` above which cells are refined.
pub const SPARSE_RATIO: f64 = 4.0;
/// Lower spacing ratio below which growth moves to coarser cells.
pub const DENSE_RATIO: f64 = 0.5;
/// Weight of each new neighbor distance in the running average.
pub const SPACING_EMA_WEIGHT: f64 = 0.05;
/// Segments are tracked in an 8-bit mask.
pub const MAX_SEGMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowParams {
    pub seed_point: Point3,
    /// Radius of the RANSAC seed sphere.
    pub seed_radius: f64,
    /// Desired point density in points per cubic metre.
    pub density: f64,
    /// Neighbor search radius.
    pub search_radius: f64,
    /// Maximum point-to-plane distance of an inlier.
    pub plane_threshold: f64,
    pub max_seed_planes: usize,
    pub otsu_prune: bool,
    /// Switch octree levels when the observed spacing leaves the band.
    #[serde(default = "yes")]
    pub adaptive: bool,
    #[serde(default)]
    pub rng_seed: u64,
}

fn yes() -> bool {
    true
}

impl GrowParams {
    pub fn new(seed_point: Point3, density: f64, search_radius: f64, plane_threshold: f64) -> Self {
        Self {
            seed_point,
            seed_radius: 4.0 * search_radius,
            density,
            search_radius,
            plane_threshold,
            max_seed_planes: 3,
            otsu_prune: false,
            adaptive: true,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        pos("seed radius", self.seed_radius)?;
        pos("density", self.density)?;
        pos("search radius", self.search_radius)?;
        pos("plane threshold", self.plane_threshold)?;
        if !self.seed_point.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.max_seed_planes == 0 || self.max_seed_planes > MAX_SEGMENTS {
            return Err(Error::InvalidParameter(format!(
                "max seed planes must be in 1..={MAX_SEGMENTS}"
            )));
        }
        Ok(())
    }

    /// Target point spacing `d^(-1/3)` derived from the desired density.
    pub fn target_spacing(&self) -> f64 {
        self.density.powf(-1.0 / 3.0)
    }

    /// Carving radius of boundary polygons.
    pub fn alpha(&self) -> f64 {
        2.0 * self.search_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub point_count: u64,
    pub polygon_area: f64,
    /// Smallest covariance eigenvalue, the mean squared normal residual.
    pub regression_variance: f64,
}

/// A regression together with what is known about its inliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: u32,
    pub regression: IncrementalPlaneRegression,
    pub plane: Plane,
    /// Inliers that still have foreign or unvisited points nearby.
    pub border_points: Vec<Point3>,
    /// Inliers thinned to one per voxel, used to fill the outline.
    pub footprint: Vec<Point3>,
    pub inlier_count: u64,
    pub polygon: BoundaryPolygon,
    pub stats: SegmentStats,
}

impl Segment {
    /// A segment fitted to `points` in one batch, with every point treated
    /// as a border point and the outline carved at `alpha`.
    pub fn from_points(id: u32, points: &[Point3], alpha: f64) -> Result<Self> {
        let regression = IncrementalPlaneRegression::from_points(points)?;
        let plane = regression.plane()?;
        let polygon = alpha_shape(plane, points, alpha);
        Ok(Self {
            id,
            regression,
            plane,
            border_points: points.to_vec(),
            footprint: points.to_vec(),
            inlier_count: points.len() as u64,
            stats: SegmentStats {
                point_count: regression.count,
                polygon_area: polygon.area,
                regression_variance: plane.regression_variance(),
            },
            polygon,
        })
    }

    pub fn summary(&self) -> SegmentSummary {
        SegmentSummary {
            id: self.id,
            origin: self.plane.origin,
            normal: self.plane.normal,
            tangent: self.plane.tangent,
            bitangent: self.plane.bitangent,
            variance: self.stats.regression_variance,
            point_count: self.stats.point_count,
            loops: self.polygon.loops_3d(),
            area: self.stats.polygon_area,
        }
    }
}

/// Compact per-segment progress record, also sent over the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub id: u32,
    pub origin: Point3,
    pub normal: Vec3,
    pub tangent: Vec3,
    pub bitangent: Vec3,
    pub variance: f64,
    pub point_count: u64,
    pub loops: Vec<Vec<Point3>>,
    pub area: f64,
}

/// Outline of a segment from its border points and footprint.
pub fn extract_polygon(seg: &Segment, alpha: f64) -> BoundaryPolygon {
    let mut pts = seg.footprint.clone();
    pts.extend_from_slice(&seg.border_points);
    alpha_shape(seg.plane, &pts, alpha)
}
