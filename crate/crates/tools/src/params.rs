//! View-dependent growing parameters: what the user sees decides how much
//! detail a seed should capture.

use serde::{Deserialize, Serialize};

use pcrecon_core::grow::{initial_level, GrowParams};
use pcrecon_core::octree::Octree;
use pcrecon_core::Point3;

use crate::error::{Error, Result};
use crate::view::ViewPose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamConfig {
    /// Depths between which the density falls off logarithmically.
    pub z_near: f64,
    pub z_far: f64,
    /// Density in points per cubic metre at `z_near` and `z_far`.
    pub d_near: f64,
    pub d_far: f64,
    /// Seed radius as a fraction of the viewport width at the seed depth.
    pub seed_fraction: f64,
    /// Search radius over average point spacing.
    pub spacing_factor: f64,
    pub plane_threshold: f64,
}

impl Default for ParamConfig {
    fn default() -> Self {
        Self {
            z_near: 1.0,
            z_far: 100.0,
            d_near: 10_000.0,
            d_far: 100.0,
            seed_fraction: 0.1,
            spacing_factor: 2.0,
            plane_threshold: 0.005,
        }
    }
}

impl ParamConfig {
    pub fn density_at(&self, depth: f64) -> f64 {
        let t = ((depth.ln() - self.z_near.ln()) / (self.z_far.ln() - self.z_near.ln())).clamp(0.0, 1.0);
        self.d_near * (self.d_far / self.d_near).powf(t)
    }
}

/// Parameters for a seed at `p0`. `spacing` is the average point spacing
/// near `p0`; see [`estimate_spacing`].
pub fn estimate_params(view: &ViewPose, p0: Point3, spacing: f64, cfg: &ParamConfig) -> Result<GrowParams> {
    let depth = view.depth(p0);
    if !(depth > 0.0) {
        return Err(Error::InvalidView("seed point is behind the camera".into()));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Core(pcrecon_core::Error::InvalidParameter(format!(
            "point spacing must be positive, got {spacing}"
        ))));
    }
    let mut p = GrowParams::new(p0, cfg.density_at(depth), cfg.spacing_factor * spacing, cfg.plane_threshold);
    p.seed_radius = cfg.seed_fraction * view.world_width_at(depth);
    Ok(p)
}

/// Median nearest-neighbor distance among the points in the seed sphere at
/// the level growing would start from.
/// Only the seed point, seed radius and density of `params` are used.
pub fn estimate_spacing(tree: &Octree, params: &GrowParams) -> Result<Option<f64>> {
    let level = initial_level(tree, params);
    let pts: Vec<Point3> = tree
        .query_sphere(params.seed_point, params.seed_radius, level)?
        .into_iter()
        .map(|(_, _, p)| p)
        .collect();
    Ok(median_nn(&pts))
}

/// Median nearest-neighbor distance, over at most 2048 evenly strided samples.
pub fn median_nn(pts: &[Point3]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let stride = pts.len().div_ceil(2048);
    let mut d: Vec<f64> = pts
        .iter()
        .step_by(stride)
        .map(|p| {
            pts.iter()
                .map(|q| p.distance_squared(*q))
                .filter(|&d| d > 0.0)
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .filter(|d| d.is_finite())
        .collect();
    if d.is_empty() {
        return None;
    }
    let mid = d.len() / 2;
    d.select_nth_unstable_by(mid, f64::total_cmp);
    Some(d[mid])
}
