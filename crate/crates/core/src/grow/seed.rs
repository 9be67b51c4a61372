use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::grow::{GrowParams, GrowState};
use crate::octree::Octree;
use crate::plane::Plane;
use crate::ransac::{detect_planes, otsu_threshold, RansacConfig};
use crate::regression::IncrementalPlaneRegression;

/// A plane found in the seed region and the seed points assigned to it,
/// ordered by distance to the seed point.
#[derive(Debug, Clone)]
pub struct SeedPlane {
    pub plane: Plane,
    pub members: Vec<usize>,
}

/// Coarsest level whose payload spacing at the seed is at most twice the
/// target spacing, or the leaf level if none is that fine.
pub fn initial_level(tree: &Octree, params: &GrowParams) -> u8 {
    let s = params.target_spacing();
    let mut level = 0;
    for l in 0..=tree.manifest().max_level {
        let Some(c) = tree.cell_containing(params.seed_point, l) else {
            break;
        };
        level = c.level;
        let leaf = tree.meta(&c).map_or(true, |m| m.leaf);
        match tree.surface_spacing_estimate(&c) {
            Some(e) if e <= 2.0 * s => break,
            _ if leaf => break,
            _ => {}
        }
    }
    level
}

pub(crate) fn fit_seed_planes(points: &[Point3], params: &GrowParams) -> Result<Vec<SeedPlane>> {
    if points.len() < 3 {
        return Err(Error::TooFewSeedPoints {
            needed: 3,
            have: points.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let cfg = RansacConfig {
        max_planes: params.max_seed_planes,
        ..RansacConfig::new(params.plane_threshold)
    };
    let mut found = detect_planes(points, &cfg, &mut rng);
    if found.is_empty() {
        return Err(Error::NoPlaneFound);
    }
    if params.otsu_prune {
        let counts: Vec<f64> = found.iter().map(|p| p.inliers.len() as f64).collect();
        if let Some(t) = otsu_threshold(&counts) {
            found.retain(|p| p.inliers.len() as f64 >= t);
        }
    }
    // Points near several planes go to the nearest one.
    let mut groups = vec![Vec::new(); found.len()];
    for (i, p) in points.iter().enumerate() {
        let best = found
            .iter()
            .enumerate()
            .map(|(k, f)| (k, f.plane.distance(*p)))
            .filter(|(_, d)| *d < params.plane_threshold)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((k, _)) = best {
            groups[k].push(i);
        }
    }
    let seed = params.seed_point;
    let mut out = Vec::new();
    for (f, mut g) in found.into_iter().zip(groups) {
        if g.len() < 3 {
            continue;
        }
        g.sort_by(|&a, &b| {
            points[a]
                .distance_squared(seed)
                .total_cmp(&points[b].distance_squared(seed))
                .then(a.cmp(&b))
        });
        out.push(SeedPlane {
            plane: f.plane,
            members: g,
        });
    }
    if out.is_empty() {
        return Err(Error::NoPlaneFound);
    }
    Ok(out)
}

/// Regressions for the planes found around the seed point.
pub fn init_seed(params: &GrowParams, tree: &Octree) -> Result<Vec<IncrementalPlaneRegression>> {
    let state = GrowState::new(tree, *params)?;
    Ok(state.regressions())
}
