//! Global greedy RANSAC plane detection, the comparison method.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pcrecon_core::plane::MIN_TRIPLE_PRODUCT;
use pcrecon_core::ransac::{detect_planes, DetectedPlane, RansacConfig};
use pcrecon_core::{intersect_planes3, Point3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub ransac: RansacConfig,
    /// Radius around a queried corner in which planes gather support.
    pub neighborhood: f64,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn new(threshold: f64) -> Self {
        Self {
            ransac: RansacConfig {
                threshold,
                iterations: 1000,
                min_inlier_fraction: 0.01,
                max_planes: 6,
                score_sample: 5000,
            },
            neighborhood: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub planes: Vec<DetectedPlane>,
    /// Estimate for each queried corner, `None` when fewer than three
    /// independent planes have support nearby.
    pub corners: Vec<Option<Point3>>,
}

impl BaselineResult {
    /// RMS distance of all inliers to their planes.
    pub fn inlier_rmse(&self, points: &[Point3]) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for p in &self.planes {
            for &i in &p.inliers {
                sum += p.plane.signed_distance(points[i]).powi(2);
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            (sum / n as f64).sqrt()
        }
    }
}

/// Detects planes over the whole cloud, then estimates each queried corner
/// from the three independent planes with the most inliers near it.
pub fn ransac_baseline(points: &[Point3], queries: &[Point3], cfg: &BaselineConfig) -> Result<BaselineResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let planes = detect_planes(points, &cfg.ransac, &mut rng);
    if planes.is_empty() {
        return Err(Error::NoPlaneFound);
    }
    let r2 = cfg.neighborhood * cfg.neighborhood;
    let corners = queries
        .iter()
        .map(|&q| {
            let mut support: Vec<(usize, usize)> = planes
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let n = p.inliers.iter().filter(|&&i| points[i].distance_squared(q) <= r2).count();
                    (n, k)
                })
                .filter(|&(n, _)| n >= 3)
                .collect();
            support.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut chosen: Vec<usize> = Vec::with_capacity(3);
            for &(_, k) in &support {
                let n = planes[k].plane.normal;
                let independent = match chosen.len() {
                    0 => true,
                    1 => planes[chosen[0]].plane.normal.cross(n).norm() > MIN_TRIPLE_PRODUCT,
                    _ => {
                        let (a, b) = (planes[chosen[0]].plane.normal, planes[chosen[1]].plane.normal);
                        a.cross(b).dot(n).abs() > MIN_TRIPLE_PRODUCT
                    }
                };
                if independent {
                    chosen.push(k);
                    if chosen.len() == 3 {
                        break;
                    }
                }
            }
            if chosen.len() < 3 {
                return None;
            }
            let [a, b, c] = [chosen[0], chosen[1], chosen[2]].map(|k| &planes[k].plane);
            intersect_planes3(a, b, c).ok()
        })
        .collect();
    Ok(BaselineResult { planes, corners })
}
