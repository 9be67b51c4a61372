//! Greedy RANSAC plane detection with least-squares refit, and Otsu's
//! threshold for pruning weak candidates.

use rand::seq::index::sample;
use rand::Rng;

use crate::geometry::Point3;
use crate::plane::Plane;
use crate::regression::IncrementalPlaneRegression;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    /// Inlier distance to the candidate plane.
    pub threshold: f64,
    pub iterations: usize,
    /// Minimum inliers of an accepted plane, as a fraction of all input points.
    pub min_inlier_fraction: f64,
    pub max_planes: usize,
    /// When nonzero and the pool is larger, candidates are drawn and scored
    /// on a random subset of this many points; the winner is refit on the
    /// whole pool.
    pub score_sample: usize,
}

impl RansacConfig {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            iterations: 100,
            min_inlier_fraction: 0.1,
            max_planes: 3,
            score_sample: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DetectedPlane {
    pub plane: Plane,
    /// Indices into the input slice, ascending.
    pub inliers: Vec<usize>,
}

fn lsq_plane(points: &[Point3], idx: &[usize]) -> Option<Plane> {
    let pts: Vec<Point3> = idx.iter().map(|&i| points[i]).collect();
    let r = IncrementalPlaneRegression::from_points(&pts).ok()?;
    let p = r.plane().ok()?;
    (!p.rank_deficient).then_some(p)
}

/// Extracts up to `max_planes` planes one after another, removing the
/// inliers of each from the pool. Results are sorted by inlier count,
/// largest first.
pub fn detect_planes<R: Rng>(points: &[Point3], cfg: &RansacConfig, rng: &mut R) -> Vec<DetectedPlane> {
    let n = points.len();
    let min_inliers = ((cfg.min_inlier_fraction * n as f64).ceil() as usize).max(3);
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    while out.len() < cfg.max_planes && remaining.len() >= min_inliers.max(3) {
        let pool: Vec<usize> = if cfg.score_sample > 0 && remaining.len() > cfg.score_sample {
            sample(rng, remaining.len(), cfg.score_sample)
                .into_iter()
                .map(|k| remaining[k])
                .collect()
        } else {
            remaining.clone()
        };
        let scale = remaining.len() as f64 / pool.len() as f64;
        let mut best: Option<(usize, Plane)> = None;
        for _ in 0..cfg.iterations {
            let a = pool[rng.gen_range(0..pool.len())];
            let b = pool[rng.gen_range(0..pool.len())];
            let c = pool[rng.gen_range(0..pool.len())];
            if a == b || b == c || a == c {
                continue;
            }
            let Some(pl) = Plane::through(points[a], points[b], points[c]) else {
                continue;
            };
            let count = pool.iter().filter(|&&i| pl.distance(points[i]) < cfg.threshold).count();
            if best.as_ref().map_or(true, |(k, _)| count > *k) {
                best = Some((count, pl));
            }
        }
        let Some((count, candidate)) = best else { break };
        if (count as f64 * scale) < min_inliers as f64 {
            break;
        }
        let inliers: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| candidate.distance(points[i]) < cfg.threshold)
            .collect();
        let plane = lsq_plane(points, &inliers).unwrap_or(candidate);
        let inliers: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| plane.distance(points[i]) < cfg.threshold)
            .collect();
        if inliers.len() < min_inliers {
            break;
        }
        let mut taken = vec![false; n];
        for &i in &inliers {
            taken[i] = true;
        }
        remaining.retain(|&i| !taken[i]);
        out.push(DetectedPlane { plane, inliers });
    }
    out.sort_by(|a, b| b.inliers.len().cmp(&a.inliers.len()));
    out
}

/// Otsu's threshold over a 1-D sample: the split that maximizes the
/// between-class variance. Returns the smallest value of the upper class, or
/// `None` when no split separates anything.
pub fn otsu_threshold(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n < 2 {
        return None;
    }
    let total: f64 = v.iter().sum();
    let mut best = (0.0, None);
    let mut sum_lo = 0.0;
    for k in 1..n {
        sum_lo += v[k - 1];
        if v[k] == v[k - 1] {
            continue;
        }
        let w0 = k as f64 / n as f64;
        let w1 = 1.0 - w0;
        let m0 = sum_lo / k as f64;
        let m1 = (total - sum_lo) / (n - k) as f64;
        let between = w0 * w1 * (m0 - m1).powi(2);
        if between > best.0 {
            best = (between, Some(v[k]));
        }
    }
    best.1
}
