//! Edges and corners as intersections of grown segments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::grow::{GrowParams, Segment};
use crate::plane::{intersect_planes2, intersect_planes3, Line};

/// Polygons must reach within this many search radii of a feature.
pub const PROXIMITY_FACTOR: f64 = 4.0;
/// Border points count for an edge within this many search radii of it.
pub const EDGE_BAND_FACTOR: f64 = 2.0;
/// Polygons with less area than this count as vanishing.
pub const MIN_POLYGON_AREA: f64 = 1e-12;
/// Segments whose normal could tilt by more than this (radians) while
/// their inliers stay within the plane threshold take no part in features.
pub const MAX_NORMAL_TILT: f64 = 0.03;

/// How the endpoints are read off the projected border distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SupportRule {
    /// 2.5th to 97.5th percentile.
    Central95,
    /// The central interval, widened over neighboring samples as long as
    /// consecutive gaps stay within the edge band.
    #[default]
    Contiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSupport {
    pub range: f64,
    /// Regression variances of the two parents.
    pub variances: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFeature {
    pub line: Line,
    pub start: Point3,
    pub end: Point3,
    pub segments: [u32; 2],
    pub support: EdgeSupport,
}

impl EdgeFeature {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerFeature {
    pub position: Point3,
    pub segments: [u32; 3],
    /// Regression variances of the three parents.
    pub support: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub edges: Vec<EdgeFeature>,
    pub corners: Vec<CornerFeature>,
    /// Snapshot counter of the grow session the features were derived from.
    pub generation: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub search_radius: f64,
    pub rule: SupportRule,
    /// Plane threshold the segments were grown with; zero disables the
    /// normal tilt gate.
    pub plane_threshold: f64,
}

impl FeatureConfig {
    pub fn new(search_radius: f64) -> Self {
        Self {
            search_radius,
            rule: SupportRule::default(),
            plane_threshold: 0.0,
        }
    }

    /// Radius and tilt gate matching the parameters a segment was grown with.
    pub fn for_grow(params: &GrowParams) -> Self {
        Self {
            plane_threshold: params.plane_threshold,
            ..Self::new(params.search_radius)
        }
    }
}

/// Tilt of the normal, about the segment's narrow in-plane axis, that keeps
/// a typical inlier within `threshold`. Strips and sparse patches tilt freely.
pub fn normal_tilt_bound(s: &Segment, threshold: f64) -> f64 {
    let spread = s.plane.eigenvalues[1].max(0.0).sqrt() * (s.inlier_count as f64).sqrt();
    if spread > 0.0 {
        threshold / spread
    } else {
        f64::INFINITY
    }
}

fn usable(s: &Segment, cfg: &FeatureConfig) -> bool {
    s.polygon.area > MIN_POLYGON_AREA
        && (cfg.plane_threshold == 0.0 || normal_tilt_bound(s, cfg.plane_threshold) <= MAX_NORMAL_TILT)
}

fn polygon_reaches(s: &Segment, within: f64, dist: impl Fn(Point3) -> f64) -> bool {
    s.polygon
        .loops_3d()
        .iter()
        .flatten()
        .any(|&v| dist(v) <= within)
}

/// Linear-interpolated percentile of sorted values, `q` in [0, 1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Start and end line parameters of an edge from the border points of its
/// two segments.
pub fn edge_support_range(
    line: &Line,
    a: &[Point3],
    b: &[Point3],
    search_radius: f64,
    rule: SupportRule,
) -> Result<(f64, f64)> {
    let band = EDGE_BAND_FACTOR * search_radius;
    let near = |pts: &[Point3]| -> Vec<f64> {
        pts.iter()
            .filter(|&&p| line.distance(p) <= band)
            .map(|&p| line.parameter_of(p))
            .collect()
    };
    let ta = near(a);
    let tb = near(b);
    let have = ta.len().min(tb.len());
    if have < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            have: have as u64,
        });
    }
    let mut t = ta;
    t.extend(tb);
    t.sort_by(f64::total_cmp);
    let mut start = percentile(&t, 0.025);
    let mut end = percentile(&t, 0.975);
    if rule == SupportRule::Contiguous {
        let i = t.partition_point(|&x| x <= end);
        for w in t[i.saturating_sub(1)..].windows(2) {
            if w[1] - w[0] > band {
                break;
            }
            end = w[1];
        }
        let j = t.partition_point(|&x| x < start);
        for w in t[..(j + 1).min(t.len())].windows(2).rev() {
            if w[1] - w[0] > band {
                break;
            }
            start = w[0];
        }
    }
    Ok((start, end))
}

/// All viable edges and corners between the given segments.
pub fn synthesize_features(segments: &[Segment], search_radius: f64) -> FeatureSet {
    synthesize_with(segments, &FeatureConfig::new(search_radius))
}

pub fn synthesize_with(segments: &[Segment], cfg: &FeatureConfig) -> FeatureSet {
    let r = cfg.search_radius;
    let reach = PROXIMITY_FACTOR * r;
    let mut out = FeatureSet::default();
    let n = segments.len();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&segments[i], &segments[j]);
            if !usable(a, cfg) || !usable(b, cfg) {
                continue;
            }
            let Ok(line) = intersect_planes2(&a.plane, &b.plane) else {
                continue;
            };
            let d = |p: Point3| line.distance(p);
            if !polygon_reaches(a, reach, d) || !polygon_reaches(b, reach, d) {
                continue;
            }
            let Ok((t0, t1)) = edge_support_range(&line, &a.border_points, &b.border_points, r, cfg.rule)
            else {
                continue;
            };
            out.edges.push(EdgeFeature {
                line,
                start: line.point_at(t0),
                end: line.point_at(t1),
                segments: [a.id, b.id],
                support: EdgeSupport {
                    range: t1 - t0,
                    variances: [a.stats.regression_variance, b.stats.regression_variance],
                },
            });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let tri = [&segments[i], &segments[j], &segments[k]];
                if !tri.iter().all(|s| usable(s, cfg)) {
                    continue;
                }
                let Ok(p) = intersect_planes3(&tri[0].plane, &tri[1].plane, &tri[2].plane) else {
                    continue;
                };
                if !tri.iter().all(|s| polygon_reaches(s, reach, |v| v.distance(p))) {
                    continue;
                }
                out.corners.push(CornerFeature {
                    position: p,
                    segments: [tri[0].id, tri[1].id, tri[2].id],
                    support: tri.map(|s| s.stats.regression_variance),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    #[test]
    fn percentile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.0);
        assert!((percentile(&v, 0.025) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn outlier_beyond_a_gap_is_not_absorbed() {
        let line = Line {
            origin: Point3::ZERO,
            direction: Vec3::X,
        };
        let mut a: Vec<Point3> = (0..=100).map(|i| Vec3::new(i as f64 * 0.01, 0.0, 0.0)).collect();
        a.push(Vec3::new(3.0, 0.0, 0.0));
        let b = a.clone();
        let (s, e) = edge_support_range(&line, &a, &b, 0.01, SupportRule::Contiguous).unwrap();
        assert_eq!(s, 0.0);
        assert!((e - 1.0).abs() < 1e-12);
    }
}
