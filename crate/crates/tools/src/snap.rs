//! Cursor snapping to corners, edges and planes.

use serde::{Deserialize, Serialize};

use pcrecon_core::features::FeatureSet;
use pcrecon_core::grow::{BoundaryPolygon, Segment};
use pcrecon_core::{Point3, Ray};

use crate::view::ViewPose;

pub const DEFAULT_SNAP_RADIUS_PX: f64 = 12.0;

/// Ordered by snapping priority, strongest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SnapKind {
    Corner,
    Edge,
    Plane,
    RawPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapResult {
    pub kind: SnapKind,
    pub position: Point3,
    /// Corner or edge index into the feature set, or segment id for planes.
    pub feature: Option<u32>,
    pub screen_distance: f64,
}

/// Closest point to `ray` on the segment `a..b`.
pub fn closest_on_segment(ray: &Ray, a: Point3, b: Point3) -> Point3 {
    let u = b - a;
    let len2 = u.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let w = a - ray.origin;
    let d = ray.direction;
    let (uu, ud) = (len2, u.dot(d));
    let (uw, dw) = (u.dot(w), d.dot(w));
    let den = uu - ud * ud;
    let s = if den > 1e-15 * uu {
        (ud * dw - uw) / den
    } else {
        // Edge seen end-on: take the end nearest the eye.
        -uw / uu
    };
    a + u * s.clamp(0.0, 1.0)
}

/// Even-odd containment of a plane point in all loops of a polygon.
pub fn polygon_contains(poly: &BoundaryPolygon, p: Point3) -> bool {
    let [x, y] = poly.frame.to_local(p);
    let mut inside = false;
    for l in &poly.loops {
        for k in 0..l.len() {
            let a = poly.vertices[l[k] as usize];
            let b = poly.vertices[l[(k + 1) % l.len()] as usize];
            if (a[1] > y) != (b[1] > y) {
                let xi = a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if x < xi {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Front-most segment whose polygon is hit by `ray`, with the hit point.
pub fn pick_plane<'a>(ray: &Ray, segments: &'a [Segment]) -> Option<(&'a Segment, Point3, f64)> {
    let mut best: Option<(&Segment, Point3, f64)> = None;
    for s in segments {
        let Some(t) = s.plane.intersect_ray(ray.origin, ray.direction) else {
            continue;
        };
        if t <= 0.0 {
            continue;
        }
        let hit = ray.at(t);
        if !polygon_contains(&s.polygon, hit) {
            continue;
        }
        if best.as_ref().map_or(true, |b| t < b.2 || (t == b.2 && s.id < b.0.id)) {
            best = Some((s, hit, t));
        }
    }
    best
}

fn nearest<I: Iterator<Item = (u32, Point3)>>(
    view: &ViewPose,
    cursor: [f64; 2],
    radius: f64,
    items: I,
) -> Option<(u32, Point3, f64)> {
    let mut best: Option<(u32, Point3, f64)> = None;
    for (id, p) in items {
        let Some(q) = view.project(p) else { continue };
        let d = (q[0] - cursor[0]).hypot(q[1] - cursor[1]);
        if d > radius {
            continue;
        }
        if best.map_or(true, |b| d < b.2 || (d == b.2 && id < b.0)) {
            best = Some((id, p, d));
        }
    }
    best
}

/// Snaps the cursor to the strongest nearby structure. `raw` is the picked
/// cloud point under the cursor, if any; `None` means a miss.
pub fn snap_cursor(
    view: &ViewPose,
    cursor: [f64; 2],
    features: &FeatureSet,
    segments: &[Segment],
    raw: Option<Point3>,
    radius_px: f64,
) -> Option<SnapResult> {
    let ray = view.ray(cursor);
    let corners = features
        .corners
        .iter()
        .enumerate()
        .map(|(i, c)| (i as u32, c.position));
    if let Some((id, p, d)) = nearest(view, cursor, radius_px, corners) {
        return Some(SnapResult {
            kind: SnapKind::Corner,
            position: p,
            feature: Some(id),
            screen_distance: d,
        });
    }
    let edges = features
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| (i as u32, closest_on_segment(&ray, e.start, e.end)));
    if let Some((id, p, d)) = nearest(view, cursor, radius_px, edges) {
        return Some(SnapResult {
            kind: SnapKind::Edge,
            position: p,
            feature: Some(id),
            screen_distance: d,
        });
    }
    if let Some((s, hit, _)) = pick_plane(&ray, segments) {
        return Some(SnapResult {
            kind: SnapKind::Plane,
            position: hit,
            feature: Some(s.id),
            screen_distance: 0.0,
        });
    }
    let p = raw?;
    let q = view.project(p)?;
    Some(SnapResult {
        kind: SnapKind::RawPoint,
        position: p,
        feature: None,
        screen_distance: (q[0] - cursor[0]).hypot(q[1] - cursor[1]),
    })
}
