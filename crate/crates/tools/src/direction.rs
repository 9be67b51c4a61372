use pcrecon_core::features::FeatureSet;
use pcrecon_core::grow::Segment;
use pcrecon_core::Vec3;

use crate::error::{Error, Result};
use crate::snap::{SnapKind, SnapResult};
use crate::view::ViewPose;

fn segment(segments: &[Segment], id: u32) -> Result<&Segment> {
    segments
        .iter()
        .find(|s| s.id == id)
        .ok_or(Error::UnknownId { kind: "segment", id: id as u64 })
}

/// Directions offered at a snapped feature. The first one is the default
/// when the pointer did not move.
pub fn direction_candidates(snap: &SnapResult, features: &FeatureSet, segments: &[Segment]) -> Result<Vec<Vec3>> {
    let id = snap.feature.ok_or(Error::NoHit)?;
    let missing = |kind| Error::UnknownId { kind, id: id as u64 };
    match snap.kind {
        SnapKind::Plane => Ok(vec![segment(segments, id)?.plane.normal]),
        SnapKind::Edge => {
            let e = features.edges.get(id as usize).ok_or_else(|| missing("edge"))?;
            let d = e.line.direction;
            let mut out = vec![d];
            for s in e.segments {
                out.push(segment(segments, s)?.plane.normal.cross(d).normalize());
            }
            Ok(out)
        }
        SnapKind::Corner => {
            let c = features.corners.get(id as usize).ok_or_else(|| missing("corner"))?;
            let n: Vec<Vec3> = c
                .segments
                .iter()
                .map(|&s| segment(segments, s).map(|s| s.plane.normal))
                .collect::<Result<_>>()?;
            Ok([(0, 1), (0, 2), (1, 2)]
                .into_iter()
                .filter_map(|(a, b)| n[a].cross(n[b]).try_normalize())
                .collect())
        }
        SnapKind::RawPoint => Err(Error::NoHit),
    }
}

/// Direction picked from a snapped feature and a pointer movement in
/// pixels. Planes give their normal toward the viewer; edges and corners
/// give the candidate whose screen image best follows the pointer.
pub fn find_direction(
    view: &ViewPose,
    snap: &SnapResult,
    features: &FeatureSet,
    segments: &[Segment],
    gesture: [f64; 2],
) -> Result<Vec3> {
    if snap.kind == SnapKind::Plane {
        let s = segment(segments, snap.feature.ok_or(Error::NoHit)?)?;
        return Ok(s.plane.normal_toward(view.eye));
    }
    let cands = direction_candidates(snap, features, segments)?;
    let Some(&first) = cands.first() else {
        return Err(Error::NoHit);
    };
    let g = gesture[0].hypot(gesture[1]);
    if g == 0.0 {
        return Ok(first);
    }
    let p = snap.position;
    let Some(p0) = view.project(p) else {
        return Ok(first);
    };
    let h = view.depth(p).max(1e-9) * 1e-3;
    let mut best = (f64::NEG_INFINITY, first);
    for d in cands {
        let Some(q) = view.project(p + d * h) else { continue };
        let s = [q[0] - p0[0], q[1] - p0[1]];
        let len = s[0].hypot(s[1]);
        if len == 0.0 {
            continue;
        }
        let align = (s[0] * gesture[0] + s[1] * gesture[1]) / (len * g);
        for (a, v) in [(align, d), (-align, -d)] {
            if a > best.0 {
                best = (a, v);
            }
        }
    }
    Ok(best.1)
}
