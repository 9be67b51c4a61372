//! Screen-space error driven cell selection for streaming to a viewer.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use pcrecon_core::octree::{CellIndex, Octree};
use pcrecon_core::Aabb;
use pcrecon_tools::ViewPose;

/// Cells are refined while their projected point spacing exceeds this.
pub const MAX_PROJECTED_SPACING_PX: f64 = 1.5;

const NEAR: f64 = 1e-3;

struct Candidate {
    px: f64,
    idx: CellIndex,
}

impl PartialEq for Candidate {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Candidate {
    fn cmp(&self, o: &Self) -> Ordering {
        // coarsest error first; then lower level, then index, for determinism
        self.px
            .total_cmp(&o.px)
            .then_with(|| o.idx.level.cmp(&self.idx.level))
            .then_with(|| o.idx.cmp(&self.idx))
    }
}

/// Conservative frustum test against the four side planes and the eye plane.
pub fn in_frustum(pose: &ViewPose, b: &Aabb) -> bool {
    let tan_v = (0.5 * pose.fov_y).tan();
    let tan_h = tan_v * pose.aspect();
    let (f, r, u) = (pose.forward, pose.right(), pose.up);
    let planes = [
        f,
        f * tan_h - r,
        f * tan_h + r,
        f * tan_v - u,
        f * tan_v + u,
    ];
    let corners = b.corners();
    planes
        .iter()
        .all(|n| corners.iter().any(|&c| n.dot(c - pose.eye) >= 0.0))
}

/// Point spacing of a cell in pixels, seen from its nearest point.
pub fn projected_spacing(tree: &Octree, pose: &ViewPose, idx: &CellIndex) -> f64 {
    let Some(s) = tree.surface_spacing_estimate(idx) else {
        return 0.0;
    };
    let d = tree.cell_bounds(idx).distance_to(pose.eye).max(NEAR);
    s / pose.pixel_size_at(d)
}

/// Visible cells, coarse to fine, refined while their projected spacing
/// exceeds `max_px` and their payloads fit in `budget` points. The root is
/// always included when visible.
pub fn select_lod(tree: &Octree, pose: &ViewPose, budget: u64, max_px: f64) -> Vec<CellIndex> {
    let mut out = Vec::new();
    let root = CellIndex::ROOT;
    if !tree.exists(&root) || !in_frustum(pose, &tree.cell_bounds(&root)) {
        return out;
    }
    let mut used = 0u64;
    let mut heap = BinaryHeap::new();
    heap.push(Candidate {
        px: projected_spacing(tree, pose, &root),
        idx: root,
    });
    while let Some(Candidate { px, idx }) = heap.pop() {
        let meta = tree.meta(&idx).expect("queued cells exist");
        let payload = meta.payload as u64;
        if idx != root && used + payload > budget {
            continue;
        }
        used += payload;
        out.push(idx);
        if meta.leaf || px <= max_px {
            continue;
        }
        for c in tree.children_of(&idx) {
            if in_frustum(pose, &tree.cell_bounds(&c)) {
                heap.push(Candidate {
                    px: projected_spacing(tree, pose, &c),
                    idx: c,
                });
            }
        }
    }
    out
}
