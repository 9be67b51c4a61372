//! Screen-space level of detail and raw point picking.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use pcrecon_core::octree::{CellIndex, Octree};
use pcrecon_core::{Aabb, Point3};

use crate::error::Result;
use crate::view::ViewPose;

/// Cells are refined while their payload spacing covers more pixels.
pub const LOD_PIXEL_SPACING: f64 = 1.5;

fn nearest_depth(view: &ViewPose, b: &Aabb) -> f64 {
    b.corners()
        .iter()
        .map(|&c| view.depth(c))
        .fold(f64::INFINITY, f64::min)
}

/// Payload spacing of a cell in pixels at its nearest corner; infinite
/// when the cell reaches behind the eye.
pub fn projected_spacing(tree: &Octree, view: &ViewPose, c: &CellIndex) -> f64 {
    let Some(spacing) = tree.surface_spacing_estimate(c) else {
        return 0.0;
    };
    let z = nearest_depth(view, &tree.cell_bounds(c));
    if z <= 0.0 {
        return f64::INFINITY;
    }
    spacing / view.pixel_size_at(z)
}

fn in_front(view: &ViewPose, b: &Aabb) -> bool {
    b.corners().iter().any(|&c| view.depth(c) > 0.0)
}

#[derive(PartialEq)]
struct Entry(f64, CellIndex);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then_with(|| o.1.cmp(&self.1))
    }
}

/// Cells to draw for `view`, coarse to fine. Starting from the root, the
/// cell with the largest projected spacing is replaced by its children
/// while that spacing exceeds [`LOD_PIXEL_SPACING`] and the drawn payload
/// stays within `budget` points.
pub fn select_lod(tree: &Octree, view: &ViewPose, budget: u64) -> Vec<CellIndex> {
    let payload = |c: &CellIndex| tree.meta(c).map_or(0, |m| m.payload as u64);
    let root = CellIndex::ROOT;
    if !tree.exists(&root) {
        return Vec::new();
    }
    let mut total = payload(&root);
    let mut done = Vec::new();
    let mut heap = BinaryHeap::new();
    heap.push(Entry(projected_spacing(tree, view, &root), root));
    while let Some(Entry(px, c)) = heap.pop() {
        let leaf = tree.meta(&c).map_or(true, |m| m.leaf);
        if leaf || px <= LOD_PIXEL_SPACING {
            done.push(c);
            continue;
        }
        let kids: Vec<CellIndex> = tree
            .children_of(&c)
            .into_iter()
            .filter(|k| in_front(view, &tree.cell_bounds(k)))
            .collect();
        let add: u64 = kids.iter().map(payload).sum();
        if total - payload(&c) + add > budget {
            done.push(c);
            continue;
        }
        total = total - payload(&c) + add;
        for k in kids {
            heap.push(Entry(projected_spacing(tree, view, &k), k));
        }
    }
    done.sort();
    done
}

/// Nearest cloud point drawn within `radius_px` of the cursor at the
/// screen-space level of detail.
pub fn pick_raw(tree: &Octree, view: &ViewPose, cursor: [f64; 2], radius_px: f64) -> Result<Option<Point3>> {
    let ray = view.ray(cursor);
    let mut best: Option<(f64, f64, Point3)> = None;
    let mut stack = vec![CellIndex::ROOT];
    while let Some(c) = stack.pop() {
        let Some(meta) = tree.meta(&c) else { continue };
        let b = tree.cell_bounds(&c);
        let center = b.center();
        let half = 0.5 * b.size().norm();
        let t = (center - ray.origin).dot(ray.direction).max(0.0);
        let slack = radius_px * view.pixel_size_at((t + half).max(0.0));
        if ray.distance_to_point(center) > half + slack || !in_front(view, &b) {
            continue;
        }
        if !meta.leaf && projected_spacing(tree, view, &c) > LOD_PIXEL_SPACING {
            stack.extend(tree.children_of(&c));
            continue;
        }
        let cell = tree.load_cell_at(&c)?;
        for &p in &cell.points {
            let Some(q) = view.project(p) else { continue };
            let d = (q[0] - cursor[0]).hypot(q[1] - cursor[1]);
            if d > radius_px {
                continue;
            }
            let z = view.depth(p);
            let better = match best {
                None => true,
                Some((bz, bd, bp)) => (z, d, p.to_array()) < (bz, bd, bp.to_array()),
            };
            if better {
                best = Some((z, d, p));
            }
        }
    }
    Ok(best.map(|b| b.2))
}
