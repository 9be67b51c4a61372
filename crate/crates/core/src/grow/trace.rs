use serde::{Deserialize, Serialize};

use crate::octree::CellIndex;

/// One scheduling decision of a growing session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraceEvent {
    Processed {
        cell: CellIndex,
        added: u64,
        /// `d_avg / s` after the cell.
        ratio: f64,
    },
    /// Cell had no border point within the search radius.
    Dropped { cell: CellIndex },
    /// Too sparse: the cell was replaced by its children.
    Refined { cell: CellIndex },
    /// Too sparse, but the cell is a leaf.
    AtLeafFloor { cell: CellIndex },
    /// Too dense: the level is locked until the marked cells are done.
    Locked { level: u8, marked_parents: usize },
    /// Lock released; `replaced` queued cells moved to their parents.
    Coarsened { replaced: usize },
    Unlocked,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowTrace {
    pub events: Vec<TraceEvent>,
}

impl GrowTrace {
    pub fn processed(&self) -> impl Iterator<Item = (&CellIndex, u64, f64)> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Processed { cell, added, ratio } => Some((cell, *added, *ratio)),
            _ => None,
        })
    }

    /// Level decreases that actually moved queued cells to a coarser level.
    pub fn coarsenings(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Coarsened { replaced } if *replaced > 0))
            .count()
    }

    pub fn refinements(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Refined { .. }))
            .count()
    }

    /// True when no processed cell overlaps another processed cell at the
    /// same or a finer level, i.e. every region was swept at most once.
    pub fn is_disjoint(&self) -> bool {
        let cells: Vec<CellIndex> = self.processed().map(|(c, _, _)| *c).collect();
        let set: std::collections::HashSet<CellIndex> = cells.iter().copied().collect();
        if set.len() != cells.len() {
            return false;
        }
        cells.iter().all(|c| {
            let mut a = *c;
            while let Some(p) = a.parent() {
                if set.contains(&p) {
                    return false;
                }
                a = p;
            }
            true
        })
    }
}
