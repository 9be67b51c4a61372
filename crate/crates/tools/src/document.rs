use serde::{Deserialize, Serialize};

use pcrecon_core::{Plane, Point3, Vec3};

use crate::error::{Error, Result};
use crate::polygon::{
    polygon_construct, polygon_extrude, polygon_move_copy, ExtrudeStop, Prism, Translation, WorkPolygon,
};

pub const DOCUMENT_VERSION: u32 = 1;

/// A document edit, as recorded in the journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Construct {
        vertices: Vec<Point3>,
        plane: Option<Plane>,
    },
    Move {
        polygon: u32,
        translation: Translation,
    },
    Copy {
        polygon: u32,
        translation: Translation,
    },
    Extrude {
        polygon: u32,
        direction: Vec3,
        stop: ExtrudeStop,
    },
}

/// What one edit added or changed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub polygons: Vec<WorkPolygon>,
    pub prisms: Vec<Prism>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionDocument {
    pub version: u32,
    pub polygons: Vec<WorkPolygon>,
    pub prisms: Vec<Prism>,
    pub journal: Vec<Op>,
    pub next_id: u32,
}

impl Default for ReconstructionDocument {
    fn default() -> Self {
        Self {
            version: DOCUMENT_VERSION,
            polygons: Vec::new(),
            prisms: Vec::new(),
            journal: Vec::new(),
            next_id: 1,
        }
    }
}

impl ReconstructionDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn polygon(&self, id: u32) -> Result<&WorkPolygon> {
        self.polygons
            .iter()
            .find(|p| p.id == id)
            .ok_or(Error::UnknownId { kind: "polygon", id: id as u64 })
    }

    fn take_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Applies `op` and records it. A failed op leaves the document as it was.
    pub fn apply(&mut self, op: Op) -> Result<Delta> {
        let mut delta = Delta::default();
        match &op {
            Op::Construct { vertices, plane } => {
                let p = polygon_construct(self.next_id, vertices, *plane)?;
                self.take_id();
                delta.polygons.push(p.clone());
                self.polygons.push(p);
            }
            Op::Move { polygon, translation } => {
                let src = self.polygon(*polygon)?;
                let moved = polygon_move_copy(src, translation, false, src.id);
                let slot = self.polygons.iter_mut().find(|p| p.id == *polygon).unwrap();
                *slot = moved.clone();
                delta.polygons.push(moved);
            }
            Op::Copy { polygon, translation } => {
                let copy = polygon_move_copy(self.polygon(*polygon)?, translation, true, self.next_id);
                self.take_id();
                delta.polygons.push(copy.clone());
                self.polygons.push(copy);
            }
            Op::Extrude {
                polygon,
                direction,
                stop,
            } => {
                let prism = polygon_extrude(self.polygon(*polygon)?, *direction, *stop, self.next_id)?;
                self.take_id();
                delta.prisms.push(prism);
                self.prisms.push(prism);
            }
        }
        self.journal.push(op);
        Ok(delta)
    }

    /// Rebuilds a document by applying `ops` to an empty one.
    pub fn replay(ops: &[Op]) -> Result<Self> {
        let mut doc = Self::new();
        for op in ops {
            doc.apply(op.clone())?;
        }
        Ok(doc)
    }

    /// Reverts the last edit and returns it.
    pub fn undo(&mut self) -> Result<Op> {
        let mut ops = std::mem::take(&mut self.journal);
        let last = ops.pop().ok_or(Error::EmptyJournal)?;
        *self = Self::replay(&ops)?;
        Ok(last)
    }
}
