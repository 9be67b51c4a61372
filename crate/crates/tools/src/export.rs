//! Document export as a Wavefront OBJ mesh and as versioned JSON.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use pcrecon_core::Point3;

use crate::document::{ReconstructionDocument, DOCUMENT_VERSION};
use crate::error::{Error, Result};

/// Vertices closer than this are written once.
pub const WELD_TOLERANCE: f64 = 1e-9;

struct Mesh {
    vertices: Vec<Point3>,
    index: HashMap<[i64; 3], usize>,
    out: String,
}

impl Mesh {
    fn vertex(&mut self, p: Point3) -> usize {
        let key = [
            (p.x / WELD_TOLERANCE).round() as i64,
            (p.y / WELD_TOLERANCE).round() as i64,
            (p.z / WELD_TOLERANCE).round() as i64,
        ];
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len()
        })
    }

    fn face(&mut self, loop_: &[Point3]) -> String {
        let ids: Vec<String> = loop_.iter().map(|&p| self.vertex(p).to_string()).collect();
        format!("f {}\n", ids.join(" "))
    }
}

/// Polygons and prisms as an OBJ mesh. Polygons that serve as a prism base
/// are only written as part of the prism.
pub fn export_obj(doc: &ReconstructionDocument) -> Result<String> {
    let mut m = Mesh {
        vertices: Vec::new(),
        index: HashMap::new(),
        out: String::new(),
    };
    let bases: HashSet<u32> = doc.prisms.iter().map(|p| p.base).collect();
    let mut body = String::new();
    for p in &doc.polygons {
        if bases.contains(&p.id) {
            continue;
        }
        let _ = writeln!(body, "g polygon_{}", p.id);
        body += &m.face(&p.vertices);
    }
    for pr in &doc.prisms {
        let base = doc.polygon(pr.base)?;
        let _ = writeln!(body, "g prism_{}", pr.id);
        for f in pr.faces(base) {
            body += &m.face(&f);
        }
    }
    let _ = writeln!(m.out, "# pcrecon document v{DOCUMENT_VERSION}");
    for v in &m.vertices {
        let _ = writeln!(m.out, "v {} {} {}", v.x, v.y, v.z);
    }
    m.out += &body;
    Ok(m.out)
}

/// The full document, journal included, as pretty-printed JSON. Floats are
/// written with shortest round-trip formatting, so import is lossless.
pub fn export_json(doc: &ReconstructionDocument) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

pub fn import_json(s: &str) -> Result<ReconstructionDocument> {
    let doc: ReconstructionDocument = serde_json::from_str(s)?;
    if doc.version != DOCUMENT_VERSION {
        return Err(Error::Version(doc.version));
    }
    Ok(doc)
}
