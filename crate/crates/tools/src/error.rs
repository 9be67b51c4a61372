use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid view: {0}")]
    InvalidView(String),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("degenerate polygon")]
    DegeneratePolygon,
    #[error("vertices are not coplanar (off by {0} m)")]
    NotCoplanar(f64),
    #[error("polygon loop intersects itself")]
    SelfIntersecting,
    #[error("extrusion direction lies in the polygon plane")]
    ParallelDirection,
    #[error("extrusion length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("nothing under the cursor")]
    NoHit,
    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: u64 },
    #[error("nothing to undo")]
    EmptyJournal,
    #[error("script line {line}: {msg}")]
    Script { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] pcrecon_core::Error),
    #[error("unsupported document version {0}")]
    Version(u32),
    #[error("document format: {0}")]
    Format(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
