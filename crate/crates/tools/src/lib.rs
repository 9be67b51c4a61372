//! Feature-assisted modeling on top of grown segments: cursor snapping,
//! direction finding, polygon construction, move/copy and extrusion, a
//! journaled document, mesh export and scripted sessions.

pub mod direction;
pub mod document;
pub mod error;
pub mod export;
pub mod params;
pub mod pick;
pub mod polygon;
pub mod report;
pub mod script;
pub mod session;
pub mod snap;
pub mod view;

pub use direction::find_direction;
pub use document::{Delta, Op, ReconstructionDocument};
pub use error::{Error, Result};
pub use export::{export_json, export_obj, import_json};
pub use params::{estimate_params, estimate_spacing, ParamConfig};
pub use polygon::{
    polygon_construct, polygon_extrude, polygon_move_copy, ExtrudeStop, Prism, Provenance, Translation, WorkPolygon,
};
pub use report::GrowReport;
pub use session::Session;
pub use snap::{snap_cursor, SnapKind, SnapResult, DEFAULT_SNAP_RADIUS_PX};
pub use view::{ViewPose, SYNTHETIC_DISTANCE};
