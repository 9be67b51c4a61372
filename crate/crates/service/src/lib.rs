//! Network service for interactive reconstruction: streams level-of-detail
//! cells to a viewer, grows segments with progressive updates, snaps picks
//! and runs modeling tools. The wire format is described in `PROTOCOL.md`.

pub mod error;
pub mod lod;
pub mod protocol;
pub mod queue;
pub mod server;

pub use error::{Error, Result};
pub use lod::select_lod;
pub use protocol::{ClientFrame, Request, Response, ServerFrame, PROTOCOL_VERSION};
pub use queue::ProgressQueue;
pub use server::{ServerHandle, Service, ServiceConfig};
