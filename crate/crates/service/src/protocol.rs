//! Wire messages. Control frames are JSON text messages with a protocol
//! version `v`, an optional client-chosen request id `req` echoed in the
//! replies, and a `type` tag. Cell payloads travel as binary messages; see
//! [`encode_cell_frame`].

use serde::{Deserialize, Serialize};

use pcrecon_core::features::FeatureSet;
use pcrecon_core::grow::{GrowParams, SegmentSummary};
use pcrecon_core::octree::{CellIndex, OctreeManifest};
use pcrecon_core::Aabb;
use pcrecon_tools::session::ParamOverrides;
use pcrecon_tools::{Delta, GrowReport, SnapResult, ViewPose};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolOp {
    Construct,
    Move,
    Copy,
    Extrude,
}

impl ToolOp {
    pub fn keyword(self) -> &'static str {
        match self {
            ToolOp::Construct => "construct",
            ToolOp::Move => "move",
            ToolOp::Copy => "copy",
            ToolOp::Extrude => "extrude",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Obj,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Open {
        cloud: String,
    },
    /// Updates the session's view without asking for anything.
    View {
        pose: ViewPose,
    },
    Cells {
        pose: ViewPose,
        /// Maximum number of points to stream.
        budget: u64,
    },
    Pick {
        pose: ViewPose,
        cursor: [f64; 2],
    },
    Grow {
        seed: SnapResult,
        #[serde(default)]
        overrides: ParamOverrides,
    },
    /// `args` uses the session script syntax of the same command.
    Tool {
        op: ToolOp,
        args: String,
    },
    Cancel {
        grow: u64,
    },
    Export {
        format: ExportFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Not valid JSON or not a known message.
    BadRequest,
    Version,
    /// No `open` yet, or a second one.
    Session,
    UnknownCloud,
    UnknownId,
    /// The request was understood but failed on the data.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Response {
    Opened {
        session: u64,
        manifest: OctreeManifest,
    },
    /// Sent after the last binary cell frame of a `cells` request.
    CellsDone {
        cells: usize,
        points: u64,
    },
    Picked {
        snap: Option<SnapResult>,
    },
    GrowStarted {
        grow: u64,
        params: GrowParams,
    },
    Progress {
        grow: u64,
        /// Increases by one per snapshot taken; gaps mean superseded frames.
        seq: u64,
        cells_processed: usize,
        segments: Vec<SegmentSummary>,
    },
    GrowDone {
        grow: u64,
        terminal: bool,
        report: GrowReport,
    },
    GrowFailed {
        grow: u64,
        terminal: bool,
        code: ErrorCode,
        message: String,
    },
    CancelAck {
        grow: u64,
    },
    Delta {
        delta: Delta,
        features: FeatureSet,
    },
    Exported {
        format: ExportFormat,
        data: String,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientFrame {
    pub v: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub req: Option<u64>,
    #[serde(flatten)]
    pub body: Request,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerFrame {
    pub v: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub req: Option<u64>,
    #[serde(flatten)]
    pub body: Response,
}

impl ClientFrame {
    pub fn new(req: Option<u64>, body: Request) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            req,
            body,
        }
    }
}

impl ServerFrame {
    pub fn new(req: Option<u64>, body: Response) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            req,
            body,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(
            self.body,
            Response::GrowDone { .. } | Response::GrowFailed { .. }
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }
}

/// Header of a binary cell frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellHeader {
    pub v: u32,
    pub req: Option<u64>,
    pub cell: CellIndex,
    pub bounds: Aabb,
    /// Absolute position of the blob's relative coordinates.
    pub offset: [f64; 3],
}

/// `u32` LE header length, the JSON header, then the cell blob exactly as
/// stored in the octree.
pub fn encode_cell_frame(header: &CellHeader, blob: &[u8]) -> Vec<u8> {
    let h = serde_json::to_vec(header).expect("headers serialize");
    let mut out = Vec::with_capacity(4 + h.len() + blob.len());
    out.extend_from_slice(&(h.len() as u32).to_le_bytes());
    out.extend_from_slice(&h);
    out.extend_from_slice(blob);
    out
}

pub fn decode_cell_frame(bytes: &[u8]) -> Option<(CellHeader, &[u8])> {
    let n = u32::from_le_bytes(bytes.get(0..4)?.try_into().ok()?) as usize;
    let h = bytes.get(4..4 + n)?;
    let header = serde_json::from_slice(h).ok()?;
    Some((header, &bytes[4 + n..]))
}
