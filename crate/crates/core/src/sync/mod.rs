//! Server-authoritative replication of a [`GraphState`].
//!
//! Every mutation and selection change is funnelled through one [`Session`],
//! which assigns it the next sequence number, appends it to the event log and
//! only then hands it out for broadcast. Clients apply the same events in the
//! same order with [`apply_event`], so all replicas hash identically once quiet.
//! Poses travel on a separate lossy path ([`PoseStore`]).

mod client;
mod log;
mod message;
mod pose;
mod server;
mod session;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ApplyOutcome, DeviceId, GraphError, GraphOp, GraphState, SelectionUpdate, Vec3};

pub use client::{ClientError, SyncClient};
pub use log::{read_event_log, read_pose_log, replay_log, replay_events, EventLogWriter, JsonlError, PoseLogWriter};
pub use message::{
    decode_line, encode_line, AppliedRecords, Envelope, ErrorPayload, MessageBody, MessageType, ProtocolMessage,
    ResyncReply, WelcomePayload,
};
pub use pose::{PoseOutcome, PoseStore, DEFAULT_POSE_LOG_HZ};
pub use server::{Server, ServerConfig, ServerHandle};
pub use session::{DevicePresence, Session, Welcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DeviceKind {
    Pc,
    Vr,
    /// The server itself, for system events such as document registration.
    Server,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventBody {
    Op(GraphOp),
    Selection(SelectionUpdate),
}

/// One applied entry of the session's totally ordered log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionEvent {
    pub seq: u64,
    pub wall_clock: u64,
    pub device_id: DeviceId,
    pub device_kind: DeviceKind,
    pub body: EventBody,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PoseKind {
    Head,
    Table,
}

/// Orientation is a unit quaternion stored as `[x, y, z, w]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PoseSample {
    pub device_id: DeviceId,
    pub kind: PoseKind,
    pub t: u64,
    pub position3: Vec3,
    pub orientation: [f64; 4],
}

impl PoseSample {
    pub fn pose(&self) -> crate::layout::Pose {
        crate::layout::Pose { position: self.position3, orientation: self.orientation }
    }
}

#[derive(Debug, Error)]
pub enum SyncError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("device {0} is already connected")]
    DuplicateDevice(DeviceId),
    #[error("device {0} has not joined the session")]
    NotJoined(DeviceId),
    #[error("{0} is reserved for the server")]
    Forbidden(&'static str),
    #[error("requested seq {requested} is ahead of the session ({current})")]
    FutureSeq { requested: u64, current: u64 },
    #[error("quaternion norm {0} is not within tolerance of 1")]
    MalformedPose(f64),
    #[error("expected event seq {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SyncError {
    pub fn code(&self) -> &'static str {
        match self {
            SyncError::Graph(e) => e.code(),
            SyncError::DuplicateDevice(_) => "DuplicateDevice",
            SyncError::NotJoined(_) => "NotJoined",
            SyncError::Forbidden(_) => "Forbidden",
            SyncError::FutureSeq { .. } => "FutureSeq",
            SyncError::MalformedPose(_) => "MalformedPose",
            SyncError::SequenceGap { .. } => "SequenceGap",
            SyncError::Protocol(_) => "Protocol",
            SyncError::Io(_) => "Io",
        }
    }
}

/// Applies one logged event to a replica. Server, clients and replay all go
/// through here, which is what keeps their hashes equal.
pub fn apply_event(graph: &mut GraphState, event: &SessionEvent) -> Result<ApplyOutcome, SyncError> {
    if event.seq != graph.seq + 1 {
        return Err(SyncError::SequenceGap { expected: graph.seq + 1, got: event.seq });
    }
    let outcome = match &event.body {
        EventBody::Op(op) => graph.apply(op, &event.device_id)?,
        EventBody::Selection(update) => {
            graph.set_selection(update, &event.device_id)?;
            graph.selections.seq = event.seq;
            ApplyOutcome::default()
        }
    };
    graph.seq = event.seq;
    Ok(outcome)
}

/// Milliseconds since the Unix epoch.
pub fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
