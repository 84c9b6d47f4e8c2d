//! Wire format: one JSON envelope per line,
//! `{"type","session","device","seq","payload"}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{DeviceKind, PoseSample, SessionEvent, SyncError};
use crate::graph::{
    ApplyOutcome, DocumentRecord, GraphOp, GraphState, LinkId, LinkRecord, NodeId, NodeRecord, SelectionState,
    SelectionUpdate,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageType {
    Hello,
    Welcome,
    Op,
    OpApplied,
    Selection,
    SelectionApplied,
    Pose,
    ResyncRequest,
    Snapshot,
    Ping,
    Pong,
    Error,
}

/// The raw envelope, exactly as it appears on the wire.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    #[serde(rename = "type")]
    pub kind: MessageType,
    pub session: String,
    pub device: String,
    pub seq: Option<u64>,
    pub payload: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HelloPayload {
    pub device_kind: DeviceKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WelcomePayload {
    pub snapshot: GraphState,
    pub documents: Vec<DocumentRecord>,
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OpPayload {
    pub op: GraphOp,
    #[serde(default)]
    pub client_ref: Option<u64>,
}

/// Canonical records touched by an applied op.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AppliedRecords {
    pub nodes: Vec<NodeRecord>,
    pub links: Vec<LinkRecord>,
    pub removed_nodes: Vec<NodeId>,
    pub removed_links: Vec<LinkId>,
}

impl AppliedRecords {
    pub fn collect(graph: &GraphState, outcome: &ApplyOutcome) -> Self {
        AppliedRecords {
            nodes: outcome.nodes.iter().filter_map(|id| graph.nodes.get(id).cloned()).collect(),
            links: outcome.links.iter().filter_map(|id| graph.links.get(id).cloned()).collect(),
            removed_nodes: outcome.removed_nodes.iter().cloned().collect(),
            removed_links: outcome.removed_links.iter().cloned().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OpAppliedPayload {
    pub event: SessionEvent,
    pub records: AppliedRecords,
    pub hash: String,
    #[serde(default)]
    pub client_ref: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionPayload {
    pub selection: SelectionUpdate,
    #[serde(default)]
    pub client_ref: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionAppliedPayload {
    pub event: SessionEvent,
    pub selection: SelectionState,
    pub hash: String,
    #[serde(default)]
    pub client_ref: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResyncRequestPayload {
    pub from_seq: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "camelCase")]
pub enum ResyncReply {
    /// The gap-free suffix of events after the requested seq.
    Events { events: Vec<SessionEvent>, seq: u64, hash: String },
    /// The full state, when the requested seq is older than retained history.
    Full { graph: GraphState, seq: u64, hash: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PingPayload {
    #[serde(default)]
    pub nonce: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorPayload {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub client_ref: Option<u64>,
}

impl ErrorPayload {
    pub fn from_error(err: &SyncError, client_ref: Option<u64>) -> Self {
        ErrorPayload { code: err.code().to_owned(), message: err.to_string(), client_ref }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MessageBody {
    Hello(HelloPayload),
    Welcome(WelcomePayload),
    Op(OpPayload),
    OpApplied(Box<OpAppliedPayload>),
    Selection(SelectionPayload),
    SelectionApplied(Box<SelectionAppliedPayload>),
    Pose(PoseSample),
    ResyncRequest(ResyncRequestPayload),
    Snapshot(Box<ResyncReply>),
    Ping(PingPayload),
    Pong(PingPayload),
    Error(ErrorPayload),
}

impl MessageBody {
    pub fn message_type(&self) -> MessageType {
        match self {
            MessageBody::Hello(_) => MessageType::Hello,
            MessageBody::Welcome(_) => MessageType::Welcome,
            MessageBody::Op(_) => MessageType::Op,
            MessageBody::OpApplied(_) => MessageType::OpApplied,
            MessageBody::Selection(_) => MessageType::Selection,
            MessageBody::SelectionApplied(_) => MessageType::SelectionApplied,
            MessageBody::Pose(_) => MessageType::Pose,
            MessageBody::ResyncRequest(_) => MessageType::ResyncRequest,
            MessageBody::Snapshot(_) => MessageType::Snapshot,
            MessageBody::Ping(_) => MessageType::Ping,
            MessageBody::Pong(_) => MessageType::Pong,
            MessageBody::Error(_) => MessageType::Error,
        }
    }
}

/// A typed protocol message.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolMessage {
    pub session: String,
    pub device: String,
    pub seq: Option<u64>,
    pub body: MessageBody,
}

impl ProtocolMessage {
    pub fn new(session: impl Into<String>, device: impl Into<String>, body: MessageBody) -> Self {
        ProtocolMessage { session: session.into(), device: device.into(), seq: None, body }
    }

    pub fn with_seq(mut self, seq: u64) -> Self {
        self.seq = Some(seq);
        self
    }

    pub fn to_envelope(&self) -> Envelope {
        let payload = match &self.body {
            MessageBody::Hello(p) => serde_json::to_value(p),
            MessageBody::Welcome(p) => serde_json::to_value(p),
            MessageBody::Op(p) => serde_json::to_value(p),
            MessageBody::OpApplied(p) => serde_json::to_value(p),
            MessageBody::Selection(p) => serde_json::to_value(p),
            MessageBody::SelectionApplied(p) => serde_json::to_value(p),
            MessageBody::Pose(p) => serde_json::to_value(p),
            MessageBody::ResyncRequest(p) => serde_json::to_value(p),
            MessageBody::Snapshot(p) => serde_json::to_value(p),
            MessageBody::Ping(p) | MessageBody::Pong(p) => serde_json::to_value(p),
            MessageBody::Error(p) => serde_json::to_value(p),
        }
        .expect("payloads are always serializable");
        Envelope {
            kind: self.body.message_type(),
            session: self.session.clone(),
            device: self.device.clone(),
            seq: self.seq,
            payload,
        }
    }

    pub fn from_envelope(env: Envelope) -> Result<Self, SyncError> {
        fn parse<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, SyncError> {
            serde_json::from_value(v).map_err(|e| SyncError::Protocol(format!("bad payload: {e}")))
        }
        let body = match env.kind {
            MessageType::Hello => MessageBody::Hello(parse(env.payload)?),
            MessageType::Welcome => MessageBody::Welcome(parse(env.payload)?),
            MessageType::Op => MessageBody::Op(parse(env.payload)?),
            MessageType::OpApplied => MessageBody::OpApplied(parse(env.payload)?),
            MessageType::Selection => MessageBody::Selection(parse(env.payload)?),
            MessageType::SelectionApplied => MessageBody::SelectionApplied(parse(env.payload)?),
            MessageType::Pose => MessageBody::Pose(parse(env.payload)?),
            MessageType::ResyncRequest => MessageBody::ResyncRequest(parse(env.payload)?),
            MessageType::Snapshot => MessageBody::Snapshot(parse(env.payload)?),
            MessageType::Ping => MessageBody::Ping(if env.payload.is_null() { Default::default() } else { parse(env.payload)? }),
            MessageType::Pong => MessageBody::Pong(parse(env.payload)?),
            MessageType::Error => MessageBody::Error(parse(env.payload)?),
        };
        Ok(ProtocolMessage { session: env.session, device: env.device, seq: env.seq, body })
    }
}

/// Serializes a message as one newline-terminated line.
pub fn encode_line(msg: &ProtocolMessage) -> String {
    let mut line = serde_json::to_string(&msg.to_envelope()).expect("envelope is always serializable");
    line.push('\n');
    line
}

pub fn decode_line(line: &str) -> Result<ProtocolMessage, SyncError> {
    let env: Envelope = serde_json::from_str(line.trim_end_matches(['\r', '\n']))
        .map_err(|e| SyncError::Protocol(format!("bad envelope: {e}")))?;
    ProtocolMessage::from_envelope(env)
}
