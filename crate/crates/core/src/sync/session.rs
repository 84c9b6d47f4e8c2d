use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{apply_event, DeviceKind, EventBody, EventLogWriter, SessionEvent, SyncError};
use crate::graph::{ApplyOutcome, DeviceId, DocumentRecord, GraphOp, GraphState, SelectionUpdate};
use crate::sync::message::ResyncReply;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DevicePresence {
    pub device_id: DeviceId,
    pub device_kind: DeviceKind,
    pub connected_since: u64,
    pub last_seen: u64,
}

/// What a joining device receives.
#[derive(Clone, Debug, PartialEq)]
pub struct Welcome {
    pub snapshot: GraphState,
    pub documents: Vec<DocumentRecord>,
    pub seq: u64,
    pub hash: String,
}

/// The single serialization point of one session.
///
/// Methods take the current wall clock explicitly so that tests can drive the
/// session deterministically.
pub struct Session {
    id: String,
    graph: GraphState,
    documents: Vec<DocumentRecord>,
    history: VecDeque<SessionEvent>,
    retention: usize,
    presence: BTreeMap<DeviceId, DevicePresence>,
    sink: Option<EventLogWriter>,
}

pub const SERVER_DEVICE: &str = "server";

impl Session {
    /// Creates a session; each corpus document is registered through an
    /// `addDocument` event so the log alone reconstructs the anchors.
    pub fn new(
        id: impl Into<String>,
        documents: Vec<DocumentRecord>,
        sink: Option<EventLogWriter>,
        now: u64,
    ) -> Result<Self, SyncError> {
        let mut session = Session {
            id: id.into(),
            graph: GraphState::new(),
            documents: Vec::new(),
            history: VecDeque::new(),
            retention: usize::MAX,
            presence: BTreeMap::new(),
            sink,
        };
        for doc in &documents {
            let op = GraphOp::AddDocument { document_id: doc.id.clone(), title: doc.title.clone() };
            session.commit(DeviceId::from(SERVER_DEVICE), DeviceKind::Server, EventBody::Op(op), now)?;
        }
        session.documents = documents;
        Ok(session)
    }

    /// Rebuilds a session from a previously written log and keeps appending to `sink`.
    pub fn resume(
        id: impl Into<String>,
        documents: Vec<DocumentRecord>,
        events: Vec<SessionEvent>,
        sink: Option<EventLogWriter>,
    ) -> Result<Self, SyncError> {
        let mut graph = GraphState::new();
        for event in &events {
            apply_event(&mut graph, event)?;
        }
        Ok(Session {
            id: id.into(),
            graph,
            documents,
            history: events.into(),
            retention: usize::MAX,
            presence: BTreeMap::new(),
            sink,
        })
    }

    /// Caps how many past events are kept in memory for resync.
    pub fn with_retention(mut self, events: usize) -> Self {
        self.retention = events;
        self.trim_history();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn graph(&self) -> &GraphState {
        &self.graph
    }

    pub fn seq(&self) -> u64 {
        self.graph.seq
    }

    pub fn documents(&self) -> &[DocumentRecord] {
        &self.documents
    }

    pub fn history(&self) -> impl Iterator<Item = &SessionEvent> {
        self.history.iter()
    }

    pub fn presence(&self) -> impl Iterator<Item = &DevicePresence> {
        self.presence.values()
    }

    pub fn hash(&self) -> String {
        self.graph.snapshot_hash()
    }

    pub fn join(&mut self, device: DeviceId, kind: DeviceKind, now: u64) -> Result<Welcome, SyncError> {
        if kind == DeviceKind::Server || device.as_str() == SERVER_DEVICE {
            return Err(SyncError::Forbidden("the server device identity"));
        }
        if self.presence.contains_key(&device) {
            return Err(SyncError::DuplicateDevice(device));
        }
        self.presence.insert(
            device.clone(),
            DevicePresence { device_id: device, device_kind: kind, connected_since: now, last_seen: now },
        );
        Ok(Welcome {
            snapshot: self.graph.clone(),
            documents: self.documents.clone(),
            seq: self.graph.seq,
            hash: self.hash(),
        })
    }

    pub fn leave(&mut self, device: &DeviceId) -> bool {
        self.presence.remove(device).is_some()
    }

    pub fn touch(&mut self, device: &DeviceId, now: u64) {
        if let Some(p) = self.presence.get_mut(device) {
            p.last_seen = now;
        }
    }

    fn device_kind(&self, device: &DeviceId) -> Result<DeviceKind, SyncError> {
        self.presence
            .get(device)
            .map(|p| p.device_kind)
            .ok_or_else(|| SyncError::NotJoined(device.clone()))
    }

    /// Validates and applies a client op. A rejected op consumes no sequence number.
    pub fn submit_op(
        &mut self,
        device: &DeviceId,
        op: GraphOp,
        now: u64,
    ) -> Result<(SessionEvent, ApplyOutcome), SyncError> {
        let kind = self.device_kind(device)?;
        if matches!(op, GraphOp::AddDocument { .. }) {
            return Err(SyncError::Forbidden("document registration"));
        }
        let op = op.with_assigned_ids(self.graph.seq + 1);
        self.commit(device.clone(), kind, EventBody::Op(op), now)
    }

    /// Replaces the shared selection (last write wins by arrival order).
    pub fn set_selection(
        &mut self,
        device: &DeviceId,
        update: SelectionUpdate,
        now: u64,
    ) -> Result<SessionEvent, SyncError> {
        let kind = self.device_kind(device)?;
        self.commit(device.clone(), kind, EventBody::Selection(update), now).map(|(e, _)| e)
    }

    fn commit(
        &mut self,
        device: DeviceId,
        device_kind: DeviceKind,
        body: EventBody,
        now: u64,
    ) -> Result<(SessionEvent, ApplyOutcome), SyncError> {
        let event = SessionEvent { seq: self.graph.seq + 1, wall_clock: now, device_id: device, device_kind, body };
        let outcome = apply_event(&mut self.graph, &event)?;
        if let Some(sink) = &mut self.sink {
            if let Err(err) = sink.append(&event) {
                tracing::error!(session = %self.id, seq = event.seq, "event log write failed: {err}");
            }
        }
        self.history.push_back(event.clone());
        self.trim_history();
        if let Some(p) = self.presence.get_mut(&event.device_id) {
            p.last_seen = now;
        }
        Ok((event, outcome))
    }

    fn trim_history(&mut self) {
        while self.history.len() > self.retention {
            self.history.pop_front();
        }
    }

    /// Events after `from_seq` when still retained, otherwise a full snapshot.
    pub fn resync(&self, from_seq: u64) -> Result<ResyncReply, SyncError> {
        let current = self.graph.seq;
        if from_seq > current {
            return Err(SyncError::FutureSeq { requested: from_seq, current });
        }
        let oldest_retained = self.history.front().map_or(current + 1, |e| e.seq);
        if from_seq + 1 >= oldest_retained {
            let events = self.history.iter().filter(|e| e.seq > from_seq).cloned().collect();
            Ok(ResyncReply::Events { events, seq: current, hash: self.hash() })
        } else {
            Ok(ResyncReply::Full { graph: self.graph.clone(), seq: current, hash: self.hash() })
        }
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        match &mut self.sink {
            Some(sink) => sink.flush(),
            None => Ok(()),
        }
    }
}
