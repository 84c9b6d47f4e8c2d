//! The shared node-link document: records, mutations, time classification,
//! the derived timeline, and the canonical snapshot.

mod snapshot;
mod time_label;
mod timeline;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use snapshot::{canonical_json, snapshot_hash, EMPTY_GRAPH_HASH};
pub use time_label::parse_time_label;
pub use timeline::{derive_timeline, DateGroup, TimelineEntry, TimelineModel, TimelineTarget};

/// A point in VR space, meters.
pub type Vec3 = [f64; 3];

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(NodeId);
string_id!(LinkId);
string_id!(DocumentId);
string_id!(DeviceId);

impl NodeId {
    /// The anchor node standing for a document.
    pub fn anchor_for(document: &DocumentId) -> Self {
        Self(format!("doc:{document}"))
    }

    /// Id of the default link created together with this node.
    pub fn default_link(&self) -> LinkId {
        LinkId(format!("{self}:doc"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NodeKind {
    Entity,
    Time,
    DocumentAnchor,
}

impl NodeKind {
    /// Display color. Not stored; the model stays color-agnostic.
    pub fn color(self) -> &'static str {
        match self {
            NodeKind::Entity => "blue",
            NodeKind::Time => "orange",
            NodeKind::DocumentAnchor => "black",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LinkKind {
    User,
    DocumentDefault,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeRecord {
    pub id: NodeId,
    pub label: String,
    pub kind: NodeKind,
    pub position3: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "snapshot::opt_instant")]
    pub parsed_time: Option<DateTime<Utc>>,
    pub source_document_ids: BTreeSet<DocumentId>,
    pub created_by_device: DeviceId,
    pub revision: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkRecord {
    pub id: LinkId,
    pub source_id: NodeId,
    pub target_id: NodeId,
    pub label: String,
    pub kind: LinkKind,
    pub revision: u64,
}

impl LinkRecord {
    /// Endpoints as an unordered pair.
    pub fn endpoints(&self) -> (&NodeId, &NodeId) {
        if self.source_id <= self.target_id {
            (&self.source_id, &self.target_id)
        } else {
            (&self.target_id, &self.source_id)
        }
    }

    pub fn touches(&self, node: &NodeId) -> bool {
        &self.source_id == node || &self.target_id == node
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionState {
    pub selected_document_id: Option<DocumentId>,
    pub selected_node_ids: BTreeSet<NodeId>,
    pub last_origin_device: DeviceId,
    pub seq: u64,
}

/// A full replacement of the shared selection, as sent by a device.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionUpdate {
    #[serde(default)]
    pub document_id: Option<DocumentId>,
    #[serde(default)]
    pub node_ids: BTreeSet<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DocumentRecord {
    pub id: DocumentId,
    pub title: String,
    pub body: String,
    pub subplot: String,
    pub word_count: usize,
}

impl DocumentRecord {
    pub fn new(id: DocumentId, title: String, body: String, subplot: String) -> Self {
        let word_count = count_words(&body);
        Self { id, title, body, subplot, word_count }
    }
}

/// Whitespace-token count.
pub fn count_words(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("label is empty")]
    EmptyLabel,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown link {0}")]
    UnknownLink(LinkId),
    #[error("unknown document {0}")]
    UnknownDocument(DocumentId),
    #[error("document anchor {0} cannot be modified")]
    AnchorImmutable(NodeId),
    #[error("cannot merge node {0} with itself")]
    SelfMerge(NodeId),
    #[error("link endpoints must differ ({0})")]
    SelfLink(NodeId),
    #[error("a link between {0} and {1} with that label already exists")]
    DuplicateLink(NodeId, NodeId),
    #[error("id {0} is already in use")]
    DuplicateId(String),
    #[error("operation is missing its assigned id")]
    MissingId,
    #[error("no timeline entry for {0}")]
    UnknownTimelineEntry(String),
}

impl GraphError {
    /// Stable machine-readable name, used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::EmptyLabel => "EmptyLabel",
            GraphError::UnknownNode(_) => "UnknownNode",
            GraphError::UnknownLink(_) => "UnknownLink",
            GraphError::UnknownDocument(_) => "UnknownDocument",
            GraphError::AnchorImmutable(_) => "AnchorImmutable",
            GraphError::SelfMerge(_) => "SelfMerge",
            GraphError::SelfLink(_) => "SelfLink",
            GraphError::DuplicateLink(..) => "DuplicateLink",
            GraphError::DuplicateId(_) => "DuplicateId",
            GraphError::MissingId => "MissingId",
            GraphError::UnknownTimelineEntry(_) => "UnknownTimelineEntry",
        }
    }
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// A mutation of the shared graph. Creation variants carry the id the server
/// assigned; clients leave it empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum GraphOp {
    AddDocument {
        document_id: DocumentId,
        title: String,
    },
    CreateNode {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<NodeId>,
        label: String,
        position: Vec3,
    },
    UpdateNodeLabel {
        id: NodeId,
        label: String,
    },
    MoveNode {
        id: NodeId,
        position: Vec3,
    },
    DeleteNode {
        id: NodeId,
    },
    MergeNodes {
        survivor: NodeId,
        absorbed: NodeId,
    },
    CreateLink {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<LinkId>,
        source: NodeId,
        target: NodeId,
        #[serde(default)]
        label: String,
    },
    UpdateLinkLabel {
        id: LinkId,
        label: String,
    },
    DeleteLink {
        id: LinkId,
    },
}

impl GraphOp {
    /// Short operation name, e.g. `createNode`.
    pub fn name(&self) -> &'static str {
        match self {
            GraphOp::AddDocument { .. } => "addDocument",
            GraphOp::CreateNode { .. } => "createNode",
            GraphOp::UpdateNodeLabel { .. } => "updateNodeLabel",
            GraphOp::MoveNode { .. } => "moveNode",
            GraphOp::DeleteNode { .. } => "deleteNode",
            GraphOp::MergeNodes { .. } => "mergeNodes",
            GraphOp::CreateLink { .. } => "createLink",
            GraphOp::UpdateLinkLabel { .. } => "updateLinkLabel",
            GraphOp::DeleteLink { .. } => "deleteLink",
        }
    }

    /// Fills in server-assigned ids for creation ops.
    pub fn with_assigned_ids(mut self, seq: u64) -> Self {
        match &mut self {
            GraphOp::CreateNode { id, .. } => *id = Some(NodeId(format!("n{seq}"))),
            GraphOp::CreateLink { id, .. } => *id = Some(LinkId(format!("l{seq}"))),
            _ => {}
        }
        self
    }
}

/// What an applied op touched.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ApplyOutcome {
    pub nodes: BTreeSet<NodeId>,
    pub links: BTreeSet<LinkId>,
    pub removed_nodes: BTreeSet<NodeId>,
    pub removed_links: BTreeSet<LinkId>,
}

/// Serializes as the canonical snapshot object (see [`canonical_json`]).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphState {
    pub nodes: BTreeMap<NodeId, NodeRecord>,
    pub links: BTreeMap<LinkId, LinkRecord>,
    pub selections: SelectionState,
    pub seq: u64,
}

fn checked_label(label: &str) -> Result<String> {
    let trimmed = label.trim();
    if trimmed.is_empty() {
        Err(GraphError::EmptyLabel)
    } else {
        Ok(trimmed.to_owned())
    }
}

impl GraphState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&self, id: &NodeId) -> Result<&NodeRecord> {
        self.nodes.get(id).ok_or_else(|| GraphError::UnknownNode(id.clone()))
    }

    pub fn link(&self, id: &LinkId) -> Result<&LinkRecord> {
        self.links.get(id).ok_or_else(|| GraphError::UnknownLink(id.clone()))
    }

    fn mutable_node(&self, id: &NodeId) -> Result<&NodeRecord> {
        let node = self.node(id)?;
        if node.kind == NodeKind::DocumentAnchor {
            return Err(GraphError::AnchorImmutable(id.clone()));
        }
        Ok(node)
    }

    fn id_taken(&self, id: &str) -> bool {
        self.nodes.contains_key(&NodeId(id.to_owned())) || self.links.contains_key(&LinkId(id.to_owned()))
    }

    /// A link other than `except` with these unordered endpoints and label.
    pub fn find_link(&self, a: &NodeId, b: &NodeId, label: &str, except: Option<&LinkId>) -> Option<&LinkRecord> {
        self.links.values().find(|l| {
            Some(&l.id) != except
                && l.label == label
                && ((&l.source_id == a && &l.target_id == b) || (&l.source_id == b && &l.target_id == a))
        })
    }

    pub fn incident_links<'a>(&'a self, node: &'a NodeId) -> impl Iterator<Item = &'a LinkRecord> + 'a {
        self.links.values().filter(move |l| l.touches(node))
    }

    /// Registers a document by creating its anchor node.
    pub fn add_document(&mut self, document: &DocumentId, title: &str, device: &DeviceId) -> Result<NodeId> {
        let id = NodeId::anchor_for(document);
        if self.id_taken(id.as_str()) {
            return Err(GraphError::DuplicateId(id.0));
        }
        self.nodes.insert(
            id.clone(),
            NodeRecord {
                id: id.clone(),
                label: title.to_owned(),
                kind: NodeKind::DocumentAnchor,
                position3: [0.0; 3],
                parsed_time: None,
                source_document_ids: BTreeSet::from([document.clone()]),
                created_by_device: device.clone(),
                revision: 0,
            },
        );
        Ok(id)
    }

    pub fn has_document(&self, document: &DocumentId) -> bool {
        self.nodes
            .get(&NodeId::anchor_for(document))
            .is_some_and(|n| n.kind == NodeKind::DocumentAnchor)
    }

    /// Adds a node classified from its label. When a document is selected the
    /// node is attributed to it and linked to its anchor.
    pub fn create_node(
        &mut self,
        id: NodeId,
        label: &str,
        position3: Vec3,
        device: &DeviceId,
    ) -> Result<(NodeId, Option<LinkId>)> {
        let label = checked_label(label)?;
        if self.id_taken(id.as_str()) {
            return Err(GraphError::DuplicateId(id.0));
        }
        let document = self
            .selections
            .selected_document_id
            .clone()
            .filter(|d| self.has_document(d));
        let default_link = document.as_ref().map(|_| id.default_link());
        if let Some(link) = &default_link {
            if self.id_taken(link.as_str()) {
                return Err(GraphError::DuplicateId(link.0.clone()));
            }
        }

        let parsed_time = parse_time_label(&label);
        let kind = if parsed_time.is_some() { NodeKind::Time } else { NodeKind::Entity };
        self.nodes.insert(
            id.clone(),
            NodeRecord {
                id: id.clone(),
                label,
                kind,
                position3,
                parsed_time,
                source_document_ids: document.iter().cloned().collect(),
                created_by_device: device.clone(),
                revision: 0,
            },
        );
        if let (Some(link), Some(document)) = (&default_link, &document) {
            self.links.insert(
                link.clone(),
                LinkRecord {
                    id: link.clone(),
                    source_id: id.clone(),
                    target_id: NodeId::anchor_for(document),
                    label: String::new(),
                    kind: LinkKind::DocumentDefault,
                    revision: 0,
                },
            );
        }
        Ok((id, default_link))
    }

    pub fn update_node_label(&mut self, id: &NodeId, label: &str) -> Result<()> {
        self.mutable_node(id)?;
        let label = checked_label(label)?;
        let node = self.nodes.get_mut(id).expect("checked above");
        node.parsed_time = parse_time_label(&label);
        node.kind = if node.parsed_time.is_some() { NodeKind::Time } else { NodeKind::Entity };
        node.label = label;
        node.revision += 1;
        Ok(())
    }

    pub fn move_node(&mut self, id: &NodeId, position3: Vec3) -> Result<()> {
        let node = self.nodes.get_mut(id).ok_or_else(|| GraphError::UnknownNode(id.clone()))?;
        node.position3 = position3;
        node.revision += 1;
        Ok(())
    }

    /// Removes a node and every link touching it. Returns the removed links.
    pub fn delete_node(&mut self, id: &NodeId) -> Result<Vec<LinkId>> {
        self.mutable_node(id)?;
        self.nodes.remove(id);
        let removed: Vec<LinkId> = self.incident_links(id).map(|l| l.id.clone()).collect();
        for link in &removed {
            self.links.remove(link);
        }
        self.selections.selected_node_ids.remove(id);
        Ok(removed)
    }

    /// Folds `absorbed` into `survivor`. Links of the absorbed node are
    /// retargeted; ones that become self-loops or duplicate an existing
    /// (endpoints, label) link are dropped. Returns (retargeted, dropped) links.
    pub fn merge_nodes(&mut self, survivor: &NodeId, absorbed: &NodeId) -> Result<(Vec<LinkId>, Vec<LinkId>)> {
        if survivor == absorbed {
            self.node(survivor)?;
            return Err(GraphError::SelfMerge(survivor.clone()));
        }
        self.mutable_node(survivor)?;
        self.mutable_node(absorbed)?;

        let moving: Vec<LinkId> = self.incident_links(absorbed).map(|l| l.id.clone()).collect();
        let mut retargeted = Vec::new();
        let mut dropped = Vec::new();
        for link_id in moving {
            let mut link = self.links.remove(&link_id).expect("incident link exists");
            if &link.source_id == absorbed {
                link.source_id = survivor.clone();
            }
            if &link.target_id == absorbed {
                link.target_id = survivor.clone();
            }
            if link.source_id == link.target_id
                || self.find_link(&link.source_id, &link.target_id, &link.label, None).is_some()
            {
                dropped.push(link_id);
                continue;
            }
            link.revision += 1;
            self.links.insert(link_id.clone(), link);
            retargeted.push(link_id);
        }

        let absorbed_node = self.nodes.remove(absorbed).expect("checked above");
        let node = self.nodes.get_mut(survivor).expect("checked above");
        node.source_document_ids.extend(absorbed_node.source_document_ids);
        node.revision += 1;
        if self.selections.selected_node_ids.remove(absorbed) {
            self.selections.selected_node_ids.insert(survivor.clone());
        }
        Ok((retargeted, dropped))
    }

    pub fn create_link(&mut self, id: LinkId, source: &NodeId, target: &NodeId, label: &str) -> Result<LinkId> {
        self.node(source)?;
        self.node(target)?;
        if source == target {
            return Err(GraphError::SelfLink(source.clone()));
        }
        if self.id_taken(id.as_str()) {
            return Err(GraphError::DuplicateId(id.0));
        }
        let label = label.trim().to_owned();
        if self.find_link(source, target, &label, None).is_some() {
            return Err(GraphError::DuplicateLink(source.clone(), target.clone()));
        }
        self.links.insert(
            id.clone(),
            LinkRecord {
                id: id.clone(),
                source_id: source.clone(),
                target_id: target.clone(),
                label,
                kind: LinkKind::User,
                revision: 0,
            },
        );
        Ok(id)
    }

    /// Link labels may be empty.
    pub fn update_link_label(&mut self, id: &LinkId, label: &str) -> Result<()> {
        let link = self.link(id)?;
        let label = label.trim().to_owned();
        if self.find_link(&link.source_id, &link.target_id, &label, Some(id)).is_some() {
            return Err(GraphError::DuplicateLink(link.source_id.clone(), link.target_id.clone()));
        }
        let link = self.links.get_mut(id).expect("checked above");
        link.label = label;
        link.revision += 1;
        Ok(())
    }

    pub fn delete_link(&mut self, id: &LinkId) -> Result<()> {
        self.links.remove(id).map(|_| ()).ok_or_else(|| GraphError::UnknownLink(id.clone()))
    }

    /// Replaces the shared selection. Every referenced node and document must exist.
    pub fn set_selection(&mut self, update: &SelectionUpdate, device: &DeviceId) -> Result<()> {
        if let Some(document) = &update.document_id {
            if !self.has_document(document) {
                return Err(GraphError::UnknownDocument(document.clone()));
            }
        }
        if let Some(missing) = update.node_ids.iter().find(|id| !self.nodes.contains_key(*id)) {
            return Err(GraphError::UnknownNode(missing.clone()));
        }
        self.selections.selected_document_id = update.document_id.clone();
        self.selections.selected_node_ids = update.node_ids.clone();
        self.selections.last_origin_device = device.clone();
        Ok(())
    }

    /// Applies an op atomically: on error the state is unchanged.
    pub fn apply(&mut self, op: &GraphOp, device: &DeviceId) -> Result<ApplyOutcome> {
        let mut out = ApplyOutcome::default();
        match op {
            GraphOp::AddDocument { document_id, title } => {
                out.nodes.insert(self.add_document(document_id, title, device)?);
            }
            GraphOp::CreateNode { id, label, position } => {
                let id = id.clone().ok_or(GraphError::MissingId)?;
                let (node, link) = self.create_node(id, label, *position, device)?;
                out.nodes.insert(node);
                out.links.extend(link);
            }
            GraphOp::UpdateNodeLabel { id, label } => {
                self.update_node_label(id, label)?;
                out.nodes.insert(id.clone());
            }
            GraphOp::MoveNode { id, position } => {
                self.move_node(id, *position)?;
                out.nodes.insert(id.clone());
            }
            GraphOp::DeleteNode { id } => {
                out.removed_links.extend(self.delete_node(id)?);
                out.removed_nodes.insert(id.clone());
            }
            GraphOp::MergeNodes { survivor, absorbed } => {
                let (kept, dropped) = self.merge_nodes(survivor, absorbed)?;
                out.nodes.insert(survivor.clone());
                out.removed_nodes.insert(absorbed.clone());
                out.links.extend(kept);
                out.removed_links.extend(dropped);
            }
            GraphOp::CreateLink { id, source, target, label } => {
                let id = id.clone().ok_or(GraphError::MissingId)?;
                out.links.insert(self.create_link(id, source, target, label)?);
            }
            GraphOp::UpdateLinkLabel { id, label } => {
                self.update_link_label(id, label)?;
                out.links.insert(id.clone());
            }
            GraphOp::DeleteLink { id } => {
                self.delete_link(id)?;
                out.removed_links.insert(id.clone());
            }
        }
        Ok(out)
    }

    /// Full-scan check of the structural invariants. Returns the first violation.
    pub fn check_integrity(&self) -> std::result::Result<(), String> {
        let mut seen = BTreeSet::new();
        for link in self.links.values() {
            for end in [&link.source_id, &link.target_id] {
                if !self.nodes.contains_key(end) {
                    return Err(format!("link {} dangles at {}", link.id, end));
                }
            }
            if link.source_id == link.target_id {
                return Err(format!("link {} is a self-loop", link.id));
            }
            let (a, b) = link.endpoints();
            if !seen.insert((a.clone(), b.clone(), link.label.clone())) {
                return Err(format!("link {} duplicates ({a}, {b}, {:?})", link.id, link.label));
            }
        }
        for node in self.nodes.values() {
            let time = parse_time_label(&node.label);
            let consistent = match node.kind {
                NodeKind::Time => time.is_some() && node.parsed_time == time,
                NodeKind::Entity => time.is_none() && node.parsed_time.is_none(),
                NodeKind::DocumentAnchor => node.parsed_time.is_none(),
            };
            if !consistent {
                return Err(format!("node {} kind disagrees with its label", node.id));
            }
        }
        if let Some(id) = self.selections.selected_node_ids.iter().find(|id| !self.nodes.contains_key(*id)) {
            return Err(format!("selection references missing node {id}"));
        }
        Ok(())
    }

    /// Canonical snapshot JSON with lexicographically sorted keys.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }

    pub fn snapshot_hash(&self) -> String {
        snapshot_hash(self)
    }

    /// Parses a snapshot file and validates its invariants.
    pub fn from_snapshot_json(text: &str) -> std::result::Result<Self, String> {
        let graph = snapshot::from_json(text).map_err(|e| e.to_string())?;
        graph.check_integrity()?;
        Ok(graph)
    }
}
