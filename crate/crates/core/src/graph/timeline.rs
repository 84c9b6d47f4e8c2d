use std::collections::BTreeSet;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::{GraphError, GraphState, NodeId, NodeKind, SelectionState};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TimelineEntry {
    pub node_id: NodeId,
    pub timestamp: DateTime<Utc>,
}

/// All time nodes sharing one calendar date (UTC), shown under one marker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DateGroup {
    pub date: NaiveDate,
    /// Marker position along the timeline, 0 = earliest date, 1 = latest.
    pub marker: f64,
    pub members: Vec<NodeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TimelineModel {
    pub entries: Vec<TimelineEntry>,
    pub date_groups: Vec<DateGroup>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TimelineTarget {
    Entry(NodeId),
    Group(NaiveDate),
}

/// Time nodes ordered by (timestamp, id), grouped per calendar date.
pub fn derive_timeline(graph: &GraphState) -> TimelineModel {
    let mut entries: Vec<TimelineEntry> = graph
        .nodes
        .values()
        .filter(|n| n.kind == NodeKind::Time)
        .filter_map(|n| n.parsed_time.map(|t| TimelineEntry { node_id: n.id.clone(), timestamp: t }))
        .collect();
    entries.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.node_id.cmp(&b.node_id)));

    let mut date_groups: Vec<DateGroup> = Vec::new();
    for entry in &entries {
        let date = entry.timestamp.date_naive();
        match date_groups.last_mut() {
            Some(group) if group.date == date => group.members.push(entry.node_id.clone()),
            _ => date_groups.push(DateGroup { date, marker: 0.0, members: vec![entry.node_id.clone()] }),
        }
    }
    if let (Some(first), Some(last)) = (date_groups.first().map(|g| g.date), date_groups.last().map(|g| g.date)) {
        let span = (last - first).num_days() as f64;
        for group in &mut date_groups {
            group.marker = if span > 0.0 { (group.date - first).num_days() as f64 / span } else { 0.5 };
        }
    }
    TimelineModel { entries, date_groups }
}

impl TimelineModel {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn group(&self, date: NaiveDate) -> Option<&DateGroup> {
        self.date_groups.iter().find(|g| g.date == date)
    }

    pub fn targets(&self, target: &TimelineTarget) -> Option<Vec<NodeId>> {
        match target {
            TimelineTarget::Entry(id) => self
                .entries
                .iter()
                .any(|e| &e.node_id == id)
                .then(|| vec![id.clone()]),
            TimelineTarget::Group(date) => self.group(*date).map(|g| g.members.clone()),
        }
    }
}

impl GraphState {
    /// Selection produced by clicking (or standing on) a timeline entry or date marker.
    /// The selected document is kept.
    pub fn select_timeline_entry(&self, target: &TimelineTarget) -> Result<SelectionState, GraphError> {
        let timeline = derive_timeline(self);
        let ids = match (target, timeline.targets(target)) {
            (_, Some(ids)) => ids,
            (TimelineTarget::Entry(id), None) => return Err(GraphError::UnknownNode(id.clone())),
            (TimelineTarget::Group(date), None) => return Err(GraphError::UnknownTimelineEntry(date.to_string())),
        };
        Ok(SelectionState {
            selected_node_ids: ids.into_iter().collect::<BTreeSet<_>>(),
            ..self.selections.clone()
        })
    }
}
