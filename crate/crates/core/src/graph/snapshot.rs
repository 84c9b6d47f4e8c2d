use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::{GraphState, LinkRecord, NodeRecord, SelectionState};

/// Digest of the empty graph's canonical snapshot.
pub const EMPTY_GRAPH_HASH: &str = "f1c25bd5a3737f28a38d16a0c9c59c4f37d9ab8b64d96c1518c82af09837b631";

#[derive(Serialize)]
struct SnapshotRef<'a> {
    links: Vec<&'a LinkRecord>,
    nodes: Vec<&'a NodeRecord>,
    selections: &'a SelectionState,
    seq: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotOwned {
    links: Vec<LinkRecord>,
    nodes: Vec<NodeRecord>,
    selections: SelectionState,
    seq: u64,
}

impl Serialize for GraphState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SnapshotRef {
            links: self.links.values().collect(),
            nodes: self.nodes.values().collect(),
            selections: &self.selections,
            seq: self.seq,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GraphState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = SnapshotOwned::deserialize(deserializer)?;
        Ok(GraphState {
            nodes: raw.nodes.into_iter().map(|n| (n.id.clone(), n)).collect(),
            links: raw.links.into_iter().map(|l| (l.id.clone(), l)).collect(),
            selections: raw.selections,
            seq: raw.seq,
        })
    }
}

/// Canonical JSON: records ordered by id, object keys sorted.
pub fn canonical_json(graph: &GraphState) -> String {
    // serde_json's Value map is a BTreeMap, which sorts keys.
    let value = serde_json::to_value(graph).expect("graph state is always serializable");
    serde_json::to_string(&value).expect("value is always serializable")
}

/// SHA-256 of the canonical JSON, hex encoded.
pub fn snapshot_hash(graph: &GraphState) -> String {
    hex::encode(Sha256::digest(canonical_json(graph).as_bytes()))
}

pub(super) fn from_json(text: &str) -> serde_json::Result<GraphState> {
    serde_json::from_str(text)
}

/// ISO 8601 UTC strings, e.g. `2007-02-20T00:00:00Z`.
pub(super) mod opt_instant {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<DateTime<Utc>>, serializer: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(t) => serializer.serialize_str(&t.to_rfc3339_opts(SecondsFormat::AutoSi, true)),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<DateTime<Utc>>, D::Error> {
        let raw: Option<String> = Option::deserialize(deserializer)?;
        raw.map(|s| {
            DateTime::parse_from_rfc3339(&s)
                .map(|t| t.with_timezone(&Utc))
                .map_err(serde::de::Error::custom)
        })
        .transpose()
    }
}
