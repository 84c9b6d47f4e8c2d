use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{clutter_metric, force_refine, project_to_plane, LayoutError, LayoutParams, Vec2};
use crate::graph::{GraphState, NodeId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LayoutMetrics {
    pub clutter_before: usize,
    pub clutter_after: usize,
    pub iterations: u32,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphLayout {
    pub positions: BTreeMap<NodeId, Vec2>,
    pub metrics: LayoutMetrics,
}

/// Projects every node onto its best-fit plane, then refines with forces.
pub fn layout_graph(graph: &GraphState, params: &LayoutParams) -> Result<GraphLayout, LayoutError> {
    let ids: Vec<&NodeId> = graph.nodes.keys().collect();
    let index: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let points: Vec<_> = graph.nodes.values().map(|n| n.position3).collect();
    let edges: Vec<(usize, usize)> =
        graph.links.values().map(|l| (index[&l.source_id], index[&l.target_id])).collect();
    let initial = project_to_plane(&points);
    let refined = force_refine(&initial, &edges, params)?;
    Ok(GraphLayout {
        metrics: LayoutMetrics {
            clutter_before: clutter_metric(&initial, &edges),
            clutter_after: clutter_metric(&refined, &edges),
            iterations: params.iteration_count,
            seed: params.random_seed,
        },
        positions: ids.into_iter().cloned().zip(refined).collect(),
    })
}
