use serde::{Deserialize, Serialize};

use super::GestureConfig;
use crate::graph::{GraphState, SelectionUpdate, TimelineModel, TimelineTarget, Vec3};

/// A selectable spot on the floor, in (x, z).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorMarker {
    pub target: TimelineTarget,
    pub position: [f64; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FloorTimeline {
    pub model: TimelineModel,
    pub markers: Vec<FloorMarker>,
}

impl FloorTimeline {
    /// Lays date markers along `direction` over `length` meters from
    /// `origin`; entries of a date line up beside its marker, `spacing` apart.
    pub fn place(model: TimelineModel, origin: [f64; 2], direction: [f64; 2], length: f64, spacing: f64) -> Self {
        let norm = direction[0].hypot(direction[1]).max(f64::MIN_POSITIVE);
        let d = [direction[0] / norm, direction[1] / norm];
        let side = [-d[1], d[0]];
        let mut markers = Vec::new();
        for group in &model.date_groups {
            let at = [origin[0] + d[0] * group.marker * length, origin[1] + d[1] * group.marker * length];
            markers.push(FloorMarker { target: TimelineTarget::Group(group.date), position: at });
            for (k, member) in group.members.iter().enumerate() {
                let off = spacing * (k + 1) as f64;
                markers.push(FloorMarker {
                    target: TimelineTarget::Entry(member.clone()),
                    position: [at[0] + side[0] * off, at[1] + side[1] * off],
                });
            }
        }
        FloorTimeline { model, markers }
    }

    /// A 3 m line across the room, 1 m in front of the origin.
    pub fn standard(model: TimelineModel) -> Self {
        Self::place(model, [-1.5, -1.0], [1.0, 0.0], 3.0, 0.6)
    }

    pub fn nearest(&self, point: [f64; 2], radius: f64) -> Option<&FloorMarker> {
        self.markers
            .iter()
            .map(|m| ((m.position[0] - point[0]).hypot(m.position[1] - point[1]), m))
            .filter(|(d, _)| *d <= radius)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, m)| m)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FootState {
    candidate: Option<(TimelineTarget, u64)>,
    fired: bool,
}

/// Head sample at `t` ms. Fires once per stay, after standing on the same
/// marker for `dwell_ms`; the document selection is left as it is.
pub fn foot_step(
    state: &mut FootState,
    t: u64,
    head: Vec3,
    floor: &FloorTimeline,
    graph: &GraphState,
    config: &GestureConfig,
) -> Option<SelectionUpdate> {
    let Some(marker) = floor.nearest([head[0], head[2]], config.stand_radius) else {
        *state = FootState::default();
        return None;
    };
    match &state.candidate {
        Some((target, _)) if *target == marker.target => {}
        _ => {
            state.candidate = Some((marker.target.clone(), t));
            state.fired = false;
        }
    }
    let (target, since) = state.candidate.as_ref().expect("set above");
    if state.fired || t.saturating_sub(*since) < config.dwell_ms {
        return None;
    }
    state.fired = true;
    let node_ids = floor.model.targets(target)?.into_iter().collect();
    Some(SelectionUpdate { document_id: graph.selections.selected_document_id.clone(), node_ids })
}
