use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{add, dist, scale, sub, GestureConfig, Hand, HandFrame, Posture};
use crate::graph::{GraphOp, GraphState, LinkId, NodeId, NodeKind, Vec3};

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "mode")]
pub enum HandMode {
    #[default]
    Idle,
    #[serde(rename_all = "camelCase")]
    GrabbingNode {
        node: NodeId,
        /// Node position minus palm position at grab time, in view space.
        grab_offset: Vec3,
        /// Model position at grab time; restored when the release makes a link.
        start_position: Vec3,
    },
    DraggingLinkSource { node: NodeId },
    PullingLink { link: LinkId, anchor: Vec3 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HandTrack {
    pub mode: HandMode,
    /// Posture seen in the previous frame.
    pub posture: Option<Posture>,
    /// Exponentially smoothed palm velocity, m/s.
    pub velocity: Vec3,
    recent: VecDeque<(u64, Vec3)>,
}

impl HandTrack {
    fn observe(&mut self, t: u64, palm: Vec3, alpha: f64) {
        self.recent.push_back((t, palm));
        if self.recent.len() > 3 {
            self.recent.pop_front();
        }
        let &(t0, p0) = self.recent.front().expect("just pushed");
        if t > t0 {
            let raw = scale(sub(palm, p0), 1000.0 / (t - t0) as f64);
            self.velocity = add(scale(raw, alpha), scale(self.velocity, 1.0 - alpha));
        }
    }

    pub fn speed(&self) -> f64 {
        dist(self.velocity, [0.0; 3])
    }

    fn held_node(&self) -> Option<&NodeId> {
        match &self.mode {
            HandMode::GrabbingNode { node, .. } => Some(node),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ZoomGesture {
    pub start_distance: f64,
    pub start_scale: f64,
}

/// A release that may still become the first half of a two-hand merge.
#[derive(Clone, Debug, PartialEq)]
struct PendingRelease {
    node: NodeId,
    t: u64,
    /// Where the node was let go, in view space.
    released_at: Vec3,
    link_target: Option<NodeId>,
    start_position: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GestureState {
    pub left: HandTrack,
    pub right: HandTrack,
    pub two_hand_zoom: Option<ZoomGesture>,
    /// View scale about the origin; local to this headset.
    pub scale: f64,
    pending: Option<PendingRelease>,
}

impl Default for GestureState {
    fn default() -> Self {
        GestureState {
            left: HandTrack::default(),
            right: HandTrack::default(),
            two_hand_zoom: None,
            scale: 1.0,
            pending: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "type")]
pub enum GestureOutput {
    Grab { hand: Hand, node: NodeId },
    Op { op: GraphOp },
    Zoom { scale: f64 },
}

fn op(op: GraphOp) -> GestureOutput {
    GestureOutput::Op { op }
}

/// Pure form of [`GestureState::step`].
pub fn gesture_step(
    frame: &HandFrame,
    state: &GestureState,
    graph: &GraphState,
    config: &GestureConfig,
) -> (GestureState, Vec<GestureOutput>) {
    let mut next = state.clone();
    let out = next.step(frame, graph, config);
    (next, out)
}

impl GestureState {
    pub fn hand(&self, hand: Hand) -> &HandTrack {
        match hand {
            Hand::Left => &self.left,
            Hand::Right => &self.right,
        }
    }

    fn hand_mut(&mut self, hand: Hand) -> &mut HandTrack {
        match hand {
            Hand::Left => &mut self.left,
            Hand::Right => &mut self.right,
        }
    }

    fn view_position(&self, graph: &GraphState, node: &NodeId) -> Option<Vec3> {
        graph.nodes.get(node).map(|n| scale(n.position3, self.scale))
    }

    fn nearest_node(&self, graph: &GraphState, point: Vec3, radius: f64, exclude: &[&NodeId]) -> Option<NodeId> {
        graph
            .nodes
            .values()
            .filter(|n| !exclude.contains(&&n.id))
            .map(|n| (dist(scale(n.position3, self.scale), point), &n.id))
            .filter(|(d, _)| *d <= radius)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, id)| id.clone())
    }

    fn nearest_link_midpoint(&self, graph: &GraphState, point: Vec3, radius: f64) -> Option<LinkId> {
        graph
            .links
            .values()
            .filter_map(|l| {
                let a = graph.nodes.get(&l.source_id)?.position3;
                let b = graph.nodes.get(&l.target_id)?.position3;
                let mid = scale(add(a, b), 0.5 * self.scale);
                Some((dist(mid, point), &l.id))
            })
            .filter(|(d, _)| *d <= radius)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, id)| id.clone())
    }

    /// Feeds one frame; returns what it implies, in order.
    pub fn step(&mut self, frame: &HandFrame, graph: &GraphState, config: &GestureConfig) -> Vec<GestureOutput> {
        let mut out = Vec::new();
        for hand in [Hand::Left, Hand::Right] {
            let palm = frame.hand(hand).palm;
            self.hand_mut(hand).observe(frame.t, palm, config.velocity_smoothing);
        }
        if self.pending.as_ref().is_some_and(|p| frame.t > p.t + config.merge_window_ms) {
            self.resolve_pending(&mut out);
        }

        let mut fist_onset = false;
        for hand in [Hand::Left, Hand::Right] {
            let cur = frame.hand(hand).posture;
            let prev = self.hand(hand).posture.unwrap_or(cur);
            self.hand_mut(hand).posture = Some(cur);

            if prev == Posture::Fist && cur != Posture::Fist {
                self.release_fist(hand, frame, graph, config, &mut out);
            }
            if prev == Posture::Pinch && cur != Posture::Pinch {
                self.release_pinch(hand, frame, graph, config, &mut out);
            }
            if prev != Posture::Fist && cur == Posture::Fist {
                fist_onset = true;
                self.close_fist(hand, frame, graph, config, &mut out);
            } else if prev != Posture::Pinch && cur == Posture::Pinch {
                self.start_pinch(hand, frame, graph, config);
            } else if prev == cur {
                self.hold(hand, frame, graph, config, &mut out);
            }
        }
        self.update_zoom(frame, fist_onset, &mut out);
        out
    }

    fn close_fist(
        &mut self,
        hand: Hand,
        frame: &HandFrame,
        graph: &GraphState,
        config: &GestureConfig,
        out: &mut Vec<GestureOutput>,
    ) {
        let palm = frame.hand(hand).palm;
        let other = self.hand(hand.other()).held_node().cloned();
        let exclude: Vec<&NodeId> = other.iter().collect();
        let Some(node) = self.nearest_node(graph, palm, config.grab_radius, &exclude) else {
            return;
        };
        let view = self.view_position(graph, &node).expect("nearest node exists");
        self.hand_mut(hand).mode = HandMode::GrabbingNode {
            node: node.clone(),
            grab_offset: sub(view, palm),
            start_position: graph.nodes[&node].position3,
        };
        out.push(GestureOutput::Grab { hand, node });
    }

    fn hold(&mut self, hand: Hand, frame: &HandFrame, graph: &GraphState, config: &GestureConfig, out: &mut Vec<GestureOutput>) {
        let state = frame.hand(hand);
        match self.hand(hand).mode.clone() {
            HandMode::GrabbingNode { node, grab_offset, .. } if state.posture == Posture::Fist => {
                if !graph.nodes.contains_key(&node) {
                    self.hand_mut(hand).mode = HandMode::Idle;
                    return;
                }
                let position = scale(add(state.palm, grab_offset), 1.0 / self.scale);
                out.push(op(GraphOp::MoveNode { id: node, position }));
            }
            HandMode::PullingLink { link, anchor } if state.posture == Posture::Pinch => {
                if !graph.links.contains_key(&link) {
                    self.hand_mut(hand).mode = HandMode::Idle;
                } else if dist(state.fingertip(), anchor) > config.pull_distance {
                    out.push(op(GraphOp::DeleteLink { id: link }));
                    self.hand_mut(hand).mode = HandMode::Idle;
                }
            }
            _ => {}
        }
    }

    fn release_fist(
        &mut self,
        hand: Hand,
        frame: &HandFrame,
        graph: &GraphState,
        config: &GestureConfig,
        out: &mut Vec<GestureOutput>,
    ) {
        let HandMode::GrabbingNode { node, grab_offset, start_position } = std::mem::take(&mut self.hand_mut(hand).mode)
        else {
            return;
        };
        let Some(record) = graph.nodes.get(&node) else { return };
        let palm = frame.hand(hand).palm;
        let released_at = add(palm, grab_offset);

        if self.hand(hand).speed() > config.throw_speed && record.kind != NodeKind::DocumentAnchor {
            self.resolve_pending(out);
            out.push(op(GraphOp::DeleteNode { id: node }));
            return;
        }

        if let Some(pending) = self.pending.take() {
            if frame.t <= pending.t + config.merge_window_ms
                && dist(pending.released_at, released_at) <= config.merge_radius
            {
                out.push(op(GraphOp::MoveNode { id: node.clone(), position: scale(released_at, 1.0 / self.scale) }));
                out.push(op(merge_op(graph, pending.node, node)));
                return;
            }
            self.pending = Some(pending);
            self.resolve_pending(out);
        }

        let other_hand = hand.other();
        let other_held = self.hand(other_hand).held_node().cloned();
        let link_target =
            self.nearest_node(graph, palm, config.link_radius, &[&node]).filter(|t| Some(t) != other_held.as_ref());
        let other_view = match &self.hand(other_hand).mode {
            HandMode::GrabbingNode { grab_offset, .. } => Some(add(frame.hand(other_hand).palm, *grab_offset)),
            _ => None,
        };
        if other_view.is_some_and(|v| dist(v, released_at) <= config.merge_radius) {
            out.push(op(GraphOp::MoveNode { id: node.clone(), position: scale(released_at, 1.0 / self.scale) }));
            self.pending = Some(PendingRelease { node, t: frame.t, released_at, link_target, start_position });
            return;
        }

        match link_target {
            Some(target) => {
                out.push(op(GraphOp::MoveNode { id: node.clone(), position: start_position }));
                out.push(op(GraphOp::CreateLink { id: None, source: node, target, label: String::new() }));
            }
            None => out.push(op(GraphOp::MoveNode { id: node, position: scale(released_at, 1.0 / self.scale) })),
        }
    }

    fn resolve_pending(&mut self, out: &mut Vec<GestureOutput>) {
        if let Some(PendingRelease { node, link_target: Some(target), start_position, .. }) = self.pending.take() {
            out.push(op(GraphOp::MoveNode { id: node.clone(), position: start_position }));
            out.push(op(GraphOp::CreateLink { id: None, source: node, target, label: String::new() }));
        }
    }

    fn start_pinch(&mut self, hand: Hand, frame: &HandFrame, graph: &GraphState, config: &GestureConfig) {
        let tip = frame.hand(hand).fingertip();
        let other = self.hand(hand.other()).held_node().cloned();
        let exclude: Vec<&NodeId> = other.iter().collect();
        let mode = if let Some(node) = self.nearest_node(graph, tip, config.grab_radius, &exclude) {
            HandMode::DraggingLinkSource { node }
        } else if let Some(link) = self.nearest_link_midpoint(graph, tip, config.link_radius) {
            HandMode::PullingLink { link, anchor: tip }
        } else {
            return;
        };
        self.hand_mut(hand).mode = mode;
    }

    fn release_pinch(
        &mut self,
        hand: Hand,
        frame: &HandFrame,
        graph: &GraphState,
        config: &GestureConfig,
        out: &mut Vec<GestureOutput>,
    ) {
        match std::mem::take(&mut self.hand_mut(hand).mode) {
            HandMode::DraggingLinkSource { node } if graph.nodes.contains_key(&node) => {
                let tip = frame.hand(hand).fingertip();
                if let Some(target) = self.nearest_node(graph, tip, config.link_radius, &[&node]) {
                    out.push(op(GraphOp::CreateLink { id: None, source: node, target, label: String::new() }));
                }
            }
            HandMode::GrabbingNode { .. } => unreachable!("grab ends on fist release"),
            _ => {}
        }
    }

    fn update_zoom(&mut self, frame: &HandFrame, fist_onset: bool, out: &mut Vec<GestureOutput>) {
        let both_fists = frame.left.posture == Posture::Fist && frame.right.posture == Posture::Fist;
        let both_free = self.left.mode == HandMode::Idle && self.right.mode == HandMode::Idle;
        if !(both_fists && both_free) {
            self.two_hand_zoom = None;
            return;
        }
        let distance = dist(frame.left.palm, frame.right.palm);
        match self.two_hand_zoom {
            None if fist_onset && distance > 0.0 => {
                self.two_hand_zoom = Some(ZoomGesture { start_distance: distance, start_scale: self.scale });
            }
            Some(z) => {
                let next = z.start_scale * distance / z.start_distance;
                if next > 0.0 && next != self.scale {
                    self.scale = next;
                    out.push(GestureOutput::Zoom { scale: next });
                }
            }
            None => {}
        }
    }
}

/// Anchors cannot be absorbed, so an anchor always survives.
fn merge_op(graph: &GraphState, first: NodeId, second: NodeId) -> GraphOp {
    let is_anchor = |id: &NodeId| graph.nodes.get(id).is_some_and(|n| n.kind == NodeKind::DocumentAnchor);
    let (survivor, absorbed) = if is_anchor(&second) && !is_anchor(&first) { (second, first) } else { (first, second) };
    GraphOp::MergeNodes { survivor, absorbed }
}

#[cfg(test)]
mod tests;
