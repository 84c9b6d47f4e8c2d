use proptest::prelude::*;

use super::*;
use crate::graph::DeviceId;
use crate::interaction::HandState;

const FLAT: Posture = Posture::Flat;
const FIST: Posture = Posture::Fist;
const PINCH: Posture = Posture::Pinch;
const AWAY: Vec3 = [5.0, 0.0, 5.0];
const DT: u64 = 11;

fn frame(t: u64, left: (Vec3, Posture), right: (Vec3, Posture)) -> HandFrame {
    HandFrame { t, left: HandState::new(left.0, left.1), right: HandState::new(right.0, right.1) }
}

fn graph_with(nodes: &[(&str, Vec3)]) -> GraphState {
    let mut g = GraphState::new();
    for (id, p) in nodes {
        g.create_node(NodeId::from(*id), id, *p, &DeviceId::from("vr-1")).unwrap();
    }
    g
}

/// Runs frames, applying emitted ops to the graph as a server would.
struct Rig {
    graph: GraphState,
    state: GestureState,
    config: GestureConfig,
    out: Vec<GestureOutput>,
    seq: u64,
}

impl Rig {
    fn new(graph: GraphState) -> Self {
        Rig { graph, state: GestureState::default(), config: GestureConfig::default(), out: Vec::new(), seq: 100 }
    }

    fn feed(&mut self, f: &HandFrame) -> Vec<GestureOutput> {
        let out = self.state.step(f, &self.graph, &self.config);
        for o in &out {
            if let GestureOutput::Op { op } = o {
                self.seq += 1;
                let _ = self.graph.apply(&op.clone().with_assigned_ids(self.seq), &DeviceId::from("vr-1"));
            }
        }
        self.out.extend(out.clone());
        out
    }

    fn ops(&self) -> Vec<GraphOp> {
        self.out
            .iter()
            .filter_map(|o| match o {
                GestureOutput::Op { op } => Some(op.clone()),
                _ => None,
            })
            .collect()
    }
}

fn lerp(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    [a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s, a[2] + (b[2] - a[2]) * s]
}

/// Smoothed speed for a palm trace, computed directly from the definition.
fn smoothed_speed_oracle(trace: &[(u64, Vec3)], alpha: f64) -> f64 {
    let mut v = [0.0; 3];
    for k in 1..trace.len() {
        let j = k.saturating_sub(2);
        let dt = (trace[k].0 - trace[j].0) as f64 / 1000.0;
        for c in 0..3 {
            let raw = (trace[k].1[c] - trace[j].1[c]) / dt;
            v[c] = alpha * raw + (1.0 - alpha) * v[c];
        }
    }
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[test]
fn grab_move_and_slow_release() {
    let mut rig = Rig::new(graph_with(&[("N", [0.0, 1.0, 0.0])]));
    let start = [0.02, 1.0, 0.0];
    let end = [0.52, 1.0, 0.0];
    let mut t = 0;
    rig.feed(&frame(t, (AWAY, FLAT), (start, FLAT)));
    t += DT;
    assert_eq!(rig.feed(&frame(t, (AWAY, FLAT), (start, FIST))), vec![GestureOutput::Grab {
        hand: Hand::Right,
        node: "N".into()
    }]);
    let HandMode::GrabbingNode { grab_offset, .. } = rig.state.right.mode.clone() else { panic!() };
    for i in 1..=60 {
        t += DT;
        let palm = lerp(start, end, i as f64 / 60.0);
        let out = rig.feed(&frame(t, (AWAY, FLAT), (palm, FIST)));
        // grabbed node sits at palm + offset every frame
        let expected = add(palm, grab_offset);
        assert_eq!(out, vec![op(GraphOp::MoveNode { id: "N".into(), position: expected })]);
    }
    for _ in 0..20 {
        t += DT;
        rig.feed(&frame(t, (AWAY, FLAT), (end, FIST)));
    }
    t += DT;
    let out = rig.feed(&frame(t, (AWAY, FLAT), (end, FLAT)));
    assert_eq!(out.len(), 1);
    assert!(matches!(&out[0], GestureOutput::Op { op: GraphOp::MoveNode { .. } }));
    let p = rig.graph.nodes[&NodeId::from("N")].position3;
    assert!(dist(p, [0.5, 1.0, 0.0]) < 1e-12, "{p:?}");
    assert!(!rig.ops().iter().any(|o| matches!(o, GraphOp::DeleteNode { .. })));
}

fn throw_trace(speed: f64, frames: usize) -> Vec<(u64, Vec3)> {
    (0..frames)
        .map(|i| {
            let t = i as u64 * DT;
            (t, [0.02 + speed * t as f64 / 1000.0, 1.0, 0.0])
        })
        .collect()
}

fn run_throw(speed: f64) -> (Rig, f64) {
    let mut rig = Rig::new(graph_with(&[("N", [0.0, 1.0, 0.0])]));
    let trace = throw_trace(speed, 12);
    rig.feed(&frame(0, (AWAY, FLAT), ([0.02, 1.0, 0.0], FLAT)));
    for &(t, p) in &trace[1..trace.len() - 1] {
        rig.feed(&frame(t, (AWAY, FLAT), (p, FIST)));
    }
    let &(t, p) = trace.last().unwrap();
    rig.feed(&frame(t, (AWAY, FLAT), (p, FLAT)));
    let oracle = smoothed_speed_oracle(&trace, rig.config.velocity_smoothing);
    (rig, oracle)
}

#[test]
fn fast_release_throws_node_away() {
    let (rig, oracle) = run_throw(2.0);
    assert!(oracle > 1.5 && (oracle - 2.0).abs() < 0.01, "{oracle}");
    assert!((rig.state.right.speed() - oracle).abs() < 1e-9);
    assert_eq!(rig.ops().last(), Some(&GraphOp::DeleteNode { id: "N".into() }));
    assert!(rig.graph.nodes.is_empty());
}

#[test]
fn moderate_release_keeps_node() {
    let (rig, oracle) = run_throw(1.0);
    assert!(oracle < 1.5);
    assert!(!rig.ops().iter().any(|o| matches!(o, GraphOp::DeleteNode { .. })));
    assert!(rig.graph.nodes.contains_key(&NodeId::from("N")));
}

#[test]
fn two_fists_in_empty_space_zoom_by_distance_ratio() {
    let mut rig = Rig::new(graph_with(&[("N", [0.0, 1.0, -3.0])]));
    let (l0, r0) = ([-0.2, 1.2, 0.0], [0.2, 1.2, 0.0]);
    rig.feed(&frame(0, (l0, FLAT), (r0, FLAT)));
    rig.feed(&frame(DT, (l0, FIST), (r0, FIST)));
    assert!(rig.state.two_hand_zoom.is_some());
    for i in 1..=10 {
        let s = i as f64 / 10.0;
        rig.feed(&frame(DT + i * DT, (lerp(l0, [-0.4, 1.2, 0.0], s), FIST), (lerp(r0, [0.4, 1.2, 0.0], s), FIST)));
    }
    assert!((rig.state.scale - 2.0).abs() < 1e-12);
    assert_eq!(rig.out.last(), Some(&GestureOutput::Zoom { scale: rig.state.scale }));
    assert!(rig.ops().is_empty(), "zoom is local only");
    rig.feed(&frame(200, ([-0.4, 1.2, 0.0], FLAT), ([0.4, 1.2, 0.0], FIST)));
    assert!(rig.state.two_hand_zoom.is_none());
}

#[test]
fn grab_respects_zoomed_view() {
    let mut rig = Rig::new(graph_with(&[("N", [0.5, 0.5, 0.0])]));
    rig.state.scale = 2.0;
    // the node is drawn at (1, 1, 0)
    rig.feed(&frame(0, (AWAY, FLAT), ([1.0, 1.0, 0.0], FLAT)));
    rig.feed(&frame(DT, (AWAY, FLAT), ([1.0, 1.0, 0.0], FIST)));
    rig.feed(&frame(2 * DT, (AWAY, FLAT), ([1.0, 1.2, 0.0], FIST)));
    assert_eq!(rig.ops(), vec![GraphOp::MoveNode { id: "N".into(), position: [0.5, 0.6, 0.0] }]);
}

#[test]
fn dragging_onto_another_node_links_and_restores_position() {
    let mut rig = Rig::new(graph_with(&[("A", [0.0, 1.0, 0.0]), ("B", [0.4, 1.0, 0.0])]));
    rig.feed(&frame(0, (AWAY, FLAT), ([0.0, 1.0, 0.0], FLAT)));
    rig.feed(&frame(DT, (AWAY, FLAT), ([0.0, 1.0, 0.0], FIST)));
    let mut t = DT;
    for i in 1..=40 {
        t += DT;
        rig.feed(&frame(t, (AWAY, FLAT), (lerp([0.0, 1.0, 0.0], [0.38, 1.0, 0.0], i as f64 / 40.0), FIST)));
    }
    for _ in 0..20 {
        t += DT;
        rig.feed(&frame(t, (AWAY, FLAT), ([0.38, 1.0, 0.0], FIST)));
    }
    let out = rig.feed(&frame(t + DT, (AWAY, FLAT), ([0.38, 1.0, 0.0], FLAT)));
    assert_eq!(out, vec![
        op(GraphOp::MoveNode { id: "A".into(), position: [0.0, 1.0, 0.0] }),
        op(GraphOp::CreateLink { id: None, source: "A".into(), target: "B".into(), label: String::new() }),
    ]);
    assert_eq!(rig.graph.links.len(), 1);
    assert_eq!(rig.graph.nodes[&NodeId::from("A")].position3, [0.0, 1.0, 0.0]);
}

/// Left holds A, right holds B; both are brought to the middle and released.
fn merge_run(right_release_delay: u64) -> Rig {
    let mut rig = Rig::new(graph_with(&[("A", [-0.3, 1.0, 0.0]), ("B", [0.3, 1.0, 0.0])]));
    let (la, rb) = ([-0.3, 1.0, 0.0], [0.3, 1.0, 0.0]);
    rig.feed(&frame(0, (la, FLAT), (rb, FLAT)));
    rig.feed(&frame(DT, (la, FIST), (rb, FIST)));
    let mut t = DT;
    for i in 1..=40 {
        t += DT;
        let s = i as f64 / 40.0;
        rig.feed(&frame(t, (lerp(la, [-0.02, 1.0, 0.0], s), FIST), (lerp(rb, [0.02, 1.0, 0.0], s), FIST)));
    }
    let (lm, rm) = ([-0.02, 1.0, 0.0], [0.02, 1.0, 0.0]);
    for _ in 0..20 {
        t += DT;
        rig.feed(&frame(t, (lm, FIST), (rm, FIST)));
    }
    t += DT;
    let release = t;
    if right_release_delay == 0 {
        rig.feed(&frame(t, (lm, FLAT), (rm, FLAT)));
    } else {
        rig.feed(&frame(t, (lm, FLAT), (rm, FIST)));
        while t < release + right_release_delay {
            t += DT.min(release + right_release_delay - t);
            let posture = if t == release + right_release_delay { FLAT } else { FIST };
            rig.feed(&frame(t, (lm, FLAT), (rm, posture)));
        }
    }
    for _ in 0..30 {
        t += DT;
        rig.feed(&frame(t, (lm, FLAT), (rm, FLAT)));
    }
    rig
}

#[test]
fn simultaneous_two_hand_release_merges() {
    let rig = merge_run(0);
    let merges: Vec<_> = rig.ops().into_iter().filter(|o| matches!(o, GraphOp::MergeNodes { .. })).collect();
    assert_eq!(merges, vec![GraphOp::MergeNodes { survivor: "A".into(), absorbed: "B".into() }]);
    assert_eq!(rig.graph.nodes.len(), 1);
}

#[test]
fn release_within_window_merges_and_after_window_does_not() {
    let within = merge_run(100);
    assert!(within.ops().iter().any(|o| matches!(o, GraphOp::MergeNodes { .. })));
    let late = merge_run(300);
    assert!(!late.ops().iter().any(|o| matches!(o, GraphOp::MergeNodes { .. })));
    assert_eq!(late.graph.nodes.len(), 2);
}

#[test]
fn node_is_held_by_one_hand_at_most() {
    let mut rig = Rig::new(graph_with(&[("A", [0.0, 1.0, 0.0])]));
    let p = [0.0, 1.0, 0.0];
    rig.feed(&frame(0, (p, FLAT), (p, FLAT)));
    rig.feed(&frame(DT, (p, FIST), (p, FLAT)));
    rig.feed(&frame(2 * DT, (p, FIST), (p, FIST)));
    assert_eq!(rig.state.right.mode, HandMode::Idle);
    assert!(rig.state.two_hand_zoom.is_none());
}

fn linked_pair() -> GraphState {
    let mut g = graph_with(&[("A", [0.0, 1.0, 0.0]), ("B", [0.6, 1.0, 0.0])]);
    g.create_link(LinkId::from("L"), &"A".into(), &"B".into(), "").unwrap();
    g
}

#[test]
fn pulling_a_link_deletes_it() {
    let mut rig = Rig::new(linked_pair());
    let mid = [0.3, 1.0, 0.0];
    rig.feed(&frame(0, (AWAY, FLAT), (mid, FLAT)));
    rig.feed(&frame(DT, (AWAY, FLAT), (mid, PINCH)));
    assert!(matches!(rig.state.right.mode, HandMode::PullingLink { .. }));
    let mut t = DT;
    for i in 1..=10 {
        t += DT;
        rig.feed(&frame(t, (AWAY, FLAT), ([0.3, 1.0, 0.02 * i as f64], PINCH)));
    }
    assert_eq!(rig.ops(), vec![GraphOp::DeleteLink { id: "L".into() }]);
    assert!(rig.graph.links.is_empty());
}

#[test]
fn short_pull_keeps_link() {
    let mut rig = Rig::new(linked_pair());
    let mid = [0.3, 1.0, 0.0];
    rig.feed(&frame(0, (AWAY, FLAT), (mid, FLAT)));
    rig.feed(&frame(DT, (AWAY, FLAT), (mid, PINCH)));
    rig.feed(&frame(2 * DT, (AWAY, FLAT), ([0.3, 1.0, 0.1], PINCH)));
    rig.feed(&frame(3 * DT, (AWAY, FLAT), ([0.3, 1.0, 0.1], FLAT)));
    assert!(rig.ops().is_empty());
}

#[test]
fn pinch_drag_from_node_creates_link() {
    let mut rig = Rig::new(graph_with(&[("A", [0.0, 1.0, 0.0]), ("B", [0.6, 1.0, 0.0])]));
    rig.feed(&frame(0, (AWAY, FLAT), ([0.0, 1.0, 0.0], FLAT)));
    rig.feed(&frame(DT, (AWAY, FLAT), ([0.0, 1.0, 0.0], PINCH)));
    rig.feed(&frame(2 * DT, (AWAY, FLAT), ([0.3, 1.0, 0.0], PINCH)));
    rig.feed(&frame(3 * DT, (AWAY, FLAT), ([0.59, 1.0, 0.0], PINCH)));
    rig.feed(&frame(4 * DT, (AWAY, FLAT), ([0.59, 1.0, 0.0], FLAT)));
    assert_eq!(rig.ops(), vec![GraphOp::CreateLink {
        id: None,
        source: "A".into(),
        target: "B".into(),
        label: String::new()
    }]);
}

#[test]
fn anchors_cannot_be_thrown() {
    let mut g = GraphState::new();
    g.add_document(&"D".into(), "D", &DeviceId::from("server")).unwrap();
    let anchor = NodeId::anchor_for(&"D".into());
    g.move_node(&anchor, [0.0, 1.0, 0.0]).unwrap();
    let mut rig = Rig::new(g);
    let trace = throw_trace(3.0, 12);
    rig.feed(&frame(0, (AWAY, FLAT), (trace[0].1, FLAT)));
    for &(t, p) in &trace[1..11] {
        rig.feed(&frame(t, (AWAY, FLAT), (p, FIST)));
    }
    rig.feed(&frame(trace[11].0, (AWAY, FLAT), (trace[11].1, FLAT)));
    assert!(!rig.ops().iter().any(|o| matches!(o, GraphOp::DeleteNode { .. })));
}

fn posture() -> impl Strategy<Value = Posture> {
    prop_oneof![Just(FLAT), Just(FIST), Just(PINCH)]
}

fn palm() -> impl Strategy<Value = Vec3> {
    (-0.5f64..0.5, 0.8f64..1.4, -0.5f64..0.5).prop_map(|(x, y, z)| [x, y, z])
}

fn crowded_graph() -> GraphState {
    let mut g = graph_with(&[("A", [0.0, 1.0, 0.0]), ("B", [0.1, 1.1, 0.0]), ("C", [-0.2, 1.0, 0.1])]);
    g.create_link(LinkId::from("L"), &"A".into(), &"B".into(), "").unwrap();
    g
}

proptest! {
    #[test]
    fn constant_postures_emit_nothing(
        lp in posture(), rp in posture(),
        palms in proptest::collection::vec((palm(), palm()), 1..40),
    ) {
        let g = crowded_graph();
        let mut state = GestureState::default();
        let config = GestureConfig::default();
        for (i, (l, r)) in palms.into_iter().enumerate() {
            let out = state.step(&frame(i as u64 * DT, (l, lp), (r, rp)), &g, &config);
            prop_assert!(out.is_empty(), "{out:?}");
        }
    }

    #[test]
    fn identical_streams_give_identical_outputs(
        steps in proptest::collection::vec((palm(), posture(), palm(), posture()), 1..60),
    ) {
        let frames: Vec<HandFrame> = steps.into_iter().enumerate()
            .map(|(i, (l, lp, r, rp))| frame(i as u64 * DT, (l, lp), (r, rp)))
            .collect();
        let run = || {
            let mut rig = Rig::new(crowded_graph());
            for f in &frames {
                rig.feed(f);
            }
            (rig.out, rig.graph.snapshot_hash())
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn held_node_tracks_palm(
        steps in proptest::collection::vec((palm(), posture()), 1..60),
    ) {
        let mut rig = Rig::new(crowded_graph());
        for (i, (r, rp)) in steps.into_iter().enumerate() {
            let out = rig.feed(&frame(i as u64 * DT, (AWAY, FLAT), (r, rp)));
            if let (HandMode::GrabbingNode { node, grab_offset, .. }, true) = (&rig.state.right.mode, rp == FIST) {
                for o in out {
                    if let GestureOutput::Op { op: GraphOp::MoveNode { id, position } } = o {
                        prop_assert_eq!(&id, node);
                        prop_assert_eq!(position, add(r, *grab_offset));
                    }
                }
            }
        }
    }
}
