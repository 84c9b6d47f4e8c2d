//! Scripted multi-client runs against a live server.

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    foot_step, read_frames, validate_frames, FloorTimeline, FootState, GestureConfig, GestureOutput, GestureState,
    HandFrame, InteractionError,
};
use crate::graph::{derive_timeline, DocumentId, GraphOp, GraphState, NodeId, SelectionUpdate, Vec3};
use crate::layout::{Quat, IDENTITY_QUAT};
use crate::sync::{DeviceKind, PoseKind, PoseSample, SyncClient};

fn identity() -> Quat {
    IDENTITY_QUAT
}

fn default_tolerance() -> f64 {
    1e-9
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub gesture: GestureConfig,
    pub clients: Vec<ScenarioClient>,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioClient {
    pub device: String,
    pub kind: DeviceKind,
    #[serde(default)]
    pub actions: Vec<ScenarioAction>,
}

/// Node references are ids, or `@label` for the node carrying that label in
/// the acting client's replica (for link ops, the link carrying it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SelectSpec {
    #[serde(default)]
    pub document_id: Option<DocumentId>,
    #[serde(default)]
    pub nodes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PoseSpec {
    pub kind: PoseKind,
    pub position3: Vec3,
    #[serde(default = "identity")]
    pub orientation: Quat,
}

/// Poses sent at `hz` in the background while later actions proceed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PoseFlood {
    pub kind: PoseKind,
    pub hz: f64,
    pub duration_ms: u64,
    #[serde(default)]
    pub from: Vec3,
    #[serde(default)]
    pub to: Option<Vec3>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HeadStep {
    /// Offset from the start of the walk, ms.
    pub t: u64,
    pub position3: Vec3,
}

/// One timed step; exactly one of the action fields is set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioAction {
    /// Start time, ms after the run begins.
    #[serde(default)]
    pub at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<GraphOp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub select: Option<SelectSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<PoseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose_flood: Option<PoseFlood>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<HandFrame>>,
    /// JSONL hand frames, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames_file: Option<String>,
    /// Head path for standing on the floor timeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk: Option<Vec<HeadStep>>,
    /// Error code the op or selection must be rejected with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_error: Option<String>,
}

impl ScenarioAction {
    fn kind_count(&self) -> usize {
        [
            self.op.is_some(),
            self.select.is_some(),
            self.pose.is_some(),
            self.pose_flood.is_some(),
            self.frames.is_some(),
            self.frames_file.is_some(),
            self.walk.is_some(),
        ]
        .into_iter()
        .filter(|b| *b)
        .count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum Expectation {
    /// Every replica ends with the same hash and saw no hash mismatch.
    Converged,
    /// Every client saw a contiguous run of seqs.
    GapFree,
    NodeCount(usize),
    LinkCount(usize),
    HasNode(String),
    NoNode(String),
    #[serde(rename_all = "camelCase")]
    HasLink { source: String, target: String },
    /// Applied events originating from `device`.
    #[serde(rename_all = "camelCase")]
    Applied { device: String, count: usize },
    /// Rejections recorded for `device`.
    #[serde(rename_all = "camelCase")]
    Errors { device: String, count: usize },
    #[serde(rename_all = "camelCase")]
    Selected { nodes: Vec<String> },
    #[serde(rename_all = "camelCase")]
    NodePosition {
        node: String,
        position: Vec3,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TranscriptEntry {
    pub device: String,
    pub at: u64,
    pub elapsed_ms: u64,
    pub action: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssertionResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioReport {
    pub transcript: Vec<TranscriptEntry>,
    pub assertions: Vec<AssertionResult>,
    /// Every event applied after the run connected, in seq order.
    pub events: Vec<crate::sync::SessionEvent>,
    pub final_seq: u64,
    pub final_hash: String,
    pub poses_sent: u64,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), InteractionError> {
        let bad = |m: String| Err(InteractionError::InvalidScenario(m));
        let mut devices = BTreeSet::new();
        for client in &self.clients {
            if !devices.insert(client.device.as_str()) {
                return bad(format!("device {} listed twice", client.device));
            }
            if client.kind == DeviceKind::Server {
                return bad(format!("device {} cannot act as the server", client.device));
            }
            let mut last = 0;
            for (i, action) in client.actions.iter().enumerate() {
                if action.kind_count() != 1 {
                    return bad(format!("{} action {i}: exactly one action field is required", client.device));
                }
                if action.at < last {
                    return bad(format!("{} action {i}: at={} is before {last}", client.device, action.at));
                }
                last = action.at;
                if let Some(frames) = &action.frames {
                    validate_frames(frames)?;
                }
                if let Some(flood) = &action.pose_flood {
                    if !(flood.hz > 0.0 && flood.hz <= 1000.0) {
                        return bad(format!("{} action {i}: hz must be in (0, 1000]", client.device));
                    }
                }
            }
        }
        Ok(())
    }

    /// Inlines `framesFile` references so the scenario is self-contained.
    pub fn load_frame_files(&mut self, base: &Path) -> Result<(), InteractionError> {
        for action in self.clients.iter_mut().flat_map(|c| c.actions.iter_mut()) {
            if let Some(file) = action.frames_file.take() {
                action.frames = Some(read_frames(&base.join(file))?);
            }
        }
        Ok(())
    }
}

fn resolve_node(graph: &GraphState, reference: &str) -> NodeId {
    match reference.strip_prefix('@') {
        Some(label) => graph
            .nodes
            .values()
            .find(|n| n.label == label)
            .map(|n| n.id.clone())
            .unwrap_or_else(|| NodeId::from(reference)),
        None => NodeId::from(reference),
    }
}

fn resolve_op(graph: &GraphState, op: &GraphOp) -> GraphOp {
    let mut value = serde_json::to_value(op).expect("ops serialize");
    let kind = value["kind"].as_str().unwrap_or_default().to_owned();
    let Value::Object(fields) = &mut value else { return op.clone() };
    for (key, field) in fields.iter_mut() {
        let Value::String(s) = field else { continue };
        let Some(label) = s.strip_prefix('@') else { continue };
        let resolved = match (key.as_str(), kind.as_str()) {
            ("id", "createNode" | "createLink") => None,
            ("id", "updateLinkLabel" | "deleteLink") => {
                graph.links.values().find(|l| l.label == label).map(|l| l.id.to_string())
            }
            ("id" | "source" | "target" | "survivor" | "absorbed", _) => Some(resolve_node(graph, s).0),
            _ => None,
        };
        if let Some(r) = resolved {
            *s = r;
        }
    }
    serde_json::from_value(value).unwrap_or_else(|_| op.clone())
}

static OBSERVERS: AtomicU64 = AtomicU64::new(0);

struct Actor {
    device: String,
    client: Arc<SyncClient>,
    start: Instant,
    transcript: Vec<TranscriptEntry>,
    assertions: Vec<AssertionResult>,
    floods: Vec<tokio::task::JoinHandle<u64>>,
    poses_sent: u64,
    gesture: GestureConfig,
}

impl Actor {
    fn elapsed(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }

    fn record(&mut self, at: u64, action: String, result: Result<u64, String>) {
        let (seq, error) = match result {
            Ok(seq) => (Some(seq), None),
            Err(code) => (None, Some(code)),
        };
        let elapsed_ms = self.elapsed();
        self.transcript.push(TranscriptEntry { device: self.device.clone(), at, elapsed_ms, action, seq, error });
    }

    fn check_outcome(&mut self, at: u64, what: &str, result: &Result<u64, String>, expected: &Option<String>) {
        let name = format!("{} at {at}ms: {what}", self.device);
        let (passed, detail) = match (result, expected) {
            (Ok(seq), None) => (true, format!("applied at seq {seq}")),
            (Err(code), None) => (false, format!("rejected with {code}")),
            (Ok(seq), Some(want)) => (false, format!("expected {want}, applied at seq {seq}")),
            (Err(code), Some(want)) => (code == want, format!("rejected with {code}")),
        };
        self.assertions.push(AssertionResult { name, passed, detail });
    }

    async fn submit(&mut self, at: u64, op: GraphOp) -> Result<u64, String> {
        let op = resolve_op(&self.client.replica(), &op);
        let label = format!("op {}", op.name());
        let result = self.client.submit(op).await.map(|e| e.seq).map_err(|e| e.code().to_owned());
        self.record(at, label, result.clone());
        result
    }

    async fn select(&mut self, at: u64, update: SelectionUpdate, label: &str) -> Result<u64, String> {
        let result = self.client.select(update).await.map(|e| e.seq).map_err(|e| e.code().to_owned());
        self.record(at, label.to_owned(), result.clone());
        result
    }

    fn pose(&mut self, kind: PoseKind, position3: Vec3, orientation: Quat, t: u64) {
        let sample = PoseSample { device_id: self.device.as_str().into(), kind, t, position3, orientation };
        if self.client.send_pose(sample).is_ok() {
            self.poses_sent += 1;
        }
    }

    async fn run(&mut self, action: &ScenarioAction) -> Result<(), InteractionError> {
        let at = action.at;
        if let Some(op) = &action.op {
            let result = self.submit(at, op.clone()).await;
            self.check_outcome(at, &format!("op {}", op.name()), &result, &action.expect_error);
        } else if let Some(spec) = &action.select {
            let replica = self.client.replica();
            let update = SelectionUpdate {
                document_id: spec.document_id.clone(),
                node_ids: spec.nodes.iter().map(|r| resolve_node(&replica, r)).collect(),
            };
            let result = self.select(at, update, "select").await;
            self.check_outcome(at, "select", &result, &action.expect_error);
        } else if let Some(pose) = &action.pose {
            let t = self.elapsed();
            self.pose(pose.kind, pose.position3, pose.orientation, t);
            self.record(at, "pose".into(), Ok(self.client.seq()));
        } else if let Some(flood) = action.pose_flood.clone() {
            let client = self.client.clone();
            let device = self.device.clone();
            let start = self.start;
            self.floods.push(tokio::spawn(async move { run_flood(client, device, start, flood).await }));
            self.record(at, "poseFlood".into(), Ok(self.client.seq()));
        } else if let Some(frames) = &action.frames {
            let mut state = GestureState::default();
            for frame in frames {
                let replica = self.client.replica();
                for output in state.step(frame, &replica, &self.gesture) {
                    if let GestureOutput::Op { op } = output {
                        let _ = self.submit(at, op).await;
                    }
                }
            }
        } else if let Some(walk) = &action.walk {
            let mut foot = FootState::default();
            let base = self.elapsed();
            for step in walk {
                self.pose(PoseKind::Head, step.position3, IDENTITY_QUAT, base + step.t);
                let replica = self.client.replica();
                let floor = FloorTimeline::standard(derive_timeline(&replica));
                if let Some(update) = foot_step(&mut foot, step.t, step.position3, &floor, &replica, &self.gesture) {
                    let _ = self.select(at, update, "footSelect").await;
                }
            }
        }
        Ok(())
    }
}

async fn run_flood(client: Arc<SyncClient>, device: String, start: Instant, flood: PoseFlood) -> u64 {
    let period = Duration::from_secs_f64(1.0 / flood.hz);
    let count = (flood.duration_ms as f64 / 1000.0 * flood.hz).round() as u64;
    let to = flood.to.unwrap_or(flood.from);
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let mut sent = 0;
    for k in 0..count {
        ticker.tick().await;
        let s = if count > 1 { k as f64 / (count - 1) as f64 } else { 0.0 };
        let p = [
            flood.from[0] + (to[0] - flood.from[0]) * s,
            flood.from[1] + (to[1] - flood.from[1]) * s,
            flood.from[2] + (to[2] - flood.from[2]) * s,
        ];
        let sample = PoseSample {
            device_id: device.as_str().into(),
            kind: flood.kind,
            t: start.elapsed().as_millis() as u64,
            position3: p,
            orientation: IDENTITY_QUAT,
        };
        if client.send_pose(sample).is_err() {
            break;
        }
        sent += 1;
    }
    sent
}

fn contiguous(seqs: &[u64]) -> bool {
    seqs.windows(2).all(|w| w[1] == w[0] + 1)
}

/// Drives every client in `scenario` against the server at `addr`, then
/// checks the expectations against the settled replicas.
pub async fn run_scenario(
    scenario: &Scenario,
    addr: SocketAddr,
    session: &str,
) -> Result<ScenarioReport, InteractionError> {
    let scenario = scenario.clone();
    scenario.validate()?;
    if scenario.clients.iter().flat_map(|c| &c.actions).any(|a| a.frames_file.is_some()) {
        return Err(InteractionError::InvalidScenario("frame files must be loaded first".into()));
    }

    let observer_id = format!("observer-{}-{}", std::process::id(), OBSERVERS.fetch_add(1, Ordering::Relaxed));
    let observer = SyncClient::connect(addr, session, &observer_id, DeviceKind::Pc).await?;
    let mut clients = Vec::new();
    for c in &scenario.clients {
        clients.push(Arc::new(SyncClient::connect(addr, session, &c.device, c.kind).await?));
    }

    let start = Instant::now();
    let mut tasks = tokio::task::JoinSet::new();
    for (spec, client) in scenario.clients.iter().cloned().zip(&clients) {
        let mut actor = Actor {
            device: spec.device.clone(),
            client: client.clone(),
            start,
            transcript: Vec::new(),
            assertions: Vec::new(),
            floods: Vec::new(),
            poses_sent: 0,
            gesture: scenario.gesture.clone(),
        };
        tasks.spawn(async move {
            for action in &spec.actions {
                let due = start + Duration::from_millis(action.at);
                tokio::time::sleep_until(due.into()).await;
                actor.run(action).await?;
            }
            for flood in std::mem::take(&mut actor.floods) {
                actor.poses_sent += flood.await.unwrap_or(0);
            }
            Ok::<_, InteractionError>(actor)
        });
    }
    let mut transcript = Vec::new();
    let mut assertions = Vec::new();
    let mut poses_sent = 0;
    while let Some(joined) = tasks.join_next().await {
        let actor = joined.map_err(|e| InteractionError::InvalidScenario(format!("client task failed: {e}")))??;
        transcript.extend(actor.transcript);
        assertions.extend(actor.assertions);
        poses_sent += actor.poses_sent;
    }
    transcript.sort_by(|a, b| (a.elapsed_ms, a.at, &a.device).cmp(&(b.elapsed_ms, b.at, &b.device)));

    let final_seq = observer.sync().await?;
    for c in &clients {
        c.sync().await?;
    }
    let graph = observer.replica();
    let events = observer.received();

    for expectation in &scenario.expect {
        assertions.push(evaluate(expectation, &graph, &observer, &clients, &transcript, &events));
    }

    let report = ScenarioReport {
        transcript,
        assertions,
        events,
        final_seq,
        final_hash: graph.snapshot_hash(),
        poses_sent,
    };
    drop(clients);
    observer.close().await;
    Ok(report)
}

fn evaluate(
    expectation: &Expectation,
    graph: &GraphState,
    observer: &SyncClient,
    clients: &[Arc<SyncClient>],
    transcript: &[TranscriptEntry],
    events: &[crate::sync::SessionEvent],
) -> AssertionResult {
    let name = serde_json::to_string(expectation).unwrap_or_default();
    let (passed, detail) = match expectation {
        Expectation::Converged => {
            let reference = observer.replica_hash();
            let hashes: Vec<String> = clients.iter().map(|c| c.replica_hash()).collect();
            let mismatches: u64 =
                clients.iter().map(|c| c.hash_mismatches()).sum::<u64>() + observer.hash_mismatches();
            (
                hashes.iter().all(|h| *h == reference) && mismatches == 0,
                format!("{} replicas, {mismatches} hash mismatches", hashes.len() + 1),
            )
        }
        Expectation::GapFree => {
            let mut ok = contiguous(&events.iter().map(|e| e.seq).collect::<Vec<_>>());
            ok &= events.last().is_none_or(|e| e.seq == graph.seq);
            for c in clients {
                ok &= contiguous(&c.received().iter().map(|e| e.seq).collect::<Vec<_>>());
            }
            (ok, format!("{} events, final seq {}", events.len(), graph.seq))
        }
        Expectation::NodeCount(n) => (graph.nodes.len() == *n, format!("{} nodes", graph.nodes.len())),
        Expectation::LinkCount(n) => (graph.links.len() == *n, format!("{} links", graph.links.len())),
        Expectation::HasNode(r) => {
            let id = resolve_node(graph, r);
            (graph.nodes.contains_key(&id), format!("looked up {id}"))
        }
        Expectation::NoNode(r) => {
            let id = resolve_node(graph, r);
            (!graph.nodes.contains_key(&id), format!("looked up {id}"))
        }
        Expectation::HasLink { source, target } => {
            let (a, b) = (resolve_node(graph, source), resolve_node(graph, target));
            let found = graph.links.values().any(|l| {
                (l.source_id == a && l.target_id == b) || (l.source_id == b && l.target_id == a)
            });
            (found, format!("{a} - {b}"))
        }
        Expectation::Applied { device, count } => {
            let n = events.iter().filter(|e| e.device_id.as_str() == device).count();
            (n == *count, format!("{n} applied"))
        }
        Expectation::Errors { device, count } => {
            let n = transcript.iter().filter(|t| t.device == *device && t.error.is_some()).count();
            (n == *count, format!("{n} rejected"))
        }
        Expectation::Selected { nodes } => {
            let want: BTreeSet<NodeId> = nodes.iter().map(|r| resolve_node(graph, r)).collect();
            let got = &graph.selections.selected_node_ids;
            (*got == want, format!("{got:?}"))
        }
        Expectation::NodePosition { node, position, tolerance } => {
            let id = resolve_node(graph, node);
            match graph.nodes.get(&id) {
                Some(n) => {
                    let d = super::dist(n.position3, *position);
                    (d <= *tolerance, format!("{:?}, off by {d:e}", n.position3))
                }
                None => (false, format!("{id} missing")),
            }
        }
    };
    AssertionResult { name, passed, detail }
}
