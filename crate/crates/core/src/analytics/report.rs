use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{
    classify_temporal, descriptive_stats, path_length, spatial_strategy, usage_timeline, AnalyticsError,
    DescriptiveStats, GazeTarget, ScreenTrack, SpatialCategory, TemporalCategory, TemporalSummary, UsageSegment,
    DEFAULT_JITTER_FLOOR, DEFAULT_MAX_GAZE_RANGE, DEFAULT_MIN_DWELL_MS, DEFAULT_SWITCH_THRESHOLD,
};
use crate::graph::{DeviceId, GraphOp};
use crate::layout::{Pose, ScreenGeometry};
use crate::sync::{EventBody, PoseKind, PoseSample, SessionEvent};

/// Operation counts keyed by bucket name; every bucket is present.
pub type InteractionCounts = BTreeMap<String, u64>;

pub const COUNT_BUCKETS: [&str; 9] = [
    "addNode",
    "addLink",
    "removeNode",
    "removeLink",
    "updateNode",
    "updateLink",
    "mergeNodes",
    "selection",
    "addDocument",
];

fn bucket(event: &SessionEvent) -> &'static str {
    match &event.body {
        EventBody::Selection(_) => "selection",
        EventBody::Op(op) => match op {
            GraphOp::AddDocument { .. } => "addDocument",
            GraphOp::CreateNode { .. } => "addNode",
            GraphOp::UpdateNodeLabel { .. } | GraphOp::MoveNode { .. } => "updateNode",
            GraphOp::DeleteNode { .. } => "removeNode",
            GraphOp::MergeNodes { .. } => "mergeNodes",
            GraphOp::CreateLink { .. } => "addLink",
            GraphOp::UpdateLinkLabel { .. } => "updateLink",
            GraphOp::DeleteLink { .. } => "removeLink",
        },
    }
}

fn empty_counts() -> InteractionCounts {
    COUNT_BUCKETS.iter().map(|b| (b.to_string(), 0)).collect()
}

/// Applied events per bucket. Logs only hold applied events, so rejected
/// requests never appear here.
pub fn interaction_counts(events: &[SessionEvent]) -> InteractionCounts {
    let mut counts = empty_counts();
    for e in events {
        *counts.get_mut(bucket(e)).expect("all buckets present") += 1;
    }
    counts
}

/// The same counts split by originating device kind.
pub fn interaction_counts_by_device(events: &[SessionEvent]) -> BTreeMap<String, InteractionCounts> {
    let mut out: BTreeMap<String, InteractionCounts> = BTreeMap::new();
    for e in events {
        let kind = serde_json::to_value(e.device_kind).ok().and_then(|v| v.as_str().map(str::to_owned));
        let counts = out.entry(kind.unwrap_or_default()).or_insert_with(empty_counts);
        *counts.get_mut(bucket(e)).expect("all buckets present") += 1;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Screen size; its pose is used when the log has no table samples.
    pub screen: ScreenGeometry,
    /// Table tracker to screen.
    pub calibration_offset: Pose,
    /// Whose head samples are analysed; the first head in the log if unset.
    pub user_device: Option<DeviceId>,
    pub max_gaze_range: f64,
    pub min_dwell_ms: u64,
    pub switch_threshold: u32,
    pub jitter_floor: f64,
    /// Per-session metrics to summarise: `pcSegmentSeconds`,
    /// `vrSegmentSeconds`, `segmentSeconds`.
    pub stats_metrics: Vec<String>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            screen: ScreenGeometry::simulated_monitor(Pose::from_translation([0.0, 1.2, -1.0])),
            calibration_offset: Pose::IDENTITY,
            user_device: None,
            max_gaze_range: DEFAULT_MAX_GAZE_RANGE,
            min_dwell_ms: DEFAULT_MIN_DWELL_MS,
            switch_threshold: DEFAULT_SWITCH_THRESHOLD,
            jitter_floor: DEFAULT_JITTER_FLOOR,
            stats_metrics: vec!["pcSegmentSeconds".into(), "vrSegmentSeconds".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StrategyReport {
    pub temporal: TemporalCategory,
    pub spatial: SpatialCategory,
    pub pc_fraction: f64,
    pub switch_count: u32,
    pub vr_midpoint_ms: Option<f64>,
    pub pc_midpoint_ms: Option<f64>,
    pub user_path_meters: f64,
    pub table_path_meters: f64,
    pub interaction_counts: InteractionCounts,
    pub interaction_counts_by_device: BTreeMap<String, InteractionCounts>,
    pub segments: Vec<UsageSegment>,
    pub stats: BTreeMap<String, DescriptiveStats>,
}

impl StrategyReport {
    /// Sorted-key JSON, stable across runs.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    pub fn temporal_summary(&self) -> TemporalSummary {
        TemporalSummary {
            pc_fraction: self.pc_fraction,
            switch_count: self.switch_count,
            vr_midpoint_ms: self.vr_midpoint_ms,
            pc_midpoint_ms: self.pc_midpoint_ms,
        }
    }
}

fn samples_of(poses: &[PoseSample], kind: PoseKind, device: Option<&DeviceId>) -> Vec<PoseSample> {
    let mut out: Vec<PoseSample> =
        poses.iter().filter(|s| s.kind == kind && device.is_none_or(|d| s.device_id == *d)).cloned().collect();
    out.sort_by_key(|s| s.t);
    out
}

fn metric(name: &str, segments: &[UsageSegment]) -> Result<Vec<f64>, AnalyticsError> {
    let filter: Option<GazeTarget> = match name {
        "pcSegmentSeconds" => Some(GazeTarget::Pc),
        "vrSegmentSeconds" => Some(GazeTarget::Vr),
        "segmentSeconds" => None,
        other => return Err(AnalyticsError::UnknownMetric(other.to_owned())),
    };
    Ok(segments
        .iter()
        .filter(|s| filter.is_none_or(|d| s.device == d))
        .map(|s| s.duration() as f64 / 1000.0)
        .collect())
}

pub fn build_report(
    events: &[SessionEvent],
    poses: &[PoseSample],
    config: &AnalysisConfig,
) -> Result<StrategyReport, AnalyticsError> {
    let user = config
        .user_device
        .clone()
        .or_else(|| poses.iter().find(|s| s.kind == PoseKind::Head).map(|s| s.device_id.clone()));
    let head = match &user {
        Some(d) => samples_of(poses, PoseKind::Head, Some(d)),
        None => Vec::new(),
    };
    let table = samples_of(poses, PoseKind::Table, None);
    let screens = ScreenTrack::from_table(config.screen, &table, &config.calibration_offset);
    let segments = usage_timeline(&head, &screens, config.max_gaze_range, config.min_dwell_ms);
    let summary = TemporalSummary::from_segments(&segments);
    let user_path_meters = path_length(head.iter().map(|s| s.position3), config.jitter_floor);
    let table_path_meters = path_length(table.iter().map(|s| s.position3), config.jitter_floor);

    let mut stats = BTreeMap::new();
    for name in &config.stats_metrics {
        let values = metric(name, &segments)?;
        if !values.is_empty() {
            stats.insert(name.clone(), descriptive_stats(&values)?);
        }
    }

    Ok(StrategyReport {
        temporal: classify_temporal(&summary, config.switch_threshold),
        spatial: spatial_strategy(user_path_meters, table_path_meters),
        pc_fraction: summary.pc_fraction,
        switch_count: summary.switch_count,
        vr_midpoint_ms: summary.vr_midpoint_ms,
        pc_midpoint_ms: summary.pc_midpoint_ms,
        user_path_meters,
        table_path_meters,
        interaction_counts: interaction_counts(events),
        interaction_counts_by_device: interaction_counts_by_device(events),
        segments,
        stats,
    })
}

pub fn segments_csv(segments: &[UsageSegment]) -> String {
    let mut out = String::from("device,tStart,tEnd,durationMs\n");
    for s in segments {
        let device = if s.device == GazeTarget::Pc { "pc" } else { "vr" };
        let _ = writeln!(out, "{device},{},{},{}", s.t_start, s.t_end, s.duration());
    }
    out
}

pub fn counts_csv(counts: &InteractionCounts) -> String {
    let mut out = String::from("operation,count\n");
    for (op, n) in counts {
        let _ = writeln!(out, "{op},{n}");
    }
    out
}
