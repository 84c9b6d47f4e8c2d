use serde::{Deserialize, Serialize};

use super::{attribute_gaze, GazeTarget, ScreenTrack};
use crate::sync::PoseSample;

pub const DEFAULT_MIN_DWELL_MS: u64 = 2000;
pub const DEFAULT_SWITCH_THRESHOLD: u32 = 10;
/// Strictly above this PC share is PC-dominant.
pub const PC_DOMINANT_FRACTION: f64 = 0.75;
/// Strictly below this PC share is VR-dominant.
pub const VR_DOMINANT_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UsageSegment {
    pub device: GazeTarget,
    pub t_start: u64,
    pub t_end: u64,
}

impl UsageSegment {
    pub fn duration(&self) -> u64 {
        self.t_end - self.t_start
    }
}

/// Segments from time-ordered attributions. A switch needs `min_dwell_ms` of
/// consistent attribution and is dated at the start of that run; a run still
/// unconfirmed at the end stays in the last segment. The segments cover
/// first sample to last sample.
pub fn usage_from_attributions(samples: &[(u64, GazeTarget)], min_dwell_ms: u64) -> Vec<UsageSegment> {
    let Some(&(t0, first)) = samples.first() else { return Vec::new() };
    let mut segments = Vec::new();
    let (mut current, mut start) = (first, t0);
    let mut run: Option<u64> = None;
    for &(t, target) in &samples[1..] {
        if target == current {
            run = None;
            continue;
        }
        let run_start = *run.get_or_insert(t);
        if t - run_start >= min_dwell_ms {
            if run_start > start {
                segments.push(UsageSegment { device: current, t_start: start, t_end: run_start });
            }
            current = target;
            start = run_start;
            run = None;
        }
    }
    let end = samples.last().map_or(t0, |s| s.0);
    if end > start {
        segments.push(UsageSegment { device: current, t_start: start, t_end: end });
    }
    segments
}

/// Gaze-attributed usage segments from head samples (sorted by t).
pub fn usage_timeline(
    head: &[PoseSample],
    screens: &ScreenTrack,
    max_gaze_range: f64,
    min_dwell_ms: u64,
) -> Vec<UsageSegment> {
    let attributions: Vec<(u64, GazeTarget)> =
        head.iter().map(|s| (s.t, attribute_gaze(&s.pose(), &screens.at(s.t), max_gaze_range))).collect();
    usage_from_attributions(&attributions, min_dwell_ms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemporalCategory {
    #[serde(rename = "PCDominant")]
    PcDominant,
    #[serde(rename = "VRDominant")]
    VrDominant,
    #[serde(rename = "VRThenPC")]
    VrThenPc,
    FrequentSwitch,
}

/// The numbers the temporal category is decided from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TemporalSummary {
    pub pc_fraction: f64,
    pub switch_count: u32,
    /// Time by which half of all VR time has elapsed; none without VR time.
    pub vr_midpoint_ms: Option<f64>,
    pub pc_midpoint_ms: Option<f64>,
}

impl TemporalSummary {
    pub fn from_segments(segments: &[UsageSegment]) -> Self {
        let total: u64 = segments.iter().map(UsageSegment::duration).sum();
        let pc: u64 = segments.iter().filter(|s| s.device == GazeTarget::Pc).map(UsageSegment::duration).sum();
        let switch_count = segments.windows(2).filter(|w| w[0].device != w[1].device).count() as u32;
        TemporalSummary {
            pc_fraction: if total == 0 { 0.0 } else { pc as f64 / total as f64 },
            switch_count,
            vr_midpoint_ms: midpoint(segments, GazeTarget::Vr),
            pc_midpoint_ms: midpoint(segments, GazeTarget::Pc),
        }
    }
}

fn midpoint(segments: &[UsageSegment], device: GazeTarget) -> Option<f64> {
    let total: u64 = segments.iter().filter(|s| s.device == device).map(UsageSegment::duration).sum();
    if total == 0 {
        return None;
    }
    let half = total as f64 / 2.0;
    let mut seen = 0.0;
    for s in segments.iter().filter(|s| s.device == device) {
        let d = s.duration() as f64;
        if seen + d >= half {
            return Some(s.t_start as f64 + (half - seen));
        }
        seen += d;
    }
    None
}

pub fn classify_temporal(summary: &TemporalSummary, switch_threshold: u32) -> TemporalCategory {
    if summary.pc_fraction > PC_DOMINANT_FRACTION {
        return TemporalCategory::PcDominant;
    }
    if summary.pc_fraction < VR_DOMINANT_FRACTION {
        return TemporalCategory::VrDominant;
    }
    let vr_first = matches!((summary.vr_midpoint_ms, summary.pc_midpoint_ms), (Some(v), Some(p)) if v < p);
    if summary.switch_count < switch_threshold && vr_first {
        TemporalCategory::VrThenPc
    } else {
        TemporalCategory::FrequentSwitch
    }
}

pub fn temporal_strategy(segments: &[UsageSegment], switch_threshold: u32) -> TemporalCategory {
    classify_temporal(&TemporalSummary::from_segments(segments), switch_threshold)
}
