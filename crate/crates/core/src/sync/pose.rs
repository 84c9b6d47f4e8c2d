use std::collections::HashMap;

use super::{PoseKind, PoseLogWriter, PoseSample, SyncError};
use crate::graph::DeviceId;

/// Rate at which pose samples are written to the pose log.
pub const DEFAULT_POSE_LOG_HZ: f64 = 10.0;

const QUATERNION_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoseOutcome {
    /// Became the live pose and was written to the log.
    Logged,
    /// Became the live pose; skipped by decimation.
    Latest,
    /// Older than the device's latest sample.
    DroppedOutOfOrder,
}

#[derive(Default)]
struct Track {
    latest: Option<PoseSample>,
    last_logged: Option<u64>,
}

/// Latest-wins pose registers plus a decimated pose log.
pub struct PoseStore {
    tracks: HashMap<(DeviceId, PoseKind), Track>,
    log_interval_ms: f64,
    sink: Option<PoseLogWriter>,
    logged: Vec<PoseSample>,
    keep_logged: bool,
}

impl PoseStore {
    pub fn new(log_hz: f64, sink: Option<PoseLogWriter>) -> Self {
        PoseStore {
            tracks: HashMap::new(),
            log_interval_ms: if log_hz > 0.0 { 1000.0 / log_hz } else { f64::INFINITY },
            sink,
            logged: Vec::new(),
            keep_logged: false,
        }
    }

    /// Also keeps logged samples in memory (tests and embedded use).
    pub fn retaining(mut self) -> Self {
        self.keep_logged = true;
        self
    }

    pub fn ingest(&mut self, sample: PoseSample) -> Result<PoseOutcome, SyncError> {
        let norm = sample.orientation.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > QUATERNION_TOLERANCE || sample.position3.iter().any(|c| !c.is_finite()) {
            return Err(SyncError::MalformedPose(norm));
        }
        let track = self.tracks.entry((sample.device_id.clone(), sample.kind)).or_default();
        if track.latest.as_ref().is_some_and(|prev| sample.t < prev.t) {
            return Ok(PoseOutcome::DroppedOutOfOrder);
        }
        let due = track.last_logged.is_none_or(|t| (sample.t - t) as f64 >= self.log_interval_ms - 1e-9);
        track.latest = Some(sample.clone());
        if !due {
            return Ok(PoseOutcome::Latest);
        }
        track.last_logged = Some(sample.t);
        if let Some(sink) = &mut self.sink {
            if let Err(err) = sink.append(&sample) {
                tracing::error!("pose log write failed: {err}");
            }
        }
        if self.keep_logged {
            self.logged.push(sample);
        }
        Ok(PoseOutcome::Logged)
    }

    pub fn latest(&self, device: &DeviceId, kind: PoseKind) -> Option<&PoseSample> {
        self.tracks.get(&(device.clone(), kind)).and_then(|t| t.latest.as_ref())
    }

    pub fn logged(&self) -> &[PoseSample] {
        &self.logged
    }
}
