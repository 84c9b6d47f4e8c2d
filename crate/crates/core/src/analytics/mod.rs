//! Measurement pipeline over event and pose logs.

mod gaze;
mod movement;
mod report;
mod stats;
mod usage;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gaze::{attribute_gaze, ScreenTrack, DEFAULT_MAX_GAZE_RANGE};
pub use movement::{path_length, spatial_strategy, SpatialCategory, DEFAULT_JITTER_FLOOR, TABLE_PATH_THRESHOLD, USER_PATH_THRESHOLD};
pub use report::{
    build_report, counts_csv, interaction_counts, interaction_counts_by_device, segments_csv, AnalysisConfig,
    InteractionCounts, StrategyReport, COUNT_BUCKETS,
};
pub use stats::{descriptive_stats, DescriptiveStats};
pub use usage::{
    classify_temporal, temporal_strategy, usage_from_attributions, usage_timeline, TemporalCategory, TemporalSummary,
    UsageSegment, DEFAULT_MIN_DWELL_MS, DEFAULT_SWITCH_THRESHOLD, PC_DOMINANT_FRACTION, VR_DOMINANT_FRACTION,
};

/// Which environment the user is looking at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GazeTarget {
    Pc,
    Vr,
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("no values")]
    Empty,
    #[error("values must be finite")]
    NonFinite,
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}
