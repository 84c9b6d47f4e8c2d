//! Headless stand-ins for the VR and PC clients.
//!
//! Synthetic hand and head streams go through the same state machines a
//! headset would drive, producing graph and selection operations.

mod foot;
mod frames;
mod gesture;
mod ray;
mod scenario;
mod text;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use foot::{foot_step, FloorMarker, FloorTimeline, FootState};
pub use frames::{parse_frames, read_frames, validate_frames, Hand, HandFrame, HandState, Posture, Ray};
pub use gesture::{gesture_step, GestureOutput, GestureState, HandMode, HandTrack, ZoomGesture};
pub use ray::{ray_select, ray_sphere_distance, RayTarget};
pub use scenario::{
    run_scenario, AssertionResult, Expectation, Scenario, ScenarioAction, ScenarioClient, ScenarioReport,
    TranscriptEntry,
};
pub use text::{pick_up_document, text_select, DocumentLayout, DocumentPanel, HandheldSlot, TextSelection};

use crate::graph::Vec3;

/// Every interaction threshold, in meters, m/s and ms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct GestureConfig {
    pub grab_radius: f64,
    pub merge_radius: f64,
    pub link_radius: f64,
    pub throw_speed: f64,
    pub pull_distance: f64,
    pub stand_radius: f64,
    pub dwell_ms: u64,
    pub touch_depth: f64,
    /// Two releases closer together than this count as simultaneous.
    pub merge_window_ms: u64,
    /// Weight of the newest finite difference in the palm velocity estimate.
    pub velocity_smoothing: f64,
    pub max_ray_range: f64,
    /// Width of a document panel once picked up; height keeps the aspect.
    pub handheld_width: f64,
}

impl Default for GestureConfig {
    fn default() -> Self {
        GestureConfig {
            grab_radius: 0.10,
            merge_radius: 0.08,
            link_radius: 0.08,
            throw_speed: 1.5,
            pull_distance: 0.15,
            stand_radius: 0.25,
            dwell_ms: 500,
            touch_depth: 0.015,
            merge_window_ms: 150,
            velocity_smoothing: 0.5,
            max_ray_range: 10.0,
            handheld_width: 0.25,
        }
    }
}

#[derive(Debug, Error)]
pub enum InteractionError {
    #[error("fingertip path never touches the panel")]
    NoContact,
    #[error("frame {index}: t={t} is not after the previous frame")]
    NonMonotonicFrames { index: usize, t: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Client(#[from] crate::sync::ClientError),
}

impl InteractionError {
    pub fn code(&self) -> &str {
        match self {
            InteractionError::NoContact => "NoContact",
            InteractionError::NonMonotonicFrames { .. } => "NonMonotonicFrames",
            InteractionError::Parse { .. } => "Parse",
            InteractionError::Io { .. } => "Io",
            InteractionError::InvalidScenario(_) => "InvalidScenario",
            InteractionError::Client(e) => e.code(),
        }
    }
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn dist(a: Vec3, b: Vec3) -> f64 {
    dot(sub(a, b), sub(a, b)).sqrt()
}
