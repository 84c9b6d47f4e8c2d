use std::path::Path;

use serde::{Deserialize, Serialize};

use super::InteractionError;
use crate::graph::Vec3;
use crate::layout::{Pose, Quat, IDENTITY_QUAT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Posture {
    Flat,
    Fist,
    Pinch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub fn other(self) -> Hand {
        match self {
            Hand::Left => Hand::Right,
            Hand::Right => Hand::Left,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

fn identity() -> Quat {
    IDENTITY_QUAT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HandState {
    pub palm: Vec3,
    #[serde(default = "identity")]
    pub orientation: Quat,
    pub posture: Posture,
    /// Index fingertip; the palm when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingertip: Option<Vec3>,
    /// Pointer ray; from the palm along its forward axis when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ray: Option<Ray>,
}

impl HandState {
    pub fn new(palm: Vec3, posture: Posture) -> Self {
        HandState { palm, orientation: IDENTITY_QUAT, posture, fingertip: None, ray: None }
    }

    pub fn fingertip(&self) -> Vec3 {
        self.fingertip.unwrap_or(self.palm)
    }

    pub fn palm_pose(&self) -> Pose {
        Pose::new(self.palm, self.orientation)
    }

    pub fn ray(&self) -> Ray {
        self.ray.unwrap_or_else(|| Ray { origin: self.palm, direction: self.palm_pose().forward() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandFrame {
    /// Milliseconds.
    pub t: u64,
    pub left: HandState,
    pub right: HandState,
}

impl HandFrame {
    pub fn hand(&self, hand: Hand) -> &HandState {
        match hand {
            Hand::Left => &self.left,
            Hand::Right => &self.right,
        }
    }
}

pub fn validate_frames(frames: &[HandFrame]) -> Result<(), InteractionError> {
    for (index, w) in frames.windows(2).enumerate() {
        if w[1].t <= w[0].t {
            return Err(InteractionError::NonMonotonicFrames { index: index + 1, t: w[1].t });
        }
    }
    Ok(())
}

/// One frame per line; blank lines are skipped.
pub fn parse_frames(text: &str) -> Result<Vec<HandFrame>, InteractionError> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let frame = serde_json::from_str(line)
            .map_err(|e| InteractionError::Parse { line: i + 1, message: e.to_string() })?;
        frames.push(frame);
    }
    validate_frames(&frames)?;
    Ok(frames)
}

pub fn read_frames(path: &Path) -> Result<Vec<HandFrame>, InteractionError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| InteractionError::Io { path: path.display().to_string(), source })?;
    parse_frames(&text)
}
