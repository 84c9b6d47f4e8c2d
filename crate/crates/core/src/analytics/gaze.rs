use super::GazeTarget;
use crate::layout::{align_simulated_screen, Pose, ScreenGeometry};
use crate::sync::PoseSample;

/// Farther than this, the screen is too small to be what the user reads.
pub const DEFAULT_MAX_GAZE_RANGE: f64 = 5.0;

/// PC when the head's forward ray hits the screen within `max_range`.
pub fn attribute_gaze(head: &Pose, screen: &ScreenGeometry, max_range: f64) -> GazeTarget {
    match screen.intersect_ray(head.position, head.forward()) {
        Some((t, _)) if t <= max_range => GazeTarget::Pc,
        _ => GazeTarget::Vr,
    }
}

/// Screen pose over time, following the table tracker.
#[derive(Clone, Debug, PartialEq)]
pub struct ScreenTrack {
    geometry: ScreenGeometry,
    /// (t, screen pose), sorted by t.
    poses: Vec<(u64, Pose)>,
}

impl ScreenTrack {
    pub fn fixed(geometry: ScreenGeometry) -> Self {
        ScreenTrack { geometry, poses: Vec::new() }
    }

    /// Screen poses from table samples and the calibration offset. Without
    /// samples the geometry's own pose is used throughout.
    pub fn from_table(geometry: ScreenGeometry, table: &[PoseSample], offset: &Pose) -> Self {
        let mut poses: Vec<(u64, Pose)> =
            table.iter().map(|s| (s.t, align_simulated_screen(&s.pose(), offset))).collect();
        poses.sort_by_key(|(t, _)| *t);
        ScreenTrack { geometry, poses }
    }

    /// The latest screen pose at or before `t` (the first one before any).
    pub fn at(&self, t: u64) -> ScreenGeometry {
        let idx = self.poses.partition_point(|(ts, _)| *ts <= t);
        let pose = match (idx, self.poses.first()) {
            (_, None) => return self.geometry,
            (0, Some((_, first))) => *first,
            (i, _) => self.poses[i - 1].1,
        };
        ScreenGeometry { pose, ..self.geometry }
    }
}
