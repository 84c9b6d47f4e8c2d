use serde::{Deserialize, Serialize};

use super::Pose;
use crate::graph::Vec3;

pub const METERS_PER_INCH: f64 = 0.0254;

/// A flat screen. The pose sits at the screen's centre; the display surface
/// spans local x (width) and y (height) and faces local +z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScreenGeometry {
    pub diagonal_inches: f64,
    pub resolution_w: u32,
    pub resolution_h: u32,
    #[serde(default)]
    pub pose: Pose,
}

impl ScreenGeometry {
    pub fn new(diagonal_inches: f64, resolution_w: u32, resolution_h: u32, pose: Pose) -> Self {
        ScreenGeometry { diagonal_inches, resolution_w, resolution_h, pose }
    }

    /// The 32" 1440p simulated monitor.
    pub fn simulated_monitor(pose: Pose) -> Self {
        Self::new(32.0, 2560, 1440, pose)
    }

    fn diagonal_px(&self) -> f64 {
        (self.resolution_w as f64).hypot(self.resolution_h as f64)
    }

    pub fn width_meters(&self) -> f64 {
        self.diagonal_inches * METERS_PER_INCH * self.resolution_w as f64 / self.diagonal_px()
    }

    pub fn height_meters(&self) -> f64 {
        self.diagonal_inches * METERS_PER_INCH * self.resolution_h as f64 / self.diagonal_px()
    }

    pub fn pixel_width_meters(&self) -> f64 {
        self.width_meters() / self.resolution_w as f64
    }

    /// Ray/rectangle intersection, either face. Returns the distance along the
    /// (normalized) ray and the hit point in screen-local (x, y).
    pub fn intersect_ray(&self, origin: Vec3, direction: Vec3) -> Option<(f64, [f64; 2])> {
        let o = self.pose.inverse_transform_point(origin);
        let inv = self.pose.inverse();
        let d = inv.rotate(direction);
        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if len == 0.0 {
            return None;
        }
        let d = [d[0] / len, d[1] / len, d[2] / len];
        if d[2].abs() < 1e-12 {
            return None;
        }
        let t = -o[2] / d[2];
        if t < 0.0 {
            return None;
        }
        let x = o[0] + t * d[0];
        let y = o[1] + t * d[1];
        (x.abs() <= self.width_meters() / 2.0 && y.abs() <= self.height_meters() / 2.0).then_some((t, [x, y]))
    }
}

/// Mean visual angle subtended by one pixel across the screen width, in
/// degrees, for an eye centred in front of the screen at `eye_distance` meters.
pub fn visual_angle_per_pixel(screen: &ScreenGeometry, eye_distance: f64) -> f64 {
    let half_width = screen.width_meters() / 2.0;
    2.0 * (half_width / eye_distance).atan().to_degrees() / screen.resolution_w as f64
}

/// Visual angle of the single pixel at the screen centre, in degrees.
pub fn centre_pixel_visual_angle(screen: &ScreenGeometry, eye_distance: f64) -> f64 {
    2.0 * (screen.pixel_width_meters() / (2.0 * eye_distance)).atan().to_degrees()
}
