use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::{LayoutError, Pose, Quat, IDENTITY_QUAT};
use crate::graph::{DocumentId, Vec3};

pub const DEFAULT_RADIUS: f64 = 2.0;
pub const DEFAULT_ARC_SPAN_DEGREES: f64 = 180.0;
pub const DEFAULT_EYE_HEIGHT: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SemicircleParams {
    pub radius_meters: f64,
    pub arc_span_degrees: f64,
    pub eye_height: f64,
}

impl Default for SemicircleParams {
    fn default() -> Self {
        SemicircleParams {
            radius_meters: DEFAULT_RADIUS,
            arc_span_degrees: DEFAULT_ARC_SPAN_DEGREES,
            eye_height: DEFAULT_EYE_HEIGHT,
        }
    }
}

/// Evenly spaced poses on an arc around `center`, left to right as seen
/// from the centre looking along its forward (-z) axis.
///
/// Only the yaw of `center` matters. Every panel sits at `eye_height`, at
/// horizontal distance `radius_meters` from the centre, and faces it.
pub fn semicircle_placement(
    document_count: usize,
    params: &SemicircleParams,
    center: &Pose,
) -> Result<Vec<Pose>, LayoutError> {
    if document_count == 0 {
        return Err(LayoutError::NoDocuments);
    }
    if !(params.radius_meters > 0.0 && params.arc_span_degrees.is_finite() && params.eye_height.is_finite()) {
        return Err(LayoutError::InvalidParams("radius must be positive and span finite".into()));
    }
    let span = params.arc_span_degrees.to_radians();
    let eye = [center.position[0], params.eye_height, center.position[2]];
    let poses = (0..document_count)
        .map(|i| {
            let theta = if document_count == 1 {
                0.0
            } else {
                -span / 2.0 + span * i as f64 / (document_count - 1) as f64
            };
            let local = [params.radius_meters * theta.sin(), 0.0, -params.radius_meters * theta.cos()];
            let mut offset = center.rotate(local);
            offset[1] = 0.0;
            let horizontal = (offset[0].hypot(offset[2])).max(f64::MIN_POSITIVE);
            let scale = params.radius_meters / horizontal;
            let position = [eye[0] + offset[0] * scale, eye[1], eye[2] + offset[2] * scale];
            Pose::new(position, billboard_orientation(position, eye, None))
        })
        .collect();
    Ok(poses)
}

/// Semicircle placement keyed by document id, ordered by id.
pub fn place_documents(
    ids: &[DocumentId],
    params: &SemicircleParams,
    center: &Pose,
) -> Result<Vec<(DocumentId, Pose)>, LayoutError> {
    let mut sorted = ids.to_vec();
    sorted.sort();
    let poses = semicircle_placement(sorted.len(), params, center)?;
    Ok(sorted.into_iter().zip(poses).collect())
}

/// Rotation whose +z axis points from `object` to `viewer`, with no roll
/// (up is +y). When the viewer is straight above or below, or coincident,
/// returns `previous` (identity if none).
pub fn billboard_orientation(object: Vec3, viewer: Vec3, previous: Option<Quat>) -> Quat {
    let dir = Vector3::from(viewer) - Vector3::from(object);
    let norm = dir.norm();
    if norm < 1e-12 || dir.x.hypot(dir.z) < 1e-9 * norm {
        return previous.unwrap_or(IDENTITY_QUAT);
    }
    let q = UnitQuaternion::face_towards(&dir, &Vector3::y());
    Pose::from_isometry(&nalgebra::Isometry3::from_parts(nalgebra::Translation3::identity(), q)).orientation
}

#[cfg(test)]
mod tests {
    use super::*;

    fn horizontal_distance(a: Vec3, b: Vec3) -> f64 {
        (a[0] - b[0]).hypot(a[2] - b[2])
    }

    fn yaw_of(p: Vec3, c: Vec3) -> f64 {
        // angle from forward (-z), positive to the right (+x)
        (p[0] - c[0]).atan2(-(p[2] - c[2])).to_degrees()
    }

    #[test]
    fn single_document_at_arc_midpoint() {
        let poses = semicircle_placement(1, &SemicircleParams::default(), &Pose::IDENTITY).unwrap();
        let p = poses[0].position;
        assert!(p[0].abs() < 1e-12 && (p[2] + 2.0).abs() < 1e-12 && (p[1] - 1.5).abs() < 1e-12);
        // straight ahead, facing back toward the centre: identity
        let q = poses[0].orientation;
        assert!((q[3].abs() - 1.0).abs() < 1e-12, "{q:?}");
    }

    #[test]
    fn three_documents_are_ninety_degrees_apart() {
        let poses = semicircle_placement(3, &SemicircleParams::default(), &Pose::IDENTITY).unwrap();
        let yaws: Vec<f64> = poses.iter().map(|p| yaw_of(p.position, [0.0; 3])).collect();
        assert!((yaws[0] + 90.0).abs() < 1e-9 && yaws[1].abs() < 1e-9 && (yaws[2] - 90.0).abs() < 1e-9, "{yaws:?}");
    }

    #[test]
    fn all_panels_at_radius_and_facing_centre() {
        let centre = Pose::new([1.0, 0.0, -0.5], [0.0, (0.4f64).sin(), 0.0, (0.4f64).cos()]);
        let params = SemicircleParams { radius_meters: 1.7, ..Default::default() };
        for pose in semicircle_placement(8, &params, &centre).unwrap() {
            assert!((horizontal_distance(pose.position, centre.position) - 1.7).abs() < 1e-9);
            let z = pose.rotate([0.0, 0.0, 1.0]);
            let to_centre = [centre.position[0] - pose.position[0], 0.0, centre.position[2] - pose.position[2]];
            let cos = (z[0] * to_centre[0] + z[2] * to_centre[2]) / 1.7;
            assert!((cos - 1.0).abs() < 1e-9);
            assert!(z[1].abs() < 1e-9);
        }
    }

    #[test]
    fn zero_documents_rejected() {
        assert_eq!(
            semicircle_placement(0, &SemicircleParams::default(), &Pose::IDENTITY),
            Err(LayoutError::NoDocuments)
        );
    }

    #[test]
    fn place_documents_orders_by_id() {
        let ids: Vec<DocumentId> = ["c", "a", "b"].into_iter().map(Into::into).collect();
        let placed = place_documents(&ids, &SemicircleParams::default(), &Pose::IDENTITY).unwrap();
        let order: Vec<&str> = placed.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(order, ["a", "b", "c"]);
        assert!(placed[0].1.position[0] < placed[2].1.position[0]);
    }

    #[test]
    fn billboard_cases() {
        let ahead = billboard_orientation([0.0; 3], [0.0, 0.0, 3.0], None);
        assert!((ahead[3] - 1.0).abs() < 1e-12);
        let behind = billboard_orientation([0.0; 3], [0.0, 0.0, -3.0], None);
        // 180 degree yaw about +y
        assert!(behind[3].abs() < 1e-12 && (behind[1].abs() - 1.0).abs() < 1e-12, "{behind:?}");
        let prev = [0.0, (0.3f64).sin(), 0.0, (0.3f64).cos()];
        assert_eq!(billboard_orientation([0.0; 3], [0.0, 5.0, 0.0], Some(prev)), prev);
        assert_eq!(billboard_orientation([0.0; 3], [0.0, 5.0, 0.0], None), IDENTITY_QUAT);
    }

    #[test]
    fn billboard_is_unit_and_roll_free() {
        for (i, viewer) in [[1.0, 0.3, 2.0], [-3.0, -1.0, 0.5], [0.2, 2.0, -0.1]].into_iter().enumerate() {
            let q = billboard_orientation([0.5, 0.1, 0.0], viewer, None);
            let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9, "case {i}");
            let x_axis = Pose::new([0.0; 3], q).rotate([1.0, 0.0, 0.0]);
            assert!(x_axis[1].abs() < 1e-9, "case {i} rolled: {x_axis:?}");
        }
    }
}
