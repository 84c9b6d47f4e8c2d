use nalgebra::{Isometry3, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::graph::Vec3;

/// Unit quaternion as `[x, y, z, w]`.
pub type Quat = [f64; 4];

pub const IDENTITY_QUAT: Quat = [0.0, 0.0, 0.0, 1.0];

/// A rigid pose. Forward is local -z, up is local +y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

pub(crate) fn to_unit(q: Quat) -> UnitQuaternion<f64> {
    UnitQuaternion::from_quaternion(Quaternion::new(q[3], q[0], q[1], q[2]))
}

/// Canonical form: w >= 0.
pub(crate) fn from_unit(q: &UnitQuaternion<f64>) -> Quat {
    let c = q.coords;
    let s = if c.w < 0.0 { -1.0 } else { 1.0 };
    [s * c.x, s * c.y, s * c.z, s * c.w]
}

impl Pose {
    pub const IDENTITY: Pose = Pose { position: [0.0; 3], orientation: IDENTITY_QUAT };

    pub fn new(position: Vec3, orientation: Quat) -> Self {
        Pose { position, orientation }
    }

    pub fn from_translation(position: Vec3) -> Self {
        Pose { position, orientation: IDENTITY_QUAT }
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(Vector3::from(self.position)), to_unit(self.orientation))
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Pose { position: iso.translation.vector.into(), orientation: from_unit(&iso.rotation) }
    }

    /// `self ∘ other`: `other` expressed in this pose's frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::from_isometry(&(self.isometry() * other.isometry()))
    }

    pub fn inverse(&self) -> Pose {
        Pose::from_isometry(&self.isometry().inverse())
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        (self.isometry() * Point3::from(p)).coords.into()
    }

    pub fn inverse_transform_point(&self, p: Vec3) -> Vec3 {
        self.isometry().inverse_transform_point(&Point3::from(p)).coords.into()
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        (to_unit(self.orientation) * Vector3::from(v)).into()
    }

    pub fn forward(&self) -> Vec3 {
        self.rotate([0.0, 0.0, -1.0])
    }
}

/// Screen pose for a tracker pose and a fixed tracker-to-screen offset.
pub fn align_simulated_screen(tracker: &Pose, calibration_offset: &Pose) -> Pose {
    tracker.compose(calibration_offset)
}

/// The offset that makes [`align_simulated_screen`] return `desired_screen`
/// for the current tracker pose.
pub fn calibrate_offset(tracker: &Pose, desired_screen: &Pose) -> Pose {
    tracker.inverse().compose(desired_screen)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
        let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let rot = UnitQuaternion::from_scaled_axis(axis * 3.0);
        Pose {
            position: [rng.gen_range(-5.0..5.0), rng.gen_range(0.0..3.0), rng.gen_range(-5.0..5.0)],
            orientation: from_unit(&rot),
        }
    }

    fn max_diff(a: &Pose, b: &Pose) -> f64 {
        let p = a.position.iter().zip(b.position).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let q = a.orientation.iter().zip(b.orientation).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        p.max(q)
    }

    #[test]
    fn identity_offset_keeps_tracker_pose() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_pose(&mut rng);
        assert!(max_diff(&align_simulated_screen(&t, &Pose::IDENTITY), &t) < 1e-12);
    }

    #[test]
    fn translating_tracker_translates_screen() {
        let offset = Pose::new([0.0, 0.4, -0.2], from_unit(&UnitQuaternion::from_euler_angles(0.0, 0.3, 0.0)));
        let t0 = Pose::new([1.0, 0.8, 2.0], IDENTITY_QUAT);
        let t1 = Pose::new([2.0, 0.8, 2.0], IDENTITY_QUAT);
        let s0 = align_simulated_screen(&t0, &offset);
        let s1 = align_simulated_screen(&t1, &offset);
        assert!((s1.position[0] - s0.position[0] - 1.0).abs() < 1e-12);
        assert!((s1.position[1] - s0.position[1]).abs() < 1e-12);
        assert_eq!(s1.orientation, s0.orientation);
    }

    #[test]
    fn calibrate_simple_cases() {
        let t = Pose::new([1.0, 2.0, 3.0], from_unit(&UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3)));
        assert!(max_diff(&calibrate_offset(&t, &t), &Pose::IDENTITY) < 1e-12);
        let a = Pose::from_translation([1.0, 0.0, 0.0]);
        let b = Pose::from_translation([1.0, 0.5, -2.0]);
        let off = calibrate_offset(&a, &b);
        assert!(max_diff(&off, &Pose::from_translation([0.0, 0.5, -2.0])) < 1e-12);
    }

    #[test]
    fn align_calibrate_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let tracker = random_pose(&mut rng);
            let desired = random_pose(&mut rng);
            let offset = calibrate_offset(&tracker, &desired);
            let n: f64 = offset.orientation.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
            let got = align_simulated_screen(&tracker, &offset);
            assert!(max_diff(&got, &desired) < 1e-9, "{got:?} vs {desired:?}");
        }
    }

    #[test]
    fn forward_is_negative_z() {
        assert_eq!(Pose::IDENTITY.forward(), [0.0, 0.0, -1.0]);
    }
}
