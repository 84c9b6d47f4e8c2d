use serde::{Deserialize, Serialize};

use crate::graph::Vec3;

/// Steps shorter than this (meters) are tracking noise.
pub const DEFAULT_JITTER_FLOOR: f64 = 0.005;
pub const USER_PATH_THRESHOLD: f64 = 290.0;
pub const TABLE_PATH_THRESHOLD: f64 = 5.5;

/// Distance travelled on the floor plane (x, z). A position counts once it
/// is at least `jitter_floor` from the last counted one, so noise below the
/// floor adds nothing while slow steady drift is still measured.
pub fn path_length(positions: impl IntoIterator<Item = Vec3>, jitter_floor: f64) -> f64 {
    let mut iter = positions.into_iter();
    let Some(first) = iter.next() else { return 0.0 };
    let mut anchor = first;
    let mut total = 0.0;
    for p in iter {
        let step = (p[0] - anchor[0]).hypot(p[2] - anchor[2]);
        if step >= jitter_floor {
            total += step;
            anchor = p;
        }
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpatialCategory {
    #[serde(rename = "StationaryUserAndPC")]
    StationaryUserAndPc,
    #[serde(rename = "StationaryPC")]
    StationaryPc,
    SelfRotation,
    Carrying,
}

/// Thresholds are inclusive: reaching them counts as moving.
pub fn spatial_strategy(user_path_meters: f64, table_path_meters: f64) -> SpatialCategory {
    match (user_path_meters >= USER_PATH_THRESHOLD, table_path_meters >= TABLE_PATH_THRESHOLD) {
        (false, false) => SpatialCategory::StationaryUserAndPc,
        (true, false) => SpatialCategory::StationaryPc,
        (false, true) => SpatialCategory::SelfRotation,
        (true, true) => SpatialCategory::Carrying,
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn simple_paths() {
        assert_eq!(path_length([[0.0, 1.0, 0.0], [1.0, 1.7, 0.0]], DEFAULT_JITTER_FLOOR), 1.0);
        let square = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        assert!((path_length(square, DEFAULT_JITTER_FLOOR) - 4.0).abs() < 1e-12);
        assert_eq!(path_length(Vec::<Vec3>::new(), DEFAULT_JITTER_FLOOR), 0.0);
    }

    #[test]
    fn sub_floor_noise_sums_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // displacement of at most 2 mm around a fixed spot
        let noise: Vec<Vec3> = (0..1000)
            .map(|_| {
                let r = 0.002 * rng.gen::<f64>().sqrt();
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                [1.0 + r * a.cos(), 1.6 + rng.gen_range(-0.002..0.002), 2.0 + r * a.sin()]
            })
            .collect();
        assert_eq!(path_length(noise, DEFAULT_JITTER_FLOOR), 0.0);
    }

    #[test]
    fn slow_drift_is_not_lost() {
        // 1 mm per sample along x for 1 m
        let drift = (0..=1000).map(|i| [i as f64 * 0.001, 0.0, 0.0]);
        // at most one sub-floor remainder is left uncounted at the end
        let d = path_length(drift, DEFAULT_JITTER_FLOOR);
        assert!(d <= 1.0 + 1e-9 && d > 1.0 - DEFAULT_JITTER_FLOOR, "{d}");
    }

    #[test]
    fn spatial_boundaries() {
        assert_eq!(spatial_strategy(300.0, 6.0), SpatialCategory::Carrying);
        assert_eq!(spatial_strategy(0.0, 0.0), SpatialCategory::StationaryUserAndPc);
        assert_eq!(spatial_strategy(290.0, 5.5), SpatialCategory::Carrying);
        assert_eq!(spatial_strategy(290.0 - 1e-9, 5.5), SpatialCategory::SelfRotation);
        assert_eq!(spatial_strategy(290.0, 5.5 - 1e-9), SpatialCategory::StationaryPc);
    }

    proptest! {
        #[test]
        fn invariant_under_vertical_shift(
            pts in proptest::collection::vec((-3.0f64..3.0, 0.0f64..2.0, -3.0f64..3.0), 0..100),
            dy in -5.0f64..5.0,
        ) {
            let a: Vec<Vec3> = pts.iter().map(|&(x, y, z)| [x, y, z]).collect();
            let b: Vec<Vec3> = pts.iter().map(|&(x, y, z)| [x, y + dy, z]).collect();
            prop_assert_eq!(path_length(a, DEFAULT_JITTER_FLOOR), path_length(b, DEFAULT_JITTER_FLOOR));
        }
    }
}
