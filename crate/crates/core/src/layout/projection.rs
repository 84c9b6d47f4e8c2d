use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::Vec2;
use crate::graph::Vec3;

const AXIS_EPS: f64 = 1e-12;

/// Flips `axis` so it points along +x, or +y when perpendicular to x, or +z.
fn canonical_sign(axis: Vector3<f64>) -> Vector3<f64> {
    for c in 0..3 {
        if axis[c] > AXIS_EPS {
            return axis;
        }
        if axis[c] < -AXIS_EPS {
            return -axis;
        }
    }
    axis
}

/// Orthogonal projection onto the least-squares plane through the centroid.
///
/// In-plane axes follow descending variance. When the points do not span a
/// plane (coincident or colinear) the global x-y plane is used instead.
pub fn project_to_plane(points: &[Vec3]) -> Vec<Vec2> {
    if points.is_empty() {
        return Vec::new();
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p)) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::from(*p) - centroid;
        cov += d * d.transpose();
    }
    cov /= n;

    let eigen = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let largest = eigen.eigenvalues[order[0]];
    let second = eigen.eigenvalues[order[1]];
    let scale = cov.abs().max().max(f64::MIN_POSITIVE);

    let (u, v) = if largest <= 1e-12 * scale || second <= 1e-9 * largest {
        (Vector3::x(), Vector3::y())
    } else {
        (
            canonical_sign(eigen.eigenvectors.column(order[0]).normalize()),
            canonical_sign(eigen.eigenvectors.column(order[1]).normalize()),
        )
    };
    points
        .iter()
        .map(|p| {
            let d = Vector3::from(*p) - centroid;
            [d.dot(&u), d.dot(&v)]
        })
        .collect()
}
