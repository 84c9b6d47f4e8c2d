use serde::{Deserialize, Serialize};

use super::{dot, sub, Ray};
use crate::graph::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayTarget {
    pub id: String,
    pub center: Vec3,
    pub radius: f64,
}

/// Distance along the ray to where it enters the sphere; 0 when the origin
/// is inside it.
pub fn ray_sphere_distance(ray: &Ray, center: Vec3, radius: f64) -> Option<f64> {
    let len = dot(ray.direction, ray.direction).sqrt();
    if len == 0.0 {
        return None;
    }
    let d = [ray.direction[0] / len, ray.direction[1] / len, ray.direction[2] / len];
    let oc = sub(ray.origin, center);
    let b = dot(oc, d);
    let c = dot(oc, oc) - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - c;
    if disc < 0.0 || b > 0.0 {
        return None;
    }
    Some(-b - disc.sqrt())
}

/// Nearest target the ray enters within `max_range`.
pub fn ray_select<'a>(ray: &Ray, targets: &'a [RayTarget], max_range: f64) -> Option<&'a str> {
    targets
        .iter()
        .filter_map(|t| ray_sphere_distance(ray, t.center, t.radius).map(|d| (d, t)))
        .filter(|(d, _)| *d <= max_range)
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)))
        .map(|(_, t)| t.id.as_str())
}
