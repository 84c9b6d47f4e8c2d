use super::Vec2;

/// Radius at which a node is drawn, canvas units (meters).
pub const NODE_RENDER_RADIUS: f64 = 0.05;
/// Node pairs closer than this count as clutter.
pub const MIN_SEPARATION: f64 = 2.0 * NODE_RENDER_RADIUS;

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// True when the open segments cross at a single interior point.
pub fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Close node pairs plus properly crossing edge pairs, using [`MIN_SEPARATION`].
pub fn clutter_metric(positions: &[Vec2], edges: &[(usize, usize)]) -> usize {
    clutter_metric_with(positions, edges, MIN_SEPARATION)
}

pub fn clutter_metric_with(positions: &[Vec2], edges: &[(usize, usize)], min_separation: f64) -> usize {
    let mut count = 0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let dx = positions[i][0] - positions[j][0];
            let dy = positions[i][1] - positions[j][1];
            if dx.hypot(dy) < min_separation {
                count += 1;
            }
        }
    }
    for (i, &(a, b)) in edges.iter().enumerate() {
        for &(c, d) in &edges[i + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_cross(positions[a], positions[b], positions[c], positions[d]) {
                count += 1;
            }
        }
    }
    count
}
