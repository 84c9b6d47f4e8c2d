use serde::{Deserialize, Serialize};

use super::{LayoutError, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds2 {
    pub min: Vec2,
    pub max: Vec2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewportRect {
    pub center2: Vec2,
    pub half_extent2: Vec2,
}

/// Half extent used when there is nothing to fit.
const DEFAULT_HALF_EXTENT: f64 = 1.0;

pub fn graph_bounds(positions: &[Vec2]) -> Option<Bounds2> {
    let first = *positions.first()?;
    Some(positions.iter().fold(Bounds2 { min: first, max: first }, |b, p| Bounds2 {
        min: [b.min[0].min(p[0]), b.min[1].min(p[1])],
        max: [b.max[0].max(p[0]), b.max[1].max(p[1])],
    }))
}

/// The region of the graph visible on a canvas of aspect `width / height`.
///
/// Pan is in graph units and moves the centre; zoom divides the extent.
/// With no bounds, or bounds of a single point, the base rect is the unit
/// square (half extent 1) around the centre, widened to the aspect.
pub fn minimap_viewport(
    bounds: Option<Bounds2>,
    pan: Vec2,
    zoom: f64,
    canvas_aspect: f64,
) -> Result<ViewportRect, LayoutError> {
    if !(zoom > 0.0 && zoom.is_finite()) {
        return Err(LayoutError::InvalidViewport("zoom must be positive".into()));
    }
    if !(canvas_aspect > 0.0 && canvas_aspect.is_finite()) {
        return Err(LayoutError::InvalidViewport("aspect must be positive".into()));
    }
    if !pan.iter().all(|c| c.is_finite()) {
        return Err(LayoutError::NonFinite);
    }
    let (center, mut hx, mut hy) = match bounds {
        Some(b) => (
            [(b.min[0] + b.max[0]) / 2.0, (b.min[1] + b.max[1]) / 2.0],
            (b.max[0] - b.min[0]) / 2.0,
            (b.max[1] - b.min[1]) / 2.0,
        ),
        None => ([0.0, 0.0], 0.0, 0.0),
    };
    if hx <= 0.0 && hy <= 0.0 {
        hx = DEFAULT_HALF_EXTENT;
        hy = DEFAULT_HALF_EXTENT;
    }
    if hx < hy * canvas_aspect {
        hx = hy * canvas_aspect;
    } else {
        hy = hx / canvas_aspect;
    }
    Ok(ViewportRect {
        center2: [center[0] + pan[0], center[1] + pan[1]],
        half_extent2: [hx / zoom, hy / zoom],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: Bounds2 = Bounds2 { min: [-2.0, -1.0], max: [2.0, 1.0] };

    #[test]
    fn identity_view_is_bounds_fit_to_aspect() {
        let r = minimap_viewport(Some(B), [0.0, 0.0], 1.0, 2.0).unwrap();
        assert_eq!(r, ViewportRect { center2: [0.0, 0.0], half_extent2: [2.0, 1.0] });
        let r = minimap_viewport(Some(B), [0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(r.half_extent2, [2.0, 2.0]);
        let r = minimap_viewport(Some(B), [0.0, 0.0], 1.0, 4.0).unwrap();
        assert_eq!(r.half_extent2, [4.0, 1.0]);
    }

    #[test]
    fn zoom_two_halves_extent() {
        let a = minimap_viewport(Some(B), [0.0, 0.0], 1.0, 1.5).unwrap();
        let b = minimap_viewport(Some(B), [0.0, 0.0], 2.0, 1.5).unwrap();
        assert_eq!(b.half_extent2, [a.half_extent2[0] / 2.0, a.half_extent2[1] / 2.0]);
    }

    #[test]
    fn pan_shifts_centre() {
        let r = minimap_viewport(Some(B), [0.25, -3.0], 1.0, 1.0).unwrap();
        assert_eq!(r.center2, [0.25, -3.0]);
    }

    #[test]
    fn empty_and_point_graphs_get_default() {
        let r = minimap_viewport(None, [0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(r, ViewportRect { center2: [0.0, 0.0], half_extent2: [1.0, 1.0] });
        let p = graph_bounds(&[[3.0, 4.0]]);
        let r = minimap_viewport(p, [0.0, 0.0], 1.0, 2.0).unwrap();
        assert_eq!(r, ViewportRect { center2: [3.0, 4.0], half_extent2: [2.0, 1.0] });
        assert!(graph_bounds(&[]).is_none());
    }

    #[test]
    fn invalid_inputs() {
        assert!(minimap_viewport(Some(B), [0.0, 0.0], 0.0, 1.0).is_err());
        assert!(minimap_viewport(Some(B), [0.0, 0.0], 1.0, -1.0).is_err());
    }
}
