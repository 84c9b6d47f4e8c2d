//! Display geometry shared by the 2D and 3D presentations.
//!
//! Everything here is a pure function of its inputs.

mod clutter;
mod force;
mod graph_layout;
mod placement;
mod projection;
mod rigid;
mod screen;
mod viewport;

use thiserror::Error;

pub use clutter::{clutter_metric, clutter_metric_with, segments_cross, MIN_SEPARATION, NODE_RENDER_RADIUS};
pub use force::{force_refine, LayoutParams};
pub use graph_layout::{layout_graph, GraphLayout, LayoutMetrics};
pub use placement::{
    billboard_orientation, place_documents, semicircle_placement, SemicircleParams, DEFAULT_ARC_SPAN_DEGREES,
    DEFAULT_EYE_HEIGHT, DEFAULT_RADIUS,
};
pub use projection::project_to_plane;
pub use rigid::{align_simulated_screen, calibrate_offset, Pose, Quat, IDENTITY_QUAT};
pub use screen::{centre_pixel_visual_angle, visual_angle_per_pixel, ScreenGeometry, METERS_PER_INCH};
pub use viewport::{graph_bounds, minimap_viewport, Bounds2, ViewportRect};

/// A point on the 2D canvas.
pub type Vec2 = [f64; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("invalid layout parameters: {0}")]
    InvalidParams(String),
    #[error("edge ({0}, {1}) references a missing node")]
    BadEdge(usize, usize),
    #[error("positions must be finite")]
    NonFinite,
    #[error("at least one document is required")]
    NoDocuments,
    #[error("invalid viewport: {0}")]
    InvalidViewport(String),
}
