use serde::{Deserialize, Serialize};

use super::{GestureConfig, HandFrame, InteractionError, Posture, Ray};
use crate::graph::{DocumentId, DocumentRecord, Vec3};
use crate::layout::Pose;

/// A document shown as a flat panel; the text faces local +z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DocumentPanel {
    pub document_id: DocumentId,
    pub pose: Pose,
    pub width: f64,
    pub height: f64,
    pub columns: usize,
}

impl DocumentPanel {
    /// Distance along the ray to the panel, if the ray hits it.
    pub fn hit(&self, ray: &Ray) -> Option<f64> {
        let o = self.pose.inverse_transform_point(ray.origin);
        let d = self.pose.inverse().rotate(ray.direction);
        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if len == 0.0 || d[2].abs() < 1e-12 {
            return None;
        }
        let t = -o[2] / d[2];
        if t < 0.0 {
            return None;
        }
        let (x, y) = (o[0] + d[0] * t, o[1] + d[1] * t);
        (x.abs() <= self.width / 2.0 && y.abs() <= self.height / 2.0).then_some(t * len)
    }
}

/// Character grid over a panel: row-major, `columns` cells per row, one
/// cell per character (a newline takes a blank cell).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DocumentLayout {
    pub document_id: DocumentId,
    pub text: String,
    pub columns: usize,
    pub rows: usize,
    pub cell_width: f64,
    pub cell_height: f64,
    pub pose: Pose,
    pub width: f64,
    pub height: f64,
}

impl DocumentLayout {
    pub fn new(document_id: DocumentId, text: &str, columns: usize, pose: Pose, width: f64, height: f64) -> Self {
        let columns = columns.max(1);
        let rows = text.chars().count().div_ceil(columns).max(1);
        DocumentLayout {
            document_id,
            text: text.to_owned(),
            columns,
            rows,
            cell_width: width / columns as f64,
            cell_height: height / rows as f64,
            pose,
            width,
            height,
        }
    }

    pub fn char_count(&self) -> usize {
        self.text.chars().count()
    }

    pub fn lines(&self) -> Vec<String> {
        let chars: Vec<char> = self.text.chars().map(|c| if c == '\n' { ' ' } else { c }).collect();
        chars.chunks(self.columns).map(|row| row.iter().collect()).collect()
    }

    /// Character index under a point given in panel coordinates.
    pub fn index_at_local(&self, x: f64, y: f64) -> Option<usize> {
        let (hw, hh) = (self.width / 2.0, self.height / 2.0);
        if x.abs() > hw || y.abs() > hh {
            return None;
        }
        let col = (((x + hw) / self.cell_width) as usize).min(self.columns - 1);
        let row = (((hh - y) / self.cell_height) as usize).min(self.rows - 1);
        let index = row * self.columns + col;
        (index < self.char_count()).then_some(index)
    }

    /// Centre of a character cell, in world coordinates.
    pub fn cell_center(&self, index: usize) -> Vec3 {
        let (row, col) = (index / self.columns, index % self.columns);
        let x = -self.width / 2.0 + (col as f64 + 0.5) * self.cell_width;
        let y = self.height / 2.0 - (row as f64 + 0.5) * self.cell_height;
        self.pose.transform_point([x, y, 0.0])
    }

    pub fn slice(&self, start: usize, end: usize) -> String {
        self.text.chars().skip(start).take(end - start).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TextSelection {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub text: String,
}

/// Selects from the earliest to the latest character touched by the path.
/// A point touches when it lies over the panel within `touch_depth` of it.
pub fn text_select(path: &[Vec3], layout: &DocumentLayout, touch_depth: f64) -> Result<TextSelection, InteractionError> {
    let touched = path.iter().filter_map(|p| {
        let local = layout.pose.inverse_transform_point(*p);
        if local[2].abs() > touch_depth {
            return None;
        }
        layout.index_at_local(local[0], local[1])
    });
    let (start, last) = touched
        .fold(None, |acc: Option<(usize, usize)>, i| Some(acc.map_or((i, i), |(a, b)| (a.min(i), b.max(i)))))
        .ok_or(InteractionError::NoContact)?;
    Ok(TextSelection { start, end: last + 1, text: layout.slice(start, last + 1) })
}

/// A left-hand pinch whose ray hits a panel yields a hand-sized copy of that
/// document attached to the left palm.
pub fn pick_up_document(
    frame: &HandFrame,
    panels: &[DocumentPanel],
    documents: &[DocumentRecord],
    config: &GestureConfig,
) -> Option<DocumentLayout> {
    if frame.left.posture != Posture::Pinch {
        return None;
    }
    let ray = frame.left.ray();
    let (panel, _) = panels
        .iter()
        .filter_map(|p| p.hit(&ray).map(|t| (p, t)))
        .filter(|(_, t)| *t <= config.max_ray_range)
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let document = documents.iter().find(|d| d.id == panel.document_id)?;
    let width = config.handheld_width;
    let height = width * panel.height / panel.width;
    Some(DocumentLayout::new(
        panel.document_id.clone(),
        &document.body,
        panel.columns,
        frame.left.palm_pose(),
        width,
        height,
    ))
}

/// The single document a hand can carry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HandheldSlot {
    pub current: Option<DocumentLayout>,
}

impl HandheldSlot {
    /// A successful pick-up replaces whatever was held.
    pub fn pick_up(
        &mut self,
        frame: &HandFrame,
        panels: &[DocumentPanel],
        documents: &[DocumentRecord],
        config: &GestureConfig,
    ) -> Option<&DocumentLayout> {
        let layout = pick_up_document(frame, panels, documents, config)?;
        self.current = Some(layout);
        self.current.as_ref()
    }

    pub fn follow(&mut self, palm: Pose) {
        if let Some(layout) = &mut self.current {
            layout.pose = palm;
        }
    }
}
