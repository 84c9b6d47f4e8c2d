//! Python bindings. Structured values cross the boundary as JSON strings in
//! the same camelCase shapes used by the protocol and the log files.

use std::path::PathBuf;

use hybridsense::analytics::{
    build_report, classify_temporal as classify, spatial_strategy as spatial, AnalysisConfig, TemporalSummary,
};
use hybridsense::corpus::{default_shape, generate_corpus as make_corpus};
use hybridsense::graph::{derive_timeline, parse_time_label as parse_label};
use hybridsense::layout::{self, LayoutParams, Pose, ScreenGeometry, SemicircleParams};
use hybridsense::sync::{read_event_log, read_pose_log};
use hybridsense::{DeviceId, GraphOp, GraphState, SelectionUpdate};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(hybridsense_py, HybridsenseError, PyException, "A rejected operation or unreadable input.");

fn fail(code: &str, message: impl std::fmt::Display) -> PyErr {
    HybridsenseError::new_err(format!("{code}: {message}"))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

/// A session graph.
#[pyclass(name = "Graph", module = "hybridsense_py", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyGraph {
    inner: GraphState,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new() -> Self {
        PyGraph::default()
    }

    /// Loads a snapshot as written by `to_json`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        GraphState::from_snapshot_json(text).map(|inner| PyGraph { inner }).map_err(|e| fail("BadSnapshot", e))
    }

    /// Applies one op (JSON, tagged by `kind`) and returns the touched ids as JSON.
    /// Creations without an `id` get `n{seq}` / `l{seq}` and advance `seq`.
    #[pyo3(signature = (op, device = "python"))]
    fn apply(&mut self, op: &str, device: &str) -> PyResult<String> {
        let op: GraphOp = parse(op)?;
        let op = op.with_assigned_ids(self.inner.seq + 1);
        let outcome = self.inner.apply(&op, &DeviceId::from(device)).map_err(|e| fail(e.code(), &e))?;
        self.inner.seq += 1;
        Ok(to_json(&outcome))
    }

    #[pyo3(signature = (selection, device = "python"))]
    fn select(&mut self, selection: &str, device: &str) -> PyResult<()> {
        let update: SelectionUpdate = parse(selection)?;
        self.inner.set_selection(&update, &DeviceId::from(device)).map_err(|e| fail(e.code(), &e))?;
        self.inner.seq += 1;
        Ok(())
    }

    fn snapshot_hash(&self) -> String {
        self.inner.snapshot_hash()
    }

    fn to_json(&self) -> String {
        self.inner.to_canonical_json()
    }

    fn timeline_json(&self) -> String {
        to_json(&derive_timeline(&self.inner))
    }

    /// Node id -> (x, y) after projection and force refinement.
    #[pyo3(signature = (params = None))]
    fn layout(&self, params: Option<&str>) -> PyResult<Vec<(String, (f64, f64))>> {
        let params: LayoutParams = params.map(parse).transpose()?.unwrap_or_default();
        let out = layout::layout_graph(&self.inner, &params).map_err(|e| fail("InvalidParams", e))?;
        Ok(out.positions.into_iter().map(|(id, p)| (id.0, (p[0], p[1]))).collect())
    }

    #[getter]
    fn seq(&self) -> u64 {
        self.inner.seq
    }

    #[getter]
    fn node_ids(&self) -> Vec<String> {
        self.inner.nodes.keys().map(|k| k.0.clone()).collect()
    }

    #[getter]
    fn link_ids(&self) -> Vec<String> {
        self.inner.links.keys().map(|k| k.0.clone()).collect()
    }

    fn node_json(&self, id: &str) -> PyResult<String> {
        self.inner.node(&id.into()).map(to_json).map_err(|e| fail(e.code(), &e))
    }

    fn __len__(&self) -> usize {
        self.inner.nodes.len()
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, links={}, seq={})", self.inner.nodes.len(), self.inner.links.len(), self.inner.seq)
    }
}

/// ISO-8601 timestamp for a date label, or None.
#[pyfunction]
fn parse_time_label(label: &str) -> Option<String> {
    parse_label(label).map(|t| t.to_rfc3339())
}

/// Rebuilds a graph from an event log.
#[pyfunction]
fn replay_log(path: PathBuf) -> PyResult<PyGraph> {
    hybridsense::sync::replay_log(&path).map(|inner| PyGraph { inner }).map_err(|e| fail("BadLog", e))
}

#[pyfunction]
#[pyo3(signature = (positions, edges, params = None))]
fn force_refine(positions: Vec<(f64, f64)>, edges: Vec<(usize, usize)>, params: Option<&str>) -> PyResult<Vec<(f64, f64)>> {
    let params: LayoutParams = params.map(parse).transpose()?.unwrap_or_default();
    let pts: Vec<[f64; 2]> = positions.iter().map(|&(x, y)| [x, y]).collect();
    let out = layout::force_refine(&pts, &edges, &params).map_err(|e| fail("InvalidParams", e))?;
    Ok(out.into_iter().map(|p| (p[0], p[1])).collect())
}

#[pyfunction]
fn clutter_metric(positions: Vec<(f64, f64)>, edges: Vec<(usize, usize)>) -> usize {
    let pts: Vec<[f64; 2]> = positions.iter().map(|&(x, y)| [x, y]).collect();
    layout::clutter_metric(&pts, &edges)
}

/// Mean degrees per pixel across the screen width, viewed head-on.
#[pyfunction]
#[pyo3(signature = (diagonal_inches, resolution_w, resolution_h, eye_distance = 1.0))]
fn visual_angle_per_pixel(diagonal_inches: f64, resolution_w: u32, resolution_h: u32, eye_distance: f64) -> f64 {
    let screen = ScreenGeometry::new(diagonal_inches, resolution_w, resolution_h, Pose::IDENTITY);
    layout::visual_angle_per_pixel(&screen, eye_distance)
}

/// Document panel poses on an arc around the origin, as (position, quaternion xyzw).
#[pyfunction]
#[pyo3(signature = (n, radius_meters = 2.0, arc_span_degrees = 180.0, eye_height = 1.5))]
fn semicircle_placement(
    n: usize,
    radius_meters: f64,
    arc_span_degrees: f64,
    eye_height: f64,
) -> PyResult<Vec<([f64; 3], [f64; 4])>> {
    let params = SemicircleParams { radius_meters, arc_span_degrees, eye_height };
    let poses = layout::semicircle_placement(n, &params, &Pose::IDENTITY).map_err(|e| fail("InvalidParams", e))?;
    Ok(poses.into_iter().map(|p| (p.position, p.orientation)).collect())
}

#[pyfunction]
#[pyo3(signature = (pc_fraction, switch_count, vr_midpoint_ms = None, pc_midpoint_ms = None, switch_threshold = 10))]
fn classify_temporal(
    pc_fraction: f64,
    switch_count: u32,
    vr_midpoint_ms: Option<f64>,
    pc_midpoint_ms: Option<f64>,
    switch_threshold: u32,
) -> String {
    let summary = TemporalSummary { pc_fraction, switch_count, vr_midpoint_ms, pc_midpoint_ms };
    serde_json::to_value(classify(&summary, switch_threshold)).expect("serializable").as_str().unwrap_or_default().to_owned()
}

#[pyfunction]
fn spatial_strategy(user_path_meters: f64, table_path_meters: f64) -> String {
    serde_json::to_value(spatial(user_path_meters, table_path_meters))
        .expect("serializable")
        .as_str()
        .unwrap_or_default()
        .to_owned()
}

/// Strategy report JSON for an event log and an optional pose log.
#[pyfunction]
#[pyo3(signature = (events_path, poses_path = None, config = None))]
fn analyze(events_path: PathBuf, poses_path: Option<PathBuf>, config: Option<&str>) -> PyResult<String> {
    let config: AnalysisConfig = config.map(parse).transpose()?.unwrap_or_default();
    let events = read_event_log(&events_path).map_err(|e| fail("BadLog", e))?;
    let poses = match poses_path {
        Some(p) => read_pose_log(&p).map_err(|e| fail("BadLog", e))?,
        None => Vec::new(),
    };
    let report = build_report(&events, &poses, &config).map_err(|e| fail("Analytics", e))?;
    Ok(report.to_canonical_json())
}

/// Manifest JSON of the synthetic corpus; also writes it when `out` is given.
#[pyfunction]
#[pyo3(signature = (seed = 0, out = None))]
fn generate_corpus(seed: u64, out: Option<PathBuf>) -> PyResult<String> {
    let corpus = make_corpus(seed, &default_shape());
    if let Some(dir) = out {
        corpus.write(&dir).map_err(|e| fail("Io", e))?;
    }
    Ok(to_json(&corpus.manifest))
}

#[pymodule]
fn hybridsense_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add("HybridsenseError", m.py().get_type::<HybridsenseError>())?;
    m.add_function(wrap_pyfunction!(parse_time_label, m)?)?;
    m.add_function(wrap_pyfunction!(replay_log, m)?)?;
    m.add_function(wrap_pyfunction!(force_refine, m)?)?;
    m.add_function(wrap_pyfunction!(clutter_metric, m)?)?;
    m.add_function(wrap_pyfunction!(visual_angle_per_pixel, m)?)?;
    m.add_function(wrap_pyfunction!(semicircle_placement, m)?)?;
    m.add_function(wrap_pyfunction!(classify_temporal, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_strategy, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    Ok(())
}
