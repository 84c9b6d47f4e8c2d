//! JSONL persistence for session events and pose samples.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::{apply_event, PoseSample, SessionEvent, SyncError};
use crate::graph::GraphState;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {message} (last good seq {last_good_seq})")]
    Corrupt { line: usize, last_good_seq: u64, message: String },
    #[error("line {line}: {source}")]
    Replay { line: usize, source: SyncError },
}

impl JsonlError {
    fn io(path: &Path, source: io::Error) -> Self {
        JsonlError::Io { path: path.display().to_string(), source }
    }
}

struct JsonlWriter {
    out: BufWriter<File>,
}

impl JsonlWriter {
    fn open(path: &Path, append: bool) -> io::Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).write(true).append(append).truncate(!append).open(path)?;
        Ok(JsonlWriter { out: BufWriter::new(file) })
    }

    fn write<T: serde::Serialize>(&mut self, record: &T) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }
}

/// Appends one event per line; every line is flushed before `append` returns,
/// so an interrupted server leaves a replayable prefix.
pub struct EventLogWriter(JsonlWriter);

impl EventLogWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        JsonlWriter::open(path, false).map(Self)
    }

    pub fn append_to(path: &Path) -> io::Result<Self> {
        JsonlWriter::open(path, true).map(Self)
    }

    pub fn append(&mut self, event: &SessionEvent) -> io::Result<()> {
        self.0.write(event)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.0.out.flush()
    }
}

pub struct PoseLogWriter(JsonlWriter);

impl PoseLogWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        JsonlWriter::open(path, false).map(Self)
    }

    pub fn append_to(path: &Path) -> io::Result<Self> {
        JsonlWriter::open(path, true).map(Self)
    }

    pub fn append(&mut self, sample: &PoseSample) -> io::Result<()> {
        self.0.write(sample)
    }
}

fn read_lines<T: serde::de::DeserializeOwned>(
    path: &Path,
    mut seq_of: impl FnMut(&T) -> u64,
) -> Result<Vec<T>, JsonlError> {
    let file = File::open(path).map_err(|e| JsonlError::io(path, e))?;
    let mut out = Vec::new();
    let mut last_good_seq = 0;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| JsonlError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| JsonlError::Corrupt {
            line: i + 1,
            last_good_seq,
            message: e.to_string(),
        })?;
        last_good_seq = seq_of(&record);
        out.push(record);
    }
    Ok(out)
}

pub fn read_event_log(path: &Path) -> Result<Vec<SessionEvent>, JsonlError> {
    read_lines(path, |e: &SessionEvent| e.seq)
}

pub fn read_pose_log(path: &Path) -> Result<Vec<PoseSample>, JsonlError> {
    read_lines(path, |_: &PoseSample| 0)
}

/// Rebuilds state by applying events to the empty graph in order.
pub fn replay_events(events: impl IntoIterator<Item = SessionEvent>) -> Result<GraphState, SyncError> {
    let mut graph = GraphState::new();
    for event in events {
        apply_event(&mut graph, &event)?;
    }
    Ok(graph)
}

pub fn replay_log(path: &Path) -> Result<GraphState, JsonlError> {
    let events = read_event_log(path)?;
    let mut graph = GraphState::new();
    for (i, event) in events.iter().enumerate() {
        apply_event(&mut graph, event).map_err(|source| JsonlError::Replay { line: i + 1, source })?;
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DeviceId, GraphOp};
    use crate::sync::{DeviceKind, EventBody, PoseKind};

    fn event(seq: u64, label: &str) -> SessionEvent {
        SessionEvent {
            seq,
            wall_clock: 1000 + seq,
            device_id: DeviceId::from("pc-1"),
            device_kind: DeviceKind::Pc,
            body: EventBody::Op(GraphOp::CreateNode {
                id: Some(format!("n{seq}").into()),
                label: label.into(),
                position: [seq as f64, 0.0, 0.0],
            }),
        }
    }

    #[test]
    fn write_then_replay_twice() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.events.jsonl");
        let mut w = EventLogWriter::create(&path).unwrap();
        for seq in 1..=4 {
            w.append(&event(seq, "x")).unwrap();
        }
        let a = replay_log(&path).unwrap();
        let b = replay_log(&path).unwrap();
        assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        assert_eq!(a.seq, 4);
    }

    #[test]
    fn empty_log_is_empty_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        std::fs::write(&path, "").unwrap();
        assert_eq!(replay_log(&path).unwrap(), GraphState::new());
    }

    #[test]
    fn truncated_last_line_reports_last_good_seq() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut text = String::new();
        for seq in 1..=3 {
            text.push_str(&serde_json::to_string(&event(seq, "x")).unwrap());
            text.push('\n');
        }
        let partial = serde_json::to_string(&event(4, "x")).unwrap();
        text.push_str(&partial[..partial.len() / 2]);
        std::fs::write(&path, text).unwrap();
        match replay_log(&path) {
            Err(JsonlError::Corrupt { line, last_good_seq, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(last_good_seq, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gap_in_log_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.jsonl");
        let mut w = EventLogWriter::create(&path).unwrap();
        w.append(&event(1, "a")).unwrap();
        w.append(&event(3, "b")).unwrap();
        assert!(matches!(
            replay_log(&path),
            Err(JsonlError::Replay { line: 2, source: SyncError::SequenceGap { expected: 2, got: 3 } })
        ));
    }

    #[test]
    fn pose_log_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let sample = PoseSample {
            device_id: DeviceId::from("vr-1"),
            kind: PoseKind::Head,
            t: 5,
            position3: [0.0, 1.6, 0.0],
            orientation: [0.0, 0.0, 0.0, 1.0],
        };
        let mut w = PoseLogWriter::create(&path).unwrap();
        w.append(&sample).unwrap();
        assert_eq!(read_pose_log(&path).unwrap(), vec![sample]);
    }
}
