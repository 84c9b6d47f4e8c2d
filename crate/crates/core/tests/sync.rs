use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::time::Duration;

use hybridsense::corpus::{default_shape, generate_corpus};
use hybridsense::sync::{
    read_event_log, read_pose_log, replay_log, DeviceKind, PoseKind, PoseSample, ResyncReply, Server, ServerConfig,
    ServerHandle, SyncClient,
};
use hybridsense::{GraphOp, SelectionUpdate};
use serde_json::Value;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpStream;

async fn server(log_dir: Option<std::path::PathBuf>) -> ServerHandle {
    let config = ServerConfig { listen: SocketAddr::from(([127, 0, 0, 1], 0)), log_dir, ..ServerConfig::default() };
    Server::spawn(config).await.unwrap()
}

fn node(label: &str, x: f64) -> GraphOp {
    GraphOp::CreateNode { id: None, label: label.into(), position: [x, 1.0, 0.0] }
}

fn head(device: &str, t: u64, x: f64, q: [f64; 4]) -> PoseSample {
    PoseSample { device_id: device.into(), kind: PoseKind::Head, t, position3: [x, 1.6, 0.0], orientation: q }
}

const I: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

#[tokio::test]
async fn ops_are_ordered_and_broadcast() {
    let s = server(None).await;
    let pc = SyncClient::connect(s.addr(), "s", "pc-1", DeviceKind::Pc).await.unwrap();
    let vr = SyncClient::connect(s.addr(), "s", "vr-1", DeviceKind::Vr).await.unwrap();
    let a = pc.submit(node("Alice", 0.0)).await.unwrap();
    let b = vr.submit(node("Bob", 1.0)).await.unwrap();
    assert_eq!((a.seq, b.seq), (1, 2));
    let (ida, idb) = (format!("n{}", a.seq), format!("n{}", b.seq));
    pc.submit(GraphOp::CreateLink { id: None, source: ida.as_str().into(), target: idb.as_str().into(), label: "met".into() })
        .await
        .unwrap();
    vr.sync().await.unwrap();
    pc.sync().await.unwrap();
    let (graph, history) = s.session_state("s").unwrap();
    assert_eq!(history.len(), 3);
    assert_eq!(pc.replica_hash(), graph.snapshot_hash());
    assert_eq!(vr.replica_hash(), graph.snapshot_hash());
    assert_eq!(vr.received().iter().map(|e| e.seq).collect::<Vec<_>>(), [1, 2, 3]);
    assert_eq!(pc.hash_mismatches() + vr.hash_mismatches(), 0);
}

#[tokio::test]
async fn rejected_op_consumes_no_seq() {
    let s = server(None).await;
    let pc = SyncClient::connect(s.addr(), "s", "pc-1", DeviceKind::Pc).await.unwrap();
    pc.submit(node("A", 0.0)).await.unwrap();
    let err = pc.submit(GraphOp::DeleteNode { id: "missing".into() }).await.unwrap_err();
    assert_eq!(err.code(), "UnknownNode");
    let err = pc.submit(node("   ", 0.0)).await.unwrap_err();
    assert_eq!(err.code(), "EmptyLabel");
    let next = pc.submit(node("B", 0.0)).await.unwrap();
    assert_eq!(next.seq, 2);
}

#[tokio::test]
async fn late_joiner_receives_current_state_and_documents() {
    let corpus = generate_corpus(1, &default_shape());
    let config = ServerConfig {
        listen: SocketAddr::from(([127, 0, 0, 1], 0)),
        documents: corpus.documents.clone(),
        ..ServerConfig::default()
    };
    let s = Server::spawn(config).await.unwrap();
    let pc = SyncClient::connect(s.addr(), "s", "pc-1", DeviceKind::Pc).await.unwrap();
    assert_eq!(pc.seq(), 24);
    let doc = corpus.documents[0].id.clone();
    pc.select(SelectionUpdate { document_id: Some(doc.clone()), node_ids: BTreeSet::new() }).await.unwrap();
    let e = pc.submit(node("2007-02-20", 0.0)).await.unwrap();
    let late = SyncClient::connect(s.addr(), "s", "vr-1", DeviceKind::Vr).await.unwrap();
    assert_eq!(late.replica_hash(), pc.replica_hash());
    assert_eq!(late.documents().len(), 24);
    let replica = late.replica();
    let created = &replica.nodes[&format!("n{}", e.seq).as_str().into()];
    assert!(created.parsed_time.is_some());
    assert_eq!(replica.links.len(), 1, "default link to the selected document");
}

#[tokio::test]
async fn selection_brushes_other_devices() {
    let s = server(None).await;
    let pc = SyncClient::connect(s.addr(), "s", "pc-1", DeviceKind::Pc).await.unwrap();
    let vr = SyncClient::connect(s.addr(), "s", "vr-1", DeviceKind::Vr).await.unwrap();
    let e = pc.submit(node("Alice", 0.0)).await.unwrap();
    let id: hybridsense::NodeId = format!("n{}", e.seq).as_str().into();
    vr.select(SelectionUpdate { document_id: None, node_ids: BTreeSet::from([id.clone()]) }).await.unwrap();
    pc.sync().await.unwrap();
    let sel = pc.replica().selections;
    assert_eq!(sel.selected_node_ids, BTreeSet::from([id]));
    assert_eq!(sel.last_origin_device.as_str(), "vr-1");
    let err = vr
        .select(SelectionUpdate { document_id: None, node_ids: BTreeSet::from(["ghost".into()]) })
        .await
        .unwrap_err();
    assert_eq!(err.code(), "UnknownNode");
}

#[tokio::test]
async fn poses_are_latest_wins_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let s = server(Some(dir.path().to_owned())).await;
    let vr = SyncClient::connect(s.addr(), "s", "vr-1", DeviceKind::Vr).await.unwrap();
    vr.send_pose(head("vr-1", 500, 1.0, I)).unwrap();
    vr.send_pose(head("vr-1", 400, 2.0, I)).unwrap();
    vr.send_pose(head("vr-1", 600, 3.0, [0.0, 0.0, 0.0, 0.5])).unwrap();
    vr.sync().await.unwrap();
    let latest = s.latest_pose("s", &"vr-1".into(), PoseKind::Head).unwrap();
    assert_eq!((latest.t, latest.position3[0]), (500, 1.0));
    tokio::time::sleep(Duration::from_millis(20)).await;
    let errors = vr.errors();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0].code, "MalformedPose");
    // poses never consume a seq
    assert_eq!(vr.seq(), 0);

    // 90 Hz for 2 s is logged at no more than 10 Hz
    for k in 0..180u64 {
        vr.send_pose(head("vr-1", 1000 + k * 1000 / 90, 0.0, I)).unwrap();
    }
    vr.sync().await.unwrap();
    drop(vr);
    s.shutdown().await.unwrap();
    let logged = read_pose_log(&dir.path().join("s.poses.jsonl")).unwrap();
    let flood: Vec<_> = logged.iter().filter(|p| p.t >= 1000).collect();
    assert!(flood.len() <= 21 && flood.len() >= 19, "{}", flood.len());
    assert!(flood.windows(2).all(|w| w[1].t - w[0].t >= 100));
}

#[tokio::test]
async fn resync_returns_the_missing_suffix() {
    let s = server(None).await;
    let pc = SyncClient::connect(s.addr(), "s", "pc-1", DeviceKind::Pc).await.unwrap();
    for i in 0..5 {
        pc.submit(node(&format!("n{i}"), i as f64)).await.unwrap();
    }
    match pc.resync(2).await.unwrap() {
        ResyncReply::Events { events, seq, .. } => {
            assert_eq!(events.iter().map(|e| e.seq).collect::<Vec<_>>(), [3, 4, 5]);
            assert_eq!(seq, 5);
        }
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn event_log_replays_to_server_state() {
    let dir = tempfile::tempdir().unwrap();
    let s = server(Some(dir.path().to_owned())).await;
    let pc = SyncClient::connect(s.addr(), "s", "pc-1", DeviceKind::Pc).await.unwrap();
    let a = pc.submit(node("A", 0.0)).await.unwrap();
    let b = pc.submit(node("B", 1.0)).await.unwrap();
    let (ia, ib) = (format!("n{}", a.seq), format!("n{}", b.seq));
    pc.submit(GraphOp::MergeNodes { survivor: ia.as_str().into(), absorbed: ib.as_str().into() }).await.unwrap();
    let (graph, _) = s.session_state("s").unwrap();
    drop(pc);
    s.shutdown().await.unwrap();
    let path = dir.path().join("s.events.jsonl");
    assert_eq!(read_event_log(&path).unwrap().len(), 3);
    assert_eq!(replay_log(&path).unwrap().snapshot_hash(), graph.snapshot_hash());
}

#[tokio::test]
async fn duplicate_device_is_refused() {
    let s = server(None).await;
    let _pc = SyncClient::connect(s.addr(), "s", "pc-1", DeviceKind::Pc).await.unwrap();
    let err = SyncClient::connect(s.addr(), "s", "pc-1", DeviceKind::Pc).await.err().unwrap();
    assert_eq!(err.code(), "DuplicateDevice");
}

#[tokio::test]
async fn wire_envelope_has_exactly_five_fields() {
    let s = server(None).await;
    let stream = TcpStream::connect(s.addr()).await.unwrap();
    let (r, mut w) = stream.into_split();
    let mut lines = BufReader::new(r).lines();
    w.write_all(b"{\"type\":\"Hello\",\"session\":\"raw\",\"device\":\"vr-9\",\"seq\":null,\"payload\":{\"deviceKind\":\"vr\"}}\n")
        .await
        .unwrap();
    let welcome: Value = serde_json::from_str(&lines.next_line().await.unwrap().unwrap()).unwrap();
    let keys: BTreeSet<&str> = welcome.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, BTreeSet::from(["type", "session", "device", "seq", "payload"]));
    assert_eq!(welcome["type"], "Welcome");
    assert_eq!(welcome["seq"], 0);

    w.write_all(b"this is not json\n").await.unwrap();
    let err: Value = serde_json::from_str(&lines.next_line().await.unwrap().unwrap()).unwrap();
    assert_eq!(err["type"], "Error");

    let op = r#"{"type":"Op","session":"raw","device":"vr-9","seq":null,"payload":{"op":{"kind":"createNode","label":"X","position":[0,0,0]},"clientRef":7}}"#;
    w.write_all(format!("{op}\n").as_bytes()).await.unwrap();
    let applied: Value = serde_json::from_str(&lines.next_line().await.unwrap().unwrap()).unwrap();
    assert_eq!(applied["type"], "OpApplied");
    assert_eq!(applied["seq"], 1);
    assert_eq!(applied["payload"]["clientRef"], 7);
    assert_eq!(applied["payload"]["event"]["deviceKind"], "vr");
}
