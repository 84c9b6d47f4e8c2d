//! A protocol client that keeps a replica of the session graph.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use thiserror::Error;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpStream;
use tokio::sync::{mpsc, oneshot, watch};
use tokio::task::JoinHandle;

use super::message::{
    encode_line, ErrorPayload, HelloPayload, MessageBody, OpPayload, PingPayload, ProtocolMessage,
    ResyncRequestPayload, SelectionPayload,
};
use super::{apply_event, decode_line, DeviceKind, PoseSample, ResyncReply, SessionEvent, SyncError};
use crate::graph::{DeviceId, DocumentRecord, GraphOp, GraphState, SelectionUpdate};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("server rejected request: {code}: {message}")]
    Rejected { code: String, message: String },
    #[error("connection closed")]
    Disconnected,
    #[error("timed out waiting for the server")]
    Timeout,
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ClientError {
    pub fn code(&self) -> &str {
        match self {
            ClientError::Rejected { code, .. } => code,
            ClientError::Disconnected => "Disconnected",
            ClientError::Timeout => "Timeout",
            ClientError::Sync(e) => e.code(),
            ClientError::Io(_) => "Io",
        }
    }
}

impl From<ErrorPayload> for ClientError {
    fn from(p: ErrorPayload) -> Self {
        ClientError::Rejected { code: p.code, message: p.message }
    }
}

type Reply = Result<SessionEvent, ClientError>;

#[derive(Default)]
struct Shared {
    replica: GraphState,
    documents: Vec<DocumentRecord>,
    pending: HashMap<u64, oneshot::Sender<Reply>>,
    pongs: HashMap<u64, oneshot::Sender<u64>>,
    resyncs: Vec<oneshot::Sender<ResyncReply>>,
    received: Vec<SessionEvent>,
    hash_mismatches: u64,
    errors: Vec<ErrorPayload>,
    closed: bool,
}

pub struct SyncClient {
    session: String,
    device: DeviceId,
    out: mpsc::UnboundedSender<String>,
    shared: Arc<Mutex<Shared>>,
    seq_rx: watch::Receiver<u64>,
    next_ref: AtomicU64,
    reader: JoinHandle<()>,
    writer: JoinHandle<()>,
}

const REPLY_TIMEOUT: Duration = Duration::from_secs(10);

impl SyncClient {
    /// Connects and joins; returns once the Welcome snapshot is installed.
    pub async fn connect(
        addr: SocketAddr,
        session: &str,
        device: &str,
        kind: DeviceKind,
    ) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr).await?;
        stream.set_nodelay(true)?;
        let (read_half, mut write_half) = stream.into_split();
        let mut lines = BufReader::new(read_half).lines();

        let hello = ProtocolMessage::new(session, device, MessageBody::Hello(HelloPayload { device_kind: kind }));
        write_half.write_all(encode_line(&hello).as_bytes()).await?;

        let first = tokio::time::timeout(REPLY_TIMEOUT, lines.next_line())
            .await
            .map_err(|_| ClientError::Timeout)??
            .ok_or(ClientError::Disconnected)?;
        let msg = decode_line(&first)?;
        let welcome = match msg.body {
            MessageBody::Welcome(w) => w,
            MessageBody::Error(e) => return Err(e.into()),
            other => {
                return Err(SyncError::Protocol(format!("expected Welcome, got {:?}", other.message_type())).into())
            }
        };

        let mut replica = welcome.snapshot;
        replica.seq = msg.seq.unwrap_or(replica.seq);
        let shared = Arc::new(Mutex::new(Shared { documents: welcome.documents, ..Default::default() }));
        let (seq_tx, seq_rx) = watch::channel(replica.seq);
        shared.lock().unwrap().replica = replica;

        let (out, mut out_rx) = mpsc::unbounded_channel::<String>();
        let writer = tokio::spawn(async move {
            while let Some(line) = out_rx.recv().await {
                if write_half.write_all(line.as_bytes()).await.is_err() {
                    break;
                }
            }
            let _ = write_half.shutdown().await;
        });

        let reader_shared = shared.clone();
        // Weak, so dropping the client closes the writer and the connection.
        let resync_out = out.downgrade();
        let (session_id, device_id) = (session.to_owned(), device.to_owned());
        let reader = tokio::spawn(async move {
            while let Ok(Some(line)) = lines.next_line().await {
                let Ok(msg) = decode_line(&line) else { continue };
                handle_incoming(&reader_shared, &seq_tx, msg, &device_id, |from_seq| {
                    let req = ProtocolMessage::new(
                        session_id.clone(),
                        device_id.clone(),
                        MessageBody::ResyncRequest(ResyncRequestPayload { from_seq }),
                    );
                    if let Some(out) = resync_out.upgrade() {
                        let _ = out.send(encode_line(&req));
                    }
                });
            }
            let mut s = reader_shared.lock().unwrap();
            s.closed = true;
            for (_, tx) in s.pending.drain() {
                let _ = tx.send(Err(ClientError::Disconnected));
            }
            s.pongs.clear();
            s.resyncs.clear();
        });

        Ok(SyncClient {
            session: session.to_owned(),
            device: DeviceId::from(device),
            out,
            shared,
            seq_rx,
            next_ref: AtomicU64::new(1),
            reader,
            writer,
        })
    }

    pub fn device(&self) -> &DeviceId {
        &self.device
    }

    fn send(&self, body: MessageBody) -> Result<(), ClientError> {
        let msg = ProtocolMessage::new(self.session.clone(), self.device.to_string(), body);
        self.out.send(encode_line(&msg)).map_err(|_| ClientError::Disconnected)
    }

    async fn request(&self, make: impl FnOnce(u64) -> MessageBody) -> Reply {
        let client_ref = self.next_ref.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = oneshot::channel();
        {
            let mut s = self.shared.lock().unwrap();
            if s.closed {
                return Err(ClientError::Disconnected);
            }
            s.pending.insert(client_ref, tx);
        }
        self.send(make(client_ref))?;
        match tokio::time::timeout(REPLY_TIMEOUT, rx).await {
            Ok(Ok(reply)) => reply,
            Ok(Err(_)) => Err(ClientError::Disconnected),
            Err(_) => Err(ClientError::Timeout),
        }
    }

    /// Submits an op and waits for the server's verdict.
    pub async fn submit(&self, op: GraphOp) -> Reply {
        self.request(|client_ref| MessageBody::Op(OpPayload { op, client_ref: Some(client_ref) })).await
    }

    pub async fn select(&self, selection: SelectionUpdate) -> Reply {
        self.request(|client_ref| MessageBody::Selection(SelectionPayload { selection, client_ref: Some(client_ref) }))
            .await
    }

    /// Fire-and-forget pose update.
    pub fn send_pose(&self, sample: PoseSample) -> Result<(), ClientError> {
        self.send(MessageBody::Pose(sample))
    }

    /// Waits until this replica has applied everything the server had
    /// applied when it answered a ping.
    pub async fn sync(&self) -> Result<u64, ClientError> {
        let nonce = self.next_ref.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = oneshot::channel();
        self.shared.lock().unwrap().pongs.insert(nonce, tx);
        self.send(MessageBody::Ping(PingPayload { nonce }))?;
        let target = tokio::time::timeout(REPLY_TIMEOUT, rx)
            .await
            .map_err(|_| ClientError::Timeout)?
            .map_err(|_| ClientError::Disconnected)?;
        let mut seq_rx = self.seq_rx.clone();
        tokio::time::timeout(REPLY_TIMEOUT, seq_rx.wait_for(|seq| *seq >= target))
            .await
            .map_err(|_| ClientError::Timeout)?
            .map_err(|_| ClientError::Disconnected)?;
        Ok(target)
    }

    /// Asks for everything after `from_seq`; the reply is also applied to the replica.
    pub async fn resync(&self, from_seq: u64) -> Result<ResyncReply, ClientError> {
        let (tx, rx) = oneshot::channel();
        self.shared.lock().unwrap().resyncs.push(tx);
        self.send(MessageBody::ResyncRequest(ResyncRequestPayload { from_seq }))?;
        tokio::time::timeout(REPLY_TIMEOUT, rx)
            .await
            .map_err(|_| ClientError::Timeout)?
            .map_err(|_| ClientError::Disconnected)
    }

    pub fn replica(&self) -> GraphState {
        self.shared.lock().unwrap().replica.clone()
    }

    pub fn replica_hash(&self) -> String {
        self.shared.lock().unwrap().replica.snapshot_hash()
    }

    pub fn seq(&self) -> u64 {
        *self.seq_rx.borrow()
    }

    pub fn documents(&self) -> Vec<DocumentRecord> {
        self.shared.lock().unwrap().documents.clone()
    }

    /// Every apply this client received, in arrival order.
    pub fn received(&self) -> Vec<SessionEvent> {
        self.shared.lock().unwrap().received.clone()
    }

    /// Applies whose resulting hash differed from the server's.
    pub fn hash_mismatches(&self) -> u64 {
        self.shared.lock().unwrap().hash_mismatches
    }

    /// Unsolicited errors (for example a rejected pose).
    pub fn errors(&self) -> Vec<ErrorPayload> {
        self.shared.lock().unwrap().errors.clone()
    }

    pub async fn close(self) {
        drop(self.out);
        let _ = self.writer.await;
        let _ = self.reader.await;
    }
}

fn handle_incoming(
    shared: &Mutex<Shared>,
    seq_tx: &watch::Sender<u64>,
    msg: ProtocolMessage,
    me: &str,
    request_resync: impl FnOnce(u64),
) {
    let mut s = shared.lock().unwrap();
    let (event, hash, client_ref) = match msg.body {
        MessageBody::OpApplied(p) => (p.event, p.hash, p.client_ref),
        MessageBody::SelectionApplied(p) => (p.event, p.hash, p.client_ref),
        MessageBody::Error(e) => {
            match e.client_ref.and_then(|r| s.pending.remove(&r)) {
                Some(tx) => {
                    let _ = tx.send(Err(e.into()));
                }
                None => s.errors.push(e),
            }
            return;
        }
        MessageBody::Pong(p) => {
            if let Some(tx) = s.pongs.remove(&p.nonce) {
                let _ = tx.send(msg.seq.unwrap_or(0));
            }
            return;
        }
        MessageBody::Snapshot(reply) => {
            match reply.as_ref() {
                ResyncReply::Events { events, .. } => {
                    for e in events {
                        if e.seq > s.replica.seq && apply_event(&mut s.replica, e).is_err() {
                            break;
                        }
                    }
                }
                ResyncReply::Full { graph, .. } => s.replica = graph.clone(),
            }
            seq_tx.send_replace(s.replica.seq);
            if let Some(tx) = (!s.resyncs.is_empty()).then(|| s.resyncs.remove(0)) {
                let _ = tx.send(*reply);
            }
            return;
        }
        _ => return,
    };

    if event.seq > s.replica.seq + 1 {
        let from = s.replica.seq;
        drop(s);
        request_resync(from);
        return;
    }
    if event.seq == s.replica.seq + 1 {
        match apply_event(&mut s.replica, &event) {
            Ok(_) => {
                if s.replica.snapshot_hash() != hash {
                    s.hash_mismatches += 1;
                }
            }
            Err(err) => tracing::error!("replica diverged at seq {}: {err}", event.seq),
        }
        seq_tx.send_replace(s.replica.seq);
    }
    s.received.push(event.clone());
    if event.device_id.as_str() == me {
        if let Some(tx) = client_ref.and_then(|r| s.pending.remove(&r)) {
            let _ = tx.send(Ok(event));
        }
    }
}
