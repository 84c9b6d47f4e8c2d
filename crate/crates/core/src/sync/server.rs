//! TCP host for sessions speaking the line-delimited protocol.

use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader, BufWriter};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot};
use tokio::task::{JoinHandle, JoinSet};

use super::message::{
    encode_line, AppliedRecords, ErrorPayload, MessageBody, OpAppliedPayload, ProtocolMessage,
    SelectionAppliedPayload, WelcomePayload,
};
use super::{
    decode_line, read_event_log, EventLogWriter, PoseLogWriter, PoseSample, PoseStore, Session, SessionEvent,
    SyncError, DEFAULT_POSE_LOG_HZ,
};
use crate::graph::{DeviceId, DocumentRecord, GraphState};

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    /// Session used when a Hello names none.
    pub default_session: String,
    pub documents: Vec<DocumentRecord>,
    pub pose_log_hz: f64,
    /// Where `<session>.events.jsonl` and `<session>.poses.jsonl` go. No logs when unset.
    pub log_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 7878)),
            default_session: "default".into(),
            documents: Vec::new(),
            pose_log_hz: DEFAULT_POSE_LOG_HZ,
            log_dir: None,
        }
    }
}

type Line = Arc<str>;

struct Core {
    session: Session,
    peers: BTreeMap<DeviceId, mpsc::UnboundedSender<Line>>,
}

impl Core {
    fn broadcast(&self, line: Line) {
        for peer in self.peers.values() {
            // A closed peer is cleaned up by its own connection task.
            let _ = peer.send(line.clone());
        }
    }
}

struct SessionSlot {
    core: Mutex<Core>,
    poses: Mutex<PoseStore>,
}

struct Hub {
    config: ServerConfig,
    sessions: Mutex<HashMap<String, Arc<SessionSlot>>>,
}

fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) && id != "." && id != ".."
}

impl Hub {
    fn slot(&self, id: &str) -> Result<Arc<SessionSlot>, SyncError> {
        if !valid_session_id(id) {
            return Err(SyncError::Protocol(format!("invalid session id {id:?}")));
        }
        let mut sessions = self.sessions.lock().unwrap();
        if let Some(slot) = sessions.get(id) {
            return Ok(slot.clone());
        }
        let slot = Arc::new(self.open_session(id)?);
        sessions.insert(id.to_owned(), slot.clone());
        Ok(slot)
    }

    fn open_session(&self, id: &str) -> Result<SessionSlot, SyncError> {
        let documents = self.config.documents.clone();
        let now = super::now_ms();
        let (session, pose_sink) = match &self.config.log_dir {
            None => (Session::new(id, documents, None, now)?, None),
            Some(dir) => {
                let events_path = dir.join(format!("{id}.events.jsonl"));
                let poses_path = dir.join(format!("{id}.poses.jsonl"));
                let session = if events_path.exists() {
                    let events = read_event_log(&events_path).map_err(|e| SyncError::Protocol(e.to_string()))?;
                    let sink = EventLogWriter::append_to(&events_path)?;
                    if events.is_empty() {
                        Session::new(id, documents, Some(sink), now)?
                    } else {
                        tracing::info!(session = id, events = events.len(), "resuming from event log");
                        Session::resume(id, documents, events, Some(sink))?
                    }
                } else {
                    Session::new(id, documents, Some(EventLogWriter::create(&events_path)?), now)?
                };
                (session, Some(PoseLogWriter::append_to(&poses_path)?))
            }
        };
        Ok(SessionSlot {
            core: Mutex::new(Core { session, peers: BTreeMap::new() }),
            poses: Mutex::new(PoseStore::new(self.config.pose_log_hz, pose_sink)),
        })
    }

    fn flush_all(&self) {
        for slot in self.sessions.lock().unwrap().values() {
            if let Err(err) = slot.core.lock().unwrap().session.flush() {
                tracing::error!("flushing event log failed: {err}");
            }
        }
    }
}

pub struct Server {
    listener: TcpListener,
    hub: Arc<Hub>,
}

/// A server running on a background task.
pub struct ServerHandle {
    addr: SocketAddr,
    hub: Arc<Hub>,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<io::Result<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// The server's current state and retained history for a session.
    pub fn session_state(&self, session: &str) -> Option<(GraphState, Vec<SessionEvent>)> {
        let slot = self.hub.sessions.lock().unwrap().get(session)?.clone();
        let core = slot.core.lock().unwrap();
        Some((core.session.graph().clone(), core.session.history().cloned().collect()))
    }

    pub fn latest_pose(&self, session: &str, device: &DeviceId, kind: super::PoseKind) -> Option<PoseSample> {
        let slot = self.hub.sessions.lock().unwrap().get(session)?.clone();
        let poses = slot.poses.lock().unwrap();
        poses.latest(device, kind).cloned()
    }

    pub async fn shutdown(mut self) -> io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        self.task.await.map_err(io::Error::other)?
    }
}

impl Server {
    pub async fn bind(config: ServerConfig) -> io::Result<Self> {
        if let Some(dir) = &config.log_dir {
            std::fs::create_dir_all(dir)?;
        }
        let listener = TcpListener::bind(config.listen).await?;
        Ok(Server { listener, hub: Arc::new(Hub { config, sessions: Mutex::new(HashMap::new()) }) })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Opens the default session eagerly, so startup fails on bad log paths.
    pub fn open_default_session(&self) -> Result<(), SyncError> {
        self.hub.slot(&self.hub.config.default_session).map(|_| ())
    }

    /// Serves until `shutdown` resolves, then drops all connections and flushes logs.
    pub async fn run_until(self, shutdown: impl Future<Output = ()>) -> io::Result<()> {
        let mut connections = JoinSet::new();
        tokio::pin!(shutdown);
        loop {
            tokio::select! {
                _ = &mut shutdown => break,
                accepted = self.listener.accept() => {
                    let (stream, peer) = accepted?;
                    tracing::debug!(%peer, "connection accepted");
                    let hub = self.hub.clone();
                    connections.spawn(async move {
                        if let Err(err) = serve_connection(hub, stream).await {
                            tracing::debug!(%peer, "connection ended: {err}");
                        }
                    });
                }
                Some(_) = connections.join_next(), if !connections.is_empty() => {}
            }
        }
        connections.shutdown().await;
        self.hub.flush_all();
        Ok(())
    }

    pub async fn spawn(config: ServerConfig) -> io::Result<ServerHandle> {
        let server = Server::bind(config).await?;
        let addr = server.local_addr()?;
        let hub = server.hub.clone();
        let (stop, stopped) = oneshot::channel::<()>();
        let task = tokio::spawn(server.run_until(async move {
            let _ = stopped.await;
        }));
        Ok(ServerHandle { addr, hub, stop: Some(stop), task })
    }
}

struct Connection {
    session_id: String,
    device: DeviceId,
    slot: Arc<SessionSlot>,
    out: mpsc::UnboundedSender<Line>,
}

impl Connection {
    fn reply(&self, body: MessageBody, seq: Option<u64>) {
        let msg = ProtocolMessage { session: self.session_id.clone(), device: self.device.to_string(), seq, body };
        let _ = self.out.send(encode_line(&msg).into());
    }

    fn reply_error(&self, err: &SyncError, client_ref: Option<u64>) {
        self.reply(MessageBody::Error(ErrorPayload::from_error(err, client_ref)), None);
    }

    fn handle(&self, msg: ProtocolMessage) {
        let now = super::now_ms();
        match msg.body {
            MessageBody::Op(p) => {
                let mut core = self.slot.core.lock().unwrap();
                match core.session.submit_op(&self.device, p.op, now) {
                    Ok((event, outcome)) => {
                        let records = AppliedRecords::collect(core.session.graph(), &outcome);
                        let seq = event.seq;
                        let payload = OpAppliedPayload { event, records, hash: core.session.hash(), client_ref: p.client_ref };
                        let line = encode_line(&self.applied(MessageBody::OpApplied(Box::new(payload)), seq));
                        core.broadcast(line.into());
                    }
                    Err(err) => self.reply_error(&err, p.client_ref),
                }
            }
            MessageBody::Selection(p) => {
                let mut core = self.slot.core.lock().unwrap();
                match core.session.set_selection(&self.device, p.selection, now) {
                    Ok(event) => {
                        let seq = event.seq;
                        let payload = SelectionAppliedPayload {
                            event,
                            selection: core.session.graph().selections.clone(),
                            hash: core.session.hash(),
                            client_ref: p.client_ref,
                        };
                        let line = encode_line(&self.applied(MessageBody::SelectionApplied(Box::new(payload)), seq));
                        core.broadcast(line.into());
                    }
                    Err(err) => self.reply_error(&err, p.client_ref),
                }
            }
            MessageBody::Pose(sample) => {
                let result = self.slot.poses.lock().unwrap().ingest(sample);
                if let Err(err) = result {
                    self.reply_error(&err, None);
                }
            }
            MessageBody::ResyncRequest(p) => {
                let core = self.slot.core.lock().unwrap();
                match core.session.resync(p.from_seq) {
                    Ok(reply) => self.reply(MessageBody::Snapshot(Box::new(reply)), Some(core.session.seq())),
                    Err(err) => self.reply_error(&err, None),
                }
            }
            MessageBody::Ping(p) => {
                // Sent under the lock: every apply up to this seq is already queued ahead of it.
                let mut core = self.slot.core.lock().unwrap();
                core.session.touch(&self.device, now);
                self.reply(MessageBody::Pong(p), Some(core.session.seq()));
            }
            other => {
                let err = SyncError::Protocol(format!("unexpected {:?} from client", other.message_type()));
                self.reply_error(&err, None);
            }
        }
    }

    fn applied(&self, body: MessageBody, seq: u64) -> ProtocolMessage {
        ProtocolMessage { session: self.session_id.clone(), device: self.device.to_string(), seq: Some(seq), body }
    }
}

async fn write_loop(
    mut writer: BufWriter<tokio::net::tcp::OwnedWriteHalf>,
    mut rx: mpsc::UnboundedReceiver<Line>,
) -> io::Result<()> {
    while let Some(line) = rx.recv().await {
        writer.write_all(line.as_bytes()).await?;
        while let Ok(more) = rx.try_recv() {
            writer.write_all(more.as_bytes()).await?;
        }
        writer.flush().await?;
    }
    writer.shutdown().await
}

async fn serve_connection(hub: Arc<Hub>, stream: TcpStream) -> Result<(), SyncError> {
    stream.set_nodelay(true)?;
    let (read_half, write_half) = stream.into_split();
    let mut lines = BufReader::new(read_half).lines();
    let (tx, rx) = mpsc::unbounded_channel::<Line>();
    let writer = tokio::spawn(write_loop(BufWriter::new(write_half), rx));

    let Some(first) = lines.next_line().await? else {
        return Ok(());
    };
    let conn = match hello(&hub, &first, &tx) {
        Ok(conn) => conn,
        Err(err) => {
            let msg = ProtocolMessage::new("", "", MessageBody::Error(ErrorPayload::from_error(&err, None)));
            let _ = tx.send(encode_line(&msg).into());
            drop(tx);
            let _ = writer.await;
            return Err(err);
        }
    };

    let result = async {
        while let Some(line) = lines.next_line().await? {
            if line.trim().is_empty() {
                continue;
            }
            match decode_line(&line) {
                Ok(msg) => conn.handle(msg),
                Err(err) => conn.reply_error(&err, None),
            }
        }
        Ok::<_, SyncError>(())
    }
    .await;

    {
        let mut core = conn.slot.core.lock().unwrap();
        core.session.leave(&conn.device);
        core.peers.remove(&conn.device);
    }
    drop(conn);
    drop(tx);
    let _ = writer.await;
    result
}

fn hello(hub: &Hub, line: &str, tx: &mpsc::UnboundedSender<Line>) -> Result<Connection, SyncError> {
    let msg = decode_line(line)?;
    let MessageBody::Hello(hello) = msg.body else {
        return Err(SyncError::Protocol("first message must be Hello".into()));
    };
    let session_id = if msg.session.is_empty() { hub.config.default_session.clone() } else { msg.session };
    let device = DeviceId::from(msg.device);
    let slot = hub.slot(&session_id)?;
    let conn = Connection { session_id, device: device.clone(), slot: slot.clone(), out: tx.clone() };
    let mut core = slot.core.lock().unwrap();
    let welcome = core.session.join(device.clone(), hello.device_kind, super::now_ms())?;
    core.peers.insert(device, tx.clone());
    conn.reply(
        MessageBody::Welcome(WelcomePayload { snapshot: welcome.snapshot, documents: welcome.documents, hash: welcome.hash }),
        Some(welcome.seq),
    );
    drop(core);
    Ok(conn)
}
