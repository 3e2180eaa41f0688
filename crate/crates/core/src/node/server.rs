use std::collections::HashMap;
use std::future::Future;
use std::io;
use std::net::{Ipv4Addr, SocketAddr, SocketAddrV4, UdpSocket as StdUdpSocket};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use socket2::{Domain, Protocol, Socket, Type};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream, UdpSocket};
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;

use super::core::{ConnId, NodeCore, NodeStatus, Output, Target};
use super::{NodeConfig, NodeError};
use crate::chat::ClassroomKey;
use crate::ledger::{mine, Block, ChainState};
use crate::missions::{default_pack, load_mission_pack, MissionPack};
use crate::now_ms;
use crate::p2p::wire::{decode_beacon, decode_frame, encode_beacon, encode_frame};
use crate::p2p::{Beacon, NodeId, PeerMessage, BEACON_INTERVAL_MS};

const HOUSEKEEPING_MS: u64 = 500;
const DIAL_TIMEOUT: Duration = Duration::from_secs(3);
const MINE_CHUNK: u64 = 1 << 16;

const FALLBACK_INDEX: &str = include_str!("index.html");

enum Command {
    ClientOpen { conn: ConnId, tx: mpsc::UnboundedSender<String> },
    ClientText { conn: ConnId, text: String },
    ClientClosed { conn: ConnId },
    Peer(PeerMessage),
    PeerMalformed(NodeId),
    LinkDown(NodeId),
    Beacon(Beacon),
    Mined(Option<Block>),
    Status(oneshot::Sender<NodeStatus>),
}

type Commands = mpsc::UnboundedSender<Command>;

/// Runs a node until SIGINT or SIGTERM.
pub fn run(config: NodeConfig) -> Result<(), NodeError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(NodeError::Io)?;
    runtime.block_on(run_until(config, shutdown_signal()))
}

async fn shutdown_signal() {
    use tokio::signal::unix::{signal, SignalKind};
    match signal(SignalKind::terminate()) {
        Ok(mut term) => {
            tokio::select! {
                _ = tokio::signal::ctrl_c() => {}
                _ = term.recv() => {}
            }
        }
        Err(_) => {
            let _ = tokio::signal::ctrl_c().await;
        }
    }
}

fn bind_error(what: &'static str, port: u16) -> impl FnOnce(io::Error) -> NodeError {
    move |source| {
        if source.kind() == io::ErrorKind::AddrInUse {
            NodeError::PortInUse { what, port }
        } else {
            NodeError::Bind { what, port, source }
        }
    }
}

fn load_pack(config: &NodeConfig) -> Result<MissionPack, NodeError> {
    match &config.mission_pack_path {
        None => Ok(default_pack()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| NodeError::PackRead {
                path: path.clone(),
                source,
            })?;
            load_mission_pack(&text).map_err(NodeError::Pack)
        }
    }
}

/// Host part of the address announced to peers.
fn advertise_host(config: &NodeConfig) -> String {
    if let Some(host) = &config.advertise_host {
        return host.clone();
    }
    if config.bind_host != "0.0.0.0" {
        return config.bind_host.clone();
    }
    // Connecting a UDP socket only consults the routing table.
    StdUdpSocket::bind("0.0.0.0:0")
        .and_then(|s| {
            s.connect("192.0.2.1:9")?;
            s.local_addr()
        })
        .map(|a| a.ip().to_string())
        .unwrap_or_else(|_| "127.0.0.1".into())
}

fn discovery_socket(port: u16) -> io::Result<UdpSocket> {
    let socket = Socket::new(Domain::IPV4, Type::DGRAM, Some(Protocol::UDP))?;
    socket.set_reuse_address(true)?;
    socket.set_broadcast(true)?;
    socket.set_nonblocking(true)?;
    socket.bind(&SocketAddrV4::new(Ipv4Addr::UNSPECIFIED, port).into())?;
    UdpSocket::from_std(socket.into())
}

/// Runs a node until `shutdown` resolves.
pub async fn run_until(config: NodeConfig, shutdown: impl Future<Output = ()>) -> Result<(), NodeError> {
    config.validate()?;
    let pack = load_pack(&config)?;
    let key = ClassroomKey::derive(&config.classroom_name, &config.classroom_passphrase);
    let chain = ChainState::new(&config.classroom_name, config.difficulty)?;

    let peer_listener = TcpListener::bind((config.bind_host.as_str(), config.listen_tcp))
        .await
        .map_err(bind_error("peer transport", config.listen_tcp))?;
    let api_listener = TcpListener::bind((config.bind_host.as_str(), config.client_api))
        .await
        .map_err(bind_error("client API", config.client_api))?;
    let discovery = if config.discovery {
        Some(Arc::new(
            discovery_socket(config.discovery_port).map_err(bind_error("discovery", config.discovery_port))?,
        ))
    } else {
        None
    };

    let self_id = NodeId::new(format!("{}:{}", advertise_host(&config), config.listen_tcp));
    log::info!("node {self_id} for classroom {:?}", config.classroom_name);
    let core = NodeCore::new(self_id, chain, pack, key, ChaCha20Rng::from_entropy());

    let (tx, rx) = mpsc::unbounded_channel();
    let peer_task = tokio::spawn(accept_peers(peer_listener, tx.clone()));
    let beacon_task = discovery.clone().map(|sock| tokio::spawn(listen_beacons(sock, tx.clone())));

    let (stop_tx, stop_rx) = oneshot::channel::<()>();
    let app = router(tx.clone(), config.serve_ui_path.clone());
    let api_task = tokio::spawn(async move {
        axum::serve(api_listener, app)
            .with_graceful_shutdown(async {
                let _ = stop_rx.await;
            })
            .await
    });

    let writer = Writer {
        core,
        commands: tx,
        clients: HashMap::new(),
        links: HashMap::new(),
        static_peers: config.static_peers.iter().map(|p| NodeId::new(p.as_str())).collect(),
        discovery: discovery.map(|s| (s, config.discovery_port)),
        auto_mine_ms: config.auto_mine_interval_ms,
        last_mine: now_ms(),
        mining: false,
        tip_generation: Arc::new(AtomicU64::new(0)),
        last_dial: None,
    };
    writer.run(rx, shutdown).await;

    let _ = stop_tx.send(());
    peer_task.abort();
    if let Some(t) = beacon_task {
        t.abort();
    }
    match api_task.await {
        Ok(Ok(())) | Err(_) => Ok(()),
        Ok(Err(e)) => Err(NodeError::Io(e)),
    }
}

/// The single owner of [`NodeCore`].
struct Writer {
    core: NodeCore,
    commands: Commands,
    clients: HashMap<ConnId, mpsc::UnboundedSender<String>>,
    links: HashMap<NodeId, mpsc::UnboundedSender<Vec<u8>>>,
    static_peers: Vec<NodeId>,
    discovery: Option<(Arc<UdpSocket>, u16)>,
    auto_mine_ms: u64,
    last_mine: u64,
    mining: bool,
    tip_generation: Arc<AtomicU64>,
    last_dial: Option<u64>,
}

impl Writer {
    async fn run(mut self, mut rx: mpsc::UnboundedReceiver<Command>, shutdown: impl Future<Output = ()>) {
        tokio::pin!(shutdown);
        let mut housekeeping = tokio::time::interval(Duration::from_millis(HOUSEKEEPING_MS));
        loop {
            tokio::select! {
                _ = &mut shutdown => break,
                cmd = rx.recv() => match cmd {
                    Some(cmd) => self.handle(cmd),
                    None => break,
                },
                _ = housekeeping.tick() => self.housekeeping().await,
            }
        }
        self.tip_generation.fetch_add(1, Ordering::SeqCst);
        log::info!("shutting down");
    }

    fn handle(&mut self, cmd: Command) {
        let now = now_ms();
        let tip = self.core.chain().tip_hash();
        let out = match cmd {
            Command::ClientOpen { conn, tx } => {
                self.clients.insert(conn, tx);
                return;
            }
            Command::ClientClosed { conn } => {
                self.clients.remove(&conn);
                self.core.client_closed(conn);
                return;
            }
            Command::ClientText { conn, text } => self.core.client_text(conn, &text, now),
            Command::Peer(msg) => self.core.peer_message(msg, now),
            Command::PeerMalformed(from) => self.core.peer_malformed(&from),
            Command::LinkDown(id) => {
                self.links.remove(&id);
                return;
            }
            Command::Beacon(b) => self.core.beacon(&b, now),
            Command::Mined(block) => {
                self.mining = false;
                match block {
                    Some(block) => {
                        self.last_mine = now;
                        self.core.mined(block)
                    }
                    None => return,
                }
            }
            Command::Status(reply) => {
                let _ = reply.send(self.core.status());
                return;
            }
        };
        if self.core.chain().tip_hash() != tip {
            self.tip_generation.fetch_add(1, Ordering::SeqCst);
        }
        self.deliver(out);
    }

    async fn housekeeping(&mut self) {
        let now = now_ms();
        let tip = self.core.chain().tip_hash();
        let out = self.core.tick(now);
        self.deliver(out);

        if self.last_dial.map_or(true, |at| now.saturating_sub(at) >= BEACON_INTERVAL_MS) {
            self.last_dial = Some(now);
            for peer in self.static_peers.clone() {
                if !self.core.protocol().peers.is_peer(&peer) {
                    let out = self.core.connect(peer, now);
                    self.deliver(out);
                }
            }
        }

        if let Some((sock, port)) = &self.discovery {
            if let Some(beacon) = self.core.discovery_tick(now) {
                let bytes = encode_beacon(&beacon);
                let target = SocketAddr::from((Ipv4Addr::BROADCAST, *port));
                if let Err(e) = sock.send_to(&bytes, target).await {
                    log::debug!("beacon send failed: {e}");
                }
            }
        }

        if self.core.chain().tip_hash() != tip {
            self.tip_generation.fetch_add(1, Ordering::SeqCst);
        }
        self.maybe_mine(now);
    }

    fn maybe_mine(&mut self, now: u64) {
        if self.auto_mine_ms == 0 || self.mining || now.saturating_sub(self.last_mine) < self.auto_mine_ms {
            return;
        }
        let Some(template) = self.core.mining_template(now) else {
            return;
        };
        self.mining = true;
        let generation = self.tip_generation.clone();
        let started = generation.load(Ordering::SeqCst);
        let commands = self.commands.clone();
        tokio::task::spawn_blocking(move || {
            let mut start = 0u64;
            let found = loop {
                if generation.load(Ordering::SeqCst) != started {
                    break None;
                }
                match mine(&template.header, start, MINE_CHUNK) {
                    Ok(m) => break Some(template.with_nonce(m.nonce)),
                    Err(_) => start = start.wrapping_add(MINE_CHUNK),
                }
            };
            let _ = commands.send(Command::Mined(found));
        });
    }

    fn deliver(&mut self, out: Output) {
        for (target, frame) in out.frames {
            let json = frame.to_json();
            match target {
                Target::Conn(c) => {
                    if let Some(tx) = self.clients.get(&c) {
                        let _ = tx.send(json);
                    }
                }
                Target::All => {
                    for tx in self.clients.values() {
                        let _ = tx.send(json.clone());
                    }
                }
            }
        }
        for ob in out.peers {
            let frame = encode_frame(&ob.msg);
            let link = self
                .links
                .entry(ob.to.clone())
                .or_insert_with(|| spawn_link(ob.to.clone(), self.commands.clone()));
            if link.send(frame).is_err() {
                self.links.remove(&ob.to);
            }
        }
    }
}

/// Outbound connection to one peer. Frames queued while dialing are sent
/// once connected; any failure drops the link.
fn spawn_link(to: NodeId, commands: Commands) -> mpsc::UnboundedSender<Vec<u8>> {
    let (tx, mut rx) = mpsc::unbounded_channel::<Vec<u8>>();
    tokio::spawn(async move {
        let stream = tokio::time::timeout(DIAL_TIMEOUT, TcpStream::connect(to.as_str())).await;
        if let Ok(Ok(mut stream)) = stream {
            let _ = stream.set_nodelay(true);
            while let Some(frame) = rx.recv().await {
                if stream.write_all(&frame).await.is_err() {
                    break;
                }
            }
        } else {
            log::debug!("cannot reach peer {to}");
        }
        let _ = commands.send(Command::LinkDown(to));
    });
    tx
}

async fn accept_peers(listener: TcpListener, commands: Commands) {
    loop {
        let Ok((stream, _)) = listener.accept().await else {
            continue;
        };
        tokio::spawn(read_peer(stream, commands.clone()));
    }
}

async fn read_peer(mut stream: TcpStream, commands: Commands) {
    let mut buf = Vec::with_capacity(4096);
    let mut chunk = [0u8; 8192];
    let mut sender: Option<NodeId> = None;
    loop {
        loop {
            match decode_frame(&buf) {
                Ok(Some((msg, used))) => {
                    buf.drain(..used);
                    sender = Some(msg.sender_id.clone());
                    if commands.send(Command::Peer(msg)).is_err() {
                        return;
                    }
                }
                Ok(None) => break,
                Err(e) => {
                    log::debug!("dropping peer stream: {e}");
                    if let Some(id) = sender {
                        let _ = commands.send(Command::PeerMalformed(id));
                    }
                    return;
                }
            }
        }
        match stream.read(&mut chunk).await {
            Ok(0) | Err(_) => return,
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
        }
    }
}

async fn listen_beacons(sock: Arc<UdpSocket>, commands: Commands) {
    let mut buf = [0u8; 2048];
    loop {
        let Ok((n, _)) = sock.recv_from(&mut buf).await else {
            continue;
        };
        if let Some(beacon) = decode_beacon(&buf[..n]) {
            if commands.send(Command::Beacon(beacon)).is_err() {
                return;
            }
        }
    }
}

#[derive(Clone)]
struct AppState {
    commands: Commands,
    next_conn: Arc<AtomicU64>,
}

fn router(commands: Commands, ui: Option<std::path::PathBuf>) -> Router {
    let state = AppState {
        commands,
        next_conn: Arc::new(AtomicU64::new(1)),
    };
    let router = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/healthz", get(|| async { "ok" }))
        .route("/status", get(status));
    let router = match ui {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router.route("/", get(|| async { Html(FALLBACK_INDEX) })),
    };
    router.with_state(state)
}

async fn status(State(state): State<AppState>) -> Response {
    let (tx, rx) = oneshot::channel();
    if state.commands.send(Command::Status(tx)).is_err() {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    match rx.await {
        Ok(status) => Json(status).into_response(),
        Err(_) => StatusCode::SERVICE_UNAVAILABLE.into_response(),
    }
}

async fn ws_upgrade(State(state): State<AppState>, ws: WebSocketUpgrade) -> Response {
    let conn = state.next_conn.fetch_add(1, Ordering::Relaxed);
    let mut response = ws.on_upgrade(move |socket| client_session(socket, conn, state.commands));
    response
        .headers_mut()
        .insert(header::CACHE_CONTROL, header::HeaderValue::from_static("no-store"));
    response
}

async fn client_session(socket: WebSocket, conn: ConnId, commands: Commands) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    if commands.send(Command::ClientOpen { conn, tx }).is_err() {
        return;
    }
    let forward = tokio::spawn(async move {
        while let Some(text) = rx.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    while let Some(Ok(msg)) = stream.next().await {
        match msg {
            Message::Text(text) => {
                let text = text.to_string();
                if commands.send(Command::ClientText { conn, text }).is_err() {
                    break;
                }
            }
            Message::Close(_) => break,
            _ => {}
        }
    }
    let _ = commands.send(Command::ClientClosed { conn });
    forward.abort();
}
