//! Robot-side WebSocket service.
//!
//! Operators connect to `/` or `/ws`. Each text message may hold one or more
//! protocol lines. The first connection holds command authority; later ones
//! are observers and get a `reject` for every command they send. When the
//! authority disconnects, the oldest observer is promoted and told so with a
//! fresh `session` frame.

use std::collections::{HashMap, VecDeque};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use log::{debug, info, warn};
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

use crate::protocol::{self, Message, Reject, Role, Session, DEFAULT_TELEMETRY_HZ};
use crate::sim::{Input, TickLog, World};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Telemetry frames per second of simulated time.
    pub telemetry_hz: u32,
    /// Wall-clock time per tick; defaults to real time.
    pub tick_interval: Option<Duration>,
    /// Stop after this many ticks.
    pub max_ticks: Option<u64>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { telemetry_hz: DEFAULT_TELEMETRY_HZ, tick_interval: None, max_ticks: None }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("telemetry rate must be > 0")]
    InvalidRate,
}

type ConnId = u64;

#[derive(Default)]
struct Authority {
    holder: Option<ConnId>,
    observers: VecDeque<ConnId>,
    outboxes: HashMap<ConnId, mpsc::UnboundedSender<String>>,
}

struct Shared {
    inbox: Mutex<Option<Input>>,
    authority: Mutex<Authority>,
    telemetry: broadcast::Sender<Arc<str>>,
    next_id: AtomicU64,
    tick_rate: f64,
    telemetry_hz: u32,
}

impl Shared {
    fn session_frame(&self, role: Role) -> String {
        let msg = Message::Session(Session { role, tick_rate_hz: self.tick_rate, telemetry_hz: self.telemetry_hz });
        protocol::encode_line(&msg).expect("session frames are finite")
    }
}

/// What the tick loop hands back when the service stops.
pub struct ServiceOutcome {
    pub world: World,
    pub log: TickLog,
}

pub struct ServiceHandle {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    ticker: JoinHandle<ServiceOutcome>,
    server: JoinHandle<()>,
}

impl ServiceHandle {
    /// Stops ticking and closes the listener.
    pub async fn shutdown(mut self) -> ServiceOutcome {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let outcome = self.ticker.await.expect("tick loop does not panic");
        self.server.abort();
        outcome
    }

    /// Waits for `max_ticks` to elapse.
    pub async fn finished(mut self) -> ServiceOutcome {
        let outcome = (&mut self.ticker).await.expect("tick loop does not panic");
        self.server.abort();
        outcome
    }
}

pub async fn serve(world: World, addr: &str, config: ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    if config.telemetry_hz == 0 {
        return Err(ServiceError::InvalidRate);
    }
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr: addr.to_string(), source })?;
    let local = listener.local_addr().map_err(|source| ServiceError::Bind { addr: addr.to_string(), source })?;
    let (telemetry, _) = broadcast::channel(256);
    let shared = Arc::new(Shared {
        inbox: Mutex::new(None),
        authority: Mutex::new(Authority::default()),
        telemetry,
        next_id: AtomicU64::new(1),
        tick_rate: world.tick_rate(),
        telemetry_hz: config.telemetry_hz,
    });

    let app = Router::new()
        .route("/", get(upgrade))
        .route("/ws", get(upgrade))
        .with_state(shared.clone());
    let server = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            warn!("service stopped: {e}");
        }
    });

    let (tx, rx) = oneshot::channel();
    let ticker = tokio::spawn(tick_loop(world, shared, config, rx));
    info!("listening on ws://{local}");
    Ok(ServiceHandle { addr: local, shutdown: Some(tx), ticker, server })
}

async fn tick_loop(mut world: World, shared: Arc<Shared>, config: ServiceConfig, mut stop: oneshot::Receiver<()>) -> ServiceOutcome {
    let period = config.tick_interval.unwrap_or_else(|| Duration::from_secs_f64(1.0 / world.tick_rate()));
    let every = ((world.tick_rate() / config.telemetry_hz as f64).round() as u64).max(1);
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut log = TickLog::default();
    loop {
        tokio::select! {
            _ = &mut stop => break,
            _ = interval.tick() => {}
        }
        if config.max_ticks.is_some_and(|m| world.tick >= m) {
            break;
        }
        let input = shared.inbox.lock().unwrap().take();
        let entry = world.step(input);
        if entry.tick.is_multiple_of(every) {
            match protocol::encode_line(&Message::Telemetry(entry.telemetry.clone())) {
                Ok(line) => {
                    let _ = shared.telemetry.send(Arc::from(line));
                }
                Err(e) => warn!("telemetry for tick {} not sent: {e}", entry.tick),
            }
        }
        log.entries.push(entry);
    }
    ServiceOutcome { world, log }
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, shared))
}

async fn connection(socket: WebSocket, shared: Arc<Shared>) {
    let id = shared.next_id.fetch_add(1, Ordering::Relaxed);
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<String>();
    let mut telemetry = shared.telemetry.subscribe();
    let role = {
        let mut auth = shared.authority.lock().unwrap();
        auth.outboxes.insert(id, out_tx.clone());
        if auth.holder.is_none() {
            auth.holder = Some(id);
            Role::Authoritative
        } else {
            auth.observers.push_back(id);
            Role::Observer
        }
    };
    debug!("connection {id} joined as {role:?}");

    let (mut sink, mut stream) = socket.split();
    if sink.send(WsMessage::Text(shared.session_frame(role).into())).await.is_err() {
        release(&shared, id);
        return;
    }
    let writer = tokio::spawn(async move {
        loop {
            let text: String = tokio::select! {
                Some(t) = out_rx.recv() => t,
                r = telemetry.recv() => match r {
                    Ok(t) => t.to_string(),
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        debug!("connection {id} skipped {n} telemetry frames");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
                else => break,
            };
            if sink.send(WsMessage::Text(text.into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            WsMessage::Text(t) => t.to_string(),
            WsMessage::Close(_) => break,
            _ => continue,
        };
        for frame in protocol::decode_stream(&text) {
            handle_frame(&shared, id, &out_tx, frame);
        }
    }

    writer.abort();
    release(&shared, id);
    debug!("connection {id} closed");
}

fn handle_frame(
    shared: &Shared,
    id: ConnId,
    out: &mpsc::UnboundedSender<String>,
    frame: protocol::Result<Message>,
) {
    let reject = |seq: u64, reason: String| {
        let line = protocol::encode_line(&Message::Reject(Reject { seq, reason })).expect("reject frames encode");
        let _ = out.send(line);
    };
    let input = match frame {
        Ok(Message::Command(c)) => Input::Command(c),
        Ok(Message::Heartbeat(h)) => Input::Heartbeat(h),
        Ok(other) => {
            debug!("connection {id} sent unexpected frame {other:?}");
            return;
        }
        Err(e) => return reject(0, e.to_string()),
    };
    let seq = match &input {
        Input::Command(c) => c.seq,
        Input::Heartbeat(h) => h.seq,
    };
    if shared.authority.lock().unwrap().holder != Some(id) {
        return reject(seq, "not authoritative".into());
    }
    *shared.inbox.lock().unwrap() = Some(input);
}

fn release(shared: &Shared, id: ConnId) {
    let mut auth = shared.authority.lock().unwrap();
    auth.outboxes.remove(&id);
    auth.observers.retain(|&o| o != id);
    if auth.holder == Some(id) {
        auth.holder = auth.observers.pop_front();
        if let Some(next) = auth.holder {
            if let Some(tx) = auth.outboxes.get(&next) {
                let _ = tx.send(shared.session_frame(Role::Authoritative));
            }
            debug!("connection {next} promoted to authority");
        }
    }
}
