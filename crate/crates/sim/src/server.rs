//! Real-time service: one simulation thread plus an HTTP/WebSocket API.
//!
//! Handlers never touch the [`Simulation`]; they queue [`Command`]s and read
//! the snapshots the simulation thread publishes.

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use feeder_core::supervisor::{FeedingState, Signal, TraceRow};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tokio::sync::{broadcast, mpsc, watch};

use crate::scenario::Scenario;
use crate::world::{Command, Simulation, WorldState};

/// Snapshots kept for `/log/tail`.
const TAIL_CAPACITY: usize = 10_000;
/// Minimum spacing of WebSocket state pushes (20 Hz).
const PUSH_PERIOD: Duration = Duration::from_millis(50);

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Shared read side of a running simulation.
#[derive(Clone)]
pub struct SimHandle {
    commands: mpsc::UnboundedSender<Command>,
    state: watch::Receiver<WorldState>,
    trace: broadcast::Sender<TraceRow>,
    tail: Arc<Mutex<VecDeque<WorldState>>>,
    scenario: Arc<Scenario>,
}

impl SimHandle {
    pub fn send(&self, cmd: Command) -> bool {
        self.commands.send(cmd).is_ok()
    }

    pub fn latest(&self) -> WorldState {
        self.state.borrow().clone()
    }

    pub fn tail(&self, n: usize) -> Vec<WorldState> {
        let tail = self.tail.lock().expect("tail lock");
        tail.iter().skip(tail.len().saturating_sub(n)).cloned().collect()
    }
}

/// Owns the simulation thread; stops it on drop.
pub struct SimService {
    handle: SimHandle,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl SimService {
    /// Starts ticking `scenario` at `speed` × wall-clock rate.
    pub fn start(scenario: Scenario, speed: f64) -> Self {
        let mut sim = Simulation::new(scenario.clone());
        let (cmd_tx, mut cmd_rx) = mpsc::unbounded_channel();
        let (state_tx, state_rx) = watch::channel(sim.peek());
        let (trace_tx, _) = broadcast::channel(1024);
        let tail = Arc::new(Mutex::new(VecDeque::with_capacity(TAIL_CAPACITY)));
        let stop = Arc::new(AtomicBool::new(false));

        let handle = SimHandle {
            commands: cmd_tx,
            state: state_rx,
            trace: trace_tx.clone(),
            tail: tail.clone(),
            scenario: Arc::new(scenario),
        };
        let stop_flag = stop.clone();
        let thread = std::thread::spawn(move || {
            let started = Instant::now();
            let speed = if speed > 0.0 { speed } else { 1.0 };
            while !stop_flag.load(Ordering::Relaxed) {
                while let Ok(cmd) = cmd_rx.try_recv() {
                    sim.enqueue(cmd);
                }
                let w = sim.tick();
                for row in &w.trace {
                    // no subscribers is fine
                    let _ = trace_tx.send(*row);
                }
                {
                    let mut t = tail.lock().expect("tail lock");
                    if t.len() == TAIL_CAPACITY {
                        t.pop_front();
                    }
                    t.push_back(w.clone());
                }
                state_tx.send_replace(w);
                let due = started + Duration::from_secs_f64(sim.time() / speed);
                if let Some(wait) = due.checked_duration_since(Instant::now()) {
                    std::thread::sleep(wait);
                }
            }
        });
        Self {
            handle,
            stop,
            thread: Some(thread),
        }
    }

    pub fn handle(&self) -> SimHandle {
        self.handle.clone()
    }
}

impl Drop for SimService {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[derive(Deserialize)]
struct SignalBody {
    u: Signal,
}

#[derive(Deserialize)]
struct JogBody {
    joint: usize,
    delta_rad: f64,
}

#[derive(Deserialize)]
struct TailQuery {
    n: Option<usize>,
}

#[derive(Serialize)]
struct Named {
    name: &'static str,
    description: &'static str,
}

/// WebSocket frames sent to clients.
#[derive(Serialize)]
#[serde(tag = "type", content = "data", rename_all = "snake_case")]
enum Push<'a> {
    State(&'a WorldState),
    Trace(&'a TraceRow),
    Error(String),
}

fn check_jog(joint: usize, delta_rad: f64) -> Result<Command, String> {
    if joint > 3 {
        return Err(format!("joint {joint} out of range 0..=3"));
    }
    if !delta_rad.is_finite() {
        return Err("delta_rad must be finite".into());
    }
    Ok(Command::Jog { joint, delta_rad })
}

fn enqueue(h: &SimHandle, cmd: Command) -> Response {
    if h.send(cmd) {
        (StatusCode::ACCEPTED, Json(json!({ "queued": cmd }))).into_response()
    } else {
        (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "error": "simulation stopped" }))).into_response()
    }
}

async fn get_state(State(h): State<SimHandle>) -> Json<WorldState> {
    Json(h.latest())
}

async fn get_scenario(State(h): State<SimHandle>) -> Json<serde_json::Value> {
    let signals: Vec<Named> = Signal::ALL
        .iter()
        .map(|s| Named {
            name: s.name(),
            description: s.description(),
        })
        .collect();
    let states: Vec<Named> = FeedingState::ALL
        .iter()
        .map(|s| Named {
            name: s.name(),
            description: s.description(),
        })
        .collect();
    Json(json!({
        "scenario": *h.scenario,
        "radius_threshold": h.scenario.servo.radius_threshold,
        "image": { "width": h.scenario.camera.width, "height": h.scenario.camera.height },
        "signals": signals,
        "states": states,
    }))
}

async fn post_signal(State(h): State<SimHandle>, Json(body): Json<SignalBody>) -> Response {
    enqueue(&h, Command::Signal { u: body.u })
}

async fn post_jog(State(h): State<SimHandle>, Json(body): Json<JogBody>) -> Response {
    match check_jog(body.joint, body.delta_rad) {
        Ok(cmd) => enqueue(&h, cmd),
        Err(e) => (StatusCode::BAD_REQUEST, Json(json!({ "error": e }))).into_response(),
    }
}

async fn get_tail(State(h): State<SimHandle>, Query(q): Query<TailQuery>) -> Json<Vec<WorldState>> {
    Json(h.tail(q.n.unwrap_or(20)))
}

async fn ws_upgrade(State(h): State<SimHandle>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| ws_session(h, socket))
}

async fn send_push(socket: &mut WebSocket, push: &Push<'_>) -> bool {
    let text = serde_json::to_string(push).expect("push frames serialise");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn ws_session(h: SimHandle, mut socket: WebSocket) {
    let mut state = h.state.clone();
    let mut trace = h.trace.subscribe();
    let mut ticker = tokio::time::interval(PUSH_PERIOD);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    state.mark_changed();
    loop {
        tokio::select! {
            _ = ticker.tick() => {
                if state.has_changed().unwrap_or(false) {
                    let w = state.borrow_and_update().clone();
                    if !send_push(&mut socket, &Push::State(&w)).await {
                        return;
                    }
                }
            }
            row = trace.recv() => match row {
                Ok(row) => {
                    if !send_push(&mut socket, &Push::Trace(&row)).await {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => {}
                Err(broadcast::error::RecvError::Closed) => return,
            },
            msg = socket.recv() => {
                let Some(Ok(msg)) = msg else { return };
                let Message::Text(text) = msg else { continue };
                let parsed = serde_json::from_str::<Command>(&text)
                    .map_err(|e| e.to_string())
                    .and_then(|cmd| match cmd {
                        Command::Jog { joint, delta_rad } => check_jog(joint, delta_rad),
                        other => Ok(other),
                    });
                match parsed {
                    Ok(cmd) => {
                        h.send(cmd);
                    }
                    Err(e) => {
                        if !send_push(&mut socket, &Push::Error(e)).await {
                            return;
                        }
                    }
                }
            }
        }
    }
}

pub fn router(handle: SimHandle) -> Router {
    Router::new()
        .route("/state", get(get_state))
        .route("/scenario", get(get_scenario))
        .route("/signal", post(post_signal))
        .route("/jog", post(post_jog))
        .route("/log/tail", get(get_tail))
        .route("/ws", get(ws_upgrade))
        .with_state(handle)
}

/// Runs the service on `addr` until the process is stopped.
pub async fn serve(scenario: Scenario, addr: SocketAddr, speed: f64) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    let service = SimService::start(scenario, speed);
    axum::serve(listener, router(service.handle())).await?;
    Ok(())
}
