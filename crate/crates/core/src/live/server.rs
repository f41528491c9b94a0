use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{broadcast, mpsc, oneshot};

use super::config::SessionConfig;
use super::engine::{SessionEngine, TrialReport};
use super::protocol::{ClientMessage, ServerMessage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    /// UI bundle served at `/`.
    pub static_dir: Option<PathBuf>,
    /// Where trial traces are written; none when absent.
    pub out_dir: Option<PathBuf>,
    /// Resolves relative checkpoint paths.
    pub base_dir: Option<PathBuf>,
    /// Session settings a POST body is layered over.
    pub session: SessionConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            static_dir: None,
            out_dir: None,
            base_dir: None,
            session: SessionConfig::default(),
        }
    }
}

enum Command {
    Input { t: f64, x: f64 },
    End(oneshot::Sender<std::result::Result<TrialReport, Error>>),
}

struct ActiveSession {
    id: String,
    commands: mpsc::Sender<Command>,
    events: broadcast::Sender<ServerMessage>,
    config_message: ServerMessage,
}

#[derive(Default)]
struct Registry {
    active: Option<ActiveSession>,
    reports: HashMap<String, TrialReport>,
    next_id: u64,
}

#[derive(Clone)]
struct AppState {
    registry: Arc<Mutex<Registry>>,
    config: Arc<ServerConfig>,
}

fn error_response(status: StatusCode, category: &str, message: impl Into<String>) -> Response {
    (
        status,
        Json(json!({ "error": category, "message": message.into() })),
    )
        .into_response()
}

/// Overlays the keys of `body` on the server's session defaults.
fn merged_config(defaults: &SessionConfig, body: &Value) -> Result<SessionConfig> {
    let mut base = serde_json::to_value(defaults)?;
    match (base.as_object_mut(), body) {
        (Some(b), Value::Object(o)) => {
            for (k, v) in o {
                b.insert(k.clone(), v.clone());
            }
        }
        (_, Value::Null) => {}
        _ => {
            return Err(Error::config(
                "<document>",
                "session body must be a JSON object",
            ))
        }
    }
    crate::io::parse_json(&base.to_string())
}

async fn create_session(State(app): State<AppState>, body: Option<Json<Value>>) -> Response {
    let body = body.map(|b| b.0).unwrap_or(Value::Null);
    let cfg = match merged_config(&app.config.session, &body) {
        Ok(c) => c,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e.category(), e.to_string()),
    };
    let mut reg = app.registry.lock().expect("registry lock");
    if reg.active.is_some() {
        return error_response(
            StatusCode::CONFLICT,
            "session-exists",
            "a session is already running",
        );
    }
    let engine = match SessionEngine::new(cfg, app.config.base_dir.as_deref()) {
        Ok(e) => e,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e.category(), e.to_string()),
    };
    reg.next_id += 1;
    let id = format!("s{}", reg.next_id);
    let (cmd_tx, cmd_rx) = mpsc::channel(1024);
    let (ev_tx, _) = broadcast::channel(256);
    let cfg = engine.config().clone();
    let config_message = ServerMessage::Config {
        condition: cfg.condition,
        balls: engine.balls().iter().map(|b| b.id.clone()).collect(),
        you: "human".into(),
        frame_rate: cfg.frame_rate,
        trial_length: cfg.trial_length,
    };
    reg.active = Some(ActiveSession {
        id: id.clone(),
        commands: cmd_tx,
        events: ev_tx.clone(),
        config_message,
    });
    drop(reg);
    log::info!("session {id} started ({})", cfg.condition.as_str());
    tokio::spawn(session_loop(app.clone(), id.clone(), engine, cmd_rx, ev_tx));
    (
        StatusCode::CREATED,
        Json(json!({
            "id": id,
            "ws": format!("/session/{id}/ws"),
            "report": format!("/session/{id}/report"),
            "config": cfg,
        })),
    )
        .into_response()
}

/// Owns the engine for the whole trial. Inputs arrive by message; time is
/// the monotonic clock since start; client timestamps are mapped onto it
/// by the offset fixed at the first sample. Frames go out on their own
/// clock so the broadcast period does not inherit the simulation grid.
async fn session_loop(
    app: AppState,
    id: String,
    mut engine: SessionEngine,
    mut commands: mpsc::Receiver<Command>,
    events: broadcast::Sender<ServerMessage>,
) {
    let start = Instant::now();
    let rate = engine.config().sim_rate;
    let mut ticker = tokio::time::interval(Duration::from_secs_f64(1.0 / rate));
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Burst);
    let mut frames =
        tokio::time::interval(Duration::from_secs_f64(1.0 / engine.config().frame_rate));
    frames.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    let catch_up = |engine: &mut SessionEngine| -> Result<()> {
        let due = (start.elapsed().as_secs_f64() * rate).floor() as usize;
        while engine.steps_done() < due && !engine.finished() {
            engine.step()?;
        }
        Ok(())
    };
    let mut offset: Option<f64> = None;
    let mut reply = None;
    let mut failure = None;
    loop {
        tokio::select! {
            cmd = commands.recv() => match cmd {
                Some(Command::Input { t, x }) => {
                    let now_ms = start.elapsed().as_secs_f64() * 1000.0;
                    let off = *offset.get_or_insert(now_ms - t);
                    engine.ingest(t + off, x);
                }
                Some(Command::End(tx)) => {
                    reply = Some(tx);
                    break;
                }
                None => break,
            },
            _ = ticker.tick() => {
                if let Err(e) = catch_up(&mut engine) {
                    failure = Some(e);
                }
                if engine.finished() || failure.is_some() {
                    break;
                }
            }
            _ = frames.tick() => {
                match catch_up(&mut engine).and_then(|_| engine.snapshot()) {
                    Ok(frame) => {
                        let _ = events.send(ServerMessage::Frame(frame));
                    }
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
            }
        }
    }
    let report = match failure.map_or_else(|| engine.report(), Err) {
        Ok(r) => r,
        Err(e) => {
            log::error!("session {id} failed: {e}");
            let _ = events.send(ServerMessage::Error {
                category: e.category().into(),
                message: e.to_string(),
            });
            app.registry.lock().expect("registry lock").active = None;
            if let Some(tx) = reply {
                let _ = tx.send(Err(e));
            }
            return;
        }
    };
    if let Some(dir) = &app.config.out_dir {
        if let Err(e) = engine.write_trace(&dir.join(format!("session-{id}.csv"))) {
            log::error!("session {id}: {e}");
        }
    }
    {
        let mut reg = app.registry.lock().expect("registry lock");
        reg.reports.insert(id.clone(), report.clone());
        reg.active = None;
    }
    log::info!(
        "session {id} ended: {} = {:.4}",
        report.metric,
        report.value
    );
    let _ = events.send(ServerMessage::End {
        report: report.clone(),
    });
    if let Some(tx) = reply {
        let _ = tx.send(Ok(report));
    }
}

async fn get_report(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let reg = app.registry.lock().expect("registry lock");
    if let Some(r) = reg.reports.get(&id) {
        return Json(r.clone()).into_response();
    }
    if reg.active.as_ref().is_some_and(|a| a.id == id) {
        return (StatusCode::ACCEPTED, Json(json!({ "status": "running" }))).into_response();
    }
    error_response(
        StatusCode::NOT_FOUND,
        "not-found",
        format!("no session {id}"),
    )
}

async fn end_session(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let commands = {
        let reg = app.registry.lock().expect("registry lock");
        if let Some(r) = reg.reports.get(&id) {
            return Json(r.clone()).into_response();
        }
        match reg.active.as_ref().filter(|a| a.id == id) {
            Some(a) => a.commands.clone(),
            None => {
                return error_response(
                    StatusCode::NOT_FOUND,
                    "not-found",
                    format!("no session {id}"),
                )
            }
        }
    };
    let (tx, rx) = oneshot::channel();
    if commands.send(Command::End(tx)).await.is_ok() {
        match rx.await {
            Ok(Ok(r)) => return Json(r).into_response(),
            Ok(Err(e)) => return error_response(StatusCode::CONFLICT, e.category(), e.to_string()),
            Err(_) => {}
        }
    }
    // The trial finished on its own in the meantime.
    get_report(State(app), UrlPath(id)).await
}

async fn session_socket(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    ws: WebSocketUpgrade,
) -> Response {
    let handles = {
        let reg = app.registry.lock().expect("registry lock");
        reg.active.as_ref().filter(|a| a.id == id).map(|a| {
            (
                a.commands.clone(),
                a.events.subscribe(),
                a.config_message.clone(),
            )
        })
    };
    match handles {
        Some((cmd, ev, cfg)) => ws.on_upgrade(move |socket| client_loop(socket, cmd, ev, cfg)),
        None => error_response(
            StatusCode::NOT_FOUND,
            "not-found",
            format!("no active session {id}"),
        ),
    }
}

async fn client_loop(
    socket: WebSocket,
    commands: mpsc::Sender<Command>,
    mut events: broadcast::Receiver<ServerMessage>,
    config: ServerMessage,
) {
    let (mut tx, mut rx) = socket.split();
    let text =
        |m: &ServerMessage| Message::Text(serde_json::to_string(m).unwrap_or_default().into());
    loop {
        tokio::select! {
            incoming = rx.next() => {
                let Some(Ok(msg)) = incoming else { break };
                let Message::Text(body) = msg else { continue };
                match serde_json::from_str::<ClientMessage>(&body) {
                    Ok(ClientMessage::Hello { .. }) => {
                        if tx.send(text(&config)).await.is_err() {
                            break;
                        }
                    }
                    Ok(ClientMessage::Input { t, x }) => {
                        if commands.send(Command::Input { t, x }).await.is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let err = ServerMessage::Error { category: "config".into(), message: e.to_string() };
                        if tx.send(text(&err)).await.is_err() {
                            break;
                        }
                    }
                }
            }
            event = events.recv() => match event {
                Ok(m) => {
                    let last = matches!(m, ServerMessage::End { .. } | ServerMessage::Error { .. });
                    if tx.send(text(&m)).await.is_err() || last {
                        break;
                    }
                }
                // A slow client skips frames rather than stalling the trial.
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            },
        }
    }
    let _ = tx.close().await;
}

pub fn router(config: ServerConfig) -> Router {
    let static_dir = config.static_dir.clone();
    let state = AppState {
        registry: Arc::new(Mutex::new(Registry::default())),
        config: Arc::new(config),
    };
    let app = Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}/report", get(get_report))
        .route("/session/{id}/end", post(end_session))
        .route("/session/{id}/ws", get(session_socket))
        .with_state(state);
    match static_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    }
}

/// A server bound and running in the background.
pub struct RunningServer {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    pub async fn stop(mut self) -> Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task
            .await
            .map_err(|e| Error::InvalidState(format!("server task: {e}")))?
            .map_err(|e| Error::io("<server>", e))
    }
}

pub async fn start(config: ServerConfig) -> Result<RunningServer> {
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|e| Error::io(config.bind.to_string(), e))?;
    let addr = listener
        .local_addr()
        .map_err(|e| Error::io(config.bind.to_string(), e))?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(config);
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(RunningServer {
        addr,
        shutdown: Some(tx),
        task,
    })
}
