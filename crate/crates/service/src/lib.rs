//! HTTP and WebSocket front end for kinesim sessions.
//!
//! | route                              | effect                                   |
//! |------------------------------------|------------------------------------------|
//! | `GET /api/models`                  | catalog summaries                        |
//! | `POST /api/sessions`               | `{"model": name}` creates a session      |
//! | `GET /api/sessions/{id}`           | current state event                      |
//! | `POST /api/sessions/{id}/commands` | applies one command                      |
//! | `GET /api/sessions/{id}/stream`    | WebSocket: snapshot, then every change   |
//!
//! Errors are `{"error": {"code", "message"}}` with 400, 404 or 409.

mod error;
mod registry;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kinesim_core::robot_model::{Catalog, FrameSpec, JointKind, JointLimits, RobotModel};
use kinesim_core::session::{Command, StateEvent};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;

pub use error::ApiError;
pub use registry::{ApplyError, Registry, RegistryOptions};

/// Animation tick rate of the live service.
pub const TICK_HZ: f64 = 30.0;

/// Environment variable that overrides the bind address.
pub const BIND_ENV: &str = "KINESIM_BIND";

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Clone)]
pub struct AppState {
    catalog: Arc<Catalog>,
    registry: Arc<Registry>,
}

impl AppState {
    pub fn new(catalog: Catalog, options: RegistryOptions) -> Self {
        AppState {
            catalog: Arc::new(catalog),
            registry: Arc::new(Registry::new(options)),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/models", get(list_models))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/commands", post(post_command))
        .route("/api/sessions/{id}/stream", get(stream))
        .with_state(state)
}

#[derive(Debug, Clone, Serialize)]
pub struct JointSummary {
    pub name: String,
    pub kind: JointKind,
    pub axis: [f64; 3],
    pub origin: FrameSpec,
    pub limits: JointLimits,
    pub home: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub name: String,
    pub family: kinesim_core::Family,
    pub dof: usize,
    pub signature: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ik_family: Option<&'static str>,
    pub joints: Vec<JointSummary>,
}

impl ModelSummary {
    pub fn of(model: &RobotModel) -> Self {
        ModelSummary {
            name: model.name().to_string(),
            family: model.family(),
            dof: model.dof(),
            signature: model.signature(),
            ik_family: model.ik_binding().map(|b| b.family.as_str()),
            joints: model
                .joints()
                .iter()
                .map(|j| JointSummary {
                    name: j.name().to_string(),
                    kind: j.kind(),
                    axis: j.axis().into(),
                    origin: j.origin_spec(),
                    limits: j.limits(),
                    home: j.home(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Created {
    session_id: String,
    state: StateEvent,
}

#[derive(Debug, Serialize)]
struct Applied {
    revision: u64,
    changed: bool,
    state: StateEvent,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    model: String,
}

async fn list_models(State(app): State<AppState>) -> Json<Vec<ModelSummary>> {
    Json(app.catalog.models().iter().map(|m| ModelSummary::of(m)).collect())
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRequest = serde_json::from_slice(&body).map_err(|e| ApiError::malformed(e.to_string()))?;
    let model = app
        .catalog
        .get(&req.model)
        .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, "unknown_model", e.to_string()))?;
    let (session_id, handle) = app.registry.create(model);
    tracing::info!(%session_id, model = %req.model, "session created");
    let body = Created {
        session_id,
        state: handle.snapshot(),
    };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<StateEvent>, ApiError> {
    let handle = app.registry.get(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    Ok(Json(handle.snapshot()))
}

/// Splits the optional `expected_revision` field off a command body.
pub fn parse_command(body: &[u8]) -> Result<(Command, Option<u64>), ApiError> {
    let mut value: serde_json::Value = serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))?;
    let expected = match value.as_object_mut().and_then(|o| o.remove("expected_revision")) {
        None => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| ApiError::malformed("expected_revision must be a non-negative integer"))?,
        ),
    };
    let command: Command = serde_json::from_value(value).map_err(|e| ApiError::malformed(e.to_string()))?;
    if matches!(command, Command::Tick { .. }) {
        return Err(ApiError::malformed("tick is driven by the server"));
    }
    Ok((command, expected))
}

async fn post_command(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<impl Serialize>, ApiError> {
    let handle = app.registry.get(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let (command, expected) = parse_command(&body)?;
    match handle.apply(&command, expected) {
        Ok((state, changed)) => Ok(Json(Applied {
            revision: state.revision,
            changed,
            state,
        })),
        Err(e @ ApplyError::Stale { .. }) => Err(ApiError::new(StatusCode::CONFLICT, "stale_revision", e.to_string())),
        Err(ApplyError::Session(e)) => Err(e.into()),
    }
}

async fn stream(State(app): State<AppState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Result<Response, ApiError> {
    let handle = app.registry.get(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    Ok(ws.on_upgrade(move |socket| forward(socket, handle)))
}

/// Sends the snapshot, then every later event with a higher revision. A
/// subscriber that falls behind gets a fresh snapshot instead of the missed
/// events.
async fn forward(mut socket: WebSocket, handle: Arc<registry::SessionHandle>) {
    let (first, mut rx) = handle.subscribe();
    let mut last = first.revision;
    if socket.send(Message::Text(first.json.clone().into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            received = rx.recv() => {
                let event = match received {
                    Ok(e) => e,
                    Err(RecvError::Lagged(_)) => handle.subscribe().0,
                    Err(RecvError::Closed) => break,
                };
                if event.revision <= last {
                    continue;
                }
                last = event.revision;
                if socket.send(Message::Text(event.json.clone().into())).await.is_err() {
                    break;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub port: u16,
    pub models_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("loading models: {0}")]
    Models(#[from] kinesim_core::robot_model::ModelError),
    #[error("invalid {BIND_ENV} value '{0}'")]
    Bind(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceConfig {
    /// `KINESIM_BIND` (a full socket address) wins over `--port`.
    pub fn bind_address(&self) -> Result<SocketAddr, ServeError> {
        match std::env::var(BIND_ENV) {
            Ok(v) => v.parse().map_err(|_| ServeError::Bind(v)),
            Err(_) => Ok(SocketAddr::from(([127, 0, 0, 1], self.port))),
        }
    }

    pub fn catalog(&self) -> Result<Catalog, ServeError> {
        let mut catalog = Catalog::builtin();
        if let Some(dir) = &self.models_dir {
            catalog.load_dir(dir)?;
        }
        Ok(catalog)
    }
}

/// Runs the service until the process is stopped.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let app = AppState::new(config.catalog()?, RegistryOptions::default());
    let listener = tokio::net::TcpListener::bind(config.bind_address()?).await?;
    tracing::info!(address = %listener.local_addr()?, "listening");
    axum::serve(listener, router(app)).await?;
    Ok(())
}
