//! HTTP session CRUD and the per-session WebSocket.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, put};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;

use crate::error::{ErrorCode, ServiceError};
use crate::session::{Session, Settings};

pub struct SessionEntry {
    session: Mutex<Session>,
    writer: AtomicBool,
}

impl SessionEntry {
    pub fn with<T>(&self, f: impl FnOnce(&mut Session) -> T) -> T {
        f(&mut self.session.lock().expect("session lock"))
    }
}

/// All live sessions of a server.
#[derive(Default)]
pub struct SessionStore {
    sessions: Mutex<BTreeMap<String, Arc<SessionEntry>>>,
    next: AtomicU64,
}

impl SessionStore {
    fn fresh_id(&self) -> String {
        format!("s{}", self.next.fetch_add(1, Ordering::Relaxed) + 1)
    }

    pub fn insert(&self, session: Session) -> String {
        let id = session.id.clone();
        let entry = Arc::new(SessionEntry {
            session: Mutex::new(session),
            writer: AtomicBool::new(false),
        });
        self.sessions.lock().expect("store lock").insert(id.clone(), entry);
        id
    }

    pub fn create(&self, source: &str, settings: Settings) -> Result<String, ServiceError> {
        Ok(self.insert(Session::create(self.fresh_id(), source, settings)?))
    }

    pub fn load(&self, saved: Value) -> Result<String, ServiceError> {
        Ok(self.insert(Session::load_value(self.fresh_id(), saved)?))
    }

    pub fn get(&self, id: &str) -> Result<Arc<SessionEntry>, ServiceError> {
        self.sessions
            .lock()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::new(ErrorCode::UnknownSession, format!("no session {id:?}")))
    }

    pub fn remove(&self, id: &str) -> Result<(), ServiceError> {
        self.sessions
            .lock()
            .expect("store lock")
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| ServiceError::new(ErrorCode::UnknownSession, format!("no session {id:?}")))
    }
}

pub fn session_info(s: &Session) -> Value {
    json!({
        "id": s.id,
        "source_hash": s.source_hash(),
        "grounder_version": acpstep_core::VERSION,
        "desynchronized": s.desynchronized(),
        "statements": s.statements(),
        "rules": s.program().rules().iter().map(|r| r.text()).collect::<Vec<_>>(),
        "tree": s.tree_view(),
    })
}

struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0.code {
            ErrorCode::UnknownSession => StatusCode::NOT_FOUND,
            ErrorCode::SessionBusy => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        (status, Json(json!({"error": self.0}))).into_response()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    settings: Settings,
    #[serde(default)]
    saved: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceBody {
    source: String,
}

type Store = Arc<SessionStore>;

async fn create(State(store): State<Store>, Json(body): Json<CreateBody>) -> Result<Response, ApiError> {
    let id = match (body.source, body.saved) {
        (Some(src), None) => store.create(&src, body.settings)?,
        (None, Some(saved)) => store.load(saved)?,
        _ => {
            return Err(ServiceError::new(
                ErrorCode::InvalidParams,
                "give exactly one of \"source\" and \"saved\"",
            )
            .into())
        }
    };
    let info = store.get(&id)?.with(|s| session_info(s));
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn info(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    Ok(Json(store.get(&id)?.with(|s| session_info(s))))
}

async fn update_source(
    State(store): State<Store>,
    Path(id): Path<String>,
    Json(body): Json<SourceBody>,
) -> Result<Json<Value>, ApiError> {
    Ok(Json(store.get(&id)?.with(|s| {
        s.update_source(&body.source);
        session_info(s)
    })))
}

async fn delete(State(store): State<Store>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    store.remove(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn socket(
    State(store): State<Store>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let entry = store.get(&id)?;
    if entry.writer.swap(true, Ordering::AcqRel) {
        return Err(ServiceError::new(
            ErrorCode::SessionBusy,
            format!("session {id:?} already has a connected client"),
        )
        .into());
    }
    Ok(ws.on_upgrade(move |sock| dialogue(entry, sock)))
}

/// Requests are handled strictly in arrival order, one at a time.
async fn dialogue(entry: Arc<SessionEntry>, mut sock: WebSocket) {
    while let Some(Ok(msg)) = sock.recv().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let e = entry.clone();
        let out = tokio::task::spawn_blocking(move || e.with(|s| s.handle_text(&text)))
            .await
            .expect("handler does not panic");
        for frame in out {
            let text = serde_json::to_string(&frame).expect("frames serialize");
            if sock.send(Message::Text(text.into())).await.is_err() {
                entry.writer.store(false, Ordering::Release);
                return;
            }
        }
    }
    entry.writer.store(false, Ordering::Release);
}

const INDEX: &str = "<!doctype html>\n<title>acpstep</title>\n<p>The stepping service is running. \
Sessions are managed under <code>/sessions</code>; see protocol.md.</p>\n";

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/", get(|| async { Html(INDEX) }))
        .route("/sessions", axum::routing::post(create))
        .route("/sessions/{id}", get(info).delete(delete))
        .route("/sessions/{id}/source", put(update_source))
        .route("/sessions/{id}/ws", get(socket))
        .with_state(store)
}

pub async fn serve(listener: TcpListener, store: Store) -> std::io::Result<()> {
    axum::serve(listener, router(store)).await
}
