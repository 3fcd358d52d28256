//! One HTTP process serving every role: the original resources, their
//! TimeGates, the archive's Mementos and TimeMaps, the content server for
//! transcriptions, and annotation search over the harvested collection.
//!
//! | route | role |
//! |---|---|
//! | `GET /resource/{id}` | original resource, advertises its TimeGate |
//! | `GET /timegate/{enc uri_r}` | `Accept-Datetime` negotiation, 302 to a memento |
//! | `GET /memento/{stamp}/{uri_r}` | archived body with `Content-Datetime` |
//! | `GET /timemap/{enc uri_r}` | triple-line TimeMap |
//! | `PUT`/`GET /content/{id}` | transcription storage |
//! | `POST /harvest` | re-harvest the content server into the collection |
//! | `GET /annotations?target=&from=&until=` | collection search |

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::{Body, Bytes};
use axum::extract::{OriginalUri, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Request, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use chronomark::archive::Archive;
use chronomark::encoding::{decode_component, encode_component};
use chronomark::temporal::{
    emit_link_header, format_http_datetime, parse_archive_timestamp, parse_http_datetime,
};
use chronomark::workspace::WorkspaceError;
use chronomark::{
    Collection, CollectionError, Instant, LinkEntry, ResourceTimeline, TimeInterval, Workspace,
};
use tower::ServiceExt;

pub const ACCEPT_DATETIME: &str = "accept-datetime";
pub const CONTENT_DATETIME: &str = "content-datetime";
/// Set on TimeGate redirects: `true` when the chosen memento does not
/// cover the requested datetime.
pub const CLAMPED: &str = "x-memento-clamped";

const TEXT: &str = "text/plain; charset=utf-8";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub workspace: PathBuf,
    /// Answers every request as of this instant instead of the wall clock.
    pub now: Option<Instant>,
}

/// Stores behind the routes. Timelines and archives are read-only while
/// serving; content and the collection take writes.
pub struct AppState {
    ws: Workspace,
    timelines: BTreeMap<String, ResourceTimeline>,
    archives: BTreeMap<String, Archive>,
    content: Mutex<()>,
    collection: RwLock<Collection>,
    now: Option<Instant>,
}

impl AppState {
    pub fn load(ws: Workspace, now: Option<Instant>) -> Result<Self, WorkspaceError> {
        Ok(AppState {
            timelines: ws.timelines()?,
            archives: ws.archives()?,
            collection: RwLock::new(ws.load_collection()?),
            content: Mutex::new(()),
            ws,
            now,
        })
    }

    fn now(&self) -> Instant {
        self.now.unwrap_or_else(Instant::now)
    }

    fn timegate_uri(&self, uri_r: &str) -> String {
        format!("{}/timegate/{}", self.ws.base(), encode_component(uri_r))
    }

    fn timemap_uri(&self, uri_r: &str) -> String {
        format!("{}/timemap/{}", self.ws.base(), encode_component(uri_r))
    }

    /// A seeded timeline named by its URI (raw or percent-encoded) or by
    /// its id under `/resource/`.
    fn timeline(&self, id: &str) -> Option<&ResourceTimeline> {
        self.timelines
            .get(id)
            .or_else(|| decode_component(id).and_then(|d| self.timelines.get(&d)))
            .or_else(|| self.timelines.get(&self.ws.resource_uri(id)))
    }

    fn archive(&self, uri_r: &str) -> Option<(&str, &Archive)> {
        let found = |u: &str| self.archives.get_key_value(u).map(|(k, a)| (k.as_str(), a));
        found(uri_r).or_else(|| decode_component(uri_r).and_then(|d| found(&d)))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/resource/{id}", get(resource))
        .route("/timegate/{*uri_r}", get(timegate))
        .route("/memento/{stamp}/{*uri_r}", get(memento))
        .route("/timemap/{*uri_r}", get(timemap))
        .route("/content/{id}", get(get_content).put(put_content))
        .route("/harvest", post(harvest))
        .route("/annotations", get(annotations))
        .with_state(state)
}

/// Binds `config.listen` and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let ws = Workspace::open(&config.workspace)?;
    let state = Arc::new(AppState::load(ws, config.now)?);
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(state)).await?;
    Ok(())
}

/// Sends one request through `app` in-process.
pub async fn call(app: &Router, req: Request<Body>) -> (StatusCode, HeaderMap, Bytes) {
    let resp = match app.clone().oneshot(req).await {
        Ok(r) => r,
        Err(never) => match never {},
    };
    let (parts, body) = resp.into_parts();
    let bytes = axum::body::to_bytes(body, usize::MAX)
        .await
        .unwrap_or_default();
    (parts.status, parts.headers, bytes)
}

fn plain(status: StatusCode, msg: impl Into<String>) -> Response {
    let mut body = msg.into();
    body.push('\n');
    (status, [(header::CONTENT_TYPE, TEXT)], body).into_response()
}

fn header_value(s: &str) -> HeaderValue {
    HeaderValue::from_str(s).unwrap_or_else(|_| HeaderValue::from_static(""))
}

fn link_header(links: &[LinkEntry]) -> HeaderValue {
    header_value(&emit_link_header(links))
}

fn internal(e: impl std::fmt::Display) -> Response {
    tracing::error!(error = %e, "request failed");
    plain(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

async fn resource(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(tl) = s.timeline(&id) else {
        return plain(StatusCode::NOT_FOUND, format!("unknown resource {id}"));
    };
    let body = match tl.rep_at(s.now()) {
        Ok(b) => b.to_vec(),
        Err(e) => return plain(StatusCode::NOT_FOUND, e.to_string()),
    };
    let link = LinkEntry::new(s.timegate_uri(tl.uri_r()), "timegate");
    (StatusCode::OK, [(header::LINK, link_header(&[link]))], body).into_response()
}

async fn timegate(
    State(s): State<Arc<AppState>>,
    Path(uri_r): Path<String>,
    headers: HeaderMap,
) -> Response {
    let t = match headers.get(ACCEPT_DATETIME) {
        None => s.now(),
        Some(v) => match v
            .to_str()
            .map_err(|e| e.to_string())
            .and_then(|v| parse_http_datetime(v).map_err(|e| e.to_string()))
        {
            Ok(t) => t,
            Err(e) => return plain(StatusCode::BAD_REQUEST, format!("Accept-Datetime: {e}")),
        },
    };
    let Some((uri_r, archive)) = s.archive(&uri_r) else {
        return plain(
            StatusCode::NOT_FOUND,
            format!("the archive holds no mementos of {uri_r}; capture it before negotiating"),
        );
    };
    let m = match archive.resolve_timegate(uri_r, t) {
        Ok(m) => m,
        Err(e) => return plain(StatusCode::NOT_FOUND, e.to_string()),
    };
    let links = match archive.memento_links(m, &s.timemap_uri(uri_r)) {
        Ok(l) => l,
        Err(e) => return internal(e),
    };
    let clamped = if m.covers(t) { "false" } else { "true" };
    (
        StatusCode::FOUND,
        [
            (header::LOCATION, header_value(&m.uri_m)),
            (header::VARY, HeaderValue::from_static(ACCEPT_DATETIME)),
            (header::LINK, link_header(&links)),
            (
                header::HeaderName::from_static(CLAMPED),
                HeaderValue::from_static(clamped),
            ),
        ],
    )
        .into_response()
}

/// The original URI after `/memento/{stamp}/`, taken from the raw request
/// so that any query string is kept.
fn memento_target(uri: &axum::http::Uri, stamp: &str) -> Option<String> {
    let rest = uri
        .path()
        .strip_prefix("/memento/")?
        .strip_prefix(stamp)?
        .strip_prefix('/')?;
    Some(match uri.query() {
        Some(q) => format!("{rest}?{q}"),
        None => rest.to_string(),
    })
}

async fn memento(
    State(s): State<Arc<AppState>>,
    Path((stamp, _)): Path<(String, String)>,
    OriginalUri(uri): OriginalUri,
) -> Response {
    let Ok(t) = parse_archive_timestamp(&stamp) else {
        return plain(
            StatusCode::NOT_FOUND,
            format!("{stamp} is not a 14-digit timestamp"),
        );
    };
    let Some(target) = memento_target(&uri, &stamp) else {
        return plain(StatusCode::NOT_FOUND, "malformed memento path");
    };
    let Some((uri_r, m, archive)) = s
        .archive(&target)
        .and_then(|(uri_r, a)| a.memento_at(uri_r, t).map(|m| (uri_r, m, a)))
    else {
        return plain(
            StatusCode::NOT_FOUND,
            format!("no memento of {target} at {stamp}"),
        );
    };
    let links = match archive.memento_links(m, &s.timemap_uri(uri_r)) {
        Ok(l) => l,
        Err(e) => return internal(e),
    };
    (
        StatusCode::OK,
        [
            (
                header::HeaderName::from_static(CONTENT_DATETIME),
                header_value(&format_http_datetime(m.snapshot_time)),
            ),
            (header::LINK, link_header(&links)),
        ],
        m.body.clone(),
    )
        .into_response()
}

async fn timemap(State(s): State<Arc<AppState>>, Path(uri_r): Path<String>) -> Response {
    let Some((uri_r, archive)) = s.archive(&uri_r) else {
        return plain(
            StatusCode::NOT_FOUND,
            format!("the archive holds no mementos of {uri_r}"),
        );
    };
    match archive.timemap(uri_r) {
        Ok(g) => (
            StatusCode::OK,
            [(header::CONTENT_TYPE, TEXT)],
            g.serialize(),
        )
            .into_response(),
        Err(e) => internal(e),
    }
}

async fn get_content(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match s.ws.get_content(&id) {
        Ok(Some(bytes)) => (StatusCode::OK, [(header::CONTENT_TYPE, TEXT)], bytes).into_response(),
        Ok(None) | Err(WorkspaceError::InvalidId(_)) => {
            plain(StatusCode::NOT_FOUND, format!("no content {id}"))
        }
        Err(e) => internal(e),
    }
}

async fn put_content(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Response {
    let _guard = s.content.lock().unwrap_or_else(|p| p.into_inner());
    let uri = s.ws.content_uri(&id);
    match s.ws.put_content(&id, &body) {
        Ok(true) => (
            StatusCode::CREATED,
            [(header::LOCATION, header_value(&uri))],
            format!("{uri}\n"),
        )
            .into_response(),
        Ok(false) => (
            StatusCode::OK,
            [(header::LOCATION, header_value(&uri))],
            format!("{uri}\n"),
        )
            .into_response(),
        Err(WorkspaceError::InvalidId(id)) => plain(
            StatusCode::BAD_REQUEST,
            format!("invalid content id {id:?}"),
        ),
        Err(WorkspaceError::Collection(
            e @ (CollectionError::MalformedTranscription(_) | CollectionError::Model(_)),
        )) => plain(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e) => internal(e),
    }
}

async fn harvest(State(s): State<Arc<AppState>>) -> Response {
    let _guard = s.content.lock().unwrap_or_else(|p| p.into_inner());
    let mut c = s.collection.write().unwrap_or_else(|p| p.into_inner());
    let report = match s.ws.harvest(&mut c) {
        Ok(r) => r,
        Err(e) => return internal(e),
    };
    if let Err(e) = s.ws.save_collection(&c) {
        return internal(e);
    }
    let mut body = String::new();
    for uri in &report.ingested {
        body.push_str(&format!("ingested {uri}\n"));
    }
    for (uri, e) in &report.failures {
        body.push_str(&format!("failed {uri}: {e}\n"));
    }
    (StatusCode::OK, [(header::CONTENT_TYPE, TEXT)], body).into_response()
}

async fn annotations(
    State(s): State<Arc<AppState>>,
    Query(q): Query<HashMap<String, String>>,
) -> Response {
    let Some(target) = q.get("target") else {
        return plain(StatusCode::BAD_REQUEST, "missing target parameter");
    };
    let parse = |key: &str| {
        q.get(key)
            .map(|v| parse_http_datetime(v).map_err(|e| format!("{key}: {e}")))
    };
    let interval = match (parse("from"), parse("until")) {
        (None, None) => None,
        (Some(from), Some(until)) => match (from, until) {
            (Ok(from), Ok(until)) => match TimeInterval::new(from, until) {
                Ok(i) => Some(i),
                Err(e) => return plain(StatusCode::BAD_REQUEST, e.to_string()),
            },
            (Err(e), _) | (_, Err(e)) => return plain(StatusCode::BAD_REQUEST, e),
        },
        _ => {
            return plain(
                StatusCode::BAD_REQUEST,
                "from and until must be given together",
            )
        }
    };
    let c = s.collection.read().unwrap_or_else(|p| p.into_inner());
    let body: String = c
        .search(target, interval.as_ref())
        .iter()
        .map(|e| format!("{}\n", e.uri_trn))
        .collect();
    (StatusCode::OK, [(header::CONTENT_TYPE, TEXT)], body).into_response()
}
