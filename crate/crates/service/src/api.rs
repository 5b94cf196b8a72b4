use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use artvista_core::{
    build_template, generate_sketch, render_template_svg, template_from_json, template_to_json, PbnTemplate,
    RasterImage, SketchLevel, TemplateOptions, DEFAULT_COLORS, DEFAULT_MIN_AREA_FRACTION, MAX_COLORS,
};
use artvista_genai::{generate_reference_images, BackendConfig, GenRequest, Style};
use axum::body::Bytes;
use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::{BytesRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;

use crate::error::{Result, ServiceError};
use crate::session::{now, PaintSession};
use crate::store::{is_valid_id, new_id, Kind, Store};

pub const MAX_UPLOAD_BYTES: usize = 16 * 1024 * 1024;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    store: Store,
    genai: BackendConfig,
    /// Templates are immutable once written, so parsed copies never go stale.
    templates: Mutex<HashMap<String, Arc<PbnTemplate>>>,
    /// One writer per session. Entries are never evicted; a desk-scale
    /// deployment holds few sessions.
    session_locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    pub fn new(store: Store, genai: BackendConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                store,
                genai,
                templates: Mutex::default(),
                session_locks: Mutex::default(),
            }),
        }
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    fn session_lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.inner.session_locks.lock().unwrap().entry(id.to_string()).or_default().clone()
    }

    async fn template(&self, id: &str) -> Result<Arc<PbnTemplate>> {
        if let Some(t) = self.inner.templates.lock().unwrap().get(id) {
            return Ok(t.clone());
        }
        let bytes = self.read(Kind::Template, id).await?;
        let t = Arc::new(blocking(move || template_from_json(&bytes).map_err(ServiceError::from)).await?);
        self.inner.templates.lock().unwrap().insert(id.to_string(), t.clone());
        Ok(t)
    }

    async fn read(&self, kind: Kind, id: &str) -> Result<Vec<u8>> {
        let what = match kind {
            Kind::Template => "template",
            Kind::Session => "session",
            Kind::Image => "image",
        };
        let missing = || ServiceError::NotFound(format!("no {what} with id {id:?}"));
        if !is_valid_id(id) {
            return Err(missing());
        }
        let store = self.inner.store.clone();
        let owned = id.to_string();
        blocking(move || Ok(store.read(kind, &owned)?)).await?.ok_or_else(missing)
    }

    async fn write(&self, kind: Kind, id: String, bytes: Vec<u8>) -> Result<()> {
        let store = self.inner.store.clone();
        blocking(move || Ok(store.write(kind, &id, &bytes)?)).await
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(format!("worker failed: {e}")))?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/templates", post(create_template))
        .route("/api/v1/templates/{file}", get(get_template))
        .route("/api/v1/sketches", post(create_sketch))
        .route("/api/v1/images:generate", post(generate_images))
        .route("/api/v1/images/{id}", get(get_image))
        .route("/api/v1/sessions", post(create_session))
        .route("/api/v1/sessions/{id}", get(get_session))
        .route("/api/v1/sessions/{id}/fills", post(add_fill))
        .fallback(|| async { ServiceError::NotFound("no such route".into()) })
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .layer(middleware::from_fn(log_request))
        .with_state(state)
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let start = Instant::now();
    let resp = next.run(req).await;
    tracing::info!(
        method = %method,
        path = %path,
        status = resp.status().as_u16(),
        latency_ms = start.elapsed().as_secs_f64() * 1e3,
        "request"
    );
    resp
}

fn json(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [("content-type", "application/json")], body).into_response()
}

type Body = std::result::Result<Bytes, BytesRejection>;
type Params = std::result::Result<Query<HashMap<String, String>>, QueryRejection>;

fn read_body(b: Body) -> Result<Bytes> {
    b.map_err(|e| match e.status() {
        StatusCode::PAYLOAD_TOO_LARGE => ServiceError::PayloadTooLarge(format!("body exceeds {MAX_UPLOAD_BYTES} bytes")),
        _ => ServiceError::Validation(e.body_text()),
    })
}

fn params(q: Params) -> Result<HashMap<String, String>> {
    q.map(|Query(q)| q).map_err(|e| ServiceError::Validation(e.body_text()))
}

fn query_value<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str) -> Result<Option<T>> {
    q.get(key)
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| ServiceError::Validation(format!("query parameter {key}: cannot parse {v:?}")))
        })
        .transpose()
}

/// `k` (default 16), `min_region_pct` (percent of the analyzed canvas,
/// default 0.05) and `seed` (default 0).
pub fn parse_template_query(q: &HashMap<String, String>) -> Result<TemplateOptions> {
    let k = query_value(q, "k")?.unwrap_or(DEFAULT_COLORS);
    if !(1..=MAX_COLORS).contains(&k) {
        return Err(ServiceError::Validation(format!("query parameter k must be in 1..={MAX_COLORS}, got {k}")));
    }
    let pct: f64 = query_value(q, "min_region_pct")?.unwrap_or(DEFAULT_MIN_AREA_FRACTION * 100.0);
    if !(0.0..100.0).contains(&pct) {
        return Err(ServiceError::Validation(format!(
            "query parameter min_region_pct must be in [0, 100), got {pct}"
        )));
    }
    Ok(TemplateOptions {
        colors: k,
        seed: query_value(q, "seed")?.unwrap_or(0),
        min_area_fraction: pct / 100.0,
        ..TemplateOptions::default()
    })
}

fn multipart_error(e: axum::extract::multipart::MultipartError) -> ServiceError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ServiceError::PayloadTooLarge(format!("upload exceeds {MAX_UPLOAD_BYTES} bytes"))
    } else {
        ServiceError::Validation(e.body_text())
    }
}

/// Takes the part named `image`, or else the first part carrying a file name.
async fn upload(multipart: std::result::Result<Multipart, MultipartRejection>) -> Result<RasterImage> {
    let mut multipart = multipart.map_err(|e| ServiceError::Validation(e.body_text()))?;
    let mut chosen = None;
    while let Some(field) = multipart.next_field().await.map_err(multipart_error)? {
        let named = field.name() == Some("image");
        if named || (chosen.is_none() && field.file_name().is_some()) {
            chosen = Some(field.bytes().await.map_err(multipart_error)?);
            if named {
                break;
            }
        }
    }
    let bytes = chosen.ok_or_else(|| ServiceError::Validation("multipart body has no image part".into()))?;
    blocking(move || RasterImage::decode(&bytes).map_err(ServiceError::from)).await
}

async fn create_template(
    State(state): State<AppState>,
    q: Params,
    multipart: std::result::Result<Multipart, MultipartRejection>,
) -> Result<Response> {
    let opts = parse_template_query(&params(q)?)?;
    let img = upload(multipart).await?;
    let doc = blocking(move || Ok(template_to_json(&build_template(&img, &opts)?))).await?;
    let id = new_id();
    state.write(Kind::Template, id.clone(), doc.clone()).await?;
    let mut body = format!("{{\"id\":\"{id}\",\"template\":").into_bytes();
    body.extend_from_slice(&doc);
    body.push(b'}');
    Ok(json(StatusCode::CREATED, body))
}

async fn get_template(State(state): State<AppState>, Path(file): Path<String>) -> Result<Response> {
    match file.strip_suffix(".svg") {
        Some(id) => {
            let t = state.template(id).await?;
            let svg = blocking(move || Ok(render_template_svg(&t, 1.0)?)).await?;
            Ok(([("content-type", "image/svg+xml")], svg).into_response())
        }
        None => Ok(json(StatusCode::OK, state.read(Kind::Template, &file).await?)),
    }
}

/// `level` (default abstract) and `seed` (default 0).
async fn create_sketch(
    q: Params,
    multipart: std::result::Result<Multipart, MultipartRejection>,
) -> Result<Response> {
    let q = params(q)?;
    let level = match q.get("level") {
        Some(l) => l.parse::<SketchLevel>()?,
        None => SketchLevel::Abstract,
    };
    let seed = query_value(&q, "seed")?.unwrap_or(0u64);
    let img = upload(multipart).await?;
    let png = blocking(move || Ok(generate_sketch(&img, level, seed)?.strokes.encode_png()?)).await?;
    Ok(([("content-type", "image/png")], png).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateBody {
    prompt: String,
    #[serde(default = "one")]
    count: u32,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    style: Option<String>,
}

fn one() -> u32 {
    1
}

fn parse_body<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| ServiceError::Validation(format!("request body: {e}")))
}

/// `{prompt, count = 1, seed = 0, style = null}`.
pub fn parse_generate_request(bytes: &[u8]) -> Result<GenRequest> {
    let b: GenerateBody = parse_body(bytes)?;
    let req = GenRequest {
        prompt: b.prompt,
        count: b.count,
        seed: b.seed,
        style: b.style.as_deref().map(str::parse::<Style>).transpose()?,
    };
    req.validate()?;
    Ok(req)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionBody {
    template_id: String,
}

/// `{template_id}`.
pub fn parse_session_request(bytes: &[u8]) -> Result<String> {
    Ok(parse_body::<SessionBody>(bytes)?.template_id)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FillBody {
    region_id: u32,
    number: u32,
}

/// `{region_id, number}`.
pub fn parse_fill_request(bytes: &[u8]) -> Result<(u32, u32)> {
    let b: FillBody = parse_body(bytes)?;
    Ok((b.region_id, b.number))
}

async fn generate_images(State(state): State<AppState>, raw: Body) -> Result<Response> {
    let body = read_body(raw)?;
    let req = parse_generate_request(&body)?;
    let cfg = state.inner.genai.clone();
    let pngs = blocking(move || {
        generate_reference_images(&cfg, &req)?
            .iter()
            .map(|img| Ok(img.encode_png()?))
            .collect::<Result<Vec<_>>>()
    })
    .await?;
    let mut ids = Vec::with_capacity(pngs.len());
    for png in pngs {
        let id = new_id();
        state.write(Kind::Image, id.clone(), png).await?;
        ids.push(id);
    }
    Ok(json(StatusCode::OK, serde_json::to_vec(&serde_json::json!({ "ids": ids })).expect("serializes")))
}

async fn get_image(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response> {
    let png = state.read(Kind::Image, &id).await?;
    Ok(([("content-type", "image/png")], png).into_response())
}

async fn create_session(State(state): State<AppState>, raw: Body) -> Result<Response> {
    let body = read_body(raw)?;
    let template_id = parse_session_request(&body)?;
    let t = state.template(&template_id).await?;
    let id = new_id();
    let session = PaintSession::new(id.clone(), template_id, &t, now());
    state.write(Kind::Session, id.clone(), session.to_json()).await?;
    Ok(json(StatusCode::CREATED, format!("{{\"id\":\"{id}\"}}").into_bytes()))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response> {
    Ok(json(StatusCode::OK, state.read(Kind::Session, &id).await?))
}

async fn add_fill(State(state): State<AppState>, Path(id): Path<String>, raw: Body) -> Result<Response> {
    let body = read_body(raw)?;
    let (region_id, number) = parse_fill_request(&body)?;
    let lock = state.session_lock(&id);
    let _guard = lock.lock().await;
    let mut session = PaintSession::from_json(&state.read(Kind::Session, &id).await?)
        .map_err(|e| ServiceError::Internal(format!("stored session {id} is corrupt: {e}")))?;
    let t = state.template(&session.template_id).await?;
    session.apply_fill(&t, region_id, number, now())?;
    let bytes = session.to_json();
    state.write(Kind::Session, id, bytes.clone()).await?;
    Ok(json(StatusCode::OK, bytes))
}
