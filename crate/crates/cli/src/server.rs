//! JSON HTTP API. Reads go to the current snapshot without locking out
//! writers; curation requests are serialized, persisted, then swapped in.

use std::io::Write as _;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use cartae_core::curation::{apply_edit, CurationError};
use cartae_core::store::{persist, StoreError};
use cartae_core::terminology::{cluster_variants, normalize_form, AuditEntry, CurationEdit, NormalizationRules, TerminologyError};
use cartae_core::{Concept, Language, SearchParams, Snapshot};

pub const AUDIT_LOG: &str = "audit.log";
const DEFAULT_PAGE: usize = 20;

pub struct AppState {
    current: RwLock<Arc<Snapshot>>,
    writer: tokio::sync::Mutex<()>,
    store_dir: PathBuf,
    rules: NormalizationRules,
}

impl AppState {
    pub fn new(snapshot: Snapshot, store_dir: PathBuf, rules: NormalizationRules) -> Self {
        AppState {
            current: RwLock::new(Arc::new(snapshot)),
            writer: tokio::sync::Mutex::new(()),
            store_dir,
            rules,
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock poisoned").clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "code": self.code, "message": self.message }))).into_response()
    }
}

impl From<CurationError> for ApiError {
    fn from(e: CurationError) -> Self {
        let msg = e.to_string();
        match e {
            CurationError::Terminology(t) => match t {
                TerminologyError::UnknownConcept(_) | TerminologyError::UnknownLabel { .. } => ApiError::not_found(msg),
                TerminologyError::MergeOrderViolation { .. }
                | TerminologyError::DuplicateLabel { .. }
                | TerminologyError::ConceptExists(_) => ApiError::new(StatusCode::CONFLICT, "conflict", msg),
                _ => ApiError::bad_request(msg),
            },
            CurationError::Store(StoreError::ForeignKeyViolation(_) | StoreError::DuplicateId(_)) => {
                ApiError::new(StatusCode::CONFLICT, "conflict", msg)
            }
            CurationError::Store(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", msg),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/search", get(search))
        .route("/notices/{id}", get(notice))
        .route("/concepts", get(list_concepts))
        .route("/concepts/merge", post(merge))
        .route("/concepts/{id}", get(concept))
        .route("/concepts/{id}/labels", post(add_label))
        .route("/concepts/{id}/split", post(split))
        .route("/terms", get(terms))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "version": state.snapshot().version() }))
}

async fn search(
    State(state): State<Arc<AppState>>,
    params: Result<Query<SearchParams>, QueryRejection>,
) -> ApiResult<cartae_core::ResultPage> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    crate::search(&state.snapshot(), &params).map(Json).map_err(|e| ApiError::bad_request(e.to_string()))
}

async fn notice(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<serde_json::Value>, ApiError> {
    let snap = state.snapshot();
    let record = snap.notice(&id).ok_or_else(|| ApiError::not_found(format!("unknown notice {id:?}")))?;
    Ok(Json(json!({
        "notice": record,
        "text": snap.notice_text(&id).unwrap_or_default(),
        "mentions": snap.notice_mentions(&id),
    })))
}

#[derive(Debug, Deserialize)]
struct Paging {
    limit: Option<String>,
    offset: Option<String>,
}

impl Paging {
    fn resolve(&self) -> Result<(usize, usize), ApiError> {
        let num = |name: &str, v: &Option<String>, default: usize| match v.as_deref().map(str::trim) {
            None | Some("") => Ok(default),
            Some(s) => s.parse::<usize>().map_err(|_| ApiError::bad_request(format!("invalid {name}: {s:?}"))),
        };
        let limit = num("limit", &self.limit, DEFAULT_PAGE)?;
        if limit == 0 {
            return Err(ApiError::bad_request("limit must be at least 1"));
        }
        Ok((limit, num("offset", &self.offset, 0)?))
    }
}

#[derive(Debug, Serialize)]
struct Page<T> {
    total: usize,
    items: Vec<T>,
}

fn paginate<T>(all: Vec<T>, paging: &Paging) -> Result<Page<T>, ApiError> {
    let (limit, offset) = paging.resolve()?;
    Ok(Page { total: all.len(), items: all.into_iter().skip(offset).take(limit).collect() })
}

#[derive(Debug, Deserialize)]
struct ConceptFilter {
    label: Option<String>,
    lang: Option<String>,
    #[serde(flatten)]
    paging: Paging,
}

async fn list_concepts(
    State(state): State<Arc<AppState>>,
    filter: Result<Query<ConceptFilter>, QueryRejection>,
) -> ApiResult<Page<Concept>> {
    let Query(filter) = filter.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let lang = match filter.lang.as_deref().map(str::trim).filter(|s| !s.is_empty()) {
        Some(l) => Some(l.parse::<Language>().map_err(|e| ApiError::bad_request(e.to_string()))?),
        None => None,
    };
    let snap = state.snapshot();
    let table = snap.concepts();
    let key = filter.label.as_deref().map(|l| normalize_form(l, &state.rules)).filter(|k| !k.is_empty());
    let all: Vec<Concept> = table
        .concepts()
        .filter(|c| match (&key, lang) {
            (Some(k), Some(l)) => c.labels.get(&l).is_some_and(|ls| ls.iter().any(|x| &x.normalized == k)),
            (Some(k), None) => c.labels.values().flatten().any(|x| &x.normalized == k),
            (None, Some(l)) => c.labels.contains_key(&l),
            (None, None) => true,
        })
        .cloned()
        .collect();
    paginate(all, &filter.paging).map(Json)
}

async fn concept(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Concept> {
    let snap = state.snapshot();
    let c = snap.concepts().get(&id).ok_or_else(|| ApiError::not_found(format!("unknown concept {id:?}")))?;
    Ok(Json(c.clone()))
}

#[derive(Debug, Deserialize)]
struct TermsParams {
    sort: Option<String>,
    #[serde(flatten)]
    paging: Paging,
}

async fn terms(
    State(state): State<Arc<AppState>>,
    params: Result<Query<TermsParams>, QueryRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let snap = state.snapshot();
    let mut clusters = cluster_variants(snap.terms(), &state.rules);
    match params.sort.as_deref().unwrap_or("freq") {
        "freq" => {}
        "alpha" => clusters.sort_by(|a, b| a.key.cmp(&b.key)),
        other => return Err(ApiError::bad_request(format!("unknown sort {other:?}; use freq or alpha"))),
    }
    let page = paginate(clusters, &params.paging)?;
    Ok(Json(json!({ "total": page.total, "items": page.items })))
}

#[derive(Debug, Deserialize)]
struct LabelBody {
    language: Language,
    label: String,
}

#[derive(Debug, Deserialize)]
struct MergeBody {
    keep_id: String,
    merge_id: String,
}

#[derive(Debug, Deserialize)]
struct SplitBody {
    language: Language,
    label: String,
    new_concept_id: String,
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    b.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn append_audit(state: &AppState, entry: &AuditEntry) -> std::io::Result<()> {
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(state.store_dir.join(AUDIT_LOG))?;
    let mut line = serde_json::to_vec(entry).expect("audit entry serializes");
    line.push(b'\n');
    f.write_all(&line)
}

/// Applies one edit: curate, commit, persist, log, then publish.
async fn curate(state: &AppState, edit: CurationEdit) -> Result<(Arc<Snapshot>, AuditEntry), ApiError> {
    let _guard = state.writer.lock().await;
    let current = state.snapshot();
    let (next, entry) = apply_edit(&current, &edit, &state.rules, now_ms())?;
    let internal = |m: String| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", m);
    persist(&next, &state.store_dir).map_err(|e| internal(e.to_string()))?;
    append_audit(state, &entry).map_err(|e| internal(format!("audit log: {e}")))?;
    let next = Arc::new(next);
    *state.current.write().expect("snapshot lock poisoned") = next.clone();
    Ok((next, entry))
}

fn curated(snap: &Snapshot, concept_id: &str, entry: AuditEntry) -> Json<serde_json::Value> {
    Json(json!({
        "version": snap.version(),
        "concept": snap.concepts().get(concept_id),
        "audit": entry,
    }))
}

async fn add_label(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    b: Result<Json<LabelBody>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let b = body(b)?;
    let edit = CurationEdit::AddLabel { concept_id: id.clone(), language: b.language, label: b.label };
    let (snap, entry) = curate(&state, edit).await?;
    Ok(curated(&snap, &id, entry))
}

async fn merge(
    State(state): State<Arc<AppState>>,
    b: Result<Json<MergeBody>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let b = body(b)?;
    let edit = CurationEdit::MergeConcepts { keep_id: b.keep_id.clone(), merge_id: b.merge_id };
    let (snap, entry) = curate(&state, edit).await?;
    Ok(curated(&snap, &b.keep_id, entry))
}

async fn split(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    b: Result<Json<SplitBody>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let b = body(b)?;
    let new_id = b.new_concept_id.clone();
    let edit = CurationEdit::SplitLabel { concept_id: id, language: b.language, label: b.label, new_concept_id: b.new_concept_id };
    let (snap, entry) = curate(&state, edit).await?;
    Ok(curated(&snap, &new_id, entry))
}
