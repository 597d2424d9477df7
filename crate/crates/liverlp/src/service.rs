//! HTTP interface under `/api/v1`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tower_http::services::ServeDir;

use crate::classifier::{
    builtin_soft_fragment, compile_rule_line, has_errors, validate, Classifier, ClassifierError, ClassifierRule,
    Finding, BUILTIN_ID,
};
use crate::records::{load_csv, synthesize, validate as validate_records, Dataset};
use crate::report::{self, ReportFilter};
use crate::runs::Run;
use crate::schema::Schema;
use crate::scoring::Compiled;
use crate::store::{Kind, Store, StoreError};

pub const DEMO_DATASET: &str = "demo";

#[derive(Debug, Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub schema: Arc<Schema>,
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("validation failed")]
    Invalid(Vec<Finding>),
    #[error("{0}")]
    Internal(String),
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound { .. } | StoreError::InvalidId(_) => ApiError::NotFound(e.to_string()),
            StoreError::Exists { .. } | StoreError::Referenced { .. } => ApiError::Conflict(e.to_string()),
            StoreError::Io(_) | StoreError::Json(_) => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<ClassifierError> for ApiError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::Invalid(findings) => ApiError::Invalid(findings),
            ClassifierError::IdCollision(_) => ApiError::Conflict(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match &self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": m })),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, json!({ "error": m })),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": m })),
            ApiError::Invalid(f) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": "validation failed", "findings": f }),
            ),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": m })),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Adds the built-in classifier and the demo dataset when missing.
pub fn seed(store: &Store) -> Result<(), StoreError> {
    if !store.exists(Kind::Classifier, BUILTIN_ID) {
        store.create_classifier(builtin_soft_fragment(), Utc::now())?;
    }
    if !store.exists(Kind::Dataset, DEMO_DATASET) {
        store.create_dataset(Dataset {
            id: DEMO_DATASET.to_string(),
            name: "Synthetic demo (76 cases, seed 42)".to_string(),
            records: synthesize(76, 42),
        })?;
    }
    Ok(())
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/schema", get(get_schema))
        .route("/preview", post(preview))
        .route("/validate", post(validate_classifier))
        .route("/classifiers", get(list_classifiers).post(create_classifier))
        .route(
            "/classifiers/{id}",
            get(get_classifier).put(update_classifier).delete(delete_classifier),
        )
        .route("/classifiers/{id}/clone", post(clone_classifier))
        .route("/classifiers/{id}/compiled", get(compiled_classifier))
        .route("/classifiers/{id}/run", post(run_classifier))
        .route("/runs", get(list_runs))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/report", get(run_report))
        .route("/runs/{id}/cases/{case}", get(run_case))
        .route("/datasets", get(list_datasets).post(create_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/datasets/{id}/csv", post(import_csv))
        .route("/transplants", get(list_transplants))
        .route("/transplants/{case}", get(get_transplant))
        .route("/transplants/{case}/apply/{classifier}", post(apply_classifier));
    Router::new().nest("/api/v1", api).with_state(state)
}

/// The API plus, when given, static assets served from `/`.
pub fn app(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let r = router(state);
    match static_dir {
        Some(dir) => r.fallback_service(ServeDir::new(dir)),
        None => r,
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub data: PathBuf,
    pub bind: SocketAddr,
    pub static_dir: Option<PathBuf>,
}

pub async fn serve(config: ServeConfig) -> std::io::Result<()> {
    let store = Store::open(&config.data).map_err(std::io::Error::other)?;
    seed(&store).map_err(std::io::Error::other)?;
    let state = AppState {
        store: Arc::new(store),
        schema: Arc::new(Schema::canonical()),
    };
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(state, config.static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn get_schema(State(s): State<AppState>) -> Json<Schema> {
    Json((*s.schema).clone())
}

#[derive(Debug, Serialize)]
struct PreviewResponse {
    line: String,
    findings: Vec<Finding>,
}

/// The lppf line a single rule compiles to, with the findings about it.
async fn preview(State(s): State<AppState>, Json(rule): Json<ClassifierRule>) -> Json<PreviewResponse> {
    let probe = Classifier {
        rules: vec![rule.clone()],
        ..builtin_soft_fragment()
    };
    let findings = validate(&probe, &s.schema)
        .into_iter()
        .filter(|f| f.rule.as_deref() == Some(rule.id.as_str()))
        .collect();
    Json(PreviewResponse {
        line: compile_rule_line(&rule),
        findings,
    })
}

async fn validate_classifier(State(s): State<AppState>, Json(c): Json<Classifier>) -> Json<serde_json::Value> {
    Json(json!({ "findings": validate(&c, &s.schema) }))
}

fn check(c: &Classifier, schema: &Schema) -> ApiResult<()> {
    let findings = validate(c, schema);
    if has_errors(&findings) {
        Err(ApiError::Invalid(findings))
    } else {
        Ok(())
    }
}

async fn list_classifiers(State(s): State<AppState>) -> ApiResult<Json<Vec<Classifier>>> {
    Ok(Json(s.store.classifiers()?))
}

async fn create_classifier(
    State(s): State<AppState>,
    Json(c): Json<Classifier>,
) -> ApiResult<(StatusCode, Json<Classifier>)> {
    check(&c, &s.schema)?;
    let created = s.store.create_classifier(c, Utc::now())?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_classifier(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Classifier>> {
    Ok(Json(s.store.classifier(&id)?))
}

async fn update_classifier(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(mut c): Json<Classifier>,
) -> ApiResult<Json<Classifier>> {
    c.id = id.clone();
    check(&c, &s.schema)?;
    Ok(Json(s.store.update_classifier(&id, c, Utc::now())?))
}

#[derive(Debug, Deserialize)]
struct DeleteQuery {
    #[serde(default)]
    force: bool,
}

async fn delete_classifier(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<DeleteQuery>,
) -> ApiResult<StatusCode> {
    s.store.delete_classifier(&id, q.force)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Default, Deserialize)]
struct CloneRequest {
    id: Option<String>,
    name: Option<String>,
}

async fn clone_classifier(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<CloneRequest>>,
) -> ApiResult<(StatusCode, Json<Classifier>)> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let source = s.store.classifier(&id)?;
    let new_id = req.id.unwrap_or_else(|| format!("copy-of-{id}"));
    let new_name = req.name.unwrap_or_else(|| format!("copy of {}", source.name));
    let copy = s.store.clone_classifier(&id, &new_id, &new_name, Utc::now())?;
    Ok((StatusCode::CREATED, Json(copy)))
}

async fn compiled_classifier(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let c = s.store.classifier(&id)?;
    let compiled = Compiled::new(&c, &s.schema)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], compiled.text).into_response())
}

#[derive(Debug, Deserialize)]
struct DatasetQuery {
    dataset: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

impl DatasetQuery {
    fn dataset(&self) -> &str {
        self.dataset.as_deref().unwrap_or(DEMO_DATASET)
    }
}

async fn run_classifier(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<DatasetQuery>,
) -> ApiResult<Response> {
    let dataset_id = q.dataset().to_string();
    blocking(move || {
        let c = s.store.classifier(&id)?;
        let d = s.store.dataset(&dataset_id)?;
        let run = Run::execute(&c, &s.schema, &d, Utc::now())?;
        let run = s.store.save_run(run)?;
        if run.failures.is_empty() {
            Ok((StatusCode::CREATED, Json(run)).into_response())
        } else {
            let body = json!({
                "error": format!("{} case(s) could not be scored", run.failures.len()),
                "run_id": run.run_id,
                "failures": run.failures,
            });
            Ok((StatusCode::INTERNAL_SERVER_ERROR, Json(body)).into_response())
        }
    })
    .await
}

async fn list_runs(State(s): State<AppState>) -> ApiResult<Response> {
    Ok(Json(s.store.runs()?).into_response())
}

/// The stored document, byte for byte.
async fn get_run(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let raw = s.store.raw(Kind::Run, &id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], raw).into_response())
}

async fn run_report(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(filter): Query<ReportFilter>,
) -> ApiResult<Html<String>> {
    let run = s.store.run(&id)?;
    Ok(Html(report::render(&run, &filter)))
}

async fn run_case(State(s): State<AppState>, Path((id, case)): Path<(String, i64)>) -> ApiResult<Response> {
    let run = s.store.run(&id)?;
    if let Some(f) = run.failures.iter().find(|f| f.case_id == case) {
        return Err(ApiError::Internal(f.to_string()));
    }
    let result = run
        .case(case)
        .ok_or_else(|| ApiError::NotFound(format!("case {case} is not in run `{id}`")))?;
    Ok(Json(result).into_response())
}

async fn list_datasets(State(s): State<AppState>) -> ApiResult<Response> {
    Ok(Json(s.store.datasets()?).into_response())
}

async fn get_dataset(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Dataset>> {
    Ok(Json(s.store.dataset(&id)?))
}

async fn create_dataset(
    State(s): State<AppState>,
    Json(d): Json<Dataset>,
) -> ApiResult<(StatusCode, Json<Dataset>)> {
    validate_records(&d.records, &s.schema).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok((StatusCode::CREATED, Json(s.store.create_dataset(d)?)))
}

#[derive(Debug, Deserialize)]
struct ImportQuery {
    name: Option<String>,
}

/// Creates a dataset from a CSV request body.
async fn import_csv(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ImportQuery>,
    body: String,
) -> ApiResult<(StatusCode, Json<Dataset>)> {
    let records = load_csv(&body, &s.schema).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let d = Dataset {
        name: q.name.unwrap_or_else(|| id.clone()),
        id,
        records,
    };
    Ok((StatusCode::CREATED, Json(s.store.create_dataset(d)?)))
}

#[derive(Debug, Serialize)]
struct TransplantPage {
    dataset: String,
    total: usize,
    offset: usize,
    records: Vec<crate::records::TransplantRecord>,
}

async fn list_transplants(State(s): State<AppState>, Query(q): Query<DatasetQuery>) -> ApiResult<Json<TransplantPage>> {
    let d = s.store.dataset(q.dataset())?;
    let mut records = d.records;
    records.sort_by_key(|r| r.case_id);
    let total = records.len();
    let offset = q.offset.unwrap_or(0).min(total);
    let limit = q.limit.unwrap_or(total);
    Ok(Json(TransplantPage {
        dataset: d.id,
        total,
        offset,
        records: records.into_iter().skip(offset).take(limit).collect(),
    }))
}

async fn get_transplant(
    State(s): State<AppState>,
    Path(case): Path<i64>,
    Query(q): Query<DatasetQuery>,
) -> ApiResult<Response> {
    let d = s.store.dataset(q.dataset())?;
    let r = d
        .record(case)
        .ok_or_else(|| ApiError::NotFound(format!("case {case} is not in dataset `{}`", d.id)))?;
    Ok(Json(r).into_response())
}

async fn apply_classifier(
    State(s): State<AppState>,
    Path((case, classifier)): Path<(i64, String)>,
    Query(q): Query<DatasetQuery>,
) -> ApiResult<Response> {
    let dataset_id = q.dataset().to_string();
    blocking(move || {
        let c = s.store.classifier(&classifier)?;
        let d = s.store.dataset(&dataset_id)?;
        let record = d
            .record(case)
            .ok_or_else(|| ApiError::NotFound(format!("case {case} is not in dataset `{}`", d.id)))?;
        let result = Compiled::new(&c, &s.schema)?
            .score(record)
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        Ok(Json(result).into_response())
    })
    .await
}
