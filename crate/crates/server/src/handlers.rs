use std::collections::{BTreeMap, HashMap};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use qtrack_core::{now_millis, validate_experiment_name, validate_key, MetricPoint, Provenance, Run, RunStatus};
use qtrack_query::{search_runs, OrderBySpec};
use qtrack_storage::{RunGuard, Store, StoreError, DEFAULT_MAX_RESULTS};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::AppState;

type ApiResult<T> = Result<T, ApiError>;

/// Run `f` against the store on the blocking pool.
async fn with_store<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Store) -> ApiResult<T> + Send + 'static,
{
    let store = state.store.clone();
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ApiError::new(crate::ErrorCode::Internal, format!("worker failed: {e}")))?
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(format!("malformed request body: {e}")))
}

fn require_running(run: &Run) -> Result<(), StoreError> {
    if run.status.is_terminal() {
        Err(StoreError::InvalidState(format!("run {} is {}", run.run_id, run.status)))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateExperiment {
    pub name: String,
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
}

pub async fn create_experiment(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: CreateExperiment = parse_body(&body)?;
    validate_experiment_name(&req.name).map_err(StoreError::from)?;
    let exp = with_store(&state, move |s| Ok(s.create_experiment(&req.name, req.tags)?)).await?;
    Ok((StatusCode::CREATED, Json(exp)).into_response())
}

pub async fn get_experiments(
    State(state): State<AppState>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    with_store(&state, move |s| match query.get("name") {
        Some(name) => Ok(Json(s.get_experiment_by_name(name)?).into_response()),
        None => Ok(Json(json!({ "experiments": s.list_experiments() })).into_response()),
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateRun {
    pub experiment_id: String,
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
}

pub async fn create_run(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: CreateRun = parse_body(&body)?;
    let run = with_store(&state, move |s| Ok(s.create_run(&req.experiment_id, req.tags, now_millis())?)).await?;
    Ok((StatusCode::CREATED, Json(run)).into_response())
}

pub async fn get_run(State(state): State<AppState>, Path(run_id): Path<String>) -> ApiResult<Json<Run>> {
    with_store(&state, move |s| Ok(Json(s.get_run(&run_id)?))).await
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct UpdateRun {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<RunStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_time: Option<i64>,
}

pub async fn update_run(
    State(state): State<AppState>,
    Path(run_id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Run>> {
    let req: UpdateRun = parse_body(&body)?;
    let now = now_millis();
    with_store(&state, move |s| {
        let (_, run) = s.update_run(&run_id, |run| {
            match req.status {
                Some(next) => {
                    if !run.status.can_transition_to(next) {
                        return Err(StoreError::InvalidState(format!(
                            "illegal transition {} → {next}",
                            run.status
                        )));
                    }
                    let end = req.end_time.unwrap_or_else(|| now.max(run.start_time));
                    if end < run.start_time {
                        return Err(invalid("end_time", "end_time ≥ start_time"));
                    }
                    run.status = next;
                    run.end_time = Some(end);
                }
                None if req.end_time.is_some() => {
                    require_running(run)?;
                    return Err(invalid("end_time", "end_time requires a terminal status"));
                }
                None => {}
            }
            Ok(())
        })?;
        Ok(Json(run))
    })
    .await
}

fn invalid(field: &str, rule: &str) -> StoreError {
    StoreError::Invalid(qtrack_core::Violations(vec![qtrack_core::Violation::new(field, rule)]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetKeyValue {
    pub key: String,
    pub value: String,
}

pub async fn log_param(
    State(state): State<AppState>,
    Path(run_id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let req: SetKeyValue = parse_body(&body)?;
    validate_key("key", &req.key).map_err(StoreError::from)?;
    with_store(&state, move |s| {
        s.update_run(&run_id, |run| {
            require_running(run)?;
            run.set_param(&req.key, &req.value)?;
            Ok(())
        })?;
        Ok(Json(json!({})))
    })
    .await
}

pub async fn set_tag(
    State(state): State<AppState>,
    Path(run_id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let req: SetKeyValue = parse_body(&body)?;
    validate_key("key", &req.key).map_err(StoreError::from)?;
    with_store(&state, move |s| {
        s.update_run(&run_id, |run| {
            require_running(run)?;
            run.tags.insert(req.key, req.value);
            Ok(())
        })?;
        Ok(Json(json!({})))
    })
    .await
}

/// Metric value on the wire: a JSON number, or a string such as `"NaN"` so
/// non-finite values can be sent (and rejected) explicitly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogMetric {
    pub key: String,
    pub value: Value,
    pub timestamp: i64,
    #[serde(default)]
    pub step: i64,
}

impl LogMetric {
    fn into_point(self) -> ApiResult<MetricPoint> {
        let value = match &self.value {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => s.trim().parse::<f64>().ok(),
            _ => None,
        }
        .ok_or_else(|| ApiError::invalid("metric value must be a number"))?;
        MetricPoint::new(self.key, value, self.timestamp, self.step)
            .map_err(|v| ApiError::from(StoreError::Invalid(v)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogMetricBatch {
    pub points: Vec<LogMetric>,
}

pub async fn log_metric(
    State(state): State<AppState>,
    Path(run_id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let point = parse_body::<LogMetric>(&body)?.into_point()?;
    with_store(&state, move |s| {
        s.append_metrics(&run_id, &[point], RunGuard::RunningOnly)?;
        Ok(Json(json!({})))
    })
    .await
}

pub async fn log_metric_batch(
    State(state): State<AppState>,
    Path(run_id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let req: LogMetricBatch = parse_body(&body)?;
    let points = req
        .points
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.into_point().map_err(|e| ApiError::invalid(format!("points[{i}]: {}", e.message))))
        .collect::<ApiResult<Vec<_>>>()?;
    with_store(&state, move |s| {
        s.append_metrics(&run_id, &points, RunGuard::RunningOnly)?;
        Ok(Json(json!({})))
    })
    .await
}

pub async fn log_provenance(
    State(state): State<AppState>,
    Path(run_id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Run>> {
    let update: Provenance = parse_body(&body)?;
    if update.is_empty() {
        return Err(ApiError::invalid(
            "provenance body needs at least one of circuit, compilation, calibration, execution",
        ));
    }
    update
        .validate()
        .map_err(|v| ApiError::invalid(format!("provenance violations: {v}")))?;
    with_store(&state, move |s| {
        let (_, run) = s.update_run(&run_id, |run| {
            require_running(run)?;
            run.provenance.merge(update);
            Ok(())
        })?;
        Ok(Json(run))
    })
    .await
}

pub async fn put_artifact(
    State(state): State<AppState>,
    Path((run_id, path)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let media_type = headers
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("application/octet-stream")
        .to_string();
    let r = with_store(&state, move |s| {
        Ok(s.put_artifact_guarded(&run_id, &path, &body, &media_type, RunGuard::RunningOnly)?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(r)).into_response())
}

pub async fn get_artifact(
    State(state): State<AppState>,
    Path((run_id, path)): Path<(String, String)>,
) -> ApiResult<Response> {
    let (bytes, r) = with_store(&state, move |s| Ok(s.get_artifact(&run_id, &path)?)).await?;
    Ok(([(CONTENT_TYPE, r.media_type)], bytes).into_response())
}

pub async fn list_artifacts(State(state): State<AppState>, Path(run_id): Path<String>) -> ApiResult<Json<Value>> {
    with_store(&state, move |s| Ok(Json(json!({ "artifacts": s.list_artifacts(&run_id)? })))).await
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SearchRequest {
    pub experiment_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_by: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_results: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_token: Option<String>,
}

pub async fn search(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: SearchRequest = parse_body(&body)?;
    if req.experiment_ids.is_empty() {
        return Err(ApiError::invalid("experiment_ids must not be empty"));
    }
    let order = OrderBySpec::parse(req.order_by.as_deref().unwrap_or_default())
        .map_err(|e| ApiError::invalid(format!("order_by: {e}")))?;
    with_store(&state, move |s| {
        let page = search_runs(
            s,
            &req.experiment_ids,
            req.filter.as_deref().unwrap_or(""),
            &order,
            req.max_results.unwrap_or(DEFAULT_MAX_RESULTS),
            req.page_token.as_deref(),
        )?;
        Ok(Json(page).into_response())
    })
    .await
}
