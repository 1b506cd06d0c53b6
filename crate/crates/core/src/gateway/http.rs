//! HTTP API under `/v1`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::inference::Answer;
use crate::scenarios::{package_for, CriticalEvent, FieldError};

use super::{GatewayError, Service, TableKind};

impl GatewayError {
    pub fn status(&self) -> StatusCode {
        match self {
            GatewayError::UnknownPackage(_) | GatewayError::NotFound(_) => StatusCode::NOT_FOUND,
            GatewayError::Schema(_) | GatewayError::AnswerType { .. } | GatewayError::Scenario(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            GatewayError::NotAwaiting(_) | GatewayError::StaleQuestion { .. } | GatewayError::NotDone(_) => {
                StatusCode::CONFLICT
            }
            GatewayError::Csv(_)
            | GatewayError::BadRequest(_)
            | GatewayError::Diagnostics(_)
            | GatewayError::Prediction(_) => StatusCode::BAD_REQUEST,
            GatewayError::Journal(_) | GatewayError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        let mut body = json!({ "code": self.code(), "message": self.to_string() });
        if let GatewayError::Schema(fields) = &self {
            body["fields"] = json!(fields);
        }
        (self.status(), Json(json!({ "error": body }))).into_response()
    }
}

type ApiResult = Result<Response, GatewayError>;

fn ok(v: impl serde::Serialize) -> ApiResult {
    Ok(Json(v).into_response())
}

fn parse_body(body: &Bytes) -> Result<Value, GatewayError> {
    serde_json::from_slice(body).map_err(|e| GatewayError::BadRequest(format!("invalid JSON body: {e}")))
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/v1/packages", get(packages))
        .route("/v1/sessions", post(create_session).get(list_sessions))
        .route("/v1/sessions/{id}", get(session))
        .route("/v1/sessions/{id}/question", get(question))
        .route("/v1/sessions/{id}/answer", post(answer))
        .route("/v1/sessions/{id}/report", get(report))
        .route("/v1/sessions/{id}/trace", get(trace))
        .route("/v1/sessions/{id}/journal", get(journal))
        .route("/v1/data/tables", post(upload_table).get(list_tables))
        .with_state(service)
}

/// Serves until the process is stopped.
pub async fn serve(service: Arc<Service>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    axum::serve(listener, router(service)).await
}

async fn packages(State(svc): State<Arc<Service>>) -> ApiResult {
    ok(svc.packages())
}

async fn create_session(State(svc): State<Arc<Service>>, body: Bytes) -> ApiResult {
    let mut v = parse_body(&body)?;
    let Some(obj) = v.as_object_mut() else {
        return Err(GatewayError::BadRequest(
            "body must be an object with package and event".into(),
        ));
    };
    let event = obj.remove("event").ok_or_else(|| {
        GatewayError::Schema(vec![FieldError {
            field: "event".into(),
            message: "required".into(),
        }])
    })?;
    let package = match obj.get("package") {
        Some(Value::String(p)) => p.clone(),
        None | Some(Value::Null) => {
            // Pick the shipped package from the event itself.
            let e = CriticalEvent::from_value(event.clone())?;
            package_for(&e)?.to_string()
        }
        Some(_) => {
            return Err(GatewayError::Schema(vec![FieldError {
                field: "package".into(),
                message: "must be a string".into(),
            }]))
        }
    };
    let view = svc.create_session(&package, event)?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn list_sessions(State(svc): State<Arc<Service>>) -> ApiResult {
    let list: Vec<Value> = svc
        .session_ids()
        .into_iter()
        .filter_map(|id| svc.state(&id).ok().map(|s| json!({ "id": id, "state": s })))
        .collect();
    ok(list)
}

async fn session(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult {
    ok(svc.session(&id)?)
}

async fn question(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult {
    ok(svc.question(&id)?)
}

#[derive(Deserialize)]
struct AnswerBody {
    question_id: u64,
    answer: Answer,
}

async fn answer(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let v = parse_body(&body)?;
    let b: AnswerBody = serde_json::from_value(v)
        .map_err(|e| GatewayError::BadRequest(format!("expected {{question_id, answer}}: {e}")))?;
    ok(svc.answer(&id, b.question_id, b.answer)?)
}

async fn report(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult {
    ok(svc.report(&id)?)
}

async fn trace(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult {
    ok(svc.trace(&id)?)
}

async fn journal(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult {
    ok(svc.journal(&id)?)
}

#[derive(Deserialize)]
struct TableQuery {
    name: Option<String>,
    kind: Option<String>,
}

/// CSV body; table name and kind in the query string.
async fn upload_table(State(svc): State<Arc<Service>>, Query(q): Query<TableQuery>, body: Bytes) -> ApiResult {
    let (Some(name), Some(kind)) = (q.name, q.kind) else {
        return Err(GatewayError::BadRequest(
            "query parameters name and kind are required".into(),
        ));
    };
    let kind = TableKind::parse(&kind).ok_or_else(|| {
        GatewayError::BadRequest(format!(
            "unknown table kind {kind:?}; expected experience, time_series or decision"
        ))
    })?;
    let text = std::str::from_utf8(&body).map_err(|e| GatewayError::Csv(e.to_string()))?;
    let info = svc.upload_table(&name, kind, text)?;
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn list_tables(State(svc): State<Arc<Service>>) -> ApiResult {
    ok(svc.tables())
}
