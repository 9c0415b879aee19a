//! Local HTTP service. Every endpoint takes and returns JSON; requests are
//! independent pure computations.

use std::collections::BTreeMap;
use std::net::SocketAddr;

use axum::body::Bytes;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use qmut::document::{DedupDocument, LimitsDocument, PredicateDocument, QuiverDocument, ReportDocument};
use qmut::gadgets::{build_subset_sum_gadget, build_x3c_gadget, X3CInstance};
use qmut::{canonical_form, explore, MutationSequence, Quiver};

use crate::summary::summarize;
use crate::Failure;

pub const MAX_STATES_CAP: u64 = 200_000;
pub const MAX_STEPS_CAP: usize = 500;
pub const MAX_VERTICES_CAP: usize = 30;

#[derive(Debug)]
pub enum ApiError {
    /// 400 with the domain error code.
    Bad(Failure),
    /// 422: the request exceeds a service cap.
    Cap(String),
}

impl From<Failure> for ApiError {
    fn from(f: Failure) -> Self {
        ApiError::Bad(f)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            ApiError::Bad(f) => (StatusCode::BAD_REQUEST, f.code, f.message),
            ApiError::Cap(m) => (StatusCode::UNPROCESSABLE_ENTITY, "CapExceeded".to_string(), m),
        };
        (status, Json(json!({ "error": { "code": code, "message": message } }))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

/// Typed bodies keep document fields in their fixed order.
fn ok<T: Serialize>(body: T) -> ApiResult {
    Ok(Json(body).into_response())
}

#[derive(Serialize)]
struct QuiverResponse {
    quiver: QuiverDocument,
}

#[derive(Serialize)]
struct CanonicalResponse {
    key_hex: String,
    positions: BTreeMap<String, usize>,
}

fn quiver_response(q: &Quiver) -> ApiResult {
    ok(QuiverResponse { quiver: QuiverDocument::from_quiver(q) })
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::Bad(Failure::new("ParseError", format!("line {}, column {}: {e}", e.line(), e.column())))
    })
}

fn quiver(doc: &QuiverDocument) -> Result<Quiver, ApiError> {
    if doc.vertices.len() > MAX_VERTICES_CAP {
        return Err(ApiError::Cap(format!(
            "{} vertices exceeds the service cap of {MAX_VERTICES_CAP}",
            doc.vertices.len()
        )));
    }
    Ok(doc.to_quiver().map_err(Failure::from)?)
}

fn steps_cap(steps: usize) -> Result<(), ApiError> {
    if steps > MAX_STEPS_CAP {
        return Err(ApiError::Cap(format!("{steps} steps exceeds the service cap of {MAX_STEPS_CAP}")));
    }
    Ok(())
}

/// Runs a CPU-bound handler off the async workers.
async fn blocking<F>(body: Bytes, f: F) -> Response
where
    F: FnOnce(&[u8]) -> ApiResult + Send + 'static,
{
    match tokio::task::spawn_blocking(move || f(&body)).await {
        Ok(Ok(response)) => response,
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::Bad(Failure::new("Internal", e.to_string())).into_response(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MutateRequest {
    quiver: QuiverDocument,
    vertex: String,
}

fn mutate(body: &[u8]) -> ApiResult {
    let req: MutateRequest = parse(body)?;
    let q = quiver(&req.quiver)?.mutate(&req.vertex).map_err(Failure::from)?;
    quiver_response(&q)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MutateSeqRequest {
    quiver: QuiverDocument,
    steps: Vec<String>,
}

fn mutate_seq(body: &[u8]) -> ApiResult {
    let req: MutateSeqRequest = parse(body)?;
    steps_cap(req.steps.len())?;
    let q = quiver(&req.quiver)?;
    let seq = MutationSequence::from_names(&req.steps).map_err(Failure::from)?;
    let q = q.mutate_seq(&seq).map_err(Failure::from)?;
    quiver_response(&q)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuiverRequest {
    quiver: QuiverDocument,
}

fn canonical(body: &[u8]) -> ApiResult {
    let req: QuiverRequest = parse(body)?;
    let q = quiver(&req.quiver)?;
    let form = canonical_form(&q);
    let positions = form.positions(&q).into_iter().map(|(id, p)| (id.to_string(), p)).collect();
    ok(CanonicalResponse { key_hex: form.key.to_hex(), positions })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExploreRequest {
    quiver: QuiverDocument,
    predicate: PredicateDocument,
    #[serde(default)]
    limits: LimitsDocument,
    #[serde(default = "default_dedup")]
    dedup: DedupDocument,
}

fn default_dedup() -> DedupDocument {
    DedupDocument::Labeled
}

fn explore_handler(body: &[u8]) -> ApiResult {
    let req: ExploreRequest = parse(body)?;
    let q = quiver(&req.quiver)?;
    let mut limits_doc = req.limits;
    match limits_doc.max_states {
        Some(m) if m > MAX_STATES_CAP => {
            return Err(ApiError::Cap(format!("max_states {m} exceeds the service cap of {MAX_STATES_CAP}")))
        }
        Some(_) => {}
        None => limits_doc.max_states = Some(MAX_STATES_CAP),
    }
    let limits = limits_doc.to_limits().map_err(Failure::from)?;
    let predicate = req.predicate.to_predicate().map_err(Failure::from)?;
    predicate.check_against(&q).map_err(Failure::from)?;
    let report = explore(&q, &predicate, &limits, req.dedup.into());
    ok(ReportDocument::from(&report))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsetSumRequest {
    values: Vec<u64>,
}

fn subset_sum(body: &[u8]) -> ApiResult {
    let req: SubsetSumRequest = parse(body)?;
    if req.values.len() + 2 > MAX_VERTICES_CAP {
        return Err(ApiError::Cap(format!("{} values exceed the service cap of {MAX_VERTICES_CAP} vertices", req.values.len())));
    }
    let q = build_subset_sum_gadget(&req.values).map_err(Failure::from)?;
    quiver_response(&q)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct X3CRequest {
    n: usize,
    triples: Vec<Vec<usize>>,
}

fn x3c(body: &[u8]) -> ApiResult {
    let req: X3CRequest = parse(body)?;
    let vertices = req.n.saturating_add(req.triples.len()).saturating_add(1);
    if vertices > MAX_VERTICES_CAP {
        return Err(ApiError::Cap(format!("the gadget would have {vertices} vertices, over the cap of {MAX_VERTICES_CAP}")));
    }
    let triples = req
        .triples
        .iter()
        .enumerate()
        .map(|(i, t)| {
            <[usize; 3]>::try_from(t.as_slice())
                .map_err(|_| Failure::new("InvalidInstance", format!("triples[{i}] must have three elements")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let inst = X3CInstance::new(req.n, triples).map_err(Failure::from)?;
    let q = build_x3c_gadget(&inst).map_err(Failure::from)?;
    quiver_response(&q)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DynamicsRequest {
    quiver: QuiverDocument,
    c: String,
    d: String,
    steps: usize,
    #[serde(default)]
    ratio_vertex: Option<String>,
    #[serde(default)]
    tol: Option<f64>,
}

fn dynamics(body: &[u8]) -> ApiResult {
    let req: DynamicsRequest = parse(body)?;
    steps_cap(req.steps)?;
    let q = quiver(&req.quiver)?;
    let (_, summary) = summarize(&q, &req.c, &req.d, req.steps, req.ratio_vertex.as_deref(), req.tol.unwrap_or(1e-9))?;
    ok(summary)
}

pub fn router() -> Router {
    Router::new()
        .route("/api/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/api/mutate", post(|body: Bytes| blocking(body, mutate)))
        .route("/api/mutate-seq", post(|body: Bytes| blocking(body, mutate_seq)))
        .route("/api/canonical", post(|body: Bytes| blocking(body, canonical)))
        .route("/api/explore", post(|body: Bytes| blocking(body, explore_handler)))
        .route("/api/gadget/subset-sum", post(|body: Bytes| blocking(body, subset_sum)))
        .route("/api/gadget/x3c", post(|body: Bytes| blocking(body, x3c)))
        .route("/api/dynamics", post(|body: Bytes| blocking(body, dynamics)))
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(addr: SocketAddr) -> Result<(), Failure> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| {
        if e.kind() == std::io::ErrorKind::AddrInUse {
            Failure::new("PortInUse", format!("port {} is already in use", addr.port()))
        } else {
            Failure::from(e)
        }
    })?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router()).await?;
    Ok(())
}
