//! Stateless JSON service under `/v1`.

use axum::body::Bytes;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::commands::{self, StressParams};
use crate::patchfile::{ErrorKind, PatchError, PatchFile};
use crate::render::{render_svg, DEFAULT_ISO_LINES};

/// Upper bounds that keep a single request from monopolizing the service.
pub const MAX_TRIALS: usize = 1000;
pub const MAX_GRID: usize = 1024;
pub const MAX_EVAL_POINTS: usize = 1_000_000;

pub fn router() -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/check", post(check))
        .route("/v1/eval", post(eval))
        .route("/v1/render", post(render))
        .route("/v1/stress", post(stress))
}

pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

struct ApiError(PatchError);

impl From<PatchError> for ApiError {
    fn from(e: PatchError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0.kind {
            ErrorKind::InvalidBody => StatusCode::BAD_REQUEST,
            ErrorKind::Domain => StatusCode::UNPROCESSABLE_ENTITY,
        };
        (
            status,
            Json(json!({ "error": self.0.code, "message": self.0.message })),
        )
            .into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| PatchError::invalid("invalid_body", e.to_string()).into())
}

/// CPU-bound handlers run off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, PatchError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| PatchError::domain("internal", e.to_string()))?
        .map_err(ApiError)
}

async fn health() -> impl IntoResponse {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

#[derive(Deserialize)]
struct CheckRequest {
    #[serde(flatten)]
    patch: PatchFile,
    #[serde(default)]
    exact: bool,
}

async fn check(body: Bytes) -> Result<Response, ApiError> {
    let req: CheckRequest = parse(&body)?;
    let report = blocking(move || commands::check(&req.patch.validate()?, req.exact)).await?;
    Ok(Json(report).into_response())
}

#[derive(Deserialize)]
struct EvalRequest {
    #[serde(flatten)]
    patch: PatchFile,
    points: Vec<[f64; 2]>,
}

/// Images of the points, `[x, y]` or `[x, y, z]`. Any point outside the
/// domain rejects the request.
async fn eval(body: Bytes) -> Result<Response, ApiError> {
    let req: EvalRequest = parse(&body)?;
    if req.points.len() > MAX_EVAL_POINTS {
        return Err(PatchError::domain(
            "too_many_points",
            format!("at most {MAX_EVAL_POINTS} points"),
        )
        .into());
    }
    let images = blocking(move || {
        let patch = req.patch.validate()?;
        let spec = patch.spec()?;
        let (rows, skipped) = commands::eval_points(&spec, &req.points)?;
        if skipped > 0 {
            return Err(PatchError::domain(
                "outside_domain",
                format!(
                    "{skipped} of {} points lie outside the patch domain",
                    req.points.len()
                ),
            ));
        }
        Ok(rows
            .into_iter()
            .map(|(_, f)| f[..patch.dim()].to_vec())
            .collect::<Vec<_>>())
    })
    .await?;
    Ok(Json(images).into_response())
}

#[derive(Deserialize)]
struct RenderRequest {
    #[serde(flatten)]
    patch: PatchFile,
    grid: Option<usize>,
}

async fn render(body: Bytes) -> Result<Response, ApiError> {
    let req: RenderRequest = parse(&body)?;
    let grid = req.grid.unwrap_or(DEFAULT_ISO_LINES);
    if grid > MAX_GRID {
        return Err(PatchError::domain(
            "invalid_parameter",
            format!("grid must be at most {MAX_GRID}"),
        )
        .into());
    }
    let svg = blocking(move || render_svg(&req.patch.validate()?.spec()?, grid)).await?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

#[derive(Deserialize)]
struct StressRequest {
    #[serde(flatten)]
    patch: PatchFile,
    #[serde(flatten)]
    params: StressParams,
}

/// The summary lists any disagreement; the response is 200 either way.
async fn stress(body: Bytes) -> Result<Response, ApiError> {
    let req: StressRequest = parse(&body)?;
    let params = req.params;
    if params.trials > MAX_TRIALS || params.grid > MAX_GRID {
        return Err(PatchError::domain(
            "invalid_parameter",
            format!("trials must be at most {MAX_TRIALS} and grid at most {MAX_GRID}"),
        )
        .into());
    }
    let outcome = blocking(move || commands::stress(&req.patch.validate()?, params)).await?;
    Ok(Json(outcome.summary()).into_response())
}
