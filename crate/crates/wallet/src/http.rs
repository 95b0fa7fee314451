//! HTTP front end for [`WalletService`].

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::sync::oneshot;
use tower_http::services::ServeDir;

use crate::api::*;
use crate::error::{ErrorCode, ServiceError, ServiceResult};
use crate::service::WalletService;

type Svc = Arc<WalletService>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = ErrorBody {
            code: self.code.as_str().into(),
            message: self.message,
        };
        (status, Json(body)).into_response()
    }
}

/// Runs blocking service work (key derivation is CPU bound) off the async
/// workers.
async fn blocking<T, F>(svc: Svc, f: F) -> ServiceResult<T>
where
    F: FnOnce(&WalletService) -> ServiceResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ServiceError::new(ErrorCode::Internal, e.to_string()))?
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ServiceResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::invalid(e.body_text()))
}

fn bearer(headers: &HeaderMap) -> ServiceResult<String> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .ok_or_else(ServiceError::session_required)
}

async fn signup(State(svc): State<Svc>, req: Result<Json<SignupRequest>, JsonRejection>) -> ServiceResult<(StatusCode, Json<SignupResponse>)> {
    let req = body(req)?;
    let out = blocking(svc, move |s| s.signup(req)).await?;
    Ok((StatusCode::CREATED, Json(out)))
}

async fn login(State(svc): State<Svc>, req: Result<Json<LoginRequest>, JsonRejection>) -> ServiceResult<(StatusCode, Json<SessionInfo>)> {
    let req = body(req)?;
    let out = blocking(svc, move |s| s.login(req)).await?;
    Ok((StatusCode::CREATED, Json(out)))
}

async fn session_info(State(svc): State<Svc>, UrlPath(id): UrlPath<String>) -> ServiceResult<Json<SessionInfo>> {
    blocking(svc, move |s| s.session_info(&id)).await.map(Json)
}

async fn logout(State(svc): State<Svc>, UrlPath(id): UrlPath<String>) -> ServiceResult<StatusCode> {
    blocking(svc, move |s| s.logout(&id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn recover(
    State(svc): State<Svc>,
    UrlPath((addr, factor)): UrlPath<(String, String)>,
    headers: HeaderMap,
    req: Result<Json<FactorSpecInput>, JsonRejection>,
) -> ServiceResult<Json<RecoverResponse>> {
    let session = bearer(&headers)?;
    let req = body(req)?;
    blocking(svc, move |s| s.recover_factor(&session, &addr, &factor, req))
        .await
        .map(Json)
}

async fn balance(State(svc): State<Svc>, UrlPath(addr): UrlPath<String>) -> ServiceResult<Json<BalanceResponse>> {
    blocking(svc, move |s| s.balance(&addr)).await.map(Json)
}

async fn transfer(
    State(svc): State<Svc>,
    UrlPath(addr): UrlPath<String>,
    headers: HeaderMap,
    req: Result<Json<TransferRequest>, JsonRejection>,
) -> ServiceResult<Json<TransferResponse>> {
    let session = bearer(&headers)?;
    let req = body(req)?;
    blocking(svc, move |s| s.send(&session, &addr, req)).await.map(Json)
}

async fn policy(State(svc): State<Svc>, UrlPath(key): UrlPath<String>) -> ServiceResult<Response> {
    let bytes = blocking(svc, move |s| s.policy(&key)).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn inbox(State(svc): State<Svc>, UrlPath(email): UrlPath<String>) -> ServiceResult<Json<InboxResponse>> {
    blocking(svc, move |s| s.dev_inbox(&email)).await.map(Json)
}

async fn faucet(State(svc): State<Svc>, req: Result<Json<FaucetRequest>, JsonRejection>) -> ServiceResult<Json<BalanceResponse>> {
    let req = body(req)?;
    blocking(svc, move |s| s.faucet(req)).await.map(Json)
}

async fn health(State(svc): State<Svc>) -> Json<HealthResponse> {
    Json(svc.health())
}

async fn no_route() -> ServiceError {
    ServiceError::not_found("no such route")
}

pub fn router(svc: Svc, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/accounts", post(signup))
        .route("/sessions", post(login))
        .route("/sessions/{id}", get(session_info).delete(logout))
        .route("/wallets/{addr}/factors/{id}", post(recover))
        .route("/wallets/{addr}/balance", get(balance))
        .route("/wallets/{addr}/transfers", post(transfer))
        .route("/policies/{key}", get(policy))
        .route("/dev/inbox/{email}", get(inbox))
        .route("/dev/faucet", post(faucet))
        .route("/healthz", get(health));
    let api = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(no_route),
    };
    api.with_state(svc)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// A server running on its own thread and runtime; stops on drop.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `bind` (port 0 picks a free one) and serves in the background.
pub fn spawn(svc: Svc, bind: &str, static_dir: Option<&Path>) -> std::io::Result<ServerHandle> {
    let std_listener = std::net::TcpListener::bind(bind)?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let app = router(svc, static_dir);
    let (stop, stopped) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name(format!("wallet-http-{addr}"))
        .spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .expect("tokio runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
                if let Err(e) = serve(listener, app, async {
                    let _ = stopped.await;
                })
                .await
                {
                    log::error!("server on {addr} failed: {e}");
                }
            });
        })?;
    Ok(ServerHandle {
        addr,
        stop: Some(stop),
        thread: Some(thread),
    })
}
