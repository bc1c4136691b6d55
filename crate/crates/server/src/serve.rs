use std::convert::Infallible;
use std::future::Future;
use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use bytes::Bytes;
use futures_util::{future, StreamExt, TryStreamExt};
use http_body_util::combinators::BoxBody;
use http_body_util::{BodyExt, BodyStream, Full, Limited, StreamBody};
use hyper::body::{Frame, Incoming};
use hyper::header::{CONTENT_DISPOSITION, CONTENT_LENGTH, CONTENT_TYPE};
use hyper::{Method, Response, StatusCode};
use hyper_util::rt::TokioIo;
use hyper_util::server::graceful::GracefulShutdown;
use rustls::ProtocolVersion;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio_rustls::TlsAcceptor;
use tokio_util::io::{ReaderStream, StreamReader, SyncIoBridge};

use crate::api::{self, ApiError, Body, Connection, Reply, Request};
use crate::config::ServerConfig;
use crate::state::AppState;
use crate::tls;

/// Header carrying the SHA-256 of a downloaded file.
pub const SHA256_HEADER: &str = "x-sfs-sha256";
/// Largest JSON request body accepted.
pub const MAX_JSON_BODY: usize = 1024 * 1024;
const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);
const DRAIN_TIMEOUT: Duration = Duration::from_secs(30);

type ResBody = BoxBody<Bytes, io::Error>;

pub struct Server {
    state: Arc<AppState>,
    acceptor: TlsAcceptor,
    listener: TcpListener,
}

impl Server {
    pub async fn bind(cfg: &ServerConfig) -> anyhow::Result<Self> {
        let listener = TcpListener::bind(cfg.listen).await?;
        Self::with_listener(cfg, listener)
    }

    fn with_listener(cfg: &ServerConfig, listener: TcpListener) -> anyhow::Result<Self> {
        let tls = tls::server_config_from_files(&cfg.ca_cert, &cfg.server_cert, &cfg.server_key)?;
        let state = Arc::new(AppState::open(cfg)?);
        Ok(Server { state, acceptor: TlsAcceptor::from(tls), listener })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn state(&self) -> Arc<AppState> {
        self.state.clone()
    }

    /// Accept connections until `shutdown` resolves, then stop accepting and
    /// let in-flight requests finish.
    pub async fn run(self, shutdown: impl Future<Output = ()>) -> anyhow::Result<()> {
        let graceful = GracefulShutdown::new();
        tokio::pin!(shutdown);
        loop {
            tokio::select! {
                accepted = self.listener.accept() => {
                    let (tcp, peer) = match accepted {
                        Ok(a) => a,
                        Err(e) => {
                            tracing::warn!("accept failed: {e}");
                            continue;
                        }
                    };
                    let acceptor = self.acceptor.clone();
                    let state = self.state.clone();
                    let watcher = graceful.watcher();
                    tokio::spawn(async move {
                        let tls = match tokio::time::timeout(HANDSHAKE_TIMEOUT, acceptor.accept(tcp)).await {
                            Ok(Ok(s)) => s,
                            Ok(Err(e)) => {
                                tracing::info!(%peer, "handshake rejected: {e}");
                                return;
                            }
                            Err(_) => {
                                tracing::info!(%peer, "handshake timed out");
                                return;
                            }
                        };
                        let session = tls.get_ref().1;
                        let Some(peer_der) = session.peer_certificates().and_then(|c| c.first()) else {
                            // the verifier requires a certificate; this is unreachable in practice
                            return;
                        };
                        let conn = Arc::new(Connection {
                            peer_der: peer_der.to_vec(),
                            tls_version: version_name(session.protocol_version()),
                        });
                        let service = hyper::service::service_fn(move |req| {
                            respond(state.clone(), conn.clone(), req)
                        });
                        let http = hyper::server::conn::http1::Builder::new()
                            .serve_connection(TokioIo::new(tls), service);
                        if let Err(e) = watcher.watch(http).await {
                            tracing::debug!(%peer, "connection closed: {e}");
                        }
                    });
                }
                _ = &mut shutdown => break,
            }
        }
        drop(self.listener);
        if tokio::time::timeout(DRAIN_TIMEOUT, graceful.shutdown()).await.is_err() {
            tracing::warn!("connections still open after {DRAIN_TIMEOUT:?}");
        }
        Ok(())
    }
}

fn version_name(v: Option<ProtocolVersion>) -> String {
    match v {
        Some(ProtocolVersion::TLSv1_3) => "TLSv1.3".into(),
        Some(ProtocolVersion::TLSv1_2) => "TLSv1.2".into(),
        Some(other) => format!("{other:?}"),
        None => "unknown".into(),
    }
}

async fn respond(
    state: Arc<AppState>,
    conn: Arc<Connection>,
    req: hyper::Request<Incoming>,
) -> Result<Response<ResBody>, Infallible> {
    let (parts, incoming) = req.into_parts();
    let declared_len =
        parts.headers.get(CONTENT_LENGTH).and_then(|v| v.to_str().ok()).and_then(|v| v.parse::<u64>().ok());
    let is_upload = parts.method == Method::PUT && parts.uri.path().starts_with("/v1/files/");
    let body = if is_upload {
        let frames = BodyStream::new(incoming)
            .try_filter_map(|frame| future::ready(Ok(frame.into_data().ok())))
            .map_err(io::Error::other);
        Body::Stream { reader: Box::new(SyncIoBridge::new(StreamReader::new(frames))), declared_len }
    } else {
        match Limited::new(incoming, MAX_JSON_BODY).collect().await {
            Ok(b) => Body::Bytes(b.to_bytes().to_vec()),
            Err(e) => Body::Rejected(ApiError::new(
                StatusCode::PAYLOAD_TOO_LARGE,
                "TOO_LARGE",
                format!("request body rejected: {e}"),
            )),
        }
    };
    let request = Request {
        method: parts.method,
        path: parts.uri.path().to_string(),
        query: parts.uri.query().map(str::to_string),
        body,
    };
    let reply = tokio::task::spawn_blocking(move || api::handle(&state, &conn, request)).await.unwrap_or_else(|e| {
        tracing::error!("handler panicked: {e}");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", "internal error").into()
    });
    Ok(into_response(reply))
}

fn full(bytes: impl Into<Bytes>) -> ResBody {
    Full::new(bytes.into()).map_err(|never| match never {}).boxed()
}

fn stream(file: std::fs::File) -> ResBody {
    let frames = ReaderStream::new(tokio::fs::File::from_std(file)).map(|r| r.map(Frame::data));
    BodyExt::boxed(StreamBody::new(frames))
}

fn into_response(reply: Reply) -> Response<ResBody> {
    let status = reply.status();
    let builder = Response::builder().status(status);
    let res = match reply {
        Reply::Json(..) | Reply::Error(_) => {
            let body = serde_json::to_vec(&reply.json_body().expect("json reply")).expect("serializable");
            builder.header(CONTENT_TYPE, "application/json").body(full(body))
        }
        Reply::Download(record, file) => builder
            .header(CONTENT_TYPE, "application/octet-stream")
            .header(CONTENT_LENGTH, record.size_bytes)
            .header(SHA256_HEADER, &record.sha256)
            .header("x-sfs-version", record.version)
            .body(stream(file)),
        Reply::Attachment { file, len, content_type, filename } => builder
            .header(CONTENT_TYPE, content_type)
            .header(CONTENT_LENGTH, len)
            .header(CONTENT_DISPOSITION, format!("attachment; filename=\"{filename}\""))
            .body(stream(file)),
        Reply::Bytes { bytes, content_type, filename } => builder
            .header(CONTENT_TYPE, content_type)
            .header(CONTENT_DISPOSITION, format!("attachment; filename=\"{filename}\""))
            .body(full(bytes)),
    };
    res.expect("valid response parts")
}

/// A server running on its own thread and runtime, stopped on drop.
pub struct RunningServer {
    addr: SocketAddr,
    state: Arc<AppState>,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<anyhow::Result<()>>>,
}

impl RunningServer {
    /// Bind `cfg.listen` (port 0 picks a free port) and start serving.
    pub fn spawn(cfg: &ServerConfig) -> anyhow::Result<Self> {
        let std_listener = std::net::TcpListener::bind(cfg.listen)?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build()?;
        let server = {
            let _enter = rt.enter();
            Server::with_listener(cfg, TcpListener::from_std(std_listener)?)?
        };
        let state = server.state();
        let (tx, rx) = oneshot::channel();
        let thread = std::thread::Builder::new().name("sfs-server".into()).spawn(move || {
            rt.block_on(server.run(async {
                let _ = rx.await;
            }))
        })?;
        Ok(RunningServer { addr, state, stop: Some(tx), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }

    /// Stop accepting, drain and wait for the server thread.
    pub fn shutdown(mut self) -> anyhow::Result<()> {
        self.stop_inner()
    }

    fn stop_inner(&mut self) -> anyhow::Result<()> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().map_err(|_| anyhow::anyhow!("server thread panicked"))?,
            None => Ok(()),
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        let _ = self.stop_inner();
    }
}
