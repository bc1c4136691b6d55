//! Request routing, dispatch and the one-event-per-request audit rule.

pub(crate) mod admin;
mod files;

use std::fs::File;
use std::io::Read;

use hyper::{Method, StatusCode};
use percent_encoding::percent_decode_str;
use serde::Serialize;
use serde_json::{json, Value};
use sfs_core::acl::AclError;
use sfs_core::directory::DirectoryError;
use sfs_core::pki::PkiError;
use sfs_core::store::{NewAuditEvent, StoreError, ANONYMOUS};
use sfs_core::{AuditAction, AuditOutcome, FileRecord, Principal, Role, Scope};
use time::OffsetDateTime;

use crate::state::AppState;

/// An error response: HTTP status, machine code, human message.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "MALFORMED_REQUEST", message)
    }

    fn forbidden(reason: &'static str) -> Self {
        Self::new(StatusCode::FORBIDDEN, "FORBIDDEN", reason)
    }

    fn body(&self) -> Value {
        json!({ "error": self.code, "reason": self.message })
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NameInvalid(_) | StoreError::InvalidVocabulary(_) => StatusCode::BAD_REQUEST,
            StoreError::TooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::Conflict(_) => StatusCode::CONFLICT,
            StoreError::Directory(d) => return ApiError::from_directory(d),
            StoreError::Acl(a) => return ApiError::from(a.clone()),
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl ApiError {
    fn from_directory(e: &DirectoryError) -> Self {
        let (status, code) = match e {
            DirectoryError::DuplicateDn(_) => (StatusCode::CONFLICT, "DUPLICATE"),
            DirectoryError::NoSuchEntry(_) | DirectoryError::NotFound => (StatusCode::NOT_FOUND, "NOT_FOUND"),
            DirectoryError::HasChildren(_) => (StatusCode::CONFLICT, e.code()),
            DirectoryError::SchemaViolation(_)
            | DirectoryError::MalformedDn(_)
            | DirectoryError::InvalidFingerprint => (StatusCode::BAD_REQUEST, e.code()),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, e.code()),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<DirectoryError> for ApiError {
    fn from(e: DirectoryError) -> Self {
        ApiError::from_directory(&e)
    }
}

impl From<AclError> for ApiError {
    fn from(e: AclError) -> Self {
        let status = match e {
            AclError::UnknownSubject(_) | AclError::UnknownScope(_) | AclError::NoSuchEntry(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<PkiError> for ApiError {
    fn from(e: PkiError) -> Self {
        let status = match e {
            PkiError::InvalidProfile(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

/// What a handler produced, before it becomes an HTTP response.
pub enum Reply {
    Json(StatusCode, Value),
    Error(ApiError),
    /// Verified file content.
    Download(FileRecord, File),
    /// A finished archive, with its download name.
    Attachment {
        file: File,
        len: u64,
        content_type: &'static str,
        filename: String,
    },
    /// A small in-memory attachment.
    Bytes {
        bytes: Vec<u8>,
        content_type: &'static str,
        filename: String,
    },
}

impl Reply {
    pub fn ok(v: impl Serialize) -> Self {
        Reply::Json(StatusCode::OK, serde_json::to_value(v).expect("serializable"))
    }

    pub fn created(v: impl Serialize) -> Self {
        Reply::Json(StatusCode::CREATED, serde_json::to_value(v).expect("serializable"))
    }

    pub fn status(&self) -> StatusCode {
        match self {
            Reply::Json(s, _) => *s,
            Reply::Error(e) => e.status,
            Reply::Download(..) | Reply::Attachment { .. } | Reply::Bytes { .. } => StatusCode::OK,
        }
    }

    /// JSON body for the non-streaming variants.
    pub fn json_body(&self) -> Option<Value> {
        match self {
            Reply::Json(_, v) => Some(v.clone()),
            Reply::Error(e) => Some(e.body()),
            _ => None,
        }
    }
}

impl From<ApiError> for Reply {
    fn from(e: ApiError) -> Self {
        Reply::Error(e)
    }
}

/// The request body as handed to a handler: buffered for JSON endpoints, a
/// blocking reader for uploads.
pub enum Body {
    Bytes(Vec<u8>),
    Stream {
        reader: Box<dyn Read + Send>,
        declared_len: Option<u64>,
    },
    /// The body could not be read; handlers that need it answer with this.
    Rejected(ApiError),
}

impl Body {
    fn json<T: serde::de::DeserializeOwned>(&self) -> Result<T, ApiError> {
        match self {
            Body::Bytes(b) => {
                let raw: &[u8] = if b.is_empty() { b"{}" } else { b };
                serde_json::from_slice(raw).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
            }
            Body::Stream { .. } => Err(ApiError::bad_request("expected a JSON body")),
            Body::Rejected(e) => Err(e.clone()),
        }
    }
}

/// A parsed request line.
pub struct Request {
    pub method: Method,
    pub path: String,
    pub query: Option<String>,
    pub body: Body,
}

impl Request {
    fn query_pairs(&self) -> Vec<(String, String)> {
        self.query.as_deref().map(|q| form_urlencoded::parse(q.as_bytes()).into_owned().collect()).unwrap_or_default()
    }
}

/// Facts about the TLS connection a request arrived on.
#[derive(Debug, Clone)]
pub struct Connection {
    pub peer_der: Vec<u8>,
    pub tls_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Route {
    Whoami,
    List(Scope),
    Download(Scope, String),
    Upload(Scope, String),
    Delete(Scope, String),
    UserList,
    UserAdd,
    UserDel(String),
    UserMod(String),
    CertIssue(String),
    GroupList,
    GroupAdd,
    GroupDel(String),
    MemberAdd(String, String),
    MemberDel(String, String),
    AclList,
    AclSet,
    AclDel,
    Audit,
    Backup,
}

impl Route {
    /// The route for `method` and `path`, or the error to answer with and the
    /// action to audit it under.
    pub(crate) fn parse(method: &Method, path: &str) -> Result<Route, (AuditAction, ApiError)> {
        let segments: Vec<String> = path
            .strip_prefix("/v1/")
            .unwrap_or("")
            .split('/')
            .map(|s| percent_decode_str(s).decode_utf8_lossy().into_owned())
            .collect();
        let seg: Vec<&str> = segments.iter().map(String::as_str).collect();
        let m = method.clone();
        let scope = |s: &str, action| {
            s.parse::<Scope>().map_err(|e| (action, ApiError::bad_request(format!("invalid scope: {e}"))))
        };
        use AuditAction as A;
        let route = match (m, seg.as_slice()) {
            (Method::GET, ["whoami"]) => Route::Whoami,
            (Method::GET, ["files", s]) => Route::List(scope(s, A::List)?),
            (Method::GET, ["files", s, n]) => Route::Download(scope(s, A::Download)?, n.to_string()),
            (Method::PUT, ["files", s, n]) => Route::Upload(scope(s, A::Upload)?, n.to_string()),
            (Method::DELETE, ["files", s, n]) => Route::Delete(scope(s, A::Delete)?, n.to_string()),
            (Method::GET, ["admin", "users"]) => Route::UserList,
            (Method::POST, ["admin", "users"]) => Route::UserAdd,
            (Method::DELETE, ["admin", "users", u]) => Route::UserDel(u.to_string()),
            (Method::PATCH, ["admin", "users", u]) => Route::UserMod(u.to_string()),
            (Method::POST, ["admin", "users", u, "certificate"]) => Route::CertIssue(u.to_string()),
            (Method::GET, ["admin", "groups"]) => Route::GroupList,
            (Method::POST, ["admin", "groups"]) => Route::GroupAdd,
            (Method::DELETE, ["admin", "groups", g]) => Route::GroupDel(g.to_string()),
            (Method::PUT, ["admin", "groups", g, "members", u]) => Route::MemberAdd(g.to_string(), u.to_string()),
            (Method::DELETE, ["admin", "groups", g, "members", u]) => Route::MemberDel(g.to_string(), u.to_string()),
            (Method::GET, ["admin", "acl"]) => Route::AclList,
            (Method::PUT, ["admin", "acl"]) => Route::AclSet,
            (Method::DELETE, ["admin", "acl"]) => Route::AclDel,
            (Method::GET, ["admin", "audit"]) => Route::Audit,
            (Method::POST, ["admin", "backup"]) => Route::Backup,
            _ => {
                return Err((
                    A::Auth,
                    ApiError::new(StatusCode::NOT_FOUND, "NO_ROUTE", format!("no endpoint {method} {path}")),
                ))
            }
        };
        Ok(route)
    }

    pub(crate) fn action(&self) -> AuditAction {
        use AuditAction as A;
        match self {
            Route::Whoami => A::Auth,
            Route::List(_) | Route::UserList | Route::GroupList | Route::AclList => A::List,
            Route::Download(..) => A::Download,
            Route::Upload(..) => A::Upload,
            Route::Delete(..) => A::Delete,
            Route::UserAdd => A::AdminUserAdd,
            Route::UserDel(_) => A::AdminUserDel,
            Route::UserMod(_) => A::AdminUserMod,
            Route::CertIssue(_) => A::AdminCertIssue,
            Route::GroupAdd => A::AdminGroupAdd,
            Route::GroupDel(_) => A::AdminGroupDel,
            Route::MemberAdd(..) => A::AdminMemberAdd,
            Route::MemberDel(..) => A::AdminMemberDel,
            Route::AclSet => A::AdminAclSet,
            Route::AclDel => A::AdminAclDel,
            Route::Audit => A::AdminAuditRead,
            Route::Backup => A::AdminBackup,
        }
    }

    fn is_admin(&self) -> bool {
        !matches!(self, Route::Whoami | Route::List(_) | Route::Download(..) | Route::Upload(..) | Route::Delete(..))
    }

    /// Default audit target; handlers that learn more override it.
    fn target(&self) -> String {
        match self {
            Route::Whoami => "whoami".into(),
            Route::List(s) => s.to_string(),
            Route::Download(s, n) | Route::Upload(s, n) | Route::Delete(s, n) => format!("{s}/{n}"),
            Route::UserList | Route::UserAdd => "users".into(),
            Route::UserDel(u) | Route::UserMod(u) | Route::CertIssue(u) => format!("user:{u}"),
            Route::GroupList | Route::GroupAdd => "groups".into(),
            Route::GroupDel(g) => format!("group:{g}"),
            Route::MemberAdd(g, u) | Route::MemberDel(g, u) => format!("group:{g}/user:{u}"),
            Route::AclList | Route::AclSet | Route::AclDel => "acl".into(),
            Route::Audit => "audit".into(),
            Route::Backup => "backup".into(),
        }
    }
}

/// Mutable per-request audit details a handler may refine.
pub(crate) struct Ctx<'a> {
    pub state: &'a AppState,
    pub principal: &'a Principal,
    pub conn: &'a Connection,
    pub target: String,
    pub detail: String,
}

fn outcome(status: StatusCode) -> AuditOutcome {
    if status.is_success() {
        AuditOutcome::Success
    } else if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
        AuditOutcome::Denied
    } else {
        AuditOutcome::Error
    }
}

/// Authenticate, route, execute and audit one request. Blocking.
pub fn handle(state: &AppState, conn: &Connection, req: Request) -> Reply {
    let (reply, event) = execute(state, conn, req);
    match state.store.append_audit(event) {
        Ok(_) => reply,
        Err(e) => {
            tracing::error!("audit append failed: {e}");
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "IO_FAILURE", "audit log unavailable").into()
        }
    }
}

fn execute(state: &AppState, conn: &Connection, req: Request) -> (Reply, NewAuditEvent) {
    let principal = match state.authenticate(&conn.peer_der, OffsetDateTime::now_utc()) {
        Ok(p) => p,
        Err(r) => {
            let reply = Reply::Json(
                StatusCode::UNAUTHORIZED,
                json!({ "error": "UNAUTHENTICATED", "reason": r.reason.as_str() }),
            );
            let detail = if r.detail.is_empty() {
                r.reason.as_str().to_string()
            } else {
                format!("{}: {}", r.reason.as_str(), r.detail)
            };
            let ev = NewAuditEvent::new(r.principal, AuditAction::Auth, req.path, AuditOutcome::Denied, detail);
            return (reply, ev);
        }
    };

    let route = match Route::parse(&req.method, &req.path) {
        Ok(r) => r,
        Err((action, e)) => {
            let ev = NewAuditEvent::new(&principal.username, action, &req.path, outcome(e.status), e.code);
            return (e.into(), ev);
        }
    };

    let mut ctx = Ctx { state, principal: &principal, conn, target: route.target(), detail: String::new() };
    let result = if route.is_admin() && principal.role != Role::Administrator {
        Err(ApiError::forbidden("NOT_ADMIN"))
    } else if route.is_admin() {
        admin::dispatch(&mut ctx, &route, &req)
    } else {
        files::dispatch(&mut ctx, &route, req)
    };
    let reply = result.unwrap_or_else(Reply::Error);
    let status = reply.status();
    let detail = match &reply {
        Reply::Error(e) if ctx.detail.is_empty() => e.code.to_string(),
        Reply::Error(e) => format!("{}: {}", e.code, ctx.detail),
        _ => ctx.detail,
    };
    let principal_name = if principal.username.is_empty() { ANONYMOUS } else { &principal.username };
    let ev = NewAuditEvent::new(principal_name, route.action(), ctx.target, outcome(status), detail);
    (reply, ev)
}
