use std::collections::BTreeMap;

use hyper::StatusCode;
use serde_json::json;
use sfs_core::acl::{self, Registry};
use sfs_core::store::StoreError;
use sfs_core::{Permission, Scope, ScopeKind};

use super::{ApiError, Body, Ctx, Reply, Request, Route};

pub(super) fn dispatch(ctx: &mut Ctx<'_>, route: &Route, req: Request) -> Result<Reply, ApiError> {
    match route {
        Route::Whoami => whoami(ctx),
        Route::List(scope) => {
            authorize(ctx, Permission::View, scope, None)?;
            let files = ctx.state.store.list_files(scope)?;
            ctx.detail = format!("{} files", files.len());
            Ok(Reply::ok(json!({ "scope": scope, "files": files })))
        }
        Route::Download(scope, name) => {
            let existing = stat(ctx, scope, name)?;
            authorize(ctx, Permission::Download, scope, existing.as_ref().map(|r| r.uploader.as_str()))?;
            if existing.is_none() {
                return Err(StoreError::NotFound(format!("{scope}/{name}")).into());
            }
            let (record, file) = ctx.state.store.get_file(scope, name)?;
            ctx.detail = record.sha256.clone();
            Ok(Reply::Download(record, file))
        }
        Route::Upload(scope, name) => {
            authorize(ctx, Permission::Upload, scope, None)?;
            let registry = ctx.state.directory.snapshot();
            let exists = match scope.kind {
                ScopeKind::Home => registry.has_user(&scope.name),
                ScopeKind::Group => registry.has_group(&scope.name),
            };
            if !exists {
                return Err(ApiError::new(StatusCode::NOT_FOUND, "UNKNOWN_SCOPE", format!("no such scope {scope}")));
            }
            let (reader, declared_len) = match req.body {
                Body::Stream { reader, declared_len } => (reader, declared_len),
                Body::Rejected(e) => return Err(e),
                Body::Bytes(_) => return Err(ApiError::bad_request("expected a binary body")),
            };
            let limit = ctx.state.store.max_upload_bytes();
            if declared_len.is_some_and(|n| n > limit) {
                return Err(StoreError::TooLarge { limit }.into());
            }
            let record = ctx.state.store.put_file(scope, name, reader, &ctx.principal.username)?;
            ctx.detail = format!("v{} {}", record.version, record.sha256);
            Ok(Reply::created(record))
        }
        Route::Delete(scope, name) => {
            let existing = stat(ctx, scope, name)?;
            authorize(ctx, Permission::Delete, scope, existing.as_ref().map(|r| r.uploader.as_str()))?;
            if existing.is_none() {
                return Err(StoreError::NotFound(format!("{scope}/{name}")).into());
            }
            let removed = ctx.state.store.delete_file(scope, name)?;
            Ok(Reply::ok(removed))
        }
        _ => unreachable!("admin route in file dispatch"),
    }
}

fn stat(ctx: &Ctx<'_>, scope: &Scope, name: &str) -> Result<Option<sfs_core::FileRecord>, ApiError> {
    match ctx.state.store.stat_file(scope, name) {
        Ok(r) => Ok(Some(r)),
        Err(StoreError::NotFound(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Evaluate against the current ACL version; a denial becomes 403 with the
/// engine's reason.
fn authorize(ctx: &mut Ctx<'_>, perm: Permission, scope: &Scope, uploader: Option<&str>) -> Result<(), ApiError> {
    let table = ctx.state.store.acl();
    let decision = acl::evaluate(ctx.principal, perm, scope, &table, uploader);
    if decision.is_allow() {
        Ok(())
    } else {
        Err(ApiError::forbidden(decision.reason()))
    }
}

fn whoami(ctx: &mut Ctx<'_>) -> Result<Reply, ApiError> {
    let p = ctx.principal;
    let table = ctx.state.store.acl();
    let mut scopes = vec![Scope::home(&p.username)];
    scopes.extend(p.groups.iter().map(Scope::group));
    // scopes reachable through direct grants
    for e in table.entries() {
        if e.subject == sfs_core::Subject::User(p.username.clone()) && !scopes.contains(&e.scope) {
            scopes.push(e.scope);
        }
    }
    let effective: BTreeMap<String, Vec<Permission>> =
        scopes.iter().map(|s| (s.to_string(), acl::effective_permissions(p, s, &table).to_vec())).collect();
    ctx.detail = "authenticated".into();
    Ok(Reply::ok(json!({
        "principal": p,
        "tls_version": ctx.conn.tls_version,
        "effective_permissions": effective,
    })))
}
