use hyper::StatusCode;
use serde::Deserialize;
use serde_json::json;
use sfs_core::acl::default_group_grant;
use sfs_core::directory::{
    group_attributes, person_attributes, Attributes, ATTR_CERTIFICATE, ATTR_FINGERPRINT, ATTR_ROLE, ATTR_STATUS,
};
use sfs_core::naming::is_valid_name;
use sfs_core::pki::{self, CertificateProfile};
use sfs_core::store::{AuditFilter, StoreError};
use sfs_core::{CredentialBundle, DirectoryEntry, PermissionSet, Role, Scope, Status, Subject};

use super::{ApiError, Ctx, Reply, Request, Route};

pub const DEFAULT_CLIENT_DAYS: u32 = 365;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewUser {
    username: String,
    #[serde(default = "default_role")]
    role: Role,
    #[serde(default = "default_status")]
    status: Status,
}

fn default_role() -> Role {
    Role::Client
}

fn default_status() -> Status {
    Status::Active
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UserPatch {
    role: Option<Role>,
    status: Option<Status>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CertRequest {
    validity_days: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewGroup {
    name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AclRequest {
    subject: Subject,
    scope: Scope,
    permissions: PermissionSet,
}

fn check_name(name: &str) -> Result<(), ApiError> {
    if is_valid_name(name) {
        Ok(())
    } else {
        Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "INVALID_ARGUMENT",
            format!("`{name}` is not a valid name (1-32 of a-z 0-9 _ . -)"),
        ))
    }
}

pub(super) fn dispatch(ctx: &mut Ctx<'_>, route: &Route, req: &Request) -> Result<Reply, ApiError> {
    let state = ctx.state;
    match route {
        Route::UserList => {
            let users = state.directory.snapshot().principals()?;
            ctx.detail = format!("{} users", users.len());
            Ok(Reply::ok(json!({ "users": users })))
        }
        Route::UserAdd => {
            let body: NewUser = req.body.json()?;
            check_name(&body.username)?;
            ctx.target = format!("user:{}", body.username);
            // the entry needs a certificate binding; this one's key is
            // discarded, so nobody can use it until a bundle is issued
            let (cert, _) = pki::issue_certificate(
                &state.ca,
                &state.ca_key,
                &CertificateProfile::client(&body.username, &state.base, DEFAULT_CLIENT_DAYS),
            )?;
            let _guard = state.admin_lock();
            let snap = state.directory.snapshot();
            state.directory.add_entry(DirectoryEntry::new(
                snap.user_dn(&body.username),
                person_attributes(&body.username, body.role, body.status, &cert.fingerprint_sha256, &cert.der_bytes),
            ))?;
            state.store.set_orphaned(&Scope::home(&body.username), false)?;
            Ok(Reply::created(state.directory.snapshot().principal(&body.username)?))
        }
        Route::UserDel(u) => {
            check_name(u)?;
            if *u == ctx.principal.username {
                return Err(ApiError::new(StatusCode::CONFLICT, "CONFLICT", "administrators cannot delete themselves"));
            }
            let _guard = state.admin_lock();
            let dn = state.directory.snapshot().user_dn(u);
            state.directory.delete_entry(&dn)?;
            let home = Scope::home(u);
            let user = Subject::User(u.clone());
            let mut removed = 0;
            state.store.update_acl(|t| {
                let next = t.remove_where(|s, sc| *s == user || *sc == home);
                removed = t.len() - next.as_ref().map_or(t.len(), |n| n.len());
                Ok::<_, StoreError>(next)
            })?;
            let orphaned = state.store.set_orphaned(&home, true)?;
            ctx.detail = format!("{removed} acl entries removed, {orphaned} files orphaned");
            Ok(Reply::ok(json!({ "deleted": u, "acl_entries_removed": removed, "orphaned_files": orphaned })))
        }
        Route::UserMod(u) => {
            check_name(u)?;
            let body: UserPatch = req.body.json()?;
            let mut replace = Attributes::new();
            if let Some(r) = body.role {
                replace.set_str(ATTR_ROLE, r.as_str());
            }
            if let Some(s) = body.status {
                replace.set_str(ATTR_STATUS, s.as_str());
            }
            if replace.is_empty() {
                return Err(ApiError::bad_request("nothing to change: give role and/or status"));
            }
            let dn = state.directory.snapshot().user_dn(u);
            state.directory.modify_entry(&dn, replace)?;
            let p = state.directory.snapshot().principal(u)?;
            ctx.detail = format!("role={} status={}", p.role, p.status);
            Ok(Reply::ok(p))
        }
        Route::CertIssue(u) => {
            check_name(u)?;
            let body: CertRequest = req.body.json()?;
            let days = body.validity_days.unwrap_or(DEFAULT_CLIENT_DAYS);
            let dn = state.directory.snapshot().user_dn(u);
            state.directory.get(&dn)?;
            let (cert, key) =
                pki::issue_certificate(&state.ca, &state.ca_key, &CertificateProfile::client(u, &state.base, days))?;
            state.directory.modify_entry(
                &dn,
                Attributes::new()
                    .with(ATTR_FINGERPRINT, &cert.fingerprint_sha256)
                    .with(ATTR_CERTIFICATE, &cert.der_bytes),
            )?;
            ctx.detail = format!("fingerprint {}", cert.fingerprint_sha256);
            let bundle = CredentialBundle { username: u.clone(), certificate: cert, key, ca: state.ca.clone() };
            Ok(Reply::Bytes {
                bytes: bundle.to_zip()?,
                content_type: "application/zip",
                filename: format!("{u}-credentials.zip"),
            })
        }
        Route::GroupList => {
            let snap = state.directory.snapshot();
            let mut groups = Vec::new();
            for g in snap.group_names() {
                let members = snap.group_members(&g)?;
                groups.push(json!({ "name": g, "members": members }));
            }
            Ok(Reply::ok(json!({ "groups": groups })))
        }
        Route::GroupAdd => {
            let body: NewGroup = req.body.json()?;
            check_name(&body.name)?;
            ctx.target = format!("group:{}", body.name);
            let _guard = state.admin_lock();
            let dn = state.directory.snapshot().group_dn(&body.name);
            state.directory.add_entry(DirectoryEntry::new(dn.clone(), group_attributes(&body.name, &[])))?;
            let grant = default_group_grant(&body.name);
            let granted = state.store.update_acl(|t| {
                let snap = state.directory.snapshot();
                t.grant(grant.subject.clone(), grant.scope.clone(), grant.permissions, &*snap)
                    .map(Some)
                    .map_err(StoreError::from)
            });
            if let Err(e) = granted {
                // keep directory and ACL in step
                let _ = state.directory.delete_entry(&dn);
                return Err(e.into());
            }
            ctx.detail = format!("default grant {}", grant.permissions);
            Ok(Reply::created(json!({ "name": body.name, "members": Vec::<String>::new() })))
        }
        Route::GroupDel(g) => {
            check_name(g)?;
            let _guard = state.admin_lock();
            let dn = state.directory.snapshot().group_dn(g);
            state.directory.delete_entry(&dn)?;
            let scope = Scope::group(g);
            let subject = Subject::Group(g.clone());
            state.store.update_acl(|t| Ok::<_, StoreError>(t.remove_where(|s, sc| *s == subject || *sc == scope)))?;
            Ok(Reply::ok(json!({ "deleted": g })))
        }
        Route::MemberAdd(g, u) | Route::MemberDel(g, u) => {
            check_name(g)?;
            check_name(u)?;
            if matches!(route, Route::MemberAdd(..)) {
                state.directory.add_member(g, u)?;
            } else {
                state.directory.remove_member(g, u)?;
            }
            let members = state.directory.snapshot().group_members(g)?;
            Ok(Reply::ok(json!({ "name": g, "members": members })))
        }
        Route::AclList => {
            let table = state.store.acl();
            let entries: Vec<_> = table.entries().collect();
            Ok(Reply::ok(json!({ "version": table.version(), "entries": entries })))
        }
        Route::AclSet => {
            let body: AclRequest = req.body.json()?;
            ctx.target = format!("{} on {}", body.subject, body.scope);
            ctx.detail = body.permissions.to_string();
            let table = state.store.update_acl(|t| {
                let snap = state.directory.snapshot();
                t.grant(body.subject.clone(), body.scope.clone(), body.permissions, &*snap)
                    .map(Some)
                    .map_err(StoreError::from)
            })?;
            Ok(Reply::ok(json!({
                "version": table.version(),
                "entry": { "subject": body.subject, "scope": body.scope, "permissions": body.permissions },
            })))
        }
        Route::AclDel => {
            let (mut subject, mut scope) = (None, None);
            for (k, v) in req.query_pairs() {
                match k.as_str() {
                    "subject" => subject = Some(v.parse::<Subject>()?),
                    "scope" => scope = Some(v.parse::<Scope>()?),
                    other => return Err(ApiError::bad_request(format!("unknown parameter `{other}`"))),
                }
            }
            let (Some(subject), Some(scope)) = (subject, scope) else {
                return Err(ApiError::bad_request("subject and scope are required"));
            };
            ctx.target = format!("{subject} on {scope}");
            let table = state.store.update_acl(|t| t.revoke(&subject, &scope).map(Some).map_err(StoreError::from))?;
            Ok(Reply::ok(json!({ "version": table.version() })))
        }
        Route::Audit => {
            let mut filter = AuditFilter::default();
            let seq = |v: &str| {
                v.parse::<u64>().map_err(|_| ApiError::bad_request(format!("`{v}` is not a sequence number")))
            };
            for (k, v) in req.query_pairs() {
                if v.is_empty() {
                    continue;
                }
                match k.as_str() {
                    "principal" => filter.principal = Some(v),
                    "action" => filter.action = Some(v.parse().map_err(ApiError::from)?),
                    "from_seq" => filter.from_seq = Some(seq(&v)?),
                    "to_seq" => filter.to_seq = Some(seq(&v)?),
                    other => return Err(ApiError::bad_request(format!("unknown parameter `{other}`"))),
                }
            }
            let events = state.store.query_audit(&filter)?;
            ctx.detail = format!("{} events", events.len());
            Ok(Reply::ok(json!({ "events": events })))
        }
        Route::Backup => {
            let _guard = state.admin_lock();
            let scratch = tempfile::tempdir_in(state.store.root().join("tmp")).map_err(StoreError::from)?;
            let path = scratch.path().join("backup.zip");
            let manifest = state.store.backup_export(&state.directory, &path)?;
            // the open handle outlives the scratch directory
            let file = std::fs::File::open(&path).map_err(StoreError::from)?;
            let len = file.metadata().map_err(StoreError::from)?.len();
            ctx.detail =
                format!("{} files, {} blobs", manifest.tables.get("files").copied().unwrap_or(0), manifest.blobs);
            let stamp = manifest.created_at.unix_timestamp();
            Ok(Reply::Attachment {
                file,
                len,
                content_type: "application/zip",
                filename: format!("sfs-backup-{stamp}.zip"),
            })
        }
        _ => unreachable!("file route in admin dispatch"),
    }
}
