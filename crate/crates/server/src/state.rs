use std::sync::Mutex;

use sfs_core::directory::DirectoryError;
use sfs_core::pki::{self, ValidationResult};
use sfs_core::store::{StoreOptions, ANONYMOUS};
use sfs_core::{Directory, DistinguishedName, IssuedCertificate, KeyMaterial, Principal, Status, Store};
use time::OffsetDateTime;

use crate::config::ServerConfig;

/// Why a peer with a CA-signed certificate was still turned away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthFailure {
    UnknownPrincipal,
    UsernameMismatch,
    Suspended,
    CertInvalid,
}

impl AuthFailure {
    pub fn as_str(self) -> &'static str {
        match self {
            AuthFailure::UnknownPrincipal => "UNKNOWN_PRINCIPAL",
            AuthFailure::UsernameMismatch => "USERNAME_MISMATCH",
            AuthFailure::Suspended => "SUSPENDED",
            AuthFailure::CertInvalid => "CERT_INVALID",
        }
    }
}

/// A rejected authentication: the reason and whatever name could be
/// attributed to the peer.
#[derive(Debug, Clone)]
pub struct Rejection {
    pub reason: AuthFailure,
    pub principal: String,
    pub detail: String,
}

pub struct AppState {
    pub directory: Directory,
    pub store: Store,
    pub ca: IssuedCertificate,
    pub(crate) ca_key: KeyMaterial,
    pub base: DistinguishedName,
    /// Held by operations that touch both the directory and the store, and
    /// by backup, so a backup never sees half of a cascade.
    pub(crate) admin: Mutex<()>,
}

impl std::fmt::Debug for AppState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AppState").field("store", &self.store).finish_non_exhaustive()
    }
}

impl AppState {
    /// Open the directory and store named by `cfg`, creating an empty layout
    /// on first use.
    pub fn open(cfg: &ServerConfig) -> anyhow::Result<Self> {
        let ca = IssuedCertificate::from_pem(&std::fs::read_to_string(&cfg.ca_cert)?)?;
        let ca_key = KeyMaterial::from_pem(&std::fs::read_to_string(&cfg.ca_key)?)?;
        let directory = Directory::open(cfg.base_dn.clone(), &cfg.directory_path)?;
        directory.ensure_layout()?;
        let store = Store::open_with(&cfg.store_path, StoreOptions { max_upload_bytes: cfg.max_upload_bytes })?;
        Ok(AppState { directory, store, ca, ca_key, base: cfg.base_dn.clone(), admin: Mutex::new(()) })
    }

    pub(crate) fn admin_lock(&self) -> std::sync::MutexGuard<'_, ()> {
        self.admin.lock().expect("admin lock poisoned")
    }

    /// Resolve a handshake-verified peer certificate to an active principal,
    /// with groups and status read fresh from the directory.
    pub fn authenticate(&self, peer_der: &[u8], at: OffsetDateTime) -> Result<Principal, Rejection> {
        let reject =
            |reason, principal: &str, detail: String| Rejection { reason, principal: principal.to_string(), detail };
        let fp = sfs_core::sha256_hex(peer_der);
        let principal = match self.directory.lookup_principal_by_fingerprint(&fp) {
            Ok(p) => p,
            Err(e @ (DirectoryError::NotFound | DirectoryError::Ambiguous(_))) => {
                return Err(reject(AuthFailure::UnknownPrincipal, ANONYMOUS, format!("{fp}: {e}")))
            }
            Err(e) => return Err(reject(AuthFailure::UnknownPrincipal, ANONYMOUS, e.to_string())),
        };
        let leaf = match IssuedCertificate::from_der(peer_der) {
            Ok(c) => c,
            Err(e) => return Err(reject(AuthFailure::CertInvalid, &principal.username, e.to_string())),
        };
        if leaf.username() != Some(principal.username.as_str()) {
            return Err(reject(
                AuthFailure::UsernameMismatch,
                &principal.username,
                format!("certificate uid {:?}", leaf.username().unwrap_or("")),
            ));
        }
        if principal.status != Status::Active {
            return Err(reject(AuthFailure::Suspended, &principal.username, String::new()));
        }
        match pki::validate_chain(&leaf, &self.ca, at) {
            Ok(ValidationResult::Ok) => Ok(principal),
            Ok(ValidationResult::Invalid(r)) => {
                Err(reject(AuthFailure::CertInvalid, &principal.username, r.as_str().to_string()))
            }
            Err(e) => Err(reject(AuthFailure::CertInvalid, &principal.username, e.to_string())),
        }
    }
}
