//! Core of the SFS secure file exchange.
//!
//! * [`pki`]: the system's own certificate authority, certificate issuance,
//!   fingerprints and chain validation.
//! * [`directory`]: the hierarchical principal directory with LDIF
//!   import/export.
//! * [`acl`]: the authorization engine over file scopes.
//! * [`store`]: file metadata, content-addressed blobs, the audit log and
//!   backup archives.

#![forbid(unsafe_code)]

pub mod acl;
pub mod directory;
pub mod naming;
pub mod pki;
pub mod store;

mod fsutil;

pub use acl::{
    AclEntry, AclTable, Decision, Permission, PermissionSet, Principal, Role, Scope, ScopeKind, Status, Subject,
};
pub use directory::{Directory, DirectoryEntry, DistinguishedName, SearchFilter};
pub use pki::{
    CertificateKind, CertificateProfile, CredentialBundle, IssuedCertificate, KeyMaterial, ValidationResult,
};
pub use store::{AuditAction, AuditEvent, AuditOutcome, FileRecord, Store};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
