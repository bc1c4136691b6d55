//! Operations run with the service stopped.

use std::path::{Path, PathBuf};

use sfs_core::directory::{person_attributes, Attributes, ATTR_CERTIFICATE, ATTR_FINGERPRINT, ATTR_ROLE, ATTR_STATUS};
use sfs_core::pki::{self, CertificateProfile};
use sfs_core::store::backup::BackupManifest;
use sfs_core::{CredentialBundle, DirectoryEntry, Role, Status};

use crate::api::admin::DEFAULT_CLIENT_DAYS;
use crate::config::ServerConfig;
use crate::state::AppState;

/// Register `username` as an active administrator (or restore an existing
/// entry to that state) and write a fresh credential bundle to `out`.
/// Returns the certificate, key and CA paths.
pub fn init_admin(cfg: &ServerConfig, username: &str, out: &Path) -> anyhow::Result<(PathBuf, PathBuf, PathBuf)> {
    anyhow::ensure!(sfs_core::naming::is_valid_name(username), "`{username}` is not a valid username");
    let state = AppState::open(cfg)?;
    let (cert, key) = pki::issue_certificate(
        &state.ca,
        &state.ca_key,
        &CertificateProfile::client(username, &state.base, DEFAULT_CLIENT_DAYS),
    )?;
    let dn = state.directory.snapshot().user_dn(username);
    if state.directory.snapshot().contains(&dn) {
        state.directory.modify_entry(
            &dn,
            Attributes::new()
                .with(ATTR_ROLE, Role::Administrator.as_str())
                .with(ATTR_STATUS, Status::Active.as_str())
                .with(ATTR_FINGERPRINT, &cert.fingerprint_sha256)
                .with(ATTR_CERTIFICATE, &cert.der_bytes),
        )?;
    } else {
        state.directory.add_entry(DirectoryEntry::new(
            dn,
            person_attributes(username, Role::Administrator, Status::Active, &cert.fingerprint_sha256, &cert.der_bytes),
        ))?;
    }
    let bundle = CredentialBundle { username: username.to_string(), certificate: cert, key, ca: state.ca.clone() };
    Ok(bundle.write_dir(out)?)
}

/// Replace the service state with the contents of a backup archive.
pub fn restore(cfg: &ServerConfig, archive: &Path, force: bool) -> anyhow::Result<BackupManifest> {
    let state = AppState::open(cfg)?;
    Ok(state.store.backup_import(&state.directory, archive, force)?)
}
