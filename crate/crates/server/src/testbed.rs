//! A fully provisioned server in a temporary directory, for tests, benches
//! and demos.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use sfs_core::acl::default_group_grant;
use sfs_core::directory::{group_attributes, person_attributes, DEFAULT_BASE_DN};
use sfs_core::pki::{self, CertificateProfile};
use sfs_core::store::StoreError;
use sfs_core::{CredentialBundle, DirectoryEntry, IssuedCertificate, KeyMaterial, Role, Status};
use tempfile::TempDir;

use crate::config::ServerConfig;
use crate::serve::RunningServer;

/// Paths of one principal's credential bundle on disk.
#[derive(Debug, Clone)]
pub struct Credentials {
    pub username: String,
    pub cert: PathBuf,
    pub key: PathBuf,
    pub ca: PathBuf,
    pub fingerprint: String,
}

impl Credentials {
    fn write(bundle: CredentialBundle, dir: &Path) -> anyhow::Result<Self> {
        let fingerprint = bundle.certificate.fingerprint_sha256.clone();
        let (cert, key, ca) = bundle.write_dir(dir)?;
        Ok(Credentials { username: bundle.username, cert, key, ca, fingerprint })
    }
}

pub struct Testbed {
    pub dir: TempDir,
    pub config: ServerConfig,
    pub config_path: PathBuf,
    pub ca: IssuedCertificate,
    ca_key: KeyMaterial,
    pub admin: Credentials,
    server: Option<RunningServer>,
}

pub const ADMIN: &str = "admin-ann";

impl Testbed {
    pub fn start() -> anyhow::Result<Self> {
        Self::start_with(|_| {})
    }

    /// Provision and start, letting `tune` adjust the config first.
    pub fn start_with(tune: impl FnOnce(&mut ServerConfig)) -> anyhow::Result<Self> {
        let dir = tempfile::tempdir()?;
        let pki_dir = dir.path().join("pki");
        let (ca, ca_key) = pki::init_ca(&"cn=SFS Test CA,o=SFS".parse()?, 30, &pki_dir, false)?;
        let (server_cert, server_key) =
            pki::issue_certificate(&ca, &ca_key, &CertificateProfile::server(&["localhost", "127.0.0.1"], 30)?)?;
        let server_cert_path = pki_dir.join("server.crt.pem");
        let server_key_path = pki_dir.join("server.key.pem");
        std::fs::write(&server_cert_path, server_cert.to_pem())?;
        std::fs::write(&server_key_path, &server_key.private_key_pem)?;

        let mut config = ServerConfig {
            listen: "127.0.0.1:0".parse()?,
            ca_cert: pki_dir.join(pki::CA_CERT_FILE),
            ca_key: pki_dir.join(pki::CA_KEY_FILE),
            server_cert: server_cert_path,
            server_key: server_key_path,
            directory_path: dir.path().join("directory.ldif"),
            store_path: dir.path().join("data"),
            max_upload_bytes: sfs_core::store::DEFAULT_MAX_UPLOAD_BYTES,
            base_dn: DEFAULT_BASE_DN.parse()?,
        };
        tune(&mut config);
        let (cert, key, ca_path) = crate::offline::init_admin(&config, ADMIN, &dir.path().join("creds").join(ADMIN))?;
        let admin = Credentials {
            username: ADMIN.into(),
            fingerprint: IssuedCertificate::from_pem(&std::fs::read_to_string(&cert)?)?.fingerprint_sha256,
            cert,
            key,
            ca: ca_path,
        };
        let server = RunningServer::spawn(&config)?;
        config.listen = server.addr();
        let config_path = dir.path().join("sfs.conf");
        std::fs::write(&config_path, config.render())?;
        Ok(Testbed { dir, config, config_path, ca, ca_key, admin, server: Some(server) })
    }

    pub fn server(&self) -> &RunningServer {
        self.server.as_ref().expect("server running")
    }

    pub fn addr(&self) -> SocketAddr {
        self.server().addr()
    }

    /// `https://localhost:<port>`, matching the server certificate.
    pub fn url(&self) -> String {
        format!("https://localhost:{}", self.addr().port())
    }

    pub fn state(&self) -> &crate::AppState {
        self.server().state()
    }

    /// Register `username` directly in the directory and write a bundle
    /// they can connect with.
    pub fn provision(&self, username: &str, role: Role, groups: &[&str]) -> anyhow::Result<Credentials> {
        let (cert, key) = pki::issue_certificate(
            &self.ca,
            &self.ca_key,
            &CertificateProfile::client(username, &self.config.base_dn, 30),
        )?;
        let dir = &self.state().directory;
        dir.add_entry(DirectoryEntry::new(
            dir.snapshot().user_dn(username),
            person_attributes(username, role, Status::Active, &cert.fingerprint_sha256, &cert.der_bytes),
        ))?;
        for g in groups {
            dir.add_member(g, username)?;
        }
        self.write_bundle(username, cert, key)
    }

    /// Create group `name` with its default grant.
    pub fn add_group(&self, name: &str) -> anyhow::Result<()> {
        let dir = &self.state().directory;
        dir.add_entry(DirectoryEntry::new(dir.snapshot().group_dn(name), group_attributes(name, &[])))?;
        let grant = default_group_grant(name);
        self.state().store.update_acl(|t| {
            t.grant(grant.subject.clone(), grant.scope.clone(), grant.permissions, &*dir.snapshot())
                .map(Some)
                .map_err(StoreError::from)
        })?;
        Ok(())
    }

    /// A certificate for `username` signed by this CA but not registered
    /// anywhere.
    pub fn unregistered(&self, username: &str) -> anyhow::Result<Credentials> {
        let (cert, key) = pki::issue_certificate(
            &self.ca,
            &self.ca_key,
            &CertificateProfile::client(username, &self.config.base_dn, 30),
        )?;
        self.write_bundle(username, cert, key)
    }

    /// A client certificate from an unrelated CA.
    pub fn foreign(&self, username: &str) -> anyhow::Result<Credentials> {
        let other = tempfile::tempdir()?;
        let (ca, ca_key) = pki::init_ca(&"cn=Other CA,o=Elsewhere".parse()?, 30, other.path(), false)?;
        let (cert, key) =
            pki::issue_certificate(&ca, &ca_key, &CertificateProfile::client(username, &self.config.base_dn, 30))?;
        let bundle = CredentialBundle { username: username.into(), certificate: cert, key, ca };
        Credentials::write(bundle, &self.dir.path().join("foreign").join(username))
    }

    fn write_bundle(&self, username: &str, cert: IssuedCertificate, key: KeyMaterial) -> anyhow::Result<Credentials> {
        let bundle = CredentialBundle { username: username.into(), certificate: cert, key, ca: self.ca.clone() };
        let n = std::fs::read_dir(self.dir.path().join("creds")).map(|d| d.count()).unwrap_or(0);
        Credentials::write(bundle, &self.dir.path().join("creds").join(format!("{username}-{n}")))
    }

    /// Stop the server, keeping the data directory.
    pub fn stop(&mut self) -> anyhow::Result<()> {
        match self.server.take() {
            Some(s) => s.shutdown(),
            None => Ok(()),
        }
    }

    /// Restart on a fresh port with the same data.
    pub fn restart(&mut self) -> anyhow::Result<()> {
        self.stop()?;
        let mut cfg = self.config.clone();
        cfg.listen = "127.0.0.1:0".parse()?;
        let server = RunningServer::spawn(&cfg)?;
        self.config.listen = server.addr();
        std::fs::write(&self.config_path, self.config.render())?;
        self.server = Some(server);
        Ok(())
    }
}
