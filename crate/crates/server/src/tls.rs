use std::path::Path;
use std::sync::Arc;

use rustls::pki_types::{CertificateDer, PrivateKeyDer, PrivatePkcs8KeyDer};
use rustls::server::WebPkiClientVerifier;
use rustls::RootCertStore;
use sfs_core::{IssuedCertificate, KeyMaterial};

#[derive(Debug, thiserror::Error)]
pub enum TlsSetupError {
    #[error("{0}: {1}")]
    Read(String, std::io::Error),
    #[error(transparent)]
    Pki(#[from] sfs_core::pki::PkiError),
    #[error(transparent)]
    Rustls(#[from] rustls::Error),
    #[error("client verifier: {0}")]
    Verifier(#[from] rustls::server::VerifierBuilderError),
}

/// The only protocol versions the service speaks.
pub const PROTOCOL_VERSIONS: &[&rustls::SupportedProtocolVersion] = &[&rustls::version::TLS13, &rustls::version::TLS12];

pub fn provider() -> Arc<rustls::crypto::CryptoProvider> {
    Arc::new(rustls::crypto::ring::default_provider())
}

fn read(path: &Path) -> Result<String, TlsSetupError> {
    std::fs::read_to_string(path).map_err(|e| TlsSetupError::Read(path.display().to_string(), e))
}

/// Server side: present `cert`, and require every client to present a
/// certificate chaining to `ca`.
pub fn server_config(
    ca: &IssuedCertificate,
    cert: &IssuedCertificate,
    key: &KeyMaterial,
) -> Result<Arc<rustls::ServerConfig>, TlsSetupError> {
    let mut roots = RootCertStore::empty();
    roots.add(CertificateDer::from(ca.der_bytes.clone()))?;
    let verifier = WebPkiClientVerifier::builder_with_provider(Arc::new(roots), provider()).build()?;
    let key = PrivateKeyDer::Pkcs8(PrivatePkcs8KeyDer::from(key.private_key_der()?));
    let mut config = rustls::ServerConfig::builder_with_provider(provider())
        .with_protocol_versions(PROTOCOL_VERSIONS)?
        .with_client_cert_verifier(verifier)
        .with_single_cert(vec![CertificateDer::from(cert.der_bytes.clone())], key)?;
    config.alpn_protocols = vec![b"http/1.1".to_vec()];
    Ok(Arc::new(config))
}

pub fn server_config_from_files(
    ca: &Path,
    cert: &Path,
    key: &Path,
) -> Result<Arc<rustls::ServerConfig>, TlsSetupError> {
    server_config(
        &IssuedCertificate::from_pem(&read(ca)?)?,
        &IssuedCertificate::from_pem(&read(cert)?)?,
        &KeyMaterial::from_pem(&read(key)?)?,
    )
}
