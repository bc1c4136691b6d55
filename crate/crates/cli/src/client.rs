use std::io::Read;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use rustls::pki_types::{CertificateDer, PrivateKeyDer, PrivatePkcs8KeyDer};
use rustls::RootCertStore;
use serde_json::Value;
use sfs_core::{IssuedCertificate, KeyMaterial};

use crate::settings::ClientConfig;
use crate::CliError;

const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~').remove(b':');

fn read_pem(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{what} {}: {e}", path.display())))
}

/// TLS settings: trust only `ca`, check the server's hostname, present the
/// client certificate.
pub fn tls_config(cfg: &ClientConfig) -> Result<Arc<rustls::ClientConfig>, CliError> {
    let ca = IssuedCertificate::from_pem(&read_pem(&cfg.ca_cert, "CA certificate")?)?;
    let cert = IssuedCertificate::from_pem(&read_pem(&cfg.client_cert, "client certificate")?)?;
    let key = KeyMaterial::from_pem(&read_pem(&cfg.client_key, "client key")?)?;
    if !cert.matches_key(&key)? {
        return Err(CliError::Config(format!(
            "{} is not the key for {}",
            cfg.client_key.display(),
            cfg.client_cert.display()
        )));
    }
    let mut roots = RootCertStore::empty();
    roots.add(CertificateDer::from(ca.der_bytes)).map_err(|e| CliError::Config(format!("CA certificate: {e}")))?;
    let provider = Arc::new(rustls::crypto::ring::default_provider());
    let config = rustls::ClientConfig::builder_with_provider(provider)
        .with_protocol_versions(&[&rustls::version::TLS13, &rustls::version::TLS12])
        .map_err(|e| CliError::Config(e.to_string()))?
        .with_root_certificates(roots)
        .with_client_auth_cert(
            vec![CertificateDer::from(cert.der_bytes)],
            PrivateKeyDer::Pkcs8(PrivatePkcs8KeyDer::from(key.private_key_der()?)),
        )
        .map_err(|e| CliError::Config(format!("client certificate: {e}")))?;
    Ok(Arc::new(config))
}

pub enum Payload<'a> {
    Empty,
    Json(Value),
    Stream(&'a mut dyn Read, u64),
}

pub struct Client {
    agent: ureq::Agent,
    server: String,
}

impl Client {
    pub fn new(cfg: &ClientConfig) -> Result<Self, CliError> {
        let agent =
            ureq::AgentBuilder::new().tls_config(tls_config(cfg)?).timeout_connect(Duration::from_secs(15)).build();
        Ok(Client { agent, server: cfg.server.clone() })
    }

    /// `segments` are percent-encoded and joined under `/v1/`.
    pub fn call(
        &self,
        method: &str,
        segments: &[&str],
        query: &[(&str, String)],
        payload: Payload<'_>,
    ) -> Result<ureq::Response, CliError> {
        let path: Vec<String> = segments.iter().map(|s| utf8_percent_encode(s, SEGMENT).to_string()).collect();
        let mut req = self.agent.request(method, &format!("{}/v1/{}", self.server, path.join("/")));
        for (k, v) in query {
            req = req.query(k, v);
        }
        let res = match payload {
            Payload::Empty => req.call(),
            Payload::Json(v) => req.set("content-type", "application/json").send_string(&v.to_string()),
            Payload::Stream(r, len) => {
                req.set("content-type", "application/octet-stream").set("content-length", &len.to_string()).send(r)
            }
        };
        match res {
            Ok(r) => Ok(r),
            Err(ureq::Error::Status(status, r)) => Err(server_error(status, r)),
            Err(ureq::Error::Transport(t)) => Err(CliError::Connection(format!("{}: {t}", self.server))),
        }
    }

    pub fn json(
        &self,
        method: &str,
        segments: &[&str],
        query: &[(&str, String)],
        payload: Payload<'_>,
    ) -> Result<Value, CliError> {
        let res = self.call(method, segments, query, payload)?;
        serde_json::from_reader(res.into_reader()).map_err(|e| CliError::Protocol(format!("bad JSON from server: {e}")))
    }
}

fn server_error(status: u16, res: ureq::Response) -> CliError {
    let body: Value = serde_json::from_reader(res.into_reader()).unwrap_or(Value::Null);
    let text = |k: &str| body.get(k).and_then(Value::as_str).map(str::to_string);
    CliError::Server {
        status,
        code: text("error").unwrap_or_else(|| format!("HTTP_{status}")),
        reason: text("reason").unwrap_or_default(),
    }
}
