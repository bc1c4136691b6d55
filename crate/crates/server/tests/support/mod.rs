#![allow(dead_code)]

use std::io::Read;
use std::sync::Arc;

use rustls::pki_types::{CertificateDer, PrivateKeyDer, PrivatePkcs8KeyDer};
use rustls::RootCertStore;
use serde_json::Value;
use sfs_core::{IssuedCertificate, KeyMaterial};
use sfs_server::testbed::{Credentials, Testbed};

pub struct Resp {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Resp {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("not json ({e}): {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    /// `(error, reason)` of an error body.
    pub fn error(&self) -> (String, String) {
        let v = self.json();
        (v["error"].as_str().unwrap_or_default().into(), v["reason"].as_str().unwrap_or_default().into())
    }
}

pub fn tls_config(
    ca_pem: &std::path::Path,
    creds: Option<&Credentials>,
    versions: &[&'static rustls::SupportedProtocolVersion],
) -> Arc<rustls::ClientConfig> {
    let ca = IssuedCertificate::from_pem(&std::fs::read_to_string(ca_pem).unwrap()).unwrap();
    let mut roots = RootCertStore::empty();
    roots.add(CertificateDer::from(ca.der_bytes)).unwrap();
    let builder = rustls::ClientConfig::builder_with_provider(sfs_server::tls::provider())
        .with_protocol_versions(versions)
        .unwrap()
        .with_root_certificates(roots);
    let config = match creds {
        Some(c) => {
            let cert = IssuedCertificate::from_pem(&std::fs::read_to_string(&c.cert).unwrap()).unwrap();
            let key = KeyMaterial::from_pem(&std::fs::read_to_string(&c.key).unwrap()).unwrap();
            builder
                .with_client_auth_cert(
                    vec![CertificateDer::from(cert.der_bytes)],
                    PrivateKeyDer::Pkcs8(PrivatePkcs8KeyDer::from(key.private_key_der().unwrap())),
                )
                .unwrap()
        }
        None => builder.with_no_client_auth(),
    };
    Arc::new(config)
}

/// An HTTPS client bound to one identity (or none).
pub struct Client {
    agent: ureq::Agent,
    base: String,
}

impl Client {
    pub fn new(tb: &Testbed, creds: Option<&Credentials>) -> Client {
        Self::with_versions(tb, creds, sfs_server::tls::PROTOCOL_VERSIONS)
    }

    pub fn as_(tb: &Testbed, creds: &Credentials) -> Client {
        Self::new(tb, Some(creds))
    }

    pub fn admin(tb: &Testbed) -> Client {
        Self::new(tb, Some(&tb.admin))
    }

    pub fn with_versions(
        tb: &Testbed,
        creds: Option<&Credentials>,
        versions: &[&'static rustls::SupportedProtocolVersion],
    ) -> Client {
        let agent = ureq::AgentBuilder::new().tls_config(tls_config(&tb.admin.ca, creds, versions)).build();
        Client { agent, base: tb.url() }
    }

    pub fn try_send(&self, method: &str, path: &str, body: Option<&[u8]>) -> Result<Resp, Box<ureq::Transport>> {
        let req = self.agent.request(method, &format!("{}{path}", self.base));
        let res = match body {
            Some(b) => req.send_bytes(b),
            None => req.call(),
        };
        let res = match res {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(ureq::Error::Transport(t)) => return Err(Box::new(t)),
        };
        let status = res.status();
        let headers = res
            .headers_names()
            .into_iter()
            .map(|h| {
                let v = res.header(&h).unwrap_or_default().to_string();
                (h, v)
            })
            .collect();
        let mut body = Vec::new();
        res.into_reader().read_to_end(&mut body).unwrap();
        Ok(Resp { status, headers, body })
    }

    pub fn send(&self, method: &str, path: &str, body: Option<&[u8]>) -> Resp {
        self.try_send(method, path, body).unwrap_or_else(|e| panic!("{method} {path}: {e}"))
    }

    pub fn get(&self, path: &str) -> Resp {
        self.send("GET", path, None)
    }

    pub fn put(&self, path: &str, body: &[u8]) -> Resp {
        self.send("PUT", path, Some(body))
    }

    pub fn delete(&self, path: &str) -> Resp {
        self.send("DELETE", path, None)
    }

    pub fn json(&self, method: &str, path: &str, body: Value) -> Resp {
        self.send(method, path, Some(body.to_string().as_bytes()))
    }
}

/// Every audit event, read straight from the store.
pub fn audit(tb: &Testbed) -> Vec<sfs_core::AuditEvent> {
    tb.state().store.query_audit(&Default::default()).unwrap()
}

pub fn last_event(tb: &Testbed) -> sfs_core::AuditEvent {
    audit(tb).pop().expect("an audit event")
}
