#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener};
use std::path::Path;
use std::sync::Arc;

use serde_json::Value;
use sfs_cli::settings::{ENV_CA, ENV_CERT, ENV_KEY, ENV_SERVER};
use sfs_cli::Environment;
use sfs_core::pki::{self, CertificateProfile};
use sfs_core::{IssuedCertificate, KeyMaterial};
use sfs_server::testbed::{Credentials, Testbed};

#[derive(Debug)]
pub struct Run {
    pub code: i32,
    pub out: String,
    pub err: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.out).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {:?}", self.out))
    }

    pub fn ok(self) -> Self {
        assert_eq!(self.code, 0, "stderr: {}", self.err);
        self
    }

    /// Exit code and, for JSON-mode failures, the `error` field on stderr.
    pub fn failure(&self) -> (i32, String) {
        let err: Value = serde_json::from_str(self.err.trim()).unwrap_or(Value::Null);
        (self.code, err["error"].as_str().unwrap_or_default().to_string())
    }
}

pub fn sfs(env: &Environment, args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sfs").chain(args.iter().copied());
    let code = sfs_cli::run_with(argv, env, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

/// Environment pointing at `server` with `creds`, and no home directory.
pub fn env_at(server: &str, creds: &Credentials) -> Environment {
    Environment::default()
        .with(ENV_SERVER, server)
        .with(ENV_CA, creds.ca.display().to_string())
        .with(ENV_CERT, creds.cert.display().to_string())
        .with(ENV_KEY, creds.key.display().to_string())
}

pub fn env_for(tb: &Testbed, creds: &Credentials) -> Environment {
    env_at(&tb.url(), creds)
}

/// Unpack what `admin cert issue --out` wrote into usable credentials.
pub fn creds_in(dir: &Path, username: &str) -> Credentials {
    let cert = dir.join(format!("{username}.crt.pem"));
    let fingerprint = IssuedCertificate::from_pem(&std::fs::read_to_string(&cert).unwrap()).unwrap().fingerprint_sha256;
    Credentials {
        username: username.into(),
        cert,
        key: dir.join(format!("{username}.key.pem")),
        ca: dir.join(pki::CA_CERT_FILE),
        fingerprint,
    }
}

/// A TLS listener that answers every request with `response` verbatim,
/// using a server certificate for `hosts` under the testbed CA.
pub struct FakeServer {
    pub addr: SocketAddr,
}

impl FakeServer {
    pub fn spawn(tb: &Testbed, hosts: &[&str], response: Vec<u8>) -> FakeServer {
        let ca = IssuedCertificate::from_pem(&std::fs::read_to_string(&tb.config.ca_cert).unwrap()).unwrap();
        let ca_key = KeyMaterial::from_pem(&std::fs::read_to_string(&tb.config.ca_key).unwrap()).unwrap();
        let (cert, key) = pki::issue_certificate(&ca, &ca_key, &CertificateProfile::server(hosts, 1).unwrap()).unwrap();
        let config: Arc<rustls::ServerConfig> = sfs_server::tls::server_config(&ca, &cert, &key).unwrap();
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for tcp in listener.incoming() {
                let Ok(tcp) = tcp else { continue };
                let Ok(conn) = rustls::ServerConnection::new(config.clone()) else { continue };
                let mut tls = rustls::StreamOwned::new(conn, tcp);
                let mut reader = BufReader::new(&mut tls);
                let mut line = String::new();
                // read the request head; a failed handshake surfaces here
                let mut ok = true;
                loop {
                    line.clear();
                    match reader.read_line(&mut line) {
                        Ok(0) | Err(_) => {
                            ok = false;
                            break;
                        }
                        Ok(_) if line == "\r\n" => break,
                        Ok(_) => {}
                    }
                }
                if ok {
                    let _ = tls.write_all(&response);
                    let _ = tls.flush();
                    tls.conn.send_close_notify();
                    let _ = tls.flush();
                }
            }
        });
        FakeServer { addr }
    }
}

pub fn http_response(status: &str, headers: &[(&str, &str)], body: &[u8]) -> Vec<u8> {
    let mut r = format!("HTTP/1.1 {status}\r\ncontent-length: {}\r\nconnection: close\r\n", body.len());
    for (k, v) in headers {
        r.push_str(&format!("{k}: {v}\r\n"));
    }
    r.push_str("\r\n");
    let mut bytes = r.into_bytes();
    bytes.extend_from_slice(body);
    bytes
}

/// Onboard two users through the CLI alone, put them in a group and move a
/// file between them. Panics on the first step that does not exit 0.
pub fn admin_loop(tb: &Testbed) {
    let admin = env_for(tb, &tb.admin);
    let work = tempfile::tempdir().unwrap();
    for user in ["dave", "carol"] {
        sfs(&admin, &["admin", "user", "add", user]).ok();
        let dir = work.path().join(user);
        let v = sfs(&admin, &["--json", "admin", "cert", "issue", user, "--out", dir.to_str().unwrap()]).ok().json();
        assert_eq!(v["username"], user);
    }
    sfs(&admin, &["admin", "group", "add", "research"]).ok();
    for user in ["dave", "carol"] {
        sfs(&admin, &["admin", "group", "member", "add", "research", user]).ok();
    }
    let dave = env_for(tb, &creds_in(&work.path().join("dave"), "dave"));
    let carol = env_for(tb, &creds_in(&work.path().join("carol"), "carol"));

    let src = work.path().join("findings.csv");
    let data: Vec<u8> = (0..200_000u32).flat_map(|i| i.to_le_bytes()).collect();
    std::fs::write(&src, &data).unwrap();
    sfs(&dave, &["put", "group:research", src.to_str().unwrap()]).ok();
    let dest = work.path().join("received.csv");
    sfs(&carol, &["get", "group:research", "findings.csv", "-o", dest.to_str().unwrap()]).ok();
    assert!(std::fs::read(&dest).unwrap() == data, "carol received different bytes");
}
