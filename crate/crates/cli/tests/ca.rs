mod support;

use sfs_cli::Environment;
use sfs_core::pki::{self, ValidationResult};
use sfs_core::{IssuedCertificate, KeyMaterial};
use support::sfs;

fn read_cert(path: &std::path::Path) -> IssuedCertificate {
    IssuedCertificate::from_pem(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn init_creates_a_root_and_refuses_to_clobber_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let env = Environment::default();
    let v = sfs(&env, &["--json", "ca", "init", "--cn", "SFS Root CA", "--dir", d]).ok().json();
    assert_eq!(v["subject"], "cn=SFS Root CA,o=SFS");

    let cert = read_cert(&dir.path().join(pki::CA_CERT_FILE));
    assert!(cert.is_ca());
    assert_eq!(pki::validate_chain(&cert, &cert, time::OffsetDateTime::now_utc()).unwrap(), ValidationResult::Ok);
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = std::fs::metadata(dir.path().join(pki::CA_KEY_FILE)).unwrap().permissions().mode();
        assert_eq!(mode & 0o777, 0o600);
    }

    let again = sfs(&env, &["ca", "init", "--cn", "Other", "--dir", d]);
    assert_eq!(again.code, 1);
    assert!(again.err.contains("CA_ALREADY_EXISTS"), "{}", again.err);
    assert_eq!(read_cert(&dir.path().join(pki::CA_CERT_FILE)), cert);

    sfs(&env, &["ca", "init", "--cn", "Other", "--dir", d, "--force"]).ok();
    assert_ne!(read_cert(&dir.path().join(pki::CA_CERT_FILE)).fingerprint_sha256, cert.fingerprint_sha256);
}

#[test]
fn server_certificate_chains_to_the_new_root() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = dir.path().join("server");
    let env = Environment::default();
    sfs(&env, &["ca", "init", "--cn", "SFS Root CA", "--org", "Example Lab", "--dir", d]).ok();
    let v = sfs(
        &env,
        &[
            "--json",
            "ca",
            "issue-server",
            "--host",
            "localhost",
            "--host",
            "127.0.0.1",
            "--ca-dir",
            d,
            "--out",
            out.to_str().unwrap(),
        ],
    )
    .ok()
    .json();
    assert_eq!(v["hosts"], serde_json::json!(["localhost", "127.0.0.1"]));

    let (ca, _) = pki::load_ca(dir.path()).unwrap();
    assert_eq!(ca.subject_dn.to_string(), "cn=SFS Root CA,o=Example Lab");
    let server = read_cert(&out.join("server.crt.pem"));
    let key = KeyMaterial::from_pem(&std::fs::read_to_string(out.join("server.key.pem")).unwrap()).unwrap();
    assert!(!server.is_ca());
    assert!(server.matches_key(&key).unwrap());
    assert_eq!(pki::validate_chain(&server, &ca, time::OffsetDateTime::now_utc()).unwrap(), ValidationResult::Ok);
    // the pair is usable as a TLS identity
    sfs_server::tls::server_config(&ca, &server, &key).unwrap();
}

#[test]
fn bad_ca_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let env = Environment::default();
    assert_eq!(sfs(&env, &["ca", "init", "--cn", "a,o=evil", "--dir", d]).code, 2);
    assert_eq!(sfs(&env, &["ca", "issue-server", "--ca-dir", d]).code, 2);
    // no CA in the directory
    let r = sfs(&env, &["ca", "issue-server", "--host", "localhost", "--ca-dir", d, "--out", d]);
    assert_eq!(r.code, 1, "{}", r.err);
}
