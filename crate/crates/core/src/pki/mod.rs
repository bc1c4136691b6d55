//! The system's own certificate authority.
//!
//! Every certificate uses ECDSA P-256. Serial numbers are 16 random bytes.
//! A client certificate carries the username in its single `uid` RDN.

mod bundle;
mod name;

use std::fmt;
use std::io::{self, Write};
use std::net::IpAddr;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, SystemTime};

use p256::ecdsa::{DerSignature, SigningKey, VerifyingKey};
use p256::pkcs8::{DecodePrivateKey, DecodePublicKey, EncodePrivateKey, EncodePublicKey, LineEnding};
use rand::rngs::OsRng;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use time::OffsetDateTime;
use x509_cert::builder::{Builder, CertificateBuilder, Profile};
use x509_cert::der::asn1::{Ia5String, OctetString};
use x509_cert::der::flagset::FlagSet;
use x509_cert::der::oid::db::rfc5280::{ID_KP_CLIENT_AUTH, ID_KP_SERVER_AUTH};
use x509_cert::der::oid::db::rfc5912::ECDSA_WITH_SHA_256;
use x509_cert::der::referenced::OwnedToRef;
use x509_cert::der::{Decode, DecodePem, Encode, EncodePem};
use x509_cert::ext::pkix::name::GeneralName;
use x509_cert::ext::pkix::{
    AuthorityKeyIdentifier, BasicConstraints, ExtendedKeyUsage, KeyUsage, KeyUsages, SubjectAltName,
    SubjectKeyIdentifier,
};
use x509_cert::serial_number::SerialNumber;
use x509_cert::spki::SubjectPublicKeyInfoOwned;
use x509_cert::time::{Time, Validity};
use x509_cert::Certificate;

use crate::directory::{AttributeType, DistinguishedName};
use crate::fsutil;

pub use bundle::CredentialBundle;

pub const CA_CERT_FILE: &str = "ca.crt.pem";
pub const CA_KEY_FILE: &str = "ca.key.pem";
pub const MAX_VALIDITY_DAYS: u32 = 3650;

/// Tolerance applied to `not_before` during validation.
pub const CLOCK_SKEW: time::Duration = time::Duration::seconds(60);

#[derive(Debug, Error)]
pub enum PkiError {
    #[error("CA files already exist in {0}")]
    CaAlreadyExists(String),
    #[error("issuer certificate is not a CA")]
    NotACa,
    #[error("invalid certificate profile: {0}")]
    InvalidProfile(String),
    #[error("input is empty")]
    EmptyInput,
    #[error("cannot parse: {0}")]
    ParseFailure(String),
    #[error("CA key does not match the CA certificate")]
    KeyMismatch,
    #[error("certificate construction failed: {0}")]
    Build(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl PkiError {
    pub fn code(&self) -> &'static str {
        match self {
            PkiError::CaAlreadyExists(_) => "CA_ALREADY_EXISTS",
            PkiError::NotACa => "NOT_A_CA",
            PkiError::InvalidProfile(_) => "INVALID_PROFILE",
            PkiError::EmptyInput => "EMPTY_INPUT",
            PkiError::ParseFailure(_) => "PARSE_FAILURE",
            PkiError::KeyMismatch => "KEY_MISMATCH",
            PkiError::Build(_) => "BUILD_FAILURE",
            PkiError::Io(_) => "IO_FAILURE",
        }
    }
}

fn parse_err(e: impl fmt::Display) -> PkiError {
    PkiError::ParseFailure(e.to_string())
}

fn build_err(e: impl fmt::Display) -> PkiError {
    PkiError::Build(e.to_string())
}

pub type Result<T, E = PkiError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Ca,
    Server,
    Client,
}

impl FromStr for CertificateKind {
    type Err = PkiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ca" => Ok(CertificateKind::Ca),
            "server" => Ok(CertificateKind::Server),
            "client" => Ok(CertificateKind::Client),
            _ => Err(PkiError::InvalidProfile(format!("unknown kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateProfile {
    pub kind: CertificateKind,
    pub subject: DistinguishedName,
    pub validity_days: u32,
    /// Host names (or IP literals) for a server certificate.
    pub san_dns_names: Vec<String>,
}

impl CertificateProfile {
    /// Client profile for `username` under the people branch of `base`.
    pub fn client(username: &str, base: &DistinguishedName, validity_days: u32) -> Self {
        CertificateProfile {
            kind: CertificateKind::Client,
            subject: base.child(AttributeType::Ou, "people").child(AttributeType::Uid, username),
            validity_days,
            san_dns_names: Vec::new(),
        }
    }

    /// Server profile named after the first host.
    pub fn server(hosts: &[&str], validity_days: u32) -> Result<Self> {
        let first = hosts.first().ok_or_else(|| PkiError::InvalidProfile("no host names".into()))?;
        let subject = DistinguishedName::from_rdns(vec![
            crate::directory::Rdn::new(AttributeType::Cn, *first),
            crate::directory::Rdn::new(AttributeType::O, "SFS"),
        ])
        .map_err(|e| PkiError::InvalidProfile(e.to_string()))?;
        Ok(CertificateProfile {
            kind: CertificateKind::Server,
            subject,
            validity_days,
            san_dns_names: hosts.iter().map(|h| h.to_string()).collect(),
        })
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(PkiError::InvalidProfile(m.to_string()));
        if self.validity_days < 1 || self.validity_days > MAX_VALIDITY_DAYS {
            return bad("validity_days must be between 1 and 3650");
        }
        if self.kind == CertificateKind::Client {
            if self.subject.count(AttributeType::Uid) != 1 {
                return bad("client subject must contain exactly one uid RDN");
            }
            let uid = self.subject.first(AttributeType::Uid).unwrap_or_default();
            if !crate::naming::is_valid_name(uid) {
                return bad("uid is not a valid username");
            }
        }
        match (self.kind == CertificateKind::Server, self.san_dns_names.is_empty()) {
            (true, true) => return bad("server certificates need at least one host name"),
            (false, false) => return bad("only server certificates carry host names"),
            _ => {}
        }
        for h in &self.san_dns_names {
            if h.parse::<IpAddr>().is_err() && Ia5String::new(h).is_err() {
                return bad("host names must be ASCII");
            }
        }
        Ok(())
    }
}

/// A decoded certificate. `der_bytes` is authoritative; the other fields are
/// read from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssuedCertificate {
    pub serial: Vec<u8>,
    pub subject_dn: DistinguishedName,
    pub issuer_dn: DistinguishedName,
    pub not_before: OffsetDateTime,
    pub not_after: OffsetDateTime,
    pub der_bytes: Vec<u8>,
    pub fingerprint_sha256: String,
    is_ca: bool,
}

fn to_offset(t: Time) -> Result<OffsetDateTime> {
    let secs = t.to_unix_duration().as_secs();
    OffsetDateTime::from_unix_timestamp(secs as i64).map_err(parse_err)
}

impl IssuedCertificate {
    pub fn from_der(der: &[u8]) -> Result<Self> {
        let cert = Certificate::from_der(der).map_err(parse_err)?;
        Self::from_parts(&cert, der.to_vec())
    }

    pub fn from_pem(pem: &str) -> Result<Self> {
        let cert = Certificate::from_pem(pem.trim_start()).map_err(parse_err)?;
        let der = cert.to_der().map_err(parse_err)?;
        Self::from_parts(&cert, der)
    }

    fn from_parts(cert: &Certificate, der: Vec<u8>) -> Result<Self> {
        let tbs = &cert.tbs_certificate;
        let is_ca = tbs.get::<BasicConstraints>().map_err(parse_err)?.is_some_and(|(_, bc)| bc.ca);
        Ok(IssuedCertificate {
            serial: tbs.serial_number.as_bytes().to_vec(),
            subject_dn: name::from_x509(&tbs.subject).map_err(PkiError::ParseFailure)?,
            issuer_dn: name::from_x509(&tbs.issuer).map_err(PkiError::ParseFailure)?,
            not_before: to_offset(tbs.validity.not_before)?,
            not_after: to_offset(tbs.validity.not_after)?,
            fingerprint_sha256: crate::sha256_hex(&der),
            der_bytes: der,
            is_ca,
        })
    }

    pub fn to_pem(&self) -> String {
        // der_bytes parsed when this value was built
        let cert = Certificate::from_der(&self.der_bytes).expect("valid DER");
        cert.to_pem(LineEnding::LF).expect("PEM encoding")
    }

    pub fn is_ca(&self) -> bool {
        self.is_ca
    }

    /// The `uid` RDN of the subject, if there is exactly one.
    pub fn username(&self) -> Option<&str> {
        (self.subject_dn.count(AttributeType::Uid) == 1).then(|| self.subject_dn.first(AttributeType::Uid)).flatten()
    }

    pub fn serial_hex(&self) -> String {
        hex::encode(&self.serial)
    }

    fn public_key(&self) -> Result<VerifyingKey> {
        let cert = Certificate::from_der(&self.der_bytes).map_err(parse_err)?;
        let spki = cert.tbs_certificate.subject_public_key_info.to_der().map_err(parse_err)?;
        VerifyingKey::from_public_key_der(&spki).map_err(parse_err)
    }

    /// Whether `key` is the private half of this certificate's public key.
    pub fn matches_key(&self, key: &KeyMaterial) -> Result<bool> {
        let ours = self.public_key()?.to_public_key_der().map_err(parse_err)?;
        let theirs = key.signing_key()?.verifying_key().to_public_key_der().map_err(parse_err)?;
        Ok(ours.as_bytes() == theirs.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyAlgorithm {
    EcdsaP256,
}

/// A key pair. The private half is kept as PKCS#8 PEM.
#[derive(Clone)]
pub struct KeyMaterial {
    pub algorithm: KeyAlgorithm,
    pub private_key_pem: String,
    pub public_key_der: Vec<u8>,
}

impl fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyMaterial")
            .field("algorithm", &self.algorithm)
            .field("public_key", &crate::sha256_hex(&self.public_key_der))
            .finish_non_exhaustive()
    }
}

impl KeyMaterial {
    pub fn generate() -> Self {
        Self::from_signing_key(&SigningKey::random(&mut OsRng))
    }

    fn from_signing_key(key: &SigningKey) -> Self {
        let pem = key.to_pkcs8_pem(LineEnding::LF).expect("PKCS#8 encoding");
        let public = key.verifying_key().to_public_key_der().expect("SPKI encoding");
        KeyMaterial {
            algorithm: KeyAlgorithm::EcdsaP256,
            private_key_pem: pem.to_string(),
            public_key_der: public.as_bytes().to_vec(),
        }
    }

    pub fn from_pem(pem: &str) -> Result<Self> {
        let key = SigningKey::from_pkcs8_pem(pem.trim()).map_err(parse_err)?;
        Ok(Self::from_signing_key(&key))
    }

    fn signing_key(&self) -> Result<SigningKey> {
        SigningKey::from_pkcs8_pem(self.private_key_pem.trim()).map_err(parse_err)
    }

    /// The private key as PKCS#8 DER.
    pub fn private_key_der(&self) -> Result<Vec<u8>> {
        let doc = self.signing_key()?.to_pkcs8_der().map_err(parse_err)?;
        Ok(doc.as_bytes().to_vec())
    }
}

fn random_serial() -> Result<SerialNumber> {
    let mut bytes = [0u8; 16];
    OsRng.fill_bytes(&mut bytes);
    // positive and exactly 16 octets once DER-encoded
    bytes[0] = (bytes[0] & 0x3f) | 0x40;
    SerialNumber::new(&bytes).map_err(build_err)
}

fn validity(days: u32) -> Result<Validity> {
    // whole seconds: X.509 times carry no fractions
    let now = SystemTime::UNIX_EPOCH
        + Duration::from_secs(SystemTime::now().duration_since(SystemTime::UNIX_EPOCH).unwrap_or_default().as_secs());
    let end = now + Duration::from_secs(u64::from(days) * 86_400);
    Ok(Validity {
        not_before: Time::try_from(now).map_err(build_err)?,
        not_after: Time::try_from(end).map_err(build_err)?,
    })
}

fn sign(
    profile: &CertificateProfile,
    issuer: Option<&DistinguishedName>,
    signer: &SigningKey,
    subject_key: &SigningKey,
) -> Result<IssuedCertificate> {
    let subject = name::to_x509(&profile.subject).map_err(build_err)?;
    let issuer_name = issuer.map(name::to_x509).transpose().map_err(build_err)?;
    let spki = SubjectPublicKeyInfoOwned::from_key(*subject_key.verifying_key()).map_err(build_err)?;
    let issuer_spki = SubjectPublicKeyInfoOwned::from_key(*signer.verifying_key()).map_err(build_err)?;

    let mut builder = CertificateBuilder::new(
        Profile::Manual { issuer: issuer_name },
        random_serial()?,
        validity(profile.validity_days)?,
        subject,
        spki.clone(),
        signer,
    )
    .map_err(build_err)?;

    let is_ca = profile.kind == CertificateKind::Ca;
    builder
        .add_extension(&BasicConstraints { ca: is_ca, path_len_constraint: is_ca.then_some(0) })
        .map_err(build_err)?;
    let usage: FlagSet<KeyUsages> =
        if is_ca { KeyUsages::KeyCertSign | KeyUsages::CRLSign } else { KeyUsages::DigitalSignature.into() };
    builder.add_extension(&KeyUsage(usage)).map_err(build_err)?;
    builder
        .add_extension(&SubjectKeyIdentifier::try_from(spki.owned_to_ref()).map_err(build_err)?)
        .map_err(build_err)?;
    if !is_ca {
        builder
            .add_extension(&AuthorityKeyIdentifier::try_from(issuer_spki.owned_to_ref()).map_err(build_err)?)
            .map_err(build_err)?;
    }
    match profile.kind {
        CertificateKind::Ca => {}
        CertificateKind::Client => {
            builder.add_extension(&ExtendedKeyUsage(vec![ID_KP_CLIENT_AUTH])).map_err(build_err)?;
        }
        CertificateKind::Server => {
            builder.add_extension(&ExtendedKeyUsage(vec![ID_KP_SERVER_AUTH])).map_err(build_err)?;
            let mut names = Vec::new();
            for host in &profile.san_dns_names {
                names.push(match host.parse::<IpAddr>() {
                    Ok(IpAddr::V4(ip)) => GeneralName::IpAddress(OctetString::new(ip.octets()).map_err(build_err)?),
                    Ok(IpAddr::V6(ip)) => GeneralName::IpAddress(OctetString::new(ip.octets()).map_err(build_err)?),
                    Err(_) => GeneralName::DnsName(Ia5String::new(host).map_err(build_err)?),
                });
            }
            builder.add_extension(&SubjectAltName(names)).map_err(build_err)?;
        }
    }

    let cert = builder.build::<DerSignature>().map_err(build_err)?;
    let der = cert.to_der().map_err(build_err)?;
    IssuedCertificate::from_der(&der)
}

/// Create a self-signed CA and write `ca.crt.pem` and `ca.key.pem` into
/// `out_dir`. Existing files are replaced only when `force` is set.
pub fn init_ca(
    subject: &DistinguishedName,
    validity_days: u32,
    out_dir: &Path,
    force: bool,
) -> Result<(IssuedCertificate, KeyMaterial)> {
    let profile = CertificateProfile {
        kind: CertificateKind::Ca,
        subject: subject.clone(),
        validity_days,
        san_dns_names: Vec::new(),
    };
    profile.check()?;
    std::fs::create_dir_all(out_dir)?;
    let key_path = out_dir.join(CA_KEY_FILE);
    let cert_path = out_dir.join(CA_CERT_FILE);
    if !force && cert_path.exists() {
        return Err(PkiError::CaAlreadyExists(out_dir.display().to_string()));
    }
    // the exclusive create of the key file decides concurrent runs
    let mut key_file = match fsutil::create_private(&key_path, force) {
        Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
            return Err(PkiError::CaAlreadyExists(out_dir.display().to_string()))
        }
        other => other?,
    };
    let key = SigningKey::random(&mut OsRng);
    let cert = sign(&profile, None, &key, &key)?;
    let material = KeyMaterial::from_signing_key(&key);
    key_file.write_all(material.private_key_pem.as_bytes())?;
    key_file.sync_all()?;
    fsutil::atomic_write(&cert_path, cert.to_pem().as_bytes())?;
    Ok((cert, material))
}

/// Load the CA written by [`init_ca`].
pub fn load_ca(dir: &Path) -> Result<(IssuedCertificate, KeyMaterial)> {
    let cert = IssuedCertificate::from_pem(&std::fs::read_to_string(dir.join(CA_CERT_FILE))?)?;
    let key = KeyMaterial::from_pem(&std::fs::read_to_string(dir.join(CA_KEY_FILE))?)?;
    Ok((cert, key))
}

/// Issue a certificate for `profile` under the given CA with a fresh key.
pub fn issue_certificate(
    ca_cert: &IssuedCertificate,
    ca_key: &KeyMaterial,
    profile: &CertificateProfile,
) -> Result<(IssuedCertificate, KeyMaterial)> {
    if !ca_cert.is_ca() {
        return Err(PkiError::NotACa);
    }
    profile.check()?;
    if !ca_cert.matches_key(ca_key)? {
        return Err(PkiError::KeyMismatch);
    }
    let signer = ca_key.signing_key()?;
    let key = SigningKey::random(&mut OsRng);
    let cert = sign(profile, Some(&ca_cert.subject_dn), &signer, &key)?;
    Ok((cert, KeyMaterial::from_signing_key(&key)))
}

/// Lowercase hex SHA-256 of `der`.
pub fn fingerprint(der: &[u8]) -> Result<String> {
    if der.is_empty() {
        return Err(PkiError::EmptyInput);
    }
    Ok(crate::sha256_hex(der))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InvalidReason {
    BadSignature,
    Expired,
    NotYetValid,
    UnexpectedCa,
}

impl InvalidReason {
    pub fn as_str(self) -> &'static str {
        match self {
            InvalidReason::BadSignature => "BAD_SIGNATURE",
            InvalidReason::Expired => "EXPIRED",
            InvalidReason::NotYetValid => "NOT_YET_VALID",
            InvalidReason::UnexpectedCa => "UNEXPECTED_CA",
        }
    }
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationResult {
    Ok,
    Invalid(InvalidReason),
}

impl ValidationResult {
    pub fn is_ok(self) -> bool {
        self == ValidationResult::Ok
    }
}

/// Check `leaf` against `ca` at `at_time`: signature, then validity window,
/// then that the leaf is not a CA. A CA checked against itself passes the
/// last test.
pub fn validate_chain(
    leaf: &IssuedCertificate,
    ca: &IssuedCertificate,
    at_time: OffsetDateTime,
) -> Result<ValidationResult> {
    use p256::ecdsa::signature::Verifier;

    let cert = Certificate::from_der(&leaf.der_bytes).map_err(parse_err)?;
    let ca_key = ca.public_key()?;
    let tbs = cert.tbs_certificate.to_der().map_err(parse_err)?;
    let signature_ok = cert.signature_algorithm.oid == ECDSA_WITH_SHA_256
        && cert
            .signature
            .as_bytes()
            .is_some_and(|raw| DerSignature::from_bytes(raw).is_ok_and(|sig| ca_key.verify(&tbs, &sig).is_ok()));
    if !signature_ok {
        return Ok(ValidationResult::Invalid(InvalidReason::BadSignature));
    }
    let not_before = to_offset(cert.tbs_certificate.validity.not_before)?;
    let not_after = to_offset(cert.tbs_certificate.validity.not_after)?;
    if at_time < not_before - CLOCK_SKEW {
        return Ok(ValidationResult::Invalid(InvalidReason::NotYetValid));
    }
    if at_time > not_after {
        return Ok(ValidationResult::Invalid(InvalidReason::Expired));
    }
    if leaf.is_ca() && leaf.der_bytes != ca.der_bytes {
        return Ok(ValidationResult::Invalid(InvalidReason::UnexpectedCa));
    }
    Ok(ValidationResult::Ok)
}
