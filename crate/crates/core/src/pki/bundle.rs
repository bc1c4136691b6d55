use std::io::{Cursor, Read, Write};
use std::path::{Path, PathBuf};

use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use super::{IssuedCertificate, KeyMaterial, PkiError, Result, CA_CERT_FILE};
use crate::fsutil;

/// What a principal needs to connect: their certificate and key plus the CA
/// certificate. Shipped as a zip of three PEM files.
#[derive(Debug, Clone)]
pub struct CredentialBundle {
    pub username: String,
    pub certificate: IssuedCertificate,
    pub key: KeyMaterial,
    pub ca: IssuedCertificate,
}

impl CredentialBundle {
    pub fn cert_file(&self) -> String {
        format!("{}.crt.pem", self.username)
    }

    pub fn key_file(&self) -> String {
        format!("{}.key.pem", self.username)
    }

    pub fn to_zip(&self) -> Result<Vec<u8>> {
        let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
        let opts = SimpleFileOptions::default()
            .compression_method(CompressionMethod::Deflated)
            .last_modified_time(DateTime::default());
        let members = [
            (self.cert_file(), self.certificate.to_pem()),
            (self.key_file(), self.key.private_key_pem.clone()),
            (CA_CERT_FILE.to_string(), self.ca.to_pem()),
        ];
        for (name, body) in members {
            let opts = if name.ends_with(".key.pem") { opts.unix_permissions(0o600) } else { opts };
            zip.start_file(name, opts).map_err(|e| PkiError::Build(e.to_string()))?;
            zip.write_all(body.as_bytes())?;
        }
        let cursor = zip.finish().map_err(|e| PkiError::Build(e.to_string()))?;
        Ok(cursor.into_inner())
    }

    pub fn from_zip(bytes: &[u8]) -> Result<Self> {
        let mut zip = ZipArchive::new(Cursor::new(bytes)).map_err(|e| PkiError::ParseFailure(e.to_string()))?;
        let cert_name = zip
            .file_names()
            .find(|n| n.ends_with(".crt.pem") && *n != CA_CERT_FILE)
            .map(str::to_string)
            .ok_or_else(|| PkiError::ParseFailure("bundle has no user certificate".into()))?;
        let username = cert_name.trim_end_matches(".crt.pem").to_string();
        let ca = IssuedCertificate::from_pem(&read_member(&mut zip, CA_CERT_FILE)?)?;
        let certificate = IssuedCertificate::from_pem(&read_member(&mut zip, &cert_name)?)?;
        let key = KeyMaterial::from_pem(&read_member(&mut zip, &format!("{username}.key.pem"))?)?;
        Ok(CredentialBundle { username, certificate, key, ca })
    }

    /// Write the three PEM files into `dir`; the key file is owner-only.
    /// Returns the (certificate, key, CA) paths.
    pub fn write_dir(&self, dir: &Path) -> Result<(PathBuf, PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let cert = dir.join(self.cert_file());
        let key = dir.join(self.key_file());
        let ca = dir.join(CA_CERT_FILE);
        fsutil::atomic_write(&cert, self.certificate.to_pem().as_bytes())?;
        let mut f = fsutil::create_private(&key, true)?;
        f.write_all(self.key.private_key_pem.as_bytes())?;
        f.sync_all()?;
        fsutil::atomic_write(&ca, self.ca.to_pem().as_bytes())?;
        Ok((cert, key, ca))
    }
}

fn read_member(zip: &mut ZipArchive<Cursor<&[u8]>>, name: &str) -> Result<String> {
    let mut f = zip.by_name(name).map_err(|e| PkiError::ParseFailure(format!("{name}: {e}")))?;
    let mut s = String::new();
    f.read_to_string(&mut s)?;
    Ok(s)
}
