//! Flat `key = value` configuration.
//!
//! ```text
//! listen = 127.0.0.1:8443
//! ca_cert = /etc/sfs/ca.crt.pem
//! ca_key = /etc/sfs/ca.key.pem
//! server_cert = /etc/sfs/server.crt.pem
//! server_key = /etc/sfs/server.key.pem
//! directory.path = /var/lib/sfs/directory.ldif
//! store.path = /var/lib/sfs/data
//! max_upload_bytes = 268435456
//! base_dn = dc=sfs,dc=local
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use sfs_core::directory::DEFAULT_BASE_DN;
use sfs_core::store::DEFAULT_MAX_UPLOAD_BYTES;
use sfs_core::DistinguishedName;
use thiserror::Error;

/// Environment variable naming the config file when `--config` is absent.
pub const CONFIG_ENV: &str = "SFS_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("no config file: pass --config or set {CONFIG_ENV}")]
    NoConfig,
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub ca_cert: PathBuf,
    pub ca_key: PathBuf,
    pub server_cert: PathBuf,
    pub server_key: PathBuf,
    pub directory_path: PathBuf,
    pub store_path: PathBuf,
    pub max_upload_bytes: u64,
    pub base_dn: DistinguishedName,
}

impl ServerConfig {
    /// `--config` wins over `SFS_CONFIG`.
    pub fn locate(flag: Option<&Path>) -> Result<PathBuf, ConfigError> {
        match flag {
            Some(p) => Ok(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).map(PathBuf::from).ok_or(ConfigError::NoConfig),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let cfg = Self::parse(&text)?;
        cfg.check_files()?;
        Ok(cfg)
    }

    /// Parse config text. Relative paths are kept as written.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut listen = None;
        let mut ca_cert = None;
        let mut ca_key = None;
        let mut server_cert = None;
        let mut server_key = None;
        let mut directory_path = None;
        let mut store_path = None;
        let mut max_upload_bytes = DEFAULT_MAX_UPLOAD_BYTES;
        let mut base_dn: DistinguishedName = DEFAULT_BASE_DN.parse().expect("default base DN");

        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: &str| ConfigError::Syntax { line: i + 1, message: message.to_string() };
            let (key, value) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(syntax("empty value"));
            }
            match key {
                "listen" => {
                    let addr: SocketAddr =
                        value.parse().map_err(|e| ConfigError::Invalid { key: "listen", message: format!("{e}") })?;
                    if addr.port() == 0 {
                        return Err(ConfigError::Invalid { key: "listen", message: "port must be 1-65535".into() });
                    }
                    listen = Some(addr);
                }
                "ca_cert" => ca_cert = Some(PathBuf::from(value)),
                "ca_key" => ca_key = Some(PathBuf::from(value)),
                "server_cert" => server_cert = Some(PathBuf::from(value)),
                "server_key" => server_key = Some(PathBuf::from(value)),
                "directory.path" => directory_path = Some(PathBuf::from(value)),
                "store.path" => store_path = Some(PathBuf::from(value)),
                "max_upload_bytes" => {
                    max_upload_bytes = value
                        .parse()
                        .map_err(|e| ConfigError::Invalid { key: "max_upload_bytes", message: format!("{e}") })?
                }
                "base_dn" => {
                    base_dn =
                        value.parse().map_err(|e| ConfigError::Invalid { key: "base_dn", message: format!("{e}") })?
                }
                other => return Err(syntax(&format!("unknown key `{other}`"))),
            }
        }

        Ok(ServerConfig {
            listen: listen.ok_or(ConfigError::Missing("listen"))?,
            ca_cert: ca_cert.ok_or(ConfigError::Missing("ca_cert"))?,
            ca_key: ca_key.ok_or(ConfigError::Missing("ca_key"))?,
            server_cert: server_cert.ok_or(ConfigError::Missing("server_cert"))?,
            server_key: server_key.ok_or(ConfigError::Missing("server_key"))?,
            directory_path: directory_path.ok_or(ConfigError::Missing("directory.path"))?,
            store_path: store_path.ok_or(ConfigError::Missing("store.path"))?,
            max_upload_bytes,
            base_dn,
        })
    }

    /// Credentials must exist; the data locations only need an existing
    /// parent, since a fresh install creates them.
    pub fn check_files(&self) -> Result<(), ConfigError> {
        for (key, path) in [
            ("ca_cert", &self.ca_cert),
            ("ca_key", &self.ca_key),
            ("server_cert", &self.server_cert),
            ("server_key", &self.server_key),
        ] {
            if !path.is_file() {
                return Err(ConfigError::Invalid { key, message: format!("{} does not exist", path.display()) });
            }
        }
        for (key, path) in [("directory.path", &self.directory_path), ("store.path", &self.store_path)] {
            let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !parent.is_dir() {
                return Err(ConfigError::Invalid { key, message: format!("{} does not exist", parent.display()) });
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        format!(
            "listen = {}\nca_cert = {}\nca_key = {}\nserver_cert = {}\nserver_key = {}\n\
             directory.path = {}\nstore.path = {}\nmax_upload_bytes = {}\nbase_dn = {}\n",
            self.listen,
            self.ca_cert.display(),
            self.ca_key.display(),
            self.server_cert.display(),
            self.server_key.display(),
            self.directory_path.display(),
            self.store_path.display(),
            self.max_upload_bytes,
            self.base_dn,
        )
    }
}
