//! Where the client finds its server and credentials: flags, then
//! environment, then `~/.sfs/config`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::args::ConnFlags;
use crate::CliError;

pub const ENV_SERVER: &str = "SFS_SERVER";
pub const ENV_CA: &str = "SFS_CA";
pub const ENV_CERT: &str = "SFS_CERT";
pub const ENV_KEY: &str = "SFS_KEY";

/// The parts of the process environment the client reads.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    pub vars: BTreeMap<String, String>,
    pub home: Option<PathBuf>,
}

impl Environment {
    pub fn from_process() -> Self {
        let vars = [ENV_SERVER, ENV_CA, ENV_CERT, ENV_KEY]
            .into_iter()
            .filter_map(|k| std::env::var(k).ok().map(|v| (k.to_string(), v)))
            .collect();
        Environment { vars, home: std::env::var_os("HOME").map(PathBuf::from) }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.vars.insert(key.into(), value.into());
        self
    }

    fn var(&self, key: &str) -> Option<&str> {
        self.vars.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn default_config_path(&self) -> Option<PathBuf> {
        self.home.as_ref().map(|h| h.join(".sfs").join("config"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientConfig {
    pub server: String,
    pub ca_cert: PathBuf,
    pub client_cert: PathBuf,
    pub client_key: PathBuf,
}

/// Flat `key = value` lines; `#` starts a comment. Relative paths are taken
/// relative to the file's directory.
fn read_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("{}:{}: expected key = value", path.display(), i + 1)));
        };
        let k = k.trim();
        if !matches!(k, "server" | "ca" | "cert" | "key") {
            return Err(CliError::Config(format!("{}:{}: unknown key `{k}`", path.display(), i + 1)));
        }
        let mut v = v.trim().to_string();
        if k != "server" {
            let p = Path::new(&v);
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    v = dir.join(p).display().to_string();
                }
            }
        }
        out.insert(k.to_string(), v);
    }
    Ok(out)
}

impl ClientConfig {
    pub fn resolve(flags: &ConnFlags, env: &Environment) -> Result<Self, CliError> {
        let file = match (&flags.config, env.default_config_path()) {
            (Some(p), _) => read_file(p)?,
            (None, Some(p)) if p.exists() => read_file(&p)?,
            _ => BTreeMap::new(),
        };
        let pick = |flag: Option<String>, var: &str, key: &str, name: &str| -> Result<String, CliError> {
            flag.or_else(|| env.var(var).map(str::to_string))
                .or_else(|| file.get(key).cloned())
                .ok_or_else(|| CliError::Usage(format!("missing --{name} (or {var}, or `{key}` in ~/.sfs/config)")))
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let server = pick(flags.server.clone(), ENV_SERVER, "server", "server")?;
        if !server.starts_with("https://") {
            return Err(CliError::Usage(format!("--server must be an https:// URL, got `{server}`")));
        }
        Ok(ClientConfig {
            server: server.trim_end_matches('/').to_string(),
            ca_cert: pick(path(&flags.ca), ENV_CA, "ca", "ca")?.into(),
            client_cert: pick(path(&flags.cert), ENV_CERT, "cert", "cert")?.into(),
            client_key: pick(path(&flags.key), ENV_KEY, "key", "key")?.into(),
        })
    }
}
