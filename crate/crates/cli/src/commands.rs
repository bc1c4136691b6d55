use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sfs_core::pki::{self, CertificateProfile};
use sfs_core::{CredentialBundle, PermissionSet, Scope, Subject};
use sha2::{Digest, Sha256};

use crate::args::{
    AclCommand, AdminCommand, CaCommand, CertCommand, Cli, Command, GroupCommand, MemberCommand, RoleArg, StatusArg,
    UserCommand,
};
use crate::client::{Client, Payload};
use crate::render;
use crate::settings::{ClientConfig, Environment};
use crate::CliError;

struct Out<'a> {
    w: &'a mut dyn Write,
    json: bool,
}

impl Out<'_> {
    /// `value` as one JSON line, or `human` as is.
    fn emit(&mut self, value: &Value, human: impl FnOnce(&Value) -> String) -> Result<(), CliError> {
        let text = if self.json { format!("{value}\n") } else { human(value) };
        self.w.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e))
    }
}

fn scope(s: &str) -> Result<Scope, CliError> {
    s.parse().map_err(|_| CliError::Usage(format!("invalid scope `{s}`: expected home:<user> or group:<name>")))
}

fn subject(s: &str) -> Result<Subject, CliError> {
    s.parse().map_err(|_| CliError::Usage(format!("invalid subject `{s}`: expected user:<name> or group:<name>")))
}

fn role(r: RoleArg) -> &'static str {
    match r {
        RoleArg::Client => "client",
        RoleArg::Administrator => "administrator",
    }
}

fn status(s: StatusArg) -> &'static str {
    match s {
        StatusArg::Active => "active",
        StatusArg::Suspended => "suspended",
    }
}

pub(crate) fn execute(cli: Cli, env: &Environment, w: &mut dyn Write) -> Result<(), CliError> {
    let mut out = Out { w, json: cli.json };
    if let Command::Ca(ca) = cli.command {
        return ca_command(ca, &mut out);
    }
    let cfg = ClientConfig::resolve(&cli.conn, env)?;
    let client = Client::new(&cfg)?;
    let none: &[(&str, String)] = &[];
    match cli.command {
        Command::Ls { scope: s } => {
            let s = scope(&s)?.to_string();
            let v = client.json("GET", &["files", &s], none, Payload::Empty)?;
            out.emit(&v, render::files)
        }
        Command::Get { scope: s, name, output } => {
            let s = scope(&s)?.to_string();
            let dest = output.unwrap_or_else(|| PathBuf::from(&name));
            let v = download(&client, &s, &name, &dest)?;
            out.emit(&v, |v| {
                format!(
                    "saved {} ({} bytes, sha256 {})\n",
                    dest.display(),
                    render::s(&v["bytes"]),
                    render::s(&v["sha256"])
                )
            })
        }
        Command::Put { scope: s, file, name } => {
            let s = scope(&s)?.to_string();
            let name = match name {
                Some(n) => n,
                None => file
                    .file_name()
                    .and_then(|n| n.to_str())
                    .ok_or_else(|| {
                        CliError::Usage(format!("cannot derive a name from {}; pass --name", file.display()))
                    })?
                    .to_string(),
            };
            let mut f = File::open(&file).map_err(|e| CliError::io(file.display(), e))?;
            let len = f.metadata().map_err(|e| CliError::io(file.display(), e))?.len();
            let v = client.json("PUT", &["files", &s, &name], none, Payload::Stream(&mut f, len))?;
            out.emit(&v, |v| {
                format!(
                    "uploaded {s}/{name} v{} ({} bytes, sha256 {})\n",
                    render::s(&v["version"]),
                    render::s(&v["size_bytes"]),
                    render::s(&v["sha256"])
                )
            })
        }
        Command::Rm { scope: s, name } => {
            let s = scope(&s)?.to_string();
            let v = client.json("DELETE", &["files", &s, &name], none, Payload::Empty)?;
            out.emit(&v, |_| format!("deleted {s}/{name}\n"))
        }
        Command::Whoami => {
            let v = client.json("GET", &["whoami"], none, Payload::Empty)?;
            out.emit(&v, render::whoami)
        }
        Command::Admin(cmd) => admin(cmd, &client, &mut out),
        Command::Ca(_) => unreachable!("handled above"),
    }
}

/// Stream into a scratch file next to `dest`, hashing as we go; only a
/// verified download replaces `dest`.
fn download(client: &Client, scope: &str, name: &str, dest: &Path) -> Result<Value, CliError> {
    let res = client.call("GET", &["files", scope, name], &[], Payload::Empty)?;
    let expected = res
        .header("x-sfs-sha256")
        .map(str::to_ascii_lowercase)
        .ok_or_else(|| CliError::Protocol("download carried no x-sfs-sha256 header".into()))?;
    let version = res.header("x-sfs-version").and_then(|v| v.parse::<u64>().ok());
    let dir = match dest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut scratch = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(dir.display(), e))?;
    let mut hasher = Sha256::new();
    let mut reader = res.into_reader();
    let mut buf = vec![0u8; 64 * 1024];
    let mut total = 0u64;
    loop {
        let n = match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(CliError::Connection(format!("download interrupted: {e}"))),
        };
        hasher.update(&buf[..n]);
        scratch.write_all(&buf[..n]).map_err(|e| CliError::io(scratch.path().display(), e))?;
        total += n as u64;
    }
    let actual = hex_lower(&hasher.finalize());
    if actual != expected {
        return Err(CliError::Integrity { expected, actual });
    }
    scratch.as_file().sync_all().map_err(|e| CliError::io(dest.display(), e))?;
    scratch.persist(dest).map_err(|e| CliError::io(dest.display(), e.error))?;
    Ok(json!({
        "scope": scope,
        "name": name,
        "path": dest.display().to_string(),
        "bytes": total,
        "sha256": actual,
        "version": version,
    }))
}

fn hex_lower(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn admin(cmd: AdminCommand, client: &Client, out: &mut Out<'_>) -> Result<(), CliError> {
    let none: &[(&str, String)] = &[];
    match cmd {
        AdminCommand::User(u) => match u {
            UserCommand::Add { username, role: r, status: st } => {
                let mut body = json!({ "username": username });
                if let Some(r) = r {
                    body["role"] = role(r).into();
                }
                if let Some(st) = st {
                    body["status"] = status(st).into();
                }
                let v = client.json("POST", &["admin", "users"], none, Payload::Json(body))?;
                out.emit(&v, render::principal)
            }
            UserCommand::Del { username } => {
                let v = client.json("DELETE", &["admin", "users", &username], none, Payload::Empty)?;
                out.emit(&v, |v| {
                    format!(
                        "deleted {username}: {} ACL entries removed, {} home files orphaned\n",
                        render::s(&v["acl_entries_removed"]),
                        render::s(&v["orphaned_files"])
                    )
                })
            }
            UserCommand::Mod { username, role: r, status: st } => {
                if r.is_none() && st.is_none() {
                    return Err(CliError::Usage("admin user mod needs --role and/or --status".into()));
                }
                let mut body = json!({});
                if let Some(r) = r {
                    body["role"] = role(r).into();
                }
                if let Some(st) = st {
                    body["status"] = status(st).into();
                }
                let v = client.json("PATCH", &["admin", "users", &username], none, Payload::Json(body))?;
                out.emit(&v, render::principal)
            }
            UserCommand::List => {
                let v = client.json("GET", &["admin", "users"], none, Payload::Empty)?;
                out.emit(&v, render::users)
            }
        },
        AdminCommand::Cert(CertCommand::Issue { username, out: dir, days }) => {
            let body = match days {
                Some(d) => json!({ "validity_days": d }),
                None => json!({}),
            };
            let res = client.call("POST", &["admin", "users", &username, "certificate"], none, Payload::Json(body))?;
            let mut bytes = Vec::new();
            res.into_reader().read_to_end(&mut bytes).map_err(|e| CliError::Connection(e.to_string()))?;
            let bundle = CredentialBundle::from_zip(&bytes)?;
            let (cert, key, ca) = bundle.write_dir(&dir)?;
            let v = json!({
                "username": bundle.username,
                "fingerprint": bundle.certificate.fingerprint_sha256,
                "not_after": bundle.certificate.not_after.unix_timestamp(),
                "cert": cert.display().to_string(),
                "key": key.display().to_string(),
                "ca": ca.display().to_string(),
            });
            out.emit(&v, |v| {
                format!(
                    "issued certificate for {} (sha256 {})\n  cert {}\n  key  {}\n  ca   {}\n",
                    render::s(&v["username"]),
                    render::s(&v["fingerprint"]),
                    render::s(&v["cert"]),
                    render::s(&v["key"]),
                    render::s(&v["ca"])
                )
            })
        }
        AdminCommand::Group(g) => match g {
            GroupCommand::Add { name } => {
                let v = client.json("POST", &["admin", "groups"], none, Payload::Json(json!({ "name": name })))?;
                out.emit(&v, |_| format!("created group {name}\n"))
            }
            GroupCommand::Del { name } => {
                let v = client.json("DELETE", &["admin", "groups", &name], none, Payload::Empty)?;
                out.emit(&v, |_| format!("deleted group {name}\n"))
            }
            GroupCommand::List => {
                let v = client.json("GET", &["admin", "groups"], none, Payload::Empty)?;
                out.emit(&v, render::groups)
            }
            GroupCommand::Member(m) => {
                let (method, group, user) = match m {
                    MemberCommand::Add { group, username } => ("PUT", group, username),
                    MemberCommand::Del { group, username } => ("DELETE", group, username),
                };
                let v = client.json(method, &["admin", "groups", &group, "members", &user], none, Payload::Empty)?;
                out.emit(&v, |v| format!("{group}: {}\n", render::s(&v["members"])))
            }
        },
        AdminCommand::Acl(a) => match a {
            AclCommand::Set { subject: sub, scope: sc, permissions } => {
                let perms: PermissionSet = permissions.parse().map_err(|_| {
                    CliError::Usage(format!("invalid permissions `{permissions}`: use VIEW,DOWNLOAD,UPLOAD,DELETE"))
                })?;
                let body = json!({ "subject": subject(&sub)?, "scope": scope(&sc)?, "permissions": perms });
                let v = client.json("PUT", &["admin", "acl"], none, Payload::Json(body))?;
                out.emit(&v, |v| format!("{sub} on {sc}: {perms} (ACL version {})\n", render::s(&v["version"])))
            }
            AclCommand::Del { subject: sub, scope: sc } => {
                let query = [("subject", subject(&sub)?.to_string()), ("scope", scope(&sc)?.to_string())];
                let v = client.json("DELETE", &["admin", "acl"], &query, Payload::Empty)?;
                out.emit(&v, |v| format!("revoked {sub} on {sc} (ACL version {})\n", render::s(&v["version"])))
            }
            AclCommand::List => {
                let v = client.json("GET", &["admin", "acl"], none, Payload::Empty)?;
                out.emit(&v, render::acl)
            }
        },
        AdminCommand::Audit { principal, action, from_seq, to_seq } => {
            let mut query = Vec::new();
            if let Some(p) = principal {
                query.push(("principal", p));
            }
            if let Some(a) = action {
                query.push(("action", a));
            }
            if let Some(n) = from_seq {
                query.push(("from_seq", n.to_string()));
            }
            if let Some(n) = to_seq {
                query.push(("to_seq", n.to_string()));
            }
            let v = client.json("GET", &["admin", "audit"], &query, Payload::Empty)?;
            out.emit(&v, render::audit)
        }
        AdminCommand::Backup { output } => {
            let res = client.call("POST", &["admin", "backup"], none, Payload::Empty)?;
            let suggested = res
                .header("content-disposition")
                .and_then(|d| d.split("filename=").nth(1))
                .map(|f| f.trim_matches('"').to_string())
                .filter(|f| !f.is_empty() && !f.contains(['/', '\\']))
                .unwrap_or_else(|| "sfs-backup.zip".into());
            let dest = output.unwrap_or_else(|| PathBuf::from(suggested));
            let mut file = File::create(&dest).map_err(|e| CliError::io(dest.display(), e))?;
            let bytes = io::copy(&mut res.into_reader(), &mut file).map_err(|e| CliError::io(dest.display(), e))?;
            file.sync_all().map_err(|e| CliError::io(dest.display(), e))?;
            let v = json!({ "path": dest.display().to_string(), "bytes": bytes });
            out.emit(&v, |_| format!("wrote {} ({bytes} bytes)\n", dest.display()))
        }
    }
}

fn ca_command(cmd: CaCommand, out: &mut Out<'_>) -> Result<(), CliError> {
    match cmd {
        CaCommand::Init { cn, org, days, dir, force } => {
            if cn.contains([',', '=', '+']) || org.contains([',', '=', '+']) {
                return Err(CliError::Usage("--cn and --org must not contain `,` `=` or `+`".into()));
            }
            let subject =
                format!("cn={cn},o={org}").parse().map_err(|e| CliError::Usage(format!("invalid --cn/--org: {e}")))?;
            let (cert, _) = pki::init_ca(&subject, days, &dir, force)?;
            let v = json!({
                "cert": dir.join(pki::CA_CERT_FILE).display().to_string(),
                "key": dir.join(pki::CA_KEY_FILE).display().to_string(),
                "subject": cert.subject_dn.to_string(),
                "fingerprint": cert.fingerprint_sha256,
                "not_after": cert.not_after.unix_timestamp(),
            });
            out.emit(&v, |v| {
                format!(
                    "created CA {}\n  cert {}\n  key  {}\n  sha256 {}\n",
                    render::s(&v["subject"]),
                    render::s(&v["cert"]),
                    render::s(&v["key"]),
                    render::s(&v["fingerprint"])
                )
            })
        }
        CaCommand::IssueServer { hosts, days, ca_dir, out: dir } => {
            let (ca, ca_key) = pki::load_ca(&ca_dir)?;
            let host_refs: Vec<&str> = hosts.iter().map(String::as_str).collect();
            let (cert, key) = pki::issue_certificate(&ca, &ca_key, &CertificateProfile::server(&host_refs, days)?)?;
            std::fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
            let cert_path = dir.join("server.crt.pem");
            let key_path = dir.join("server.key.pem");
            std::fs::write(&cert_path, cert.to_pem()).map_err(|e| CliError::io(cert_path.display(), e))?;
            write_private(&key_path, key.private_key_pem.as_bytes())?;
            let v = json!({
                "cert": cert_path.display().to_string(),
                "key": key_path.display().to_string(),
                "hosts": hosts,
                "fingerprint": cert.fingerprint_sha256,
                "not_after": cert.not_after.unix_timestamp(),
            });
            out.emit(&v, |v| {
                format!(
                    "issued server certificate for {}\n  cert {}\n  key  {}\n",
                    render::s(&v["hosts"]),
                    render::s(&v["cert"]),
                    render::s(&v["key"])
                )
            })
        }
    }
}

fn write_private(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut opts = std::fs::OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    let mut f = opts.open(path).map_err(|e| CliError::io(path.display(), e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path.display(), e))
}
