//! Backup archives.
//!
//! One zip holding `manifest.json`, a JSON-lines file per table under
//! `tables/`, the directory as `directory.ldif`, and every referenced blob as
//! `blobs/<sha256>`. Member timestamps are fixed, so two exports of an
//! unchanged system differ only in the manifest's `created_at`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use time::OffsetDateTime;
use uuid::Uuid;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use super::{
    acl_from_row, event_from_row, file_from_row, fmt_time, write_acl, AuditEvent, FileRecord, Result, Store,
    StoreError, FILE_COLUMNS,
};
use crate::acl::{AclEntry, AclTable};
use crate::directory::{self, ldif, Directory, DistinguishedName, Snapshot};
use crate::fsutil;

pub const FORMAT_VERSION: u64 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const DIRECTORY_MEMBER: &str = "directory.ldif";
pub const TABLES: [&str; 6] = ["principals", "groups", "memberships", "files", "acl_entries", "audit_log"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackupManifest {
    pub format_version: u64,
    #[serde(with = "time::serde::rfc3339")]
    pub created_at: OffsetDateTime,
    pub tables: BTreeMap<String, u64>,
    pub blobs: u64,
    pub checksums: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct PrincipalRow {
    username: String,
    dn: DistinguishedName,
    role: String,
    status: String,
    cert_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct GroupRow {
    name: String,
    dn: DistinguishedName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct MembershipRow {
    group: String,
    username: String,
}

/// Directory mirror tables, derived from a snapshot.
fn mirrors(snap: &Snapshot) -> Result<(Vec<PrincipalRow>, Vec<GroupRow>, Vec<MembershipRow>)> {
    let principals = snap
        .principals()?
        .into_iter()
        .map(|p| PrincipalRow {
            username: p.username,
            dn: p.dn,
            role: p.role.as_str().to_string(),
            status: p.status.as_str().to_string(),
            cert_fingerprint: p.cert_fingerprint,
        })
        .collect();
    let mut groups = Vec::new();
    let mut memberships = Vec::new();
    for g in snap.group_names() {
        for u in snap.group_members(&g)? {
            memberships.push(MembershipRow { group: g.clone(), username: u });
        }
        groups.push(GroupRow { dn: snap.group_dn(&g), name: g });
    }
    Ok((principals, groups, memberships))
}

fn jsonl<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).expect("serializable row");
        out.push(b'\n');
    }
    out
}

fn parse_jsonl<T: DeserializeOwned>(member: &str, bytes: &[u8]) -> Result<Vec<T>> {
    let text = std::str::from_utf8(bytes).map_err(|_| malformed(format!("{member} is not UTF-8")))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| malformed(format!("{member} line {}: {e}", i + 1))))
        .collect()
}

fn malformed(msg: impl Into<String>) -> StoreError {
    StoreError::MalformedArchive(msg.into())
}

fn zip_err(e: zip::result::ZipError) -> StoreError {
    match e {
        zip::result::ZipError::Io(e) => StoreError::Io(e),
        other => malformed(other.to_string()),
    }
}

struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Everything an export writes, captured at one instant.
struct Capture {
    files: Vec<FileRecord>,
    acl: Vec<AclEntry>,
    audit: Vec<AuditEvent>,
    directory: std::sync::Arc<Snapshot>,
    hashes: Vec<String>,
}

impl Store {
    fn capture(&self, dir: &Directory) -> Result<Capture> {
        let db = self.db();
        // the directory snapshot is taken while store writes are held off
        let directory = dir.snapshot();
        let files = db
            .prepare(&format!("SELECT {FILE_COLUMNS} FROM files ORDER BY scope, name"))?
            .query_map([], file_from_row)?
            .collect::<rusqlite::Result<Vec<_>>>()?;
        let acl = db
            .prepare("SELECT subject, scope, permissions FROM acl_entries ORDER BY subject, scope")?
            .query_map([], acl_from_row)?
            .collect::<rusqlite::Result<Vec<_>>>()?;
        let audit = db
            .prepare("SELECT seq, at, principal, action, target, outcome, detail FROM audit_log ORDER BY seq")?
            .query_map([], event_from_row)?
            .collect::<rusqlite::Result<Vec<_>>>()?;
        let hashes: Vec<String> = files.iter().map(|f| f.sha256.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        self.pin(&hashes);
        Ok(Capture { files, acl, audit, directory, hashes })
    }

    /// Write a backup of the store and `dir` to `out`.
    pub fn backup_export(&self, dir: &Directory, out: &Path) -> Result<BackupManifest> {
        let cap = self.capture(dir)?;
        let result = self.write_archive(&cap, out);
        self.unpin(&cap.hashes)?;
        result
    }

    fn write_archive(&self, cap: &Capture, out: &Path) -> Result<BackupManifest> {
        let (principals, groups, memberships) = mirrors(&cap.directory)?;
        let mut members: Vec<(String, Vec<u8>, u64)> = vec![
            ("tables/principals.jsonl".into(), jsonl(&principals), principals.len() as u64),
            ("tables/groups.jsonl".into(), jsonl(&groups), groups.len() as u64),
            ("tables/memberships.jsonl".into(), jsonl(&memberships), memberships.len() as u64),
            ("tables/files.jsonl".into(), jsonl(&cap.files), cap.files.len() as u64),
            ("tables/acl_entries.jsonl".into(), jsonl(&cap.acl), cap.acl.len() as u64),
            ("tables/audit_log.jsonl".into(), jsonl(&cap.audit), cap.audit.len() as u64),
        ];
        members.push((DIRECTORY_MEMBER.into(), cap.directory.full_ldif().into_bytes(), 0));

        let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent)?;
        let tmp = parent.join(format!(".backup.{}.tmp", Uuid::new_v4().simple()));
        let written = (|| -> Result<BackupManifest> {
            let mut zip = ZipWriter::new(File::create(&tmp)?);
            let deflated = SimpleFileOptions::default()
                .compression_method(CompressionMethod::Deflated)
                .last_modified_time(DateTime::default())
                .unix_permissions(0o644);
            let stored = deflated.compression_method(CompressionMethod::Stored).large_file(true);

            let mut checksums = BTreeMap::new();
            let mut tables = BTreeMap::new();
            for (name, body, rows) in &members {
                zip.start_file(name.as_str(), deflated).map_err(zip_err)?;
                zip.write_all(body)?;
                checksums.insert(name.clone(), crate::sha256_hex(body));
                if let Some(t) = name.strip_prefix("tables/").and_then(|n| n.strip_suffix(".jsonl")) {
                    tables.insert(t.to_string(), *rows);
                }
            }
            for sha in &cap.hashes {
                let name = format!("blobs/{sha}");
                zip.start_file(name.as_str(), stored).map_err(zip_err)?;
                let mut src = File::open(self.blob_path(sha)).map_err(|_| StoreError::CorruptBlob(sha.clone()))?;
                let mut w = HashingWriter { inner: &mut zip, hasher: Sha256::new() };
                io::copy(&mut src, &mut w)?;
                let got = hex::encode(w.hasher.finalize());
                if got != *sha {
                    return Err(StoreError::CorruptBlob(sha.clone()));
                }
                checksums.insert(name, got);
            }
            let manifest = BackupManifest {
                format_version: FORMAT_VERSION,
                created_at: OffsetDateTime::now_utc().replace_nanosecond(0).expect("valid"),
                tables,
                blobs: cap.hashes.len() as u64,
                checksums,
            };
            zip.start_file(MANIFEST, deflated).map_err(zip_err)?;
            serde_json::to_writer_pretty(&mut zip, &manifest).map_err(|e| malformed(e.to_string()))?;
            let f = zip.finish().map_err(zip_err)?;
            f.sync_all()?;
            Ok(manifest)
        })();
        match written {
            Ok(m) => {
                fs::rename(&tmp, out)?;
                fsutil::sync_dir(parent)?;
                Ok(m)
            }
            Err(e) => {
                let _ = fs::remove_file(&tmp);
                Err(e)
            }
        }
    }

    /// Replace the store and `dir` with the contents of `archive`. Nothing
    /// changes unless every check passes. Requires an empty target unless
    /// `force` is set.
    pub fn backup_import(&self, dir: &Directory, archive: &Path, force: bool) -> Result<BackupManifest> {
        let mut zip = ZipArchive::new(File::open(archive)?).map_err(zip_err)?;

        let manifest_bytes = read_all(&mut zip, MANIFEST)?;
        let raw: serde_json::Value =
            serde_json::from_slice(&manifest_bytes).map_err(|e| malformed(format!("{MANIFEST}: {e}")))?;
        let version = raw
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| malformed("manifest lacks format_version"))?;
        if version != FORMAT_VERSION {
            return Err(StoreError::FormatVersionUnsupported(version));
        }
        let manifest: BackupManifest =
            serde_json::from_value(raw).map_err(|e| malformed(format!("{MANIFEST}: {e}")))?;

        if !force && (!self.is_empty()? || dir.snapshot().has_principals_or_groups()) {
            return Err(StoreError::NotEmpty);
        }

        let names: BTreeSet<String> = zip.file_names().filter(|n| *n != MANIFEST).map(str::to_string).collect();
        let listed: BTreeSet<String> = manifest.checksums.keys().cloned().collect();
        if names != listed {
            let extra: Vec<_> = names.symmetric_difference(&listed).cloned().collect();
            return Err(malformed(format!("members disagree with manifest: {}", extra.join(", "))));
        }

        // verify every member; blobs are staged as they are checked
        let mut staged = Vec::new();
        let result = self.verify_members(&mut zip, &manifest, &mut staged);
        let outcome =
            result.and_then(|(tables, ldif_text)| self.apply_import(dir, &manifest, tables, &ldif_text, &staged));
        for (_, path) in &staged {
            let _ = fs::remove_file(path);
        }
        outcome.map(|()| manifest)
    }

    fn verify_members(
        &self,
        zip: &mut ZipArchive<File>,
        manifest: &BackupManifest,
        staged: &mut Vec<(String, std::path::PathBuf)>,
    ) -> Result<(BTreeMap<String, Vec<u8>>, String)> {
        let mut tables = BTreeMap::new();
        let mut ldif_text = None;
        for (name, expected) in &manifest.checksums {
            if let Some(sha) = name.strip_prefix("blobs/") {
                let path = self.root.join("tmp").join(Uuid::new_v4().simple().to_string());
                staged.push((sha.to_string(), path.clone()));
                let mut member = zip.by_name(name).map_err(zip_err)?;
                let mut w = HashingWriter { inner: File::create(&path)?, hasher: Sha256::new() };
                io::copy(&mut member, &mut w)?;
                w.inner.sync_all()?;
                let got = hex::encode(w.hasher.finalize());
                if got != *expected || got != sha {
                    return Err(StoreError::ChecksumMismatch(name.clone()));
                }
            } else {
                let body = read_all(zip, name)?;
                if crate::sha256_hex(&body) != *expected {
                    return Err(StoreError::ChecksumMismatch(name.clone()));
                }
                if name == DIRECTORY_MEMBER {
                    ldif_text = Some(String::from_utf8(body).map_err(|_| malformed("directory.ldif is not UTF-8"))?);
                } else if let Some(t) = name.strip_prefix("tables/").and_then(|n| n.strip_suffix(".jsonl")) {
                    tables.insert(t.to_string(), body);
                } else {
                    return Err(malformed(format!("unexpected member {name}")));
                }
            }
        }
        for t in TABLES {
            if !tables.contains_key(t) {
                return Err(malformed(format!("missing tables/{t}.jsonl")));
            }
        }
        let ldif_text = ldif_text.ok_or_else(|| malformed("missing directory.ldif"))?;
        Ok((tables, ldif_text))
    }

    fn apply_import(
        &self,
        dir: &Directory,
        manifest: &BackupManifest,
        tables: BTreeMap<String, Vec<u8>>,
        ldif_text: &str,
        staged: &[(String, std::path::PathBuf)],
    ) -> Result<()> {
        let files: Vec<FileRecord> = parse_jsonl("tables/files.jsonl", &tables["files"])?;
        let acl: Vec<AclEntry> = parse_jsonl("tables/acl_entries.jsonl", &tables["acl_entries"])?;
        let audit: Vec<AuditEvent> = parse_jsonl("tables/audit_log.jsonl", &tables["audit_log"])?;
        let principals: Vec<PrincipalRow> = parse_jsonl("tables/principals.jsonl", &tables["principals"])?;
        let groups: Vec<GroupRow> = parse_jsonl("tables/groups.jsonl", &tables["groups"])?;
        let memberships: Vec<MembershipRow> = parse_jsonl("tables/memberships.jsonl", &tables["memberships"])?;

        let counts = [
            ("principals", principals.len()),
            ("groups", groups.len()),
            ("memberships", memberships.len()),
            ("files", files.len()),
            ("acl_entries", acl.len()),
            ("audit_log", audit.len()),
        ];
        for (t, n) in counts {
            if manifest.tables.get(t).copied() != Some(n as u64) {
                return Err(malformed(format!("row count of {t} disagrees with manifest")));
            }
        }
        let blob_set: BTreeSet<&str> = staged.iter().map(|(s, _)| s.as_str()).collect();
        if manifest.blobs != blob_set.len() as u64 {
            return Err(malformed("blob count disagrees with manifest"));
        }
        if let Some(f) = files.iter().find(|f| !blob_set.contains(f.sha256.as_str())) {
            return Err(malformed(format!("no blob for {}/{}", f.scope, f.name)));
        }
        for (i, e) in audit.iter().enumerate() {
            if e.seq != i as u64 + 1 {
                return Err(malformed("audit_log sequence is not 1..N"));
            }
        }

        let snapshot =
            directory::build_snapshot(dir.base(), ldif::parse(ldif_text).map_err(directory::DirectoryError::from)?)?;
        let (p2, g2, m2) = mirrors(&snapshot)?;
        if p2 != principals || g2 != groups || m2 != memberships {
            return Err(malformed("directory tables disagree with directory.ldif"));
        }

        // every check passed: install blobs, rows, then the directory
        for (sha, path) in staged {
            let dest = self.blob_path(sha);
            if !dest.exists() {
                fs::rename(path, dest)?;
            }
        }
        fsutil::sync_dir(&self.root.join("blobs"))?;
        {
            let mut db = self.db();
            let tx = db.transaction()?;
            tx.execute_batch("DELETE FROM files; DELETE FROM audit_log;")?;
            {
                let mut ins = tx.prepare(&format!(
                    "INSERT INTO files ({FILE_COLUMNS}) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)"
                ))?;
                for f in &files {
                    ins.execute(rusqlite::params![
                        f.file_id.to_string(),
                        f.scope.to_string(),
                        f.name,
                        f.size_bytes as i64,
                        f.sha256,
                        f.uploader,
                        fmt_time(f.uploaded_at),
                        f.version,
                        f.orphaned as i64,
                    ])?;
                }
                let mut ins = tx.prepare(
                    "INSERT INTO audit_log (seq, at, principal, action, target, outcome, detail)
                     VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
                )?;
                for e in &audit {
                    ins.execute(rusqlite::params![
                        e.seq as i64,
                        fmt_time(e.at),
                        e.principal,
                        e.action.as_str(),
                        e.target,
                        e.outcome.as_str(),
                        e.detail,
                    ])?;
                }
            }
            let table = AclTable::from_entries(acl);
            write_acl(&tx, &table)?;
            tx.commit()?;
            *self.acl.write().expect("acl lock poisoned") = std::sync::Arc::new(table);
        }
        dir.import_ldif(ldif_text, true)?;
        self.sweep_blobs()?;
        Ok(())
    }
}

fn read_all(zip: &mut ZipArchive<File>, name: &str) -> Result<Vec<u8>> {
    let mut member = zip.by_name(name).map_err(|e| match e {
        zip::result::ZipError::FileNotFound => malformed(format!("missing {name}")),
        other => zip_err(other),
    })?;
    let mut buf = Vec::new();
    member.read_to_end(&mut buf)?;
    Ok(buf)
}
