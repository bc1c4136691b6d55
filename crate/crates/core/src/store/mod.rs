//! File metadata, content-addressed blobs, the ACL table and the audit log.
//!
//! Layout under the data root:
//!
//! ```text
//! meta.sqlite        files, acl_entries, audit_log
//! blobs/<sha256>     file contents, shared by identical uploads
//! tmp/               uploads in progress
//! ```
//!
//! A blob is renamed into place and synced before the row that references it
//! is committed, so a crash between the two leaves an unreferenced blob (swept
//! on the next open) and never a record without content.

mod audit;
pub mod backup;

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use rusqlite::{params, Connection, OptionalExtension, Row};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;
use uuid::Uuid;

pub use audit::{AuditAction, AuditEvent, AuditFilter, AuditOutcome, NewAuditEvent, ANONYMOUS};

use crate::acl::{AclEntry, AclError, AclTable, Scope};
use crate::directory::DirectoryError;
use crate::fsutil;
use crate::naming::is_valid_file_name;

pub const DEFAULT_MAX_UPLOAD_BYTES: u64 = 256 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid file name `{0}`")]
    NameInvalid(String),
    #[error("upload exceeds the limit of {limit} bytes")]
    TooLarge { limit: u64 },
    #[error("no such file: {0}")]
    NotFound(String),
    #[error("stored content of {0} does not match its hash")]
    CorruptBlob(String),
    #[error("another upload to {0} is in progress")]
    Conflict(String),
    #[error("unknown vocabulary value `{0}`")]
    InvalidVocabulary(String),
    #[error("checksum mismatch for archive member {0}")]
    ChecksumMismatch(String),
    #[error("unsupported backup format version {0}")]
    FormatVersionUnsupported(u64),
    #[error("malformed backup archive: {0}")]
    MalformedArchive(String),
    #[error("target is not empty (use force to overwrite)")]
    NotEmpty,
    #[error("injected fault")]
    InjectedFault,
    #[error(transparent)]
    Directory(#[from] DirectoryError),
    #[error(transparent)]
    Acl(#[from] AclError),
    #[error("database: {0}")]
    Db(#[from] rusqlite::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::NameInvalid(_) => "NAME_INVALID",
            StoreError::TooLarge { .. } => "TOO_LARGE",
            StoreError::NotFound(_) => "NOT_FOUND",
            StoreError::CorruptBlob(_) => "CORRUPT_BLOB",
            StoreError::Conflict(_) => "CONFLICT",
            StoreError::InvalidVocabulary(_) => "INVALID_ARGUMENT",
            StoreError::ChecksumMismatch(_) => "CHECKSUM_MISMATCH",
            StoreError::FormatVersionUnsupported(_) => "FORMAT_VERSION_UNSUPPORTED",
            StoreError::MalformedArchive(_) => "MALFORMED_ARCHIVE",
            StoreError::NotEmpty => "NOT_EMPTY",
            StoreError::Directory(e) => e.code(),
            StoreError::Acl(e) => e.code(),
            StoreError::InjectedFault | StoreError::Db(_) | StoreError::Io(_) => "IO_FAILURE",
        }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub file_id: Uuid,
    pub scope: Scope,
    pub name: String,
    pub size_bytes: u64,
    pub sha256: String,
    pub uploader: String,
    #[serde(with = "time::serde::rfc3339")]
    pub uploaded_at: OffsetDateTime,
    pub version: u32,
    /// Set on home-scope files whose owner was deleted.
    #[serde(default)]
    pub orphaned: bool,
}

/// Places where a test can make `put_file` fail as if the process died.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultPoint {
    AfterBlobWrite,
}

#[derive(Debug, Clone)]
pub struct StoreOptions {
    pub max_upload_bytes: u64,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions { max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES }
    }
}

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS files (
    file_id     TEXT PRIMARY KEY,
    scope       TEXT NOT NULL,
    name        TEXT NOT NULL,
    size_bytes  INTEGER NOT NULL,
    sha256      TEXT NOT NULL,
    uploader    TEXT NOT NULL,
    uploaded_at TEXT NOT NULL,
    version     INTEGER NOT NULL,
    orphaned    INTEGER NOT NULL DEFAULT 0,
    UNIQUE (scope, name)
);
CREATE INDEX IF NOT EXISTS files_sha256 ON files (sha256);
CREATE TABLE IF NOT EXISTS acl_entries (
    subject     TEXT NOT NULL,
    scope       TEXT NOT NULL,
    permissions TEXT NOT NULL,
    PRIMARY KEY (subject, scope)
);
CREATE TABLE IF NOT EXISTS audit_log (
    seq       INTEGER PRIMARY KEY,
    at        TEXT NOT NULL,
    principal TEXT NOT NULL,
    action    TEXT NOT NULL,
    target    TEXT NOT NULL,
    outcome   TEXT NOT NULL,
    detail    TEXT NOT NULL
);
";

#[derive(Default)]
struct Pins {
    counts: BTreeMap<String, usize>,
    /// Unreferenced hashes whose removal waits for the last pin to go.
    deferred: HashSet<String>,
}

pub struct Store {
    root: PathBuf,
    options: StoreOptions,
    db: Mutex<Connection>,
    acl: RwLock<Arc<AclTable>>,
    uploads: Mutex<HashSet<(String, String)>>,
    pins: Mutex<Pins>,
    fault: Mutex<Option<FaultPoint>>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("root", &self.root).finish_non_exhaustive()
    }
}

fn fmt_time(t: OffsetDateTime) -> String {
    t.format(&Rfc3339).expect("RFC 3339 formatting")
}

fn parse_time(s: &str) -> rusqlite::Result<OffsetDateTime> {
    OffsetDateTime::parse(s, &Rfc3339)
        .map_err(|e| rusqlite::Error::FromSqlConversionFailure(0, rusqlite::types::Type::Text, Box::new(e)))
}

fn conversion<E: std::error::Error + Send + Sync + 'static>(e: E) -> rusqlite::Error {
    rusqlite::Error::FromSqlConversionFailure(0, rusqlite::types::Type::Text, Box::new(e))
}

fn file_from_row(row: &Row<'_>) -> rusqlite::Result<FileRecord> {
    let id: String = row.get("file_id")?;
    let scope: String = row.get("scope")?;
    Ok(FileRecord {
        file_id: Uuid::parse_str(&id).map_err(conversion)?,
        scope: scope.parse().map_err(conversion)?,
        name: row.get("name")?,
        size_bytes: row.get::<_, i64>("size_bytes")? as u64,
        sha256: row.get("sha256")?,
        uploader: row.get("uploader")?,
        uploaded_at: parse_time(&row.get::<_, String>("uploaded_at")?)?,
        version: row.get("version")?,
        orphaned: row.get::<_, i64>("orphaned")? != 0,
    })
}

fn event_from_row(row: &Row<'_>) -> rusqlite::Result<AuditEvent> {
    Ok(AuditEvent {
        seq: row.get::<_, i64>("seq")? as u64,
        at: parse_time(&row.get::<_, String>("at")?)?,
        principal: row.get("principal")?,
        action: row.get::<_, String>("action")?.parse().map_err(conversion)?,
        target: row.get("target")?,
        outcome: row.get::<_, String>("outcome")?.parse().map_err(conversion)?,
        detail: row.get("detail")?,
    })
}

fn acl_from_row(row: &Row<'_>) -> rusqlite::Result<AclEntry> {
    Ok(AclEntry {
        subject: row.get::<_, String>("subject")?.parse().map_err(conversion)?,
        scope: row.get::<_, String>("scope")?.parse().map_err(conversion)?,
        permissions: row.get::<_, String>("permissions")?.parse().map_err(conversion)?,
    })
}

const FILE_COLUMNS: &str = "file_id, scope, name, size_bytes, sha256, uploader, uploaded_at, version, orphaned";

/// Releases an in-flight upload key on drop.
struct UploadSlot<'a> {
    set: &'a Mutex<HashSet<(String, String)>>,
    key: (String, String),
}

impl Drop for UploadSlot<'_> {
    fn drop(&mut self) {
        self.set.lock().expect("upload set poisoned").remove(&self.key);
    }
}

/// Removes a staged temp file unless it was moved into place.
struct Staged {
    path: PathBuf,
    keep: bool,
}

impl Drop for Staged {
    fn drop(&mut self) {
        if !self.keep {
            let _ = fs::remove_file(&self.path);
        }
    }
}

impl Store {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(root, StoreOptions::default())
    }

    pub fn open_with(root: impl AsRef<Path>, options: StoreOptions) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join("blobs"))?;
        let tmp = root.join("tmp");
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp)?;

        let conn = Connection::open(root.join("meta.sqlite"))?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "FULL")?;
        conn.execute_batch(SCHEMA)?;
        let entries = conn
            .prepare("SELECT subject, scope, permissions FROM acl_entries")?
            .query_map([], acl_from_row)?
            .collect::<rusqlite::Result<Vec<_>>>()?;

        let store = Store {
            root,
            options,
            db: Mutex::new(conn),
            acl: RwLock::new(Arc::new(AclTable::from_entries(entries))),
            uploads: Mutex::new(HashSet::new()),
            pins: Mutex::new(Pins::default()),
            fault: Mutex::new(None),
        };
        store.sweep_blobs()?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn max_upload_bytes(&self) -> u64 {
        self.options.max_upload_bytes
    }

    fn db(&self) -> MutexGuard<'_, Connection> {
        self.db.lock().expect("store lock poisoned")
    }

    fn blob_path(&self, sha: &str) -> PathBuf {
        self.root.join("blobs").join(sha)
    }

    /// Arm (or with `None` disarm) a simulated crash.
    pub fn inject_fault(&self, point: Option<FaultPoint>) {
        *self.fault.lock().expect("fault lock poisoned") = point;
    }

    fn fault_at(&self, point: FaultPoint) -> Result<()> {
        if *self.fault.lock().expect("fault lock poisoned") == Some(point) {
            return Err(StoreError::InjectedFault);
        }
        Ok(())
    }

    /// Delete blob files no record references.
    fn sweep_blobs(&self) -> Result<()> {
        let db = self.db();
        let referenced: HashSet<String> = db
            .prepare("SELECT DISTINCT sha256 FROM files")?
            .query_map([], |r| r.get(0))?
            .collect::<rusqlite::Result<_>>()?;
        let pins = self.pins.lock().expect("pins poisoned");
        for entry in fs::read_dir(self.root.join("blobs"))? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if !referenced.contains(&name) && !pins.counts.contains_key(&name) {
                fs::remove_file(entry.path())?;
            }
        }
        Ok(())
    }

    /// Remove `sha`'s blob if nothing references it. Called with the db lock
    /// held.
    fn collect_blob(&self, db: &Connection, sha: &str) -> Result<()> {
        let refs: i64 = db.query_row("SELECT COUNT(*) FROM files WHERE sha256 = ?1", [sha], |r| r.get(0))?;
        if refs > 0 {
            return Ok(());
        }
        let mut pins = self.pins.lock().expect("pins poisoned");
        if pins.counts.contains_key(sha) {
            pins.deferred.insert(sha.to_string());
            return Ok(());
        }
        match fs::remove_file(self.blob_path(sha)) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }

    /// Store `content` as `(scope, name)`, replacing any live record.
    pub fn put_file(&self, scope: &Scope, name: &str, content: impl Read, uploader: &str) -> Result<FileRecord> {
        if !is_valid_file_name(name) {
            return Err(StoreError::NameInvalid(name.to_string()));
        }
        let key = (scope.to_string(), name.to_string());
        let target = format!("{}/{}", key.0, key.1);
        {
            let mut set = self.uploads.lock().expect("upload set poisoned");
            if !set.insert(key.clone()) {
                return Err(StoreError::Conflict(target));
            }
        }
        let _slot = UploadSlot { set: &self.uploads, key: key.clone() };

        // stage and hash outside the lock
        let mut staged = Staged { path: self.root.join("tmp").join(Uuid::new_v4().simple().to_string()), keep: false };
        let mut file = File::create(&staged.path)?;
        let limit = self.options.max_upload_bytes;
        let mut hasher = Sha256::new();
        let mut size: u64 = 0;
        let mut limited = content.take(limit + 1);
        let mut buf = vec![0u8; 64 * 1024];
        loop {
            let n = limited.read(&mut buf)?;
            if n == 0 {
                break;
            }
            size += n as u64;
            if size > limit {
                return Err(StoreError::TooLarge { limit });
            }
            hasher.update(&buf[..n]);
            file.write_all(&buf[..n])?;
        }
        file.sync_all()?;
        drop(file);
        let sha = hex::encode(hasher.finalize());

        let db = self.db();
        let blob = self.blob_path(&sha);
        if blob.exists() {
            // identical content already stored
        } else {
            fs::rename(&staged.path, &blob)?;
            staged.keep = true;
            fsutil::sync_dir(&self.root.join("blobs"))?;
        }
        self.fault_at(FaultPoint::AfterBlobWrite)?;

        let previous = db
            .query_row(
                &format!("SELECT {FILE_COLUMNS} FROM files WHERE scope = ?1 AND name = ?2"),
                params![key.0, key.1],
                file_from_row,
            )
            .optional()?;
        let record = FileRecord {
            file_id: previous.as_ref().map_or_else(Uuid::new_v4, |p| p.file_id),
            scope: scope.clone(),
            name: name.to_string(),
            size_bytes: size,
            sha256: sha,
            uploader: uploader.to_string(),
            uploaded_at: OffsetDateTime::now_utc().replace_nanosecond(0).expect("valid"),
            version: previous.as_ref().map_or(1, |p| p.version + 1),
            orphaned: false,
        };
        db.execute(
            &format!(
                "INSERT INTO files ({FILE_COLUMNS}) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, 0)
                 ON CONFLICT (scope, name) DO UPDATE SET
                   size_bytes = excluded.size_bytes, sha256 = excluded.sha256,
                   uploader = excluded.uploader, uploaded_at = excluded.uploaded_at,
                   version = excluded.version, orphaned = 0"
            ),
            params![
                record.file_id.to_string(),
                key.0,
                key.1,
                record.size_bytes as i64,
                record.sha256,
                record.uploader,
                fmt_time(record.uploaded_at),
                record.version,
            ],
        )?;
        if let Some(prev) = previous {
            if prev.sha256 != record.sha256 {
                self.collect_blob(&db, &prev.sha256)?;
            }
        }
        Ok(record)
    }

    pub fn stat_file(&self, scope: &Scope, name: &str) -> Result<FileRecord> {
        self.db()
            .query_row(
                &format!("SELECT {FILE_COLUMNS} FROM files WHERE scope = ?1 AND name = ?2"),
                params![scope.to_string(), name],
                file_from_row,
            )
            .optional()?
            .ok_or_else(|| StoreError::NotFound(format!("{scope}/{name}")))
    }

    /// The record and a reader over its content. The content is re-hashed
    /// before it is returned.
    pub fn get_file(&self, scope: &Scope, name: &str) -> Result<(FileRecord, File)> {
        let (record, mut file) = {
            let db = self.db();
            let record = db
                .query_row(
                    &format!("SELECT {FILE_COLUMNS} FROM files WHERE scope = ?1 AND name = ?2"),
                    params![scope.to_string(), name],
                    file_from_row,
                )
                .optional()?
                .ok_or_else(|| StoreError::NotFound(format!("{scope}/{name}")))?;
            // open under the lock so a concurrent delete cannot collect it first
            let file = match File::open(self.blob_path(&record.sha256)) {
                Ok(f) => f,
                Err(e) if e.kind() == io::ErrorKind::NotFound => {
                    return Err(StoreError::CorruptBlob(record.sha256.clone()))
                }
                Err(e) => return Err(e.into()),
            };
            (record, file)
        };
        let mut hasher = Sha256::new();
        let n = io::copy(&mut file, &mut hasher)?;
        if n != record.size_bytes || hex::encode(hasher.finalize()) != record.sha256 {
            return Err(StoreError::CorruptBlob(record.sha256));
        }
        file.seek(SeekFrom::Start(0))?;
        Ok((record, file))
    }

    pub fn delete_file(&self, scope: &Scope, name: &str) -> Result<FileRecord> {
        let db = self.db();
        let record = db
            .query_row(
                &format!("SELECT {FILE_COLUMNS} FROM files WHERE scope = ?1 AND name = ?2"),
                params![scope.to_string(), name],
                file_from_row,
            )
            .optional()?
            .ok_or_else(|| StoreError::NotFound(format!("{scope}/{name}")))?;
        db.execute("DELETE FROM files WHERE file_id = ?1", [record.file_id.to_string()])?;
        self.collect_blob(&db, &record.sha256)?;
        Ok(record)
    }

    /// Live records in `scope`, by name in byte order.
    pub fn list_files(&self, scope: &Scope) -> Result<Vec<FileRecord>> {
        let db = self.db();
        let mut stmt = db.prepare(&format!("SELECT {FILE_COLUMNS} FROM files WHERE scope = ?1"))?;
        let mut rows = stmt.query_map([scope.to_string()], file_from_row)?.collect::<rusqlite::Result<Vec<_>>>()?;
        rows.sort_by(|a, b| a.name.as_bytes().cmp(b.name.as_bytes()));
        Ok(rows)
    }

    pub fn all_files(&self) -> Result<Vec<FileRecord>> {
        let db = self.db();
        let mut stmt = db.prepare(&format!("SELECT {FILE_COLUMNS} FROM files ORDER BY scope, name"))?;
        let rows = stmt.query_map([], file_from_row)?.collect::<rusqlite::Result<Vec<_>>>()?;
        Ok(rows)
    }

    /// Flag (or unflag) every file in `scope` as orphaned. Returns the number
    /// of records touched.
    pub fn set_orphaned(&self, scope: &Scope, orphaned: bool) -> Result<usize> {
        Ok(self
            .db()
            .execute("UPDATE files SET orphaned = ?1 WHERE scope = ?2", params![orphaned as i64, scope.to_string()])?)
    }

    /// Re-hash every referenced blob. Returns the hashes that fail.
    pub fn verify_blobs(&self) -> Result<Vec<String>> {
        let hashes: Vec<String> = self
            .db()
            .prepare("SELECT DISTINCT sha256 FROM files ORDER BY sha256")?
            .query_map([], |r| r.get(0))?
            .collect::<rusqlite::Result<_>>()?;
        let mut bad = Vec::new();
        for sha in hashes {
            let ok = File::open(self.blob_path(&sha)).and_then(|mut f| {
                let mut h = Sha256::new();
                io::copy(&mut f, &mut h)?;
                Ok(hex::encode(h.finalize()) == sha)
            });
            if !matches!(ok, Ok(true)) {
                bad.push(sha);
            }
        }
        Ok(bad)
    }

    // ACL

    /// The current table. Evaluations against it see one consistent version.
    pub fn acl(&self) -> Arc<AclTable> {
        self.acl.read().expect("acl lock poisoned").clone()
    }

    /// Replace the table with the result of `f`, persisting it first. `f`
    /// returning `Ok(None)` leaves everything unchanged.
    pub fn update_acl<E>(&self, f: impl FnOnce(&AclTable) -> Result<Option<AclTable>, E>) -> Result<Arc<AclTable>, E>
    where
        E: From<StoreError>,
    {
        let mut db = self.db();
        let current = self.acl();
        let Some(next) = f(&current)? else {
            return Ok(current);
        };
        let tx = db.transaction().map_err(StoreError::from)?;
        write_acl(&tx, &next)?;
        tx.commit().map_err(StoreError::from)?;
        let next = Arc::new(next);
        *self.acl.write().expect("acl lock poisoned") = next.clone();
        Ok(next)
    }

    // Audit

    /// Append `event`, assigning the next sequence number. The row is durable
    /// when this returns.
    pub fn append_audit(&self, event: NewAuditEvent) -> Result<AuditEvent> {
        let db = self.db();
        let seq: i64 = db.query_row("SELECT COALESCE(MAX(seq), 0) + 1 FROM audit_log", [], |r| r.get(0))?;
        let at = OffsetDateTime::now_utc();
        db.execute(
            "INSERT INTO audit_log (seq, at, principal, action, target, outcome, detail)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            params![
                seq,
                fmt_time(at),
                event.principal,
                event.action.as_str(),
                event.target,
                event.outcome.as_str(),
                event.detail
            ],
        )?;
        Ok(AuditEvent {
            seq: seq as u64,
            at,
            principal: event.principal,
            action: event.action,
            target: event.target,
            outcome: event.outcome,
            detail: event.detail,
        })
    }

    /// Matching events in sequence order.
    pub fn query_audit(&self, filter: &AuditFilter) -> Result<Vec<AuditEvent>> {
        let db = self.db();
        let mut stmt = db.prepare(
            "SELECT seq, at, principal, action, target, outcome, detail FROM audit_log
             WHERE seq >= ?1 AND seq <= ?2
               AND (?3 IS NULL OR principal = ?3)
               AND (?4 IS NULL OR action = ?4)
             ORDER BY seq",
        )?;
        let from = filter.from_seq.unwrap_or(0).min(i64::MAX as u64) as i64;
        let to = filter.to_seq.unwrap_or(u64::MAX).min(i64::MAX as u64) as i64;
        let rows = stmt
            .query_map(params![from, to, filter.principal, filter.action.map(|a| a.as_str())], event_from_row)?
            .collect::<rusqlite::Result<Vec<_>>>()?;
        Ok(rows)
    }

    pub fn audit_len(&self) -> Result<u64> {
        let n: i64 = self.db().query_row("SELECT COUNT(*) FROM audit_log", [], |r| r.get(0))?;
        Ok(n as u64)
    }

    /// True when there are no files, grants or audit events.
    pub fn is_empty(&self) -> Result<bool> {
        let db = self.db();
        let n: i64 = db.query_row(
            "SELECT (SELECT COUNT(*) FROM files) + (SELECT COUNT(*) FROM acl_entries) + (SELECT COUNT(*) FROM audit_log)",
            [],
            |r| r.get(0),
        )?;
        Ok(n == 0)
    }

    fn pin(&self, hashes: &[String]) {
        let mut pins = self.pins.lock().expect("pins poisoned");
        for h in hashes {
            *pins.counts.entry(h.clone()).or_default() += 1;
        }
    }

    fn unpin(&self, hashes: &[String]) -> Result<()> {
        let released: Vec<String> = {
            let mut pins = self.pins.lock().expect("pins poisoned");
            let mut out = Vec::new();
            for h in hashes {
                if let Some(c) = pins.counts.get_mut(h) {
                    *c -= 1;
                    if *c == 0 {
                        pins.counts.remove(h);
                        if pins.deferred.remove(h) {
                            out.push(h.clone());
                        }
                    }
                }
            }
            out
        };
        if released.is_empty() {
            return Ok(());
        }
        let db = self.db();
        for h in released {
            self.collect_blob(&db, &h)?;
        }
        Ok(())
    }
}

/// Rewrite `acl_entries` from `table`. Run inside the caller's transaction.
fn write_acl(db: &Connection, table: &AclTable) -> Result<()> {
    db.execute("DELETE FROM acl_entries", [])?;
    let mut stmt = db.prepare("INSERT INTO acl_entries (subject, scope, permissions) VALUES (?1, ?2, ?3)")?;
    for e in table.entries() {
        stmt.execute(params![e.subject.to_string(), e.scope.to_string(), e.permissions.to_string()])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
