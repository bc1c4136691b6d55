//! Embedded hierarchical principal directory.
//!
//! Entries are addressed by distinguished name beneath a configured base
//! (default `dc=sfs,dc=local`). People live under `ou=people` and groups under
//! `ou=groups`. The whole tree is held in memory as an immutable snapshot;
//! every mutation builds a new snapshot, checkpoints it to an LDIF file when a
//! path is configured, and only then publishes it to readers.

mod dn;
mod entry;
pub mod ldif;

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use thiserror::Error;

pub use dn::{AttributeType, DistinguishedName, MalformedDn, Rdn};
pub use entry::{AttrName, Attributes, DirectoryEntry, SearchFilter};
pub use ldif::LdifError;

use crate::acl::{Principal, Registry, Role, Status};
use crate::fsutil;
use crate::naming::{is_fingerprint, is_valid_name};

pub const DEFAULT_BASE_DN: &str = "dc=sfs,dc=local";

pub const ATTR_UID: &str = "uid";
pub const ATTR_ROLE: &str = "role";
pub const ATTR_STATUS: &str = "status";
pub const ATTR_FINGERPRINT: &str = "certFingerprint";
pub const ATTR_CERTIFICATE: &str = "userCertificate;binary";
pub const ATTR_CN: &str = "cn";
pub const ATTR_MEMBER: &str = "member";

#[derive(Debug, Error)]
pub enum DirectoryError {
    #[error(transparent)]
    MalformedDn(#[from] MalformedDn),
    #[error("entry already exists: {0}")]
    DuplicateDn(String),
    #[error("parent entry does not exist: {0}")]
    NoSuchParent(String),
    #[error("no such entry: {0}")]
    NoSuchEntry(String),
    #[error("entry has children: {0}")]
    HasChildren(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("no principal with that certificate fingerprint")]
    NotFound,
    #[error("fingerprint {0} is bound to more than one principal")]
    Ambiguous(String),
    #[error("fingerprint must be 64 lowercase hex characters")]
    InvalidFingerprint,
    #[error(transparent)]
    MalformedLdif(#[from] LdifError),
    #[error("directory is not empty")]
    NotEmpty,
    #[error("integrity violation: {0}")]
    Integrity(String),
    #[error("checkpoint failed: {0}")]
    Io(#[from] io::Error),
}

impl DirectoryError {
    pub fn code(&self) -> &'static str {
        match self {
            DirectoryError::MalformedDn(_) => "MALFORMED_DN",
            DirectoryError::DuplicateDn(_) => "DUPLICATE_DN",
            DirectoryError::NoSuchParent(_) => "NO_SUCH_PARENT",
            DirectoryError::NoSuchEntry(_) => "NO_SUCH_ENTRY",
            DirectoryError::HasChildren(_) => "HAS_CHILDREN",
            DirectoryError::SchemaViolation(_) => "SCHEMA_VIOLATION",
            DirectoryError::NotFound => "NOT_FOUND",
            DirectoryError::Ambiguous(_) => "AMBIGUOUS",
            DirectoryError::InvalidFingerprint => "INVALID_FINGERPRINT",
            DirectoryError::MalformedLdif(_) => "MALFORMED_LDIF",
            DirectoryError::NotEmpty => "NOT_EMPTY",
            DirectoryError::Integrity(_) => "INTEGRITY_VIOLATION",
            DirectoryError::Io(_) => "IO_FAILURE",
        }
    }
}

pub type Result<T, E = DirectoryError> = std::result::Result<T, E>;

fn schema(msg: impl Into<String>) -> DirectoryError {
    DirectoryError::SchemaViolation(msg.into())
}

/// One immutable state of the directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    base: DistinguishedName,
    entries: BTreeMap<String, DirectoryEntry>,
}

impl Snapshot {
    fn empty(base: DistinguishedName) -> Self {
        Snapshot { base, entries: BTreeMap::new() }
    }

    pub fn base(&self) -> &DistinguishedName {
        &self.base
    }

    pub fn people_base(&self) -> DistinguishedName {
        self.base.child(AttributeType::Ou, "people")
    }

    pub fn groups_base(&self) -> DistinguishedName {
        self.base.child(AttributeType::Ou, "groups")
    }

    pub fn user_dn(&self, username: &str) -> DistinguishedName {
        self.people_base().child(AttributeType::Uid, username)
    }

    pub fn group_dn(&self, name: &str) -> DistinguishedName {
        self.groups_base().child(AttributeType::Cn, name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, dn: &DistinguishedName) -> Option<&DirectoryEntry> {
        self.entries.get(&dn.normalized())
    }

    pub fn contains(&self, dn: &DistinguishedName) -> bool {
        self.entries.contains_key(&dn.normalized())
    }

    pub fn entries(&self) -> impl Iterator<Item = &DirectoryEntry> {
        self.entries.values()
    }

    fn is_people_entry(&self, dn: &DistinguishedName) -> bool {
        dn.parent().is_some_and(|p| p == self.people_base())
    }

    fn is_group_entry(&self, dn: &DistinguishedName) -> bool {
        dn.parent().is_some_and(|p| p == self.groups_base())
    }

    /// People and group entries only; the base layout does not count.
    pub fn has_principals_or_groups(&self) -> bool {
        self.entries.values().any(|e| self.is_people_entry(&e.dn) || self.is_group_entry(&e.dn))
    }

    fn has_children(&self, dn: &DistinguishedName) -> bool {
        self.entries.values().any(|e| e.dn.parent().as_ref() == Some(dn))
    }

    /// Entries in the subtree at `base` that match `filter`, ordered by
    /// normalized DN.
    pub fn search(&self, base: &DistinguishedName, filter: &SearchFilter) -> Result<Vec<DirectoryEntry>> {
        if !self.contains(base) {
            return Err(DirectoryError::NoSuchEntry(base.to_string()));
        }
        Ok(self.entries.values().filter(|e| e.dn.is_within(base) && filter.matches(e)).cloned().collect())
    }

    /// Names of the groups listing `user_dn` as a member, ascending.
    pub fn groups_of(&self, user_dn: &DistinguishedName) -> Result<Vec<String>> {
        if !self.contains(user_dn) {
            return Err(DirectoryError::NoSuchEntry(user_dn.to_string()));
        }
        let mut names: Vec<String> = self
            .entries
            .values()
            .filter(|e| self.is_group_entry(&e.dn))
            .filter(|e| {
                e.attributes
                    .get_strs(ATTR_MEMBER)
                    .iter()
                    .any(|m| m.parse::<DistinguishedName>().is_ok_and(|m| &m == user_dn))
            })
            .map(|e| e.dn.rdn().value.clone())
            .collect();
        names.sort();
        Ok(names)
    }

    pub fn group_members(&self, group: &str) -> Result<Vec<String>> {
        let dn = self.group_dn(group);
        let entry = self.get(&dn).ok_or_else(|| DirectoryError::NoSuchEntry(dn.to_string()))?;
        let mut members: Vec<String> = entry
            .attributes
            .get_strs(ATTR_MEMBER)
            .iter()
            .filter_map(|m| m.parse::<DistinguishedName>().ok())
            .filter_map(|m| m.first(AttributeType::Uid).map(str::to_string))
            .collect();
        members.sort();
        Ok(members)
    }

    pub fn usernames(&self) -> Vec<String> {
        self.entries.values().filter(|e| self.is_people_entry(&e.dn)).map(|e| e.dn.rdn().value.clone()).collect()
    }

    pub fn group_names(&self) -> Vec<String> {
        self.entries.values().filter(|e| self.is_group_entry(&e.dn)).map(|e| e.dn.rdn().value.clone()).collect()
    }

    /// Resolve a certificate fingerprint to the unique principal bound to it.
    pub fn lookup_principal_by_fingerprint(&self, fp: &str) -> Result<Principal> {
        if !is_fingerprint(fp) {
            return Err(DirectoryError::InvalidFingerprint);
        }
        let mut hits = self
            .entries
            .values()
            .filter(|e| self.is_people_entry(&e.dn) && e.attributes.contains_value(ATTR_FINGERPRINT, fp.as_bytes()));
        let first = hits.next().ok_or(DirectoryError::NotFound)?;
        if hits.next().is_some() {
            return Err(DirectoryError::Ambiguous(fp.to_string()));
        }
        self.project(first)
    }

    /// The principal registered under `username`.
    pub fn principal(&self, username: &str) -> Result<Principal> {
        let dn = self.user_dn(username);
        let entry = self.get(&dn).ok_or_else(|| DirectoryError::NoSuchEntry(dn.to_string()))?;
        self.project(entry)
    }

    pub fn principals(&self) -> Result<Vec<Principal>> {
        self.entries.values().filter(|e| self.is_people_entry(&e.dn)).map(|e| self.project(e)).collect()
    }

    fn project(&self, entry: &DirectoryEntry) -> Result<Principal> {
        let a = &entry.attributes;
        let field = |name: &str| a.get_str(name).ok_or_else(|| schema(format!("{} lacks {name}", entry.dn)));
        Ok(Principal {
            username: field(ATTR_UID)?.to_string(),
            role: field(ATTR_ROLE)?.parse().map_err(|_| schema("bad role"))?,
            status: field(ATTR_STATUS)?.parse().map_err(|_| schema("bad status"))?,
            dn: entry.dn.clone(),
            cert_fingerprint: field(ATTR_FINGERPRINT)?.to_string(),
            groups: self.groups_of(&entry.dn)?,
        })
    }

    /// LDIF for the subtree at `base`, parents before children.
    pub fn export_ldif(&self, base: &DistinguishedName) -> Result<String> {
        if !self.contains(base) {
            return Err(DirectoryError::NoSuchEntry(base.to_string()));
        }
        let mut entries: Vec<&DirectoryEntry> = self.entries.values().filter(|e| e.dn.is_within(base)).collect();
        entries.sort_by_cached_key(|e| (e.dn.depth(), e.dn.normalized()));
        Ok(ldif::render(entries))
    }

    /// LDIF of every entry, or a bare header for an empty directory.
    pub fn full_ldif(&self) -> String {
        if self.entries.is_empty() {
            return ldif::render([]);
        }
        self.export_ldif(&self.base).unwrap_or_else(|_| {
            // entries exist but the base does not: should be unreachable
            let mut v: Vec<_> = self.entries.values().collect();
            v.sort_by_cached_key(|e| (e.dn.depth(), e.dn.normalized()));
            ldif::render(v)
        })
    }

    /// Full-scan check of tree integrity, referential integrity and schema.
    pub fn validate(&self) -> Result<()> {
        for (key, entry) in &self.entries {
            if *key != entry.dn.normalized() {
                return Err(DirectoryError::Integrity(format!("key mismatch for {}", entry.dn)));
            }
            if !entry.dn.is_within(&self.base) {
                return Err(DirectoryError::Integrity(format!("{} is outside the base", entry.dn)));
            }
            if entry.dn != self.base {
                let parent = entry.dn.parent().expect("below base");
                if !self.contains(&parent) {
                    return Err(DirectoryError::Integrity(format!("{} has no parent entry", entry.dn)));
                }
            }
            self.check_schema(entry).map_err(|e| match e {
                DirectoryError::SchemaViolation(m) => DirectoryError::Integrity(m),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Normalize `member` values so stored DNs compare byte-wise.
    fn normalize_members(&self, entry: &mut DirectoryEntry) -> Result<()> {
        if !self.is_group_entry(&entry.dn) {
            return Ok(());
        }
        let Some(values) = entry.attributes.get(ATTR_MEMBER) else {
            return Ok(());
        };
        let mut normalized: Vec<Vec<u8>> = Vec::with_capacity(values.len());
        for v in values {
            let text = std::str::from_utf8(v).map_err(|_| schema("member is not UTF-8"))?;
            let dn: DistinguishedName = text.parse().map_err(|e| schema(format!("member `{text}`: {e}")))?;
            let v = dn.normalized().into_bytes();
            if !normalized.contains(&v) {
                normalized.push(v);
            }
        }
        entry.attributes.set(ATTR_MEMBER, normalized);
        Ok(())
    }

    fn check_schema(&self, entry: &DirectoryEntry) -> Result<()> {
        let dn = &entry.dn;
        let a = &entry.attributes;
        let single_str = |name: &str| -> Result<&str> {
            match a.get(name) {
                Some([v]) => std::str::from_utf8(v).map_err(|_| schema(format!("{dn}: {name} is not UTF-8"))),
                Some(_) => Err(schema(format!("{dn}: {name} must have exactly one value"))),
                None => Err(schema(format!("{dn}: missing {name}"))),
            }
        };

        if self.is_people_entry(dn) {
            let rdn = dn.rdn();
            if rdn.attr != AttributeType::Uid {
                return Err(schema(format!("{dn}: people entries are named by uid")));
            }
            if !is_valid_name(&rdn.value) {
                return Err(schema(format!("{dn}: invalid username")));
            }
            if single_str(ATTR_UID)? != rdn.value {
                return Err(schema(format!("{dn}: uid attribute differs from the RDN")));
            }
            single_str(ATTR_ROLE)?
                .parse::<Role>()
                .map_err(|_| schema(format!("{dn}: role must be client or administrator")))?;
            single_str(ATTR_STATUS)?
                .parse::<Status>()
                .map_err(|_| schema(format!("{dn}: status must be active or suspended")))?;
            if !is_fingerprint(single_str(ATTR_FINGERPRINT)?) {
                return Err(schema(format!("{dn}: certFingerprint must be 64 lowercase hex")));
            }
            match a.get(ATTR_CERTIFICATE) {
                Some([der]) if !der.is_empty() => {}
                _ => return Err(schema(format!("{dn}: exactly one {ATTR_CERTIFICATE} required"))),
            }
        } else if self.is_group_entry(dn) {
            let rdn = dn.rdn();
            if rdn.attr != AttributeType::Cn {
                return Err(schema(format!("{dn}: group entries are named by cn")));
            }
            if !is_valid_name(&rdn.value) {
                return Err(schema(format!("{dn}: invalid group name")));
            }
            if single_str(ATTR_CN)? != rdn.value {
                return Err(schema(format!("{dn}: cn attribute differs from the RDN")));
            }
            for m in a.get(ATTR_MEMBER).unwrap_or_default() {
                let text = std::str::from_utf8(m).map_err(|_| schema("member is not UTF-8"))?;
                let member: DistinguishedName = text.parse().map_err(|e| schema(format!("member `{text}`: {e}")))?;
                if !self.is_people_entry(&member) || !self.contains(&member) {
                    return Err(schema(format!("{dn}: member {member} is not an existing user")));
                }
            }
        }
        Ok(())
    }

    fn insert(&mut self, mut entry: DirectoryEntry) -> Result<()> {
        let key = entry.dn.normalized();
        if self.entries.contains_key(&key) {
            return Err(DirectoryError::DuplicateDn(key));
        }
        if !entry.dn.is_within(&self.base) {
            return Err(schema(format!("{} is outside the base {}", entry.dn, self.base)));
        }
        if entry.dn != self.base {
            let parent = entry.dn.parent().expect("below base");
            if !self.contains(&parent) {
                return Err(DirectoryError::NoSuchParent(parent.to_string()));
            }
        }
        self.normalize_members(&mut entry)?;
        self.check_schema(&entry)?;
        self.entries.insert(key, entry);
        Ok(())
    }

    fn remove(&mut self, dn: &DistinguishedName) -> Result<DirectoryEntry> {
        let key = dn.normalized();
        if !self.entries.contains_key(&key) {
            return Err(DirectoryError::NoSuchEntry(key));
        }
        if self.has_children(dn) {
            return Err(DirectoryError::HasChildren(key));
        }
        let removed = self.entries.remove(&key).expect("present");
        // drop dangling member references
        let member = key.as_bytes();
        for e in self.entries.values_mut() {
            if let Some(values) = e.attributes.get(ATTR_MEMBER) {
                if values.iter().any(|v| v == member) {
                    let kept: Vec<Vec<u8>> = values.iter().filter(|v| v.as_slice() != member).cloned().collect();
                    e.attributes.set(ATTR_MEMBER, kept);
                }
            }
        }
        Ok(removed)
    }

    fn replace(&mut self, dn: &DistinguishedName, replace: Attributes) -> Result<()> {
        let key = dn.normalized();
        let mut entry = self.entries.get(&key).cloned().ok_or_else(|| DirectoryError::NoSuchEntry(key.clone()))?;
        for (name, values) in replace.iter() {
            entry.attributes.set(name.clone(), values.to_vec());
        }
        self.normalize_members(&mut entry)?;
        self.check_schema(&entry)?;
        self.entries.insert(key, entry);
        Ok(())
    }
}

impl Registry for Snapshot {
    fn has_user(&self, username: &str) -> bool {
        is_valid_name(username) && self.contains(&self.user_dn(username))
    }

    fn has_group(&self, group: &str) -> bool {
        is_valid_name(group) && self.contains(&self.group_dn(group))
    }
}

/// The live directory: a published snapshot plus a serialized writer.
#[derive(Debug)]
pub struct Directory {
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
    checkpoint: Option<PathBuf>,
}

impl Directory {
    /// A directory that is never persisted.
    pub fn in_memory(base: DistinguishedName) -> Self {
        Directory { current: RwLock::new(Arc::new(Snapshot::empty(base))), writer: Mutex::new(()), checkpoint: None }
    }

    /// Open the directory checkpointed at `path`, loading it if the file
    /// exists.
    pub fn open(base: DistinguishedName, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut snapshot = Snapshot::empty(base);
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            snapshot = build_snapshot(snapshot.base.clone(), ldif::parse(&text)?)?;
        }
        Ok(Directory { current: RwLock::new(Arc::new(snapshot)), writer: Mutex::new(()), checkpoint: Some(path) })
    }

    pub fn checkpoint_path(&self) -> Option<&Path> {
        self.checkpoint.as_deref()
    }

    /// The current state. Readers hold it as long as they like; later writes
    /// publish new snapshots without disturbing it.
    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("directory lock poisoned").clone()
    }

    pub fn base(&self) -> DistinguishedName {
        self.snapshot().base.clone()
    }

    /// Apply `f` to a private copy of the current state, checkpoint the
    /// result and publish it. Nothing is published if `f` or the checkpoint
    /// fails.
    pub(crate) fn mutate<T>(&self, f: impl FnOnce(&mut Snapshot) -> Result<T>) -> Result<T> {
        let _guard = self.writer.lock().expect("directory writer poisoned");
        let mut next = (*self.snapshot()).clone();
        let out = f(&mut next)?;
        if let Some(path) = &self.checkpoint {
            fsutil::atomic_write(path, next.full_ldif().as_bytes())?;
        }
        *self.current.write().expect("directory lock poisoned") = Arc::new(next);
        Ok(out)
    }

    /// Create the base, `ou=people` and `ou=groups` entries if missing.
    pub fn ensure_layout(&self) -> Result<()> {
        let snap = self.snapshot();
        if snap.contains(&snap.base) && snap.contains(&snap.people_base()) && snap.contains(&snap.groups_base()) {
            return Ok(());
        }
        self.mutate(|s| {
            let base = s.base.clone();
            let rdn = base.rdn().clone();
            for (dn, attr, value) in [
                (base.clone(), rdn.attr.as_str().to_string(), rdn.value.clone()),
                (s.people_base(), "ou".to_string(), "people".to_string()),
                (s.groups_base(), "ou".to_string(), "groups".to_string()),
            ] {
                if !s.contains(&dn) {
                    s.insert(DirectoryEntry::new(dn, Attributes::new().with(&attr, value)))?;
                }
            }
            Ok(())
        })
    }

    pub fn add_entry(&self, entry: DirectoryEntry) -> Result<()> {
        self.mutate(|s| s.insert(entry))
    }

    /// Remove a leaf entry and every `member` reference to it.
    pub fn delete_entry(&self, dn: &DistinguishedName) -> Result<DirectoryEntry> {
        self.mutate(|s| s.remove(dn))
    }

    /// Replace the listed attributes wholesale; an empty value list deletes
    /// the attribute.
    pub fn modify_entry(&self, dn: &DistinguishedName, replace: Attributes) -> Result<()> {
        self.mutate(|s| s.replace(dn, replace))
    }

    pub fn search(&self, base: &DistinguishedName, filter: &SearchFilter) -> Result<Vec<DirectoryEntry>> {
        self.snapshot().search(base, filter)
    }

    pub fn get(&self, dn: &DistinguishedName) -> Result<DirectoryEntry> {
        self.snapshot().get(dn).cloned().ok_or_else(|| DirectoryError::NoSuchEntry(dn.to_string()))
    }

    pub fn lookup_principal_by_fingerprint(&self, fp: &str) -> Result<Principal> {
        self.snapshot().lookup_principal_by_fingerprint(fp)
    }

    pub fn groups_of(&self, user_dn: &DistinguishedName) -> Result<Vec<String>> {
        self.snapshot().groups_of(user_dn)
    }

    pub fn export_ldif(&self, base: &DistinguishedName) -> Result<String> {
        self.snapshot().export_ldif(base)
    }

    /// Replace the directory contents with the records in `text`. Requires
    /// an empty directory (layout entries aside) unless `force` is set.
    /// Returns the number of entries loaded.
    pub fn import_ldif(&self, text: &str, force: bool) -> Result<usize> {
        let parsed = ldif::parse(text)?;
        self.mutate(|s| {
            if !force && s.has_principals_or_groups() {
                return Err(DirectoryError::NotEmpty);
            }
            let next = build_snapshot(s.base.clone(), parsed)?;
            let n = next.len();
            *s = next;
            Ok(n)
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.snapshot().validate()
    }

    /// Add `username` to `group`. Adding an existing member is a no-op.
    pub fn add_member(&self, group: &str, username: &str) -> Result<()> {
        self.mutate(|s| {
            let gdn = s.group_dn(group);
            let udn = s.user_dn(username);
            if !s.contains(&udn) {
                return Err(DirectoryError::NoSuchEntry(udn.to_string()));
            }
            let entry = s.get(&gdn).ok_or_else(|| DirectoryError::NoSuchEntry(gdn.to_string()))?;
            let mut members = entry.attributes.get(ATTR_MEMBER).unwrap_or_default().to_vec();
            let v = udn.normalized().into_bytes();
            if !members.contains(&v) {
                members.push(v);
            }
            let mut replace = Attributes::new();
            replace.set(ATTR_MEMBER, members);
            s.replace(&gdn, replace)
        })
    }

    /// Remove `username` from `group`; `NoSuchEntry` if not a member.
    pub fn remove_member(&self, group: &str, username: &str) -> Result<()> {
        self.mutate(|s| {
            let gdn = s.group_dn(group);
            let udn = s.user_dn(username);
            let entry = s.get(&gdn).ok_or_else(|| DirectoryError::NoSuchEntry(gdn.to_string()))?;
            let v = udn.normalized().into_bytes();
            let members = entry.attributes.get(ATTR_MEMBER).unwrap_or_default();
            if !members.contains(&v) {
                return Err(DirectoryError::NoSuchEntry(format!("{udn} in {gdn}")));
            }
            let kept: Vec<Vec<u8>> = members.iter().filter(|m| **m != v).cloned().collect();
            let replace = if kept.is_empty() {
                Attributes::new().cleared(ATTR_MEMBER)
            } else {
                let mut r = Attributes::new();
                r.set(ATTR_MEMBER, kept);
                r
            };
            s.replace(&gdn, replace)
        })
    }
}

/// Build a snapshot from unordered entries: parents first, and at each depth
/// group entries after the users they may reference.
pub(crate) fn build_snapshot(base: DistinguishedName, mut entries: Vec<DirectoryEntry>) -> Result<Snapshot> {
    let mut snap = Snapshot::empty(base);
    entries.sort_by_cached_key(|e| {
        let is_group = snap.is_group_entry(&e.dn);
        (e.dn.depth(), is_group, e.dn.normalized())
    });
    for e in entries {
        snap.insert(e)?;
    }
    Ok(snap)
}

/// Attributes for a people entry.
pub fn person_attributes(
    username: &str,
    role: Role,
    status: Status,
    fingerprint: &str,
    certificate_der: &[u8],
) -> Attributes {
    Attributes::new()
        .with(ATTR_UID, username)
        .with(ATTR_ROLE, role.as_str())
        .with(ATTR_STATUS, status.as_str())
        .with(ATTR_FINGERPRINT, fingerprint)
        .with(ATTR_CERTIFICATE, certificate_der)
}

/// Attributes for a group entry with the given member DNs.
pub fn group_attributes(name: &str, members: &[DistinguishedName]) -> Attributes {
    let mut a = Attributes::new().with(ATTR_CN, name);
    for m in members {
        a.push(ATTR_MEMBER, m.normalized().into_bytes());
    }
    a
}
