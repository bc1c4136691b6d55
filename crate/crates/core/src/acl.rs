//! Authorization over file scopes.
//!
//! The table holds positive grants only. [`evaluate`] applies a fixed rule
//! order and reports which rule decided:
//!
//! 1. a principal that is not active is denied (`SUSPENDED`);
//! 2. administrators are allowed everything (`ADMIN`);
//! 3. anyone is allowed everything in their own home scope (`OWNER`);
//! 4. the uploader of a file may delete it (`UPLOADER`);
//! 5. a grant to the user, or to one of the user's groups, on the requested
//!    scope allows the permissions it lists (`GRANTED`);
//! 6. everything else is denied (`NO_GRANT`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::directory::DistinguishedName;
use crate::naming::is_valid_name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Permission {
    View,
    Download,
    Upload,
    Delete,
}

impl Permission {
    pub const ALL: [Permission; 4] = [Permission::View, Permission::Download, Permission::Upload, Permission::Delete];

    pub fn as_str(self) -> &'static str {
        match self {
            Permission::View => "VIEW",
            Permission::Download => "DOWNLOAD",
            Permission::Upload => "UPLOAD",
            Permission::Delete => "DELETE",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Permission {
    type Err = AclError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Permission::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| AclError::InvalidPermission(s.to_string()))
    }
}

/// A subset of the four permissions.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PermissionSet(u8);

impl PermissionSet {
    pub const EMPTY: PermissionSet = PermissionSet(0);
    pub const ALL: PermissionSet = PermissionSet(0b1111);

    pub fn contains(self, p: Permission) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn insert(&mut self, p: Permission) {
        self.0 |= p.bit();
    }

    pub fn union(self, other: PermissionSet) -> PermissionSet {
        PermissionSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Permission> {
        Permission::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    pub fn to_vec(self) -> Vec<Permission> {
        self.iter().collect()
    }
}

impl FromIterator<Permission> for PermissionSet {
    fn from_iter<I: IntoIterator<Item = Permission>>(iter: I) -> Self {
        let mut s = PermissionSet::EMPTY;
        for p in iter {
            s.insert(p);
        }
        s
    }
}

impl fmt::Debug for PermissionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for PermissionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Permission::as_str).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for PermissionSet {
    type Err = AclError;

    /// Comma-separated permission names, e.g. `VIEW,DOWNLOAD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
    }
}

impl Serialize for PermissionSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for PermissionSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Vec::<Permission>::deserialize(d)?.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeKind {
    Home,
    Group,
}

/// A file namespace: a user's home or a group's shared area.
/// Textual form `home:<user>` or `group:<name>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scope {
    pub kind: ScopeKind,
    pub name: String,
}

impl Scope {
    pub fn home(user: impl Into<String>) -> Self {
        Scope { kind: ScopeKind::Home, name: user.into() }
    }

    pub fn group(name: impl Into<String>) -> Self {
        Scope { kind: ScopeKind::Group, name: name.into() }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScopeKind::Home => write!(f, "home:{}", self.name),
            ScopeKind::Group => write!(f, "group:{}", self.name),
        }
    }
}

impl FromStr for Scope {
    type Err = AclError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AclError::InvalidScope(s.to_string());
        let (kind, name) = s.split_once(':').ok_or_else(bad)?;
        let kind = match kind {
            "home" => ScopeKind::Home,
            "group" => ScopeKind::Group,
            _ => return Err(bad()),
        };
        if !is_valid_name(name) {
            return Err(bad());
        }
        Ok(Scope { kind, name: name.to_string() })
    }
}

/// Who a grant applies to. Textual form `user:<name>` or `group:<name>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subject {
    User(String),
    Group(String),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::User(u) => write!(f, "user:{u}"),
            Subject::Group(g) => write!(f, "group:{g}"),
        }
    }
}

impl FromStr for Subject {
    type Err = AclError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AclError::InvalidSubject(s.to_string());
        let (kind, name) = s.split_once(':').ok_or_else(bad)?;
        if !is_valid_name(name) {
            return Err(bad());
        }
        match kind {
            "user" => Ok(Subject::User(name.to_string())),
            "group" => Ok(Subject::Group(name.to_string())),
            _ => Err(bad()),
        }
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(Scope);
string_serde!(Subject);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AclEntry {
    pub subject: Subject,
    pub scope: Scope,
    pub permissions: PermissionSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Client,
    Administrator,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Client => "client",
            Role::Administrator => "administrator",
        }
    }
}

impl FromStr for Role {
    type Err = AclError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "client" => Ok(Role::Client),
            "administrator" => Ok(Role::Administrator),
            _ => Err(AclError::InvalidRole(s.to_string())),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Suspended,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Active => "active",
            Status::Suspended => "suspended",
        }
    }
}

impl FromStr for Status {
    type Err = AclError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "active" => Ok(Status::Active),
            "suspended" => Ok(Status::Suspended),
            _ => Err(AclError::InvalidStatus(s.to_string())),
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A registered user as seen by the authorization engine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principal {
    pub username: String,
    pub role: Role,
    pub status: Status,
    pub dn: DistinguishedName,
    pub cert_fingerprint: String,
    pub groups: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AllowReason {
    Admin,
    Owner,
    Uploader,
    Granted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DenyReason {
    Suspended,
    NoGrant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Allow(AllowReason),
    Deny(DenyReason),
}

impl Decision {
    pub fn is_allow(self) -> bool {
        matches!(self, Decision::Allow(_))
    }

    pub fn reason(self) -> &'static str {
        match self {
            Decision::Allow(AllowReason::Admin) => "ADMIN",
            Decision::Allow(AllowReason::Owner) => "OWNER",
            Decision::Allow(AllowReason::Uploader) => "UPLOADER",
            Decision::Allow(AllowReason::Granted) => "GRANTED",
            Decision::Deny(DenyReason::Suspended) => "SUSPENDED",
            Decision::Deny(DenyReason::NoGrant) => "NO_GRANT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AclError {
    #[error("unknown subject {0}")]
    UnknownSubject(String),
    #[error("unknown scope {0}")]
    UnknownScope(String),
    #[error("no ACL entry for {0}")]
    NoSuchEntry(String),
    #[error("permission set must not be empty")]
    EmptyPermissions,
    #[error("invalid permission `{0}`")]
    InvalidPermission(String),
    #[error("invalid scope `{0}` (expected home:<user> or group:<name>)")]
    InvalidScope(String),
    #[error("invalid subject `{0}` (expected user:<name> or group:<name>)")]
    InvalidSubject(String),
    #[error("invalid role `{0}`")]
    InvalidRole(String),
    #[error("invalid status `{0}`")]
    InvalidStatus(String),
}

impl AclError {
    pub fn code(&self) -> &'static str {
        match self {
            AclError::UnknownSubject(_) => "UNKNOWN_SUBJECT",
            AclError::UnknownScope(_) => "UNKNOWN_SCOPE",
            AclError::NoSuchEntry(_) => "NO_SUCH_ENTRY",
            AclError::EmptyPermissions
            | AclError::InvalidPermission(_)
            | AclError::InvalidScope(_)
            | AclError::InvalidSubject(_)
            | AclError::InvalidRole(_)
            | AclError::InvalidStatus(_) => "INVALID_ARGUMENT",
        }
    }
}

/// Existence checks `grant` needs from the directory.
pub trait Registry {
    fn has_user(&self, username: &str) -> bool;
    fn has_group(&self, group: &str) -> bool;
}

/// The grant table. Updates return a new table with a bumped version, so a
/// shared `Arc<AclTable>` is a consistent snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AclTable {
    version: u64,
    entries: BTreeMap<(Subject, Scope), PermissionSet>,
}

impl AclTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = AclEntry>) -> Self {
        AclTable {
            version: 0,
            entries: entries
                .into_iter()
                .filter(|e| !e.permissions.is_empty())
                .map(|e| ((e.subject, e.scope), e.permissions))
                .collect(),
        }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, subject: &Subject, scope: &Scope) -> Option<PermissionSet> {
        self.entries.get(&(subject.clone(), scope.clone())).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = AclEntry> + '_ {
        self.entries.iter().map(|((subject, scope), perms)| AclEntry {
            subject: subject.clone(),
            scope: scope.clone(),
            permissions: *perms,
        })
    }

    /// Upsert the grant for `(subject, scope)`, replacing its permissions.
    pub fn grant(
        &self,
        subject: Subject,
        scope: Scope,
        permissions: PermissionSet,
        registry: &impl Registry,
    ) -> Result<AclTable, AclError> {
        if permissions.is_empty() {
            return Err(AclError::EmptyPermissions);
        }
        let known = match &subject {
            Subject::User(u) => registry.has_user(u),
            Subject::Group(g) => registry.has_group(g),
        };
        if !known {
            return Err(AclError::UnknownSubject(subject.to_string()));
        }
        if scope.kind == ScopeKind::Group && !registry.has_group(&scope.name) {
            return Err(AclError::UnknownScope(scope.to_string()));
        }
        let mut next = self.clone();
        next.version += 1;
        next.entries.insert((subject, scope), permissions);
        Ok(next)
    }

    pub fn revoke(&self, subject: &Subject, scope: &Scope) -> Result<AclTable, AclError> {
        let key = (subject.clone(), scope.clone());
        if !self.entries.contains_key(&key) {
            return Err(AclError::NoSuchEntry(format!("{subject} on {scope}")));
        }
        let mut next = self.clone();
        next.version += 1;
        next.entries.remove(&key);
        Ok(next)
    }

    /// Drop every entry for which `pred` holds. Returns `None` when nothing
    /// matched.
    pub fn remove_where(&self, pred: impl Fn(&Subject, &Scope) -> bool) -> Option<AclTable> {
        if !self.entries.keys().any(|(s, sc)| pred(s, sc)) {
            return None;
        }
        let mut next = self.clone();
        next.version += 1;
        next.entries.retain(|(s, sc), _| !pred(s, sc));
        Some(next)
    }

    /// Union of the permissions granted to `user` directly or through
    /// `groups` on `scope`.
    fn granted(&self, user: &str, groups: &[String], scope: &Scope) -> PermissionSet {
        let mut set = self.entries.get(&(Subject::User(user.to_string()), scope.clone())).copied().unwrap_or_default();
        for g in groups {
            if let Some(p) = self.entries.get(&(Subject::Group(g.clone()), scope.clone())) {
                set = set.union(*p);
            }
        }
        set
    }
}

/// Decide whether `p` may exercise `perm` in `scope`. `file_uploader` is the
/// uploader of the targeted file, when the request names one.
pub fn evaluate(
    p: &Principal,
    perm: Permission,
    scope: &Scope,
    table: &AclTable,
    file_uploader: Option<&str>,
) -> Decision {
    if p.status != Status::Active {
        return Decision::Deny(DenyReason::Suspended);
    }
    if p.role == Role::Administrator {
        return Decision::Allow(AllowReason::Admin);
    }
    if scope.kind == ScopeKind::Home && scope.name == p.username {
        return Decision::Allow(AllowReason::Owner);
    }
    if perm == Permission::Delete && file_uploader == Some(p.username.as_str()) {
        return Decision::Allow(AllowReason::Uploader);
    }
    if table.granted(&p.username, &p.groups, scope).contains(perm) {
        return Decision::Allow(AllowReason::Granted);
    }
    Decision::Deny(DenyReason::NoGrant)
}

/// Permissions `p` holds on `scope` regardless of which file is targeted.
pub fn effective_permissions(p: &Principal, scope: &Scope, table: &AclTable) -> PermissionSet {
    Permission::ALL.into_iter().filter(|perm| evaluate(p, *perm, scope, table, None).is_allow()).collect()
}

/// The grant a newly created group starts with: members may view, download
/// and upload in the group's scope.
pub fn default_group_grant(group: &str) -> AclEntry {
    AclEntry {
        subject: Subject::Group(group.to_string()),
        scope: Scope::group(group),
        permissions: [Permission::View, Permission::Download, Permission::Upload].into_iter().collect(),
    }
}
