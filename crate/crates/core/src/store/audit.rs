use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use time::OffsetDateTime;

use super::StoreError;

macro_rules! vocabulary {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = StoreError;

            fn from_str(s: &str) -> Result<Self, StoreError> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(StoreError::InvalidVocabulary(s.to_string())),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

vocabulary!(AuditAction {
    Auth => "AUTH",
    List => "LIST",
    Download => "DOWNLOAD",
    Upload => "UPLOAD",
    Delete => "DELETE",
    AdminUserAdd => "ADMIN_USER_ADD",
    AdminUserDel => "ADMIN_USER_DEL",
    AdminUserMod => "ADMIN_USER_MOD",
    AdminCertIssue => "ADMIN_CERT_ISSUE",
    AdminGroupAdd => "ADMIN_GROUP_ADD",
    AdminGroupDel => "ADMIN_GROUP_DEL",
    AdminMemberAdd => "ADMIN_MEMBER_ADD",
    AdminMemberDel => "ADMIN_MEMBER_DEL",
    AdminAclSet => "ADMIN_ACL_SET",
    AdminAclDel => "ADMIN_ACL_DEL",
    AdminBackup => "ADMIN_BACKUP",
    AdminRestore => "ADMIN_RESTORE",
    AdminAuditRead => "ADMIN_AUDIT_READ",
});

vocabulary!(AuditOutcome {
    Success => "success",
    Denied => "denied",
    Error => "error",
});

/// Principal name recorded when the peer could not be identified.
pub const ANONYMOUS: &str = "anonymous";

/// An event before the log assigns its sequence number and timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewAuditEvent {
    pub principal: String,
    pub action: AuditAction,
    pub target: String,
    pub outcome: AuditOutcome,
    pub detail: String,
}

impl NewAuditEvent {
    pub fn new(
        principal: impl Into<String>,
        action: AuditAction,
        target: impl Into<String>,
        outcome: AuditOutcome,
        detail: impl Into<String>,
    ) -> Self {
        NewAuditEvent { principal: principal.into(), action, target: target.into(), outcome, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub seq: u64,
    #[serde(with = "time::serde::rfc3339")]
    pub at: OffsetDateTime,
    pub principal: String,
    pub action: AuditAction,
    pub target: String,
    pub outcome: AuditOutcome,
    pub detail: String,
}

/// Conjunction of optional conditions; `from_seq` and `to_seq` are inclusive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditFilter {
    pub principal: Option<String>,
    pub action: Option<AuditAction>,
    pub from_seq: Option<u64>,
    pub to_seq: Option<u64>,
}

impl AuditFilter {
    pub fn matches(&self, e: &AuditEvent) -> bool {
        self.principal.as_ref().is_none_or(|p| *p == e.principal)
            && self.action.is_none_or(|a| a == e.action)
            && self.from_seq.is_none_or(|s| e.seq >= s)
            && self.to_seq.is_none_or(|s| e.seq <= s)
    }
}
