//! Loads an oracle fixture into a real directory and ACL table and compares
//! every decision.

use sfs_core::acl;
use sfs_core::directory::{group_attributes, person_attributes, DEFAULT_BASE_DN};
use sfs_core::{AclTable, Directory, DirectoryEntry, Permission, Role, Scope, Status, Subject};

use crate::acl_oracle::Fixture;

pub fn load(f: &Fixture) -> (Directory, AclTable) {
    let dir = Directory::in_memory(DEFAULT_BASE_DN.parse().unwrap());
    dir.ensure_layout().unwrap();
    let snap = dir.snapshot();
    for (i, u) in f.users.iter().enumerate() {
        let role = if u.admin { Role::Administrator } else { Role::Client };
        let status = if u.active { Status::Active } else { Status::Suspended };
        let fp = format!("{i:064x}");
        dir.add_entry(DirectoryEntry::new(snap.user_dn(u.name), person_attributes(u.name, role, status, &fp, &[0x30])))
            .unwrap();
    }
    for (g, members) in &f.groups {
        let dns: Vec<_> = members.iter().map(|m| snap.user_dn(m)).collect();
        dir.add_entry(DirectoryEntry::new(snap.group_dn(g), group_attributes(g, &dns))).unwrap();
    }
    let snap = dir.snapshot();
    let mut table = AclTable::new();
    for (subject, scope, perms) in &f.grants {
        let subject: Subject = subject.parse().unwrap();
        let scope: Scope = scope.parse().unwrap();
        let perms = perms.iter().map(|p| p.parse::<Permission>().unwrap()).collect();
        table = table.grant(subject, scope, perms, &*snap).unwrap();
    }
    (dir, table)
}

/// Number of checks made and a description of each disagreement.
pub fn disagreements(f: &Fixture) -> (usize, Vec<String>) {
    let (dir, table) = load(f);
    let snap = dir.snapshot();
    let mut bad = Vec::new();
    let cases = f.cases();
    for (user, perm, scope, uploader) in &cases {
        let principal = snap.principal(user).unwrap();
        let decision = acl::evaluate(&principal, perm.parse().unwrap(), &scope.parse().unwrap(), &table, *uploader);
        let expected = f.decide(user, perm, scope, *uploader);
        if (decision.is_allow(), decision.reason()) != expected {
            bad.push(format!(
                "{user} {perm} {scope} uploader={uploader:?}: got {} {}, oracle {expected:?}",
                decision.is_allow(),
                decision.reason()
            ));
        }
    }
    (cases.len(), bad)
}
