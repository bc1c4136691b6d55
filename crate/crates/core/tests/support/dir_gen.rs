//! Random directories and random mutation sequences.

use proptest::prelude::*;
use sfs_core::directory::{group_attributes, person_attributes, Attributes, ATTR_ROLE, ATTR_STATUS, DEFAULT_BASE_DN};
use sfs_core::{Directory, DirectoryEntry, Role, Status};

fn fp(seed: usize) -> String {
    format!("{seed:064x}")
}

pub fn with_layout() -> Directory {
    let d = Directory::in_memory(DEFAULT_BASE_DN.parse().unwrap());
    d.ensure_layout().unwrap();
    d
}

/// A handful of users and groups with random memberships, statuses and
/// binary certificate values; at most 30 entries including the layout.
pub fn arb_directory() -> impl Strategy<Value = Directory> {
    (
        prop::collection::btree_set("[a-z][a-z0-9_.-]{0,7}", 0..14),
        prop::collection::btree_set("[a-z][a-z0-9]{0,5}", 0..10),
        prop::collection::vec(any::<(prop::sample::Index, prop::sample::Index)>(), 0..20),
        prop::collection::vec(prop::collection::vec(any::<u8>(), 1..40), 14),
        prop::collection::vec(any::<bool>(), 14),
    )
        .prop_map(|(users, groups, links, certs, suspended)| {
            let d = with_layout();
            let users: Vec<String> = users.into_iter().collect();
            let groups: Vec<String> = groups.into_iter().collect();
            for (i, u) in users.iter().enumerate() {
                let status = if suspended[i] { Status::Suspended } else { Status::Active };
                let snap = d.snapshot();
                d.add_entry(DirectoryEntry::new(
                    snap.user_dn(u),
                    person_attributes(u, Role::Client, status, &fp(i), &certs[i]),
                ))
                .unwrap();
            }
            for g in &groups {
                let snap = d.snapshot();
                d.add_entry(DirectoryEntry::new(snap.group_dn(g), group_attributes(g, &[]))).unwrap();
            }
            if !users.is_empty() && !groups.is_empty() {
                for (gi, ui) in links {
                    d.add_member(gi.get(&groups), ui.get(&users)).unwrap();
                }
            }
            d
        })
}

#[derive(Debug, Clone)]
pub enum Op {
    AddUser(u8),
    DelUser(u8),
    AddGroup(u8),
    DelGroup(u8),
    Join(u8, u8),
    Leave(u8, u8),
    Suspend(u8),
    BadRole(u8),
}

pub fn arb_op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..8).prop_map(Op::AddUser),
        (0u8..8).prop_map(Op::DelUser),
        (0u8..4).prop_map(Op::AddGroup),
        (0u8..4).prop_map(Op::DelGroup),
        (0u8..4, 0u8..8).prop_map(|(g, u)| Op::Join(g, u)),
        (0u8..4, 0u8..8).prop_map(|(g, u)| Op::Leave(g, u)),
        (0u8..8).prop_map(Op::Suspend),
        (0u8..8).prop_map(Op::BadRole),
    ]
}

/// Apply `op`, ignoring whether the directory accepted it.
pub fn apply(d: &Directory, op: &Op) {
    let snap = d.snapshot();
    let user = |i: &u8| format!("u{i}");
    let group = |i: &u8| format!("g{i}");
    let _ = match op {
        Op::AddUser(i) => d.add_entry(DirectoryEntry::new(
            snap.user_dn(&user(i)),
            person_attributes(&user(i), Role::Client, Status::Active, &fp(*i as usize), &[*i]),
        )),
        Op::DelUser(i) => d.delete_entry(&snap.user_dn(&user(i))).map(drop),
        Op::AddGroup(i) => d.add_entry(DirectoryEntry::new(snap.group_dn(&group(i)), group_attributes(&group(i), &[]))),
        Op::DelGroup(i) => d.delete_entry(&snap.group_dn(&group(i))).map(drop),
        Op::Join(g, u) => d.add_member(&group(g), &user(u)),
        Op::Leave(g, u) => d.remove_member(&group(g), &user(u)),
        Op::Suspend(i) => d.modify_entry(&snap.user_dn(&user(i)), Attributes::new().with(ATTR_STATUS, "suspended")),
        Op::BadRole(i) => d.modify_entry(&snap.user_dn(&user(i)), Attributes::new().with(ATTR_ROLE, "root")),
    };
}

/// Export then import into a fresh directory; `Err` describes a difference.
pub fn round_trip(d: &Directory) -> Result<(), String> {
    let snap = d.snapshot();
    if snap.len() > 30 {
        return Err(format!("generator produced {} entries", snap.len()));
    }
    let text = snap.export_ldif(snap.base()).map_err(|e| e.to_string())?;
    let copy = Directory::in_memory(snap.base().clone());
    copy.import_ldif(&text, false).map_err(|e| e.to_string())?;
    if *copy.snapshot() != *snap {
        return Err(format!("round trip changed the directory:\n{text}"));
    }
    Ok(())
}

/// Run `ops` from an empty layout, validating after each one.
pub fn stays_valid(ops: &[Op]) -> Result<(), String> {
    let d = with_layout();
    for (i, op) in ops.iter().enumerate() {
        apply(&d, op);
        d.validate().map_err(|e| format!("after op {i} {op:?}: {e}"))?;
    }
    Ok(())
}
