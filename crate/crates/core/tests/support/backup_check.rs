//! Backup fidelity on the canonical fixture: export, wipe, import and
//! compare everything observable; corrupt each archive member in turn and
//! expect a clean refusal.

use std::fs::{self, File};
use std::io::{Cursor, Read, Write};
use std::path::{Path, PathBuf};

use sfs_core::acl::{default_group_grant, AclEntry};
use sfs_core::directory::{group_attributes, person_attributes, DEFAULT_BASE_DN};
use sfs_core::store::{AuditFilter, NewAuditEvent, StoreError};
use sfs_core::{
    AclTable, AuditAction, AuditEvent, AuditOutcome, Directory, DirectoryEntry, FileRecord, Role, Scope, Status, Store,
};

pub struct Site {
    pub store: Store,
    pub dir: Directory,
    root: PathBuf,
}

impl Site {
    pub fn open(root: &Path) -> Site {
        let store = Store::open(root.join("data")).unwrap();
        let dir = Directory::open(DEFAULT_BASE_DN.parse().unwrap(), root.join("directory.ldif")).unwrap();
        dir.ensure_layout().unwrap();
        Site { store, dir, root: root.to_path_buf() }
    }

    /// Three principals, two groups, one grant, three files (two sharing a
    /// blob) and a few audit events.
    pub fn canonical(root: &Path) -> Site {
        let s = Site::open(root);
        let snap = s.dir.snapshot();
        for (i, (u, role)) in
            [("admin-ann", Role::Administrator), ("bob", Role::Client), ("carol", Role::Client)].into_iter().enumerate()
        {
            let fp = format!("{i:064x}");
            s.dir
                .add_entry(DirectoryEntry::new(
                    snap.user_dn(u),
                    person_attributes(u, role, Status::Active, &fp, &[0x30, i as u8]),
                ))
                .unwrap();
        }
        let (bob, carol) = (snap.user_dn("bob"), snap.user_dn("carol"));
        s.dir
            .add_entry(DirectoryEntry::new(snap.group_dn("dev"), group_attributes("dev", &[bob, carol.clone()])))
            .unwrap();
        s.dir.add_entry(DirectoryEntry::new(snap.group_dn("qa"), group_attributes("qa", &[carol]))).unwrap();
        s.store
            .update_acl(|_| Ok::<_, StoreError>(Some(AclTable::from_entries([default_group_grant("dev")]))))
            .unwrap();
        s.store.put_file(&Scope::group("dev"), "plan.txt", Cursor::new(b"plan".to_vec()), "bob").unwrap();
        s.store.put_file(&Scope::home("carol"), "notes", Cursor::new(vec![7u8; 3000]), "carol").unwrap();
        s.store.put_file(&Scope::group("qa"), "dup", Cursor::new(b"plan".to_vec()), "carol").unwrap();
        for i in 0..5 {
            let who = if i % 2 == 0 { "bob" } else { "carol" };
            s.store
                .append_audit(NewAuditEvent::new(
                    who,
                    AuditAction::Upload,
                    "group:dev/plan.txt",
                    AuditOutcome::Success,
                    "",
                ))
                .unwrap();
        }
        s
    }

    /// Drop everything on disk.
    pub fn wipe(self) -> PathBuf {
        let root = self.root.clone();
        drop(self);
        fs::remove_dir_all(root.join("data")).unwrap();
        fs::remove_file(root.join("directory.ldif")).unwrap();
        root
    }
}

pub type Observation = (Vec<FileRecord>, Vec<Vec<u8>>, String, Vec<AuditEvent>, Vec<AclEntry>);

pub fn observe(s: &Site) -> Observation {
    let files = s.store.all_files().unwrap();
    let blobs = files
        .iter()
        .map(|r| {
            let (_, mut f) = s.store.get_file(&r.scope, &r.name).unwrap();
            let mut b = Vec::new();
            f.read_to_end(&mut b).unwrap();
            b
        })
        .collect();
    (
        files,
        blobs,
        s.dir.snapshot().full_ldif(),
        s.store.query_audit(&AuditFilter::default()).unwrap(),
        s.store.acl().entries().collect(),
    )
}

pub fn export_wipe_import(root: &Path) -> Result<(), String> {
    let site = Site::canonical(root);
    let before = observe(&site);
    let archive = root.with_extension("zip");
    site.store.backup_export(&site.dir, &archive).map_err(|e| e.to_string())?;
    let root = site.wipe();
    let site = Site::open(&root);
    site.store.backup_import(&site.dir, &archive, false).map_err(|e| e.to_string())?;
    let after = observe(&site);
    if before != after {
        return Err(format!("state differs after restore:\nbefore {before:?}\nafter  {after:?}"));
    }
    Ok(())
}

fn rewrite(src: &Path, dst: &Path, victim: &str) {
    let mut z = zip::ZipArchive::new(File::open(src).unwrap()).unwrap();
    let mut w = zip::ZipWriter::new(File::create(dst).unwrap());
    for i in 0..z.len() {
        let mut m = z.by_index(i).unwrap();
        let name = m.name().to_string();
        let mut body = Vec::new();
        m.read_to_end(&mut body).unwrap();
        if name == victim {
            match body.first_mut() {
                Some(b) => *b ^= 0x01,
                None => body.push(0),
            }
        }
        w.start_file(name.as_str(), zip::write::SimpleFileOptions::default()).unwrap();
        w.write_all(&body).unwrap();
    }
    w.finish().unwrap();
}

/// Flip one byte in every non-manifest member, one archive at a time; each
/// import must fail and leave the target empty. Returns the number of
/// members tried.
pub fn corrupted_members_are_refused(root: &Path) -> Result<usize, String> {
    let site = Site::canonical(&root.join("src"));
    let good = root.join("good.zip");
    site.store.backup_export(&site.dir, &good).map_err(|e| e.to_string())?;
    let members: Vec<String> = zip::ZipArchive::new(File::open(&good).unwrap())
        .unwrap()
        .file_names()
        .filter(|n| *n != "manifest.json")
        .map(String::from)
        .collect();
    for (i, victim) in members.iter().enumerate() {
        let bad = root.join(format!("bad{i}.zip"));
        rewrite(&good, &bad, victim);
        let target = Site::open(&root.join(format!("dst{i}")));
        match target.store.backup_import(&target.dir, &bad, false) {
            Ok(_) => return Err(format!("corrupted {victim} was accepted")),
            Err(e) if e.code() != "CHECKSUM_MISMATCH" => return Err(format!("{victim}: unexpected {}", e.code())),
            Err(_) => {}
        }
        if !target.store.is_empty().unwrap() || target.dir.snapshot().has_principals_or_groups() {
            return Err(format!("corrupted {victim} left partial state behind"));
        }
        if fs::read_dir(target.store.root().join("blobs")).unwrap().count() != 0 {
            return Err(format!("corrupted {victim} left blobs behind"));
        }
    }
    Ok(members.len())
}
