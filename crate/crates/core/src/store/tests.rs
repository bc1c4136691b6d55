use super::backup::BackupManifest;
use super::*;
use crate::acl::{default_group_grant, PermissionSet, Role, Status, Subject};
use crate::directory::{group_attributes, person_attributes, Directory, DirectoryEntry, DEFAULT_BASE_DN};
use std::io::Cursor;

fn open() -> (Store, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    (Store::open(dir.path().join("data")).unwrap(), dir)
}

fn put(s: &Store, scope: &Scope, name: &str, body: &[u8]) -> Result<FileRecord> {
    s.put_file(scope, name, Cursor::new(body.to_vec()), "alice")
}

fn read(s: &Store, scope: &Scope, name: &str) -> Result<Vec<u8>> {
    let (_, mut f) = s.get_file(scope, name)?;
    let mut v = Vec::new();
    f.read_to_end(&mut v)?;
    Ok(v)
}

fn home() -> Scope {
    Scope::home("alice")
}

#[test]
fn empty_upload() {
    let (s, _d) = open();
    let r = put(&s, &home(), "empty", b"").unwrap();
    assert_eq!(r.size_bytes, 0);
    assert_eq!(r.sha256, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    assert_eq!(r.version, 1);
    assert!(read(&s, &home(), "empty").unwrap().is_empty());
}

#[test]
fn invalid_names() {
    let (s, _d) = open();
    for bad in ["../etc", "", ".", "..", "a/b", "nul\0", &"x".repeat(256)] {
        assert_eq!(put(&s, &home(), bad, b"x").unwrap_err().code(), "NAME_INVALID", "{bad:?}");
    }
    put(&s, &home(), &"x".repeat(255), b"x").unwrap();
    put(&s, &home(), "résumé v2.pdf", b"x").unwrap();
}

#[test]
fn overwrite_bumps_version() {
    let (s, _d) = open();
    let a = put(&s, &home(), "r.txt", b"one").unwrap();
    let b = put(&s, &home(), "r.txt", b"two").unwrap();
    assert_eq!((a.version, b.version), (1, 2));
    assert_eq!(a.file_id, b.file_id);
    let list = s.list_files(&home()).unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0].sha256, crate::sha256_hex(b"two"));
    assert_eq!(read(&s, &home(), "r.txt").unwrap(), b"two");
    // old content is collected once unreferenced
    assert!(!s.blob_path(&a.sha256).exists());
}

#[test]
fn too_large_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let s = Store::open_with(dir.path(), StoreOptions { max_upload_bytes: 10 }).unwrap();
    put(&s, &home(), "ok", &[1u8; 10]).unwrap();
    assert_eq!(put(&s, &home(), "big", &[1u8; 11]).unwrap_err().code(), "TOO_LARGE");
    assert_eq!(s.list_files(&home()).unwrap().len(), 1);
    assert_eq!(fs::read_dir(dir.path().join("tmp")).unwrap().count(), 0);
}

#[test]
fn get_and_delete() {
    let (s, _d) = open();
    let body: Vec<u8> = (0..5000u32).map(|i| (i % 251) as u8).collect();
    put(&s, &home(), "data.bin", &body).unwrap();
    assert_eq!(read(&s, &home(), "data.bin").unwrap(), body);
    let removed = s.delete_file(&home(), "data.bin").unwrap();
    assert_eq!(removed.name, "data.bin");
    assert_eq!(read(&s, &home(), "data.bin").unwrap_err().code(), "NOT_FOUND");
    assert!(s.list_files(&home()).unwrap().is_empty());
    assert_eq!(s.delete_file(&home(), "data.bin").unwrap_err().code(), "NOT_FOUND");
    assert!(!s.blob_path(&removed.sha256).exists());
}

#[test]
fn tampered_blob_is_detected() {
    let (s, _d) = open();
    let r = put(&s, &home(), "t", b"hello world").unwrap();
    let path = s.blob_path(&r.sha256);
    let mut bytes = fs::read(&path).unwrap();
    bytes[0] ^= 0x01;
    fs::write(&path, bytes).unwrap();
    assert_eq!(read(&s, &home(), "t").unwrap_err().code(), "CORRUPT_BLOB");
    assert_eq!(s.verify_blobs().unwrap(), vec![r.sha256]);
}

#[test]
fn shared_content_survives_one_delete() {
    let (s, _d) = open();
    let g = Scope::group("dev");
    let a = put(&s, &home(), "a", b"same").unwrap();
    let b = put(&s, &g, "b", b"same").unwrap();
    assert_eq!(a.sha256, b.sha256);
    s.delete_file(&home(), "a").unwrap();
    assert_eq!(read(&s, &g, "b").unwrap(), b"same");
}

#[test]
fn listing_is_sorted_and_scoped() {
    let (s, _d) = open();
    assert!(s.list_files(&Scope::group("nobody")).unwrap().is_empty());
    for n in ["b", "a", "C"] {
        put(&s, &home(), n, n.as_bytes()).unwrap();
    }
    put(&s, &Scope::group("dev"), "z", b"z").unwrap();
    let names: Vec<_> = s.list_files(&home()).unwrap().into_iter().map(|r| r.name).collect();
    assert_eq!(names, ["C", "a", "b"]);
}

#[test]
fn crash_between_blob_and_row() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    {
        let s = Store::open(&root).unwrap();
        s.inject_fault(Some(FaultPoint::AfterBlobWrite));
        assert!(matches!(put(&s, &home(), "lost", b"partial"), Err(StoreError::InjectedFault)));
        assert!(s.list_files(&home()).unwrap().is_empty());
        assert_eq!(s.stat_file(&home(), "lost").unwrap_err().code(), "NOT_FOUND");
        // the blob is on disk, unreferenced
        assert!(s.blob_path(&crate::sha256_hex(b"partial")).exists());
    }
    let s = Store::open(&root).unwrap();
    assert!(s.list_files(&home()).unwrap().is_empty());
    assert!(!s.blob_path(&crate::sha256_hex(b"partial")).exists());
    assert!(s.verify_blobs().unwrap().is_empty());
}

#[test]
fn concurrent_upload_to_same_name_conflicts() {
    use std::sync::mpsc;
    let (s, _d) = open();
    let s = Arc::new(s);
    let (started_tx, started_rx) = mpsc::channel();
    let (release_tx, release_rx) = mpsc::channel::<()>();

    // a reader that blocks until released keeps the first upload in flight
    struct Gate {
        started: Option<mpsc::Sender<()>>,
        release: mpsc::Receiver<()>,
        done: bool,
    }
    impl Read for Gate {
        fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
            if let Some(tx) = self.started.take() {
                tx.send(()).unwrap();
                self.release.recv().unwrap();
            }
            if self.done {
                return Ok(0);
            }
            self.done = true;
            buf[0] = b'x';
            Ok(1)
        }
    }
    let s2 = s.clone();
    let first = std::thread::spawn(move || {
        s2.put_file(&home(), "f", Gate { started: Some(started_tx), release: release_rx, done: false }, "alice")
    });
    started_rx.recv().unwrap();
    assert_eq!(put(&s, &home(), "f", b"y").unwrap_err().code(), "CONFLICT");
    put(&s, &home(), "other", b"y").unwrap();
    release_tx.send(()).unwrap();
    assert_eq!(first.join().unwrap().unwrap().version, 1);
    assert_eq!(put(&s, &home(), "f", b"z").unwrap().version, 2);
}

fn event(p: &str, a: AuditAction) -> NewAuditEvent {
    NewAuditEvent::new(p, a, "t", AuditOutcome::Success, "")
}

#[test]
fn audit_sequence_and_queries() {
    let (s, _d) = open();
    assert!(s.query_audit(&AuditFilter::default()).unwrap().is_empty());
    assert_eq!(s.append_audit(event("alice", AuditAction::Auth)).unwrap().seq, 1);
    for i in 2..=10 {
        let p = if i % 2 == 0 { "bob" } else { "alice" };
        assert_eq!(s.append_audit(event(p, AuditAction::List)).unwrap().seq, i);
    }
    let alice = s.query_audit(&AuditFilter { principal: Some("alice".into()), ..Default::default() }).unwrap();
    assert!(alice.iter().all(|e| e.principal == "alice"));
    assert_eq!(alice.len(), 5);
    let range = s.query_audit(&AuditFilter { from_seq: Some(5), to_seq: Some(7), ..Default::default() }).unwrap();
    assert_eq!(range.iter().map(|e| e.seq).collect::<Vec<_>>(), [5, 6, 7]);
    let auth = s.query_audit(&AuditFilter { action: Some(AuditAction::Auth), ..Default::default() }).unwrap();
    assert_eq!(auth.len(), 1);
}

#[test]
fn unknown_action_is_rejected() {
    assert_eq!("REBOOT".parse::<AuditAction>().unwrap_err().code(), "INVALID_ARGUMENT");
    assert_eq!("ADMIN_USER_ADD".parse::<AuditAction>().unwrap(), AuditAction::AdminUserAdd);
    assert_eq!(AuditAction::ALL.len(), 18);
    assert!(serde_json::from_str::<AuditAction>("\"REBOOT\"").is_err());
}

#[test]
fn concurrent_appends_are_gap_free() {
    let (s, _d) = open();
    let s = Arc::new(s);
    let handles: Vec<_> = (0..100)
        .map(|i| {
            let s = s.clone();
            std::thread::spawn(move || s.append_audit(event(&format!("u{i}"), AuditAction::List)).unwrap().seq)
        })
        .collect();
    let mut seqs: Vec<u64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    seqs.sort_unstable();
    assert_eq!(seqs, (1..=100).collect::<Vec<_>>());
    let stored: Vec<u64> = s.query_audit(&AuditFilter::default()).unwrap().iter().map(|e| e.seq).collect();
    assert_eq!(stored, (1..=100).collect::<Vec<_>>());
}

#[test]
fn acl_persists_across_reopen() {
    let dir = tempfile::tempdir().unwrap();
    {
        let s = Store::open(dir.path()).unwrap();
        s.update_acl(|_| Ok::<_, StoreError>(Some(AclTable::from_entries([default_group_grant("dev")])))).unwrap();
    }
    let s = Store::open(dir.path()).unwrap();
    let perms: PermissionSet = "VIEW,DOWNLOAD,UPLOAD".parse().unwrap();
    assert_eq!(s.acl().get(&Subject::Group("dev".into()), &Scope::group("dev")), Some(perms));
}

// -- backup

struct Fixture {
    store: Store,
    dir: Directory,
    _tmp: tempfile::TempDir,
}

fn fixture() -> Fixture {
    let tmp = tempfile::tempdir().unwrap();
    let store = Store::open(tmp.path().join("data")).unwrap();
    let dir = Directory::open(DEFAULT_BASE_DN.parse().unwrap(), tmp.path().join("dir.ldif")).unwrap();
    dir.ensure_layout().unwrap();
    Fixture { store, dir, _tmp: tmp }
}

fn canonical() -> Fixture {
    let f = fixture();
    let snap = f.dir.snapshot();
    for (i, (u, role)) in
        [("admin-ann", Role::Administrator), ("bob", Role::Client), ("carol", Role::Client)].into_iter().enumerate()
    {
        f.dir
            .add_entry(DirectoryEntry::new(
                snap.user_dn(u),
                person_attributes(u, role, Status::Active, &crate::sha256_hex(&[i as u8]), &[0x30, i as u8]),
            ))
            .unwrap();
    }
    let (bob, carol) = (snap.user_dn("bob"), snap.user_dn("carol"));
    f.dir.add_entry(DirectoryEntry::new(snap.group_dn("dev"), group_attributes("dev", &[bob, carol.clone()]))).unwrap();
    f.dir.add_entry(DirectoryEntry::new(snap.group_dn("qa"), group_attributes("qa", &[carol]))).unwrap();
    f.store.update_acl(|_| Ok::<_, StoreError>(Some(AclTable::from_entries([default_group_grant("dev")])))).unwrap();
    f.store.put_file(&Scope::group("dev"), "plan.txt", Cursor::new(b"plan".to_vec()), "bob").unwrap();
    f.store.put_file(&Scope::home("carol"), "notes", Cursor::new(vec![7u8; 3000]), "carol").unwrap();
    f.store.put_file(&Scope::group("qa"), "dup", Cursor::new(b"plan".to_vec()), "carol").unwrap();
    for i in 0..5 {
        f.store.append_audit(event(if i % 2 == 0 { "bob" } else { "carol" }, AuditAction::Upload)).unwrap();
    }
    f
}

type Observation = (Vec<FileRecord>, Vec<Vec<u8>>, String, Vec<AuditEvent>, Vec<crate::acl::AclEntry>);

/// Everything observable: listings, blob bytes, directory LDIF, audit log, ACL.
fn observe(f: &Fixture) -> Observation {
    let files = f.store.all_files().unwrap();
    let blobs = files.iter().map(|r| read(&f.store, &r.scope, &r.name).unwrap()).collect();
    (
        files,
        blobs,
        f.dir.snapshot().full_ldif(),
        f.store.query_audit(&AuditFilter::default()).unwrap(),
        f.store.acl().entries().collect(),
    )
}

#[test]
fn export_of_empty_system() {
    let f = fixture();
    let out = f._tmp.path().join("b.zip");
    let m = f.store.backup_export(&f.dir, &out).unwrap();
    assert_eq!(m.format_version, 1);
    assert!(m.tables.values().all(|n| *n == 0));
    assert_eq!(m.tables.len(), 6);
    assert_eq!(m.blobs, 0);
    let g = fixture();
    g.store.backup_import(&g.dir, &out, false).unwrap();
}

#[test]
fn manifest_checksums_verify() {
    let f = canonical();
    let out = f._tmp.path().join("b.zip");
    let m = f.store.backup_export(&f.dir, &out).unwrap();
    assert_eq!(m.blobs, 2);
    assert_eq!(m.tables["files"], 3);
    assert_eq!(m.tables["memberships"], 3);
    let mut zip = zip::ZipArchive::new(File::open(&out).unwrap()).unwrap();
    let mut names: Vec<String> = zip.file_names().map(String::from).collect();
    names.sort();
    let mut expected: Vec<String> = m.checksums.keys().cloned().collect();
    expected.push("manifest.json".into());
    expected.sort();
    assert_eq!(names, expected);
    for (name, sum) in &m.checksums {
        let mut body = Vec::new();
        zip.by_name(name).unwrap().read_to_end(&mut body).unwrap();
        assert_eq!(crate::sha256_hex(&body), *sum, "{name}");
    }
    let mut raw = String::new();
    zip.by_name("manifest.json").unwrap().read_to_string(&mut raw).unwrap();
    let parsed: BackupManifest = serde_json::from_str(&raw).unwrap();
    assert_eq!(parsed, m);
}

#[test]
fn export_wipe_import_is_identity() {
    let f = canonical();
    let before = observe(&f);
    let out = f._tmp.path().join("b.zip");
    f.store.backup_export(&f.dir, &out).unwrap();

    let g = fixture();
    g.store.backup_import(&g.dir, &out, false).unwrap();
    assert_eq!(observe(&g), before);
    g.dir.validate().unwrap();
    assert!(g.store.verify_blobs().unwrap().is_empty());
}

#[test]
fn import_over_populated_target_needs_force() {
    let f = canonical();
    let out = f._tmp.path().join("b.zip");
    f.store.backup_export(&f.dir, &out).unwrap();
    let before = observe(&f);
    f.store.put_file(&Scope::home("bob"), "later", Cursor::new(b"later".to_vec()), "bob").unwrap();
    assert_eq!(f.store.backup_import(&f.dir, &out, false).unwrap_err().code(), "NOT_EMPTY");
    f.store.backup_import(&f.dir, &out, true).unwrap();
    assert_eq!(observe(&f), before);
    // the blob only the discarded file used is gone
    assert!(!f.store.blob_path(&crate::sha256_hex(b"later")).exists());
}

#[test]
fn two_quiet_exports_differ_only_in_created_at() {
    let f = canonical();
    let a = f._tmp.path().join("a.zip");
    let b = f._tmp.path().join("b.zip");
    let ma = f.store.backup_export(&f.dir, &a).unwrap();
    let mb = f.store.backup_export(&f.dir, &b).unwrap();
    assert_eq!(BackupManifest { created_at: ma.created_at, ..mb.clone() }, ma);
    let members = |p: &Path| {
        let mut z = zip::ZipArchive::new(File::open(p).unwrap()).unwrap();
        let mut out = BTreeMap::new();
        for i in 0..z.len() {
            let mut m = z.by_index(i).unwrap();
            let mut body = Vec::new();
            m.read_to_end(&mut body).unwrap();
            out.insert(m.name().to_string(), body);
        }
        out.remove("manifest.json");
        out
    };
    assert_eq!(members(&a), members(&b));
}

/// Copy `src` to `dst`, passing each member's bytes through `edit`.
fn rewrite(src: &Path, dst: &Path, edit: impl Fn(&str, Vec<u8>) -> Vec<u8>) {
    let mut z = zip::ZipArchive::new(File::open(src).unwrap()).unwrap();
    let mut w = zip::ZipWriter::new(File::create(dst).unwrap());
    for i in 0..z.len() {
        let mut m = z.by_index(i).unwrap();
        let name = m.name().to_string();
        let mut body = Vec::new();
        m.read_to_end(&mut body).unwrap();
        w.start_file(name.as_str(), zip::write::SimpleFileOptions::default()).unwrap();
        w.write_all(&edit(&name, body)).unwrap();
    }
    w.finish().unwrap();
}

#[test]
fn corrupted_member_rejects_everything() {
    let f = canonical();
    let good = f._tmp.path().join("good.zip");
    let bad = f._tmp.path().join("bad.zip");
    f.store.backup_export(&f.dir, &good).unwrap();
    let target = format!("blobs/{}", crate::sha256_hex(b"plan"));
    rewrite(&good, &bad, |name, mut body| {
        if name == target {
            body[0] ^= 0xff;
        }
        body
    });
    let g = fixture();
    let err = g.store.backup_import(&g.dir, &bad, false).unwrap_err();
    assert_eq!(err.code(), "CHECKSUM_MISMATCH");
    assert!(g.store.is_empty().unwrap());
    assert!(!g.dir.snapshot().has_principals_or_groups());
    assert_eq!(fs::read_dir(g.store.root().join("blobs")).unwrap().count(), 0);
    assert_eq!(fs::read_dir(g.store.root().join("tmp")).unwrap().count(), 0);

    // a table member too
    rewrite(
        &good,
        &bad,
        |name, body| {
            if name == "tables/audit_log.jsonl" {
                body[..body.len() - 1].to_vec()
            } else {
                body
            }
        },
    );
    assert_eq!(g.store.backup_import(&g.dir, &bad, false).unwrap_err().code(), "CHECKSUM_MISMATCH");
    assert!(g.store.is_empty().unwrap());
}

#[test]
fn unsupported_format_version() {
    let f = canonical();
    let good = f._tmp.path().join("good.zip");
    let bad = f._tmp.path().join("v2.zip");
    f.store.backup_export(&f.dir, &good).unwrap();
    rewrite(&good, &bad, |name, body| {
        if name == "manifest.json" {
            let mut v: serde_json::Value = serde_json::from_slice(&body).unwrap();
            v["format_version"] = 2.into();
            serde_json::to_vec(&v).unwrap()
        } else {
            body
        }
    });
    let g = fixture();
    assert_eq!(g.store.backup_import(&g.dir, &bad, false).unwrap_err().code(), "FORMAT_VERSION_UNSUPPORTED");
    assert!(g.store.is_empty().unwrap());
}

#[test]
fn extra_member_is_rejected() {
    let f = canonical();
    let good = f._tmp.path().join("good.zip");
    f.store.backup_export(&f.dir, &good).unwrap();
    let bad = f._tmp.path().join("extra.zip");
    std::fs::copy(&good, &bad).unwrap();
    {
        let file = fs::OpenOptions::new().read(true).write(true).open(&bad).unwrap();
        let mut w = zip::ZipWriter::new_append(file).unwrap();
        w.start_file("blobs/evil", zip::write::SimpleFileOptions::default()).unwrap();
        w.write_all(b"evil").unwrap();
        w.finish().unwrap();
    }
    let g = fixture();
    assert_eq!(g.store.backup_import(&g.dir, &bad, false).unwrap_err().code(), "MALFORMED_ARCHIVE");
}

#[test]
fn export_during_uploads_is_consistent() {
    let f = Arc::new(canonical());
    let writer = {
        let f = f.clone();
        std::thread::spawn(move || {
            for i in 0..40 {
                let body = format!("payload {i}").into_bytes();
                f.store.put_file(&Scope::group("dev"), &format!("f{}", i % 7), Cursor::new(body), "bob").unwrap();
                if i % 5 == 0 {
                    let _ = f.store.delete_file(&Scope::group("dev"), &format!("f{}", (i + 3) % 7));
                }
            }
        })
    };
    for n in 0..6 {
        let out = f._tmp.path().join(format!("s{n}.zip"));
        let m = f.store.backup_export(&f.dir, &out).unwrap();
        // every file row has its blob, and nothing else is in the archive
        let g = fixture();
        g.store.backup_import(&g.dir, &out, false).unwrap();
        assert_eq!(g.store.all_files().unwrap().len() as u64, m.tables["files"]);
        assert!(g.store.verify_blobs().unwrap().is_empty());
    }
    writer.join().unwrap();
}
