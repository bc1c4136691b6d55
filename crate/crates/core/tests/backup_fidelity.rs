#[path = "support/backup_check.rs"]
mod backup_check;

#[test]
fn export_wipe_import_is_observationally_identical() {
    let tmp = tempfile::tempdir().unwrap();
    backup_check::export_wipe_import(&tmp.path().join("site")).unwrap();
}

#[test]
fn every_corrupted_member_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let tried = backup_check::corrupted_members_are_refused(tmp.path()).unwrap();
    // six tables, the directory and two blobs
    assert_eq!(tried, 9);
}
