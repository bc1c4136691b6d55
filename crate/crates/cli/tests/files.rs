mod support;

use rand::{RngCore, SeedableRng};
use sfs_cli::settings::ENV_SERVER;
use sfs_cli::Environment;
use sfs_core::{sha256_hex, Role};
use sfs_server::testbed::Testbed;
use support::{env_for, sfs};

#[test]
fn put_ls_get_rm() {
    let tb = Testbed::start().unwrap();
    tb.add_group("dev").unwrap();
    let bob = env_for(&tb, &tb.provision("bob", Role::Client, &["dev"]).unwrap());
    let carol = env_for(&tb, &tb.provision("carol", Role::Client, &["dev"]).unwrap());
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("report.pdf");
    let mut data = vec![0u8; 2 * 1024 * 1024 + 3];
    rand::rngs::StdRng::seed_from_u64(1).fill_bytes(&mut data);
    std::fs::write(&src, &data).unwrap();

    let put = sfs(&bob, &["put", "group:dev", src.to_str().unwrap()]).ok();
    assert!(put.out.starts_with("uploaded group:dev/report.pdf v1"), "{}", put.out);

    let ls = sfs(&carol, &["ls", "group:dev"]).ok();
    let lines: Vec<&str> = ls.out.lines().collect();
    assert!(lines[0].starts_with("NAME"), "{}", ls.out);
    assert!(lines[1].starts_with("report.pdf") && lines[1].contains("bob"), "{}", ls.out);

    let dest = work.path().join("copy.pdf");
    let got = sfs(&carol, &["get", "group:dev", "report.pdf", "-o", dest.to_str().unwrap()]).ok();
    assert!(got.out.contains(&sha256_hex(&data)), "{}", got.out);
    assert!(std::fs::read(&dest).unwrap() == data);

    // carol is not the uploader and the group grant has no DELETE
    let denied = sfs(&carol, &["rm", "group:dev", "report.pdf"]);
    assert_eq!(denied.code, 1);
    assert!(denied.err.contains("FORBIDDEN") && denied.err.contains("NO_GRANT"), "{}", denied.err);
    sfs(&bob, &["rm", "group:dev", "report.pdf"]).ok();
    assert_eq!(sfs(&carol, &["ls", "group:dev"]).ok().out.lines().count(), 1);
}

#[test]
fn names_with_spaces_and_unicode_survive_the_url() {
    let tb = Testbed::start().unwrap();
    let bob = env_for(&tb, &tb.provision("bob", Role::Client, &[]).unwrap());
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("x");
    std::fs::write(&src, b"odd name").unwrap();
    for name in ["two words.txt", "naïve résumé", "a+b=c&d?e#f%g"] {
        sfs(&bob, &["put", "home:bob", src.to_str().unwrap(), "--name", name]).ok();
        let dest = work.path().join("out");
        sfs(&bob, &["get", "home:bob", name, "-o", dest.to_str().unwrap()]).ok();
        assert_eq!(std::fs::read(&dest).unwrap(), b"odd name");
    }
    let v = sfs(&bob, &["--json", "ls", "home:bob"]).ok().json();
    let mut names: Vec<&str> = v["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["a+b=c&d?e#f%g", "naïve résumé", "two words.txt"]);
}

#[test]
fn json_mode_output_parses() {
    let tb = Testbed::start().unwrap();
    let bob = env_for(&tb, &tb.provision("bob", Role::Client, &[]).unwrap());
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("a.txt");
    std::fs::write(&src, b"hello").unwrap();
    let dest = work.path().join("b.txt");

    let v = sfs(&bob, &["--json", "put", "home:bob", src.to_str().unwrap()]).ok().json();
    assert_eq!(v["sha256"], sha256_hex(b"hello"));
    let v = sfs(&bob, &["ls", "home:bob", "--json"]).ok().json();
    assert_eq!(v["files"][0]["name"], "a.txt");
    let v = sfs(&bob, &["--json", "get", "home:bob", "a.txt", "-o", dest.to_str().unwrap()]).ok().json();
    assert_eq!((v["bytes"].as_u64(), v["version"].as_u64()), (Some(5), Some(1)));
    let v = sfs(&bob, &["--json", "whoami"]).ok().json();
    assert_eq!(v["principal"]["username"], "bob");
    let v = sfs(&bob, &["--json", "rm", "home:bob", "a.txt"]).ok().json();
    assert_eq!(v["name"], "a.txt");

    let failed = sfs(&bob, &["--json", "get", "home:bob", "a.txt", "-o", dest.to_str().unwrap()]);
    assert_eq!(failed.failure(), (1, "NOT_FOUND".to_string()));
    assert!(failed.out.is_empty());
}

#[test]
fn whoami_lists_effective_permissions() {
    let tb = Testbed::start().unwrap();
    tb.add_group("dev").unwrap();
    let bob = env_for(&tb, &tb.provision("bob", Role::Client, &["dev"]).unwrap());
    let out = sfs(&bob, &["whoami"]).ok().out;
    assert!(out.starts_with("bob (client, active)"), "{out}");
    assert!(out.contains("group:dev") && out.contains("VIEW,DOWNLOAD,UPLOAD"), "{out}");
}

#[test]
fn failed_download_leaves_no_file() {
    let tb = Testbed::start().unwrap();
    let bob = env_for(&tb, &tb.provision("bob", Role::Client, &[]).unwrap());
    let work = tempfile::tempdir().unwrap();
    let dest = work.path().join("missing.txt");
    let r = sfs(&bob, &["get", "home:bob", "missing.txt", "-o", dest.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("NOT_FOUND"), "{}", r.err);
    assert_eq!(std::fs::read_dir(work.path()).unwrap().count(), 0);
}

#[test]
fn application_errors_exit_1_with_the_server_reason() {
    let tb = Testbed::start().unwrap();
    let bob = env_for(&tb, &tb.provision("bob", Role::Client, &[]).unwrap());
    let r = sfs(&bob, &["ls", "home:admin-ann"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("NO_GRANT"), "{}", r.err);
    let r = sfs(&bob, &["admin", "user", "list"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("NOT_ADMIN"), "{}", r.err);
    // a suspended principal gets the authentication reason back
    sfs(&env_for(&tb, &tb.admin), &["admin", "user", "mod", "bob", "--status", "suspended"]).ok();
    let r = sfs(&bob, &["whoami"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("UNAUTHENTICATED") && r.err.contains("SUSPENDED"), "{}", r.err);
}

#[test]
fn config_file_flags_and_env_combine() {
    let tb = Testbed::start().unwrap();
    let bob = tb.provision("bob", Role::Client, &[]).unwrap();
    let home = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(home.path().join(".sfs")).unwrap();
    std::fs::write(
        home.path().join(".sfs/config"),
        format!(
            "server = https://localhost:1\nca = {}\ncert = {}\nkey = {}\n",
            bob.ca.display(),
            bob.cert.display(),
            bob.key.display()
        ),
    )
    .unwrap();
    let env = Environment { home: Some(home.path().into()), ..Default::default() };
    // the file's server is dead; the flag wins
    assert_eq!(sfs(&env, &["whoami"]).code, 1);
    sfs(&env, &["--server", &tb.url(), "whoami"]).ok();
    // env beats the file
    sfs(&env.clone().with(ENV_SERVER, tb.url()), &["whoami"]).ok();
    // and the flag beats env
    assert_eq!(sfs(&env.with(ENV_SERVER, tb.url()), &["--server", "https://localhost:1", "whoami"]).code, 1);
}

#[test]
fn missing_configuration_is_a_usage_error() {
    let r = sfs(&Environment::default(), &["ls", "group:dev"]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("--server"), "{}", r.err);
}
