//! Brute-force reference for access decisions, written from the rule list
//! alone. It shares no code with `sfs_core::acl`: everything is plain strings
//! and every rule is checked before the first applicable one is picked.

#[derive(Debug)]
pub struct User {
    pub name: &'static str,
    pub admin: bool,
    pub active: bool,
}

#[derive(Debug)]
pub struct Fixture {
    pub users: Vec<User>,
    /// (group, members)
    pub groups: Vec<(&'static str, Vec<&'static str>)>,
    /// (subject `user:x` / `group:x`, scope `home:x` / `group:x`, permissions)
    pub grants: Vec<(&'static str, &'static str, Vec<&'static str>)>,
}

pub const PERMISSIONS: [&str; 4] = ["VIEW", "DOWNLOAD", "UPLOAD", "DELETE"];

/// admin-ann, bob and carol; dev = {bob, carol}, qa = {carol}; dev members
/// may view, download and upload in group:dev.
pub fn canonical() -> Fixture {
    Fixture {
        users: vec![
            User { name: "admin-ann", admin: true, active: true },
            User { name: "bob", admin: false, active: true },
            User { name: "carol", admin: false, active: true },
        ],
        groups: vec![("dev", vec!["bob", "carol"]), ("qa", vec!["carol"])],
        grants: vec![("group:dev", "group:dev", vec!["VIEW", "DOWNLOAD", "UPLOAD"])],
    }
}

impl Fixture {
    pub fn scopes(&self) -> Vec<String> {
        let mut out: Vec<String> = self.users.iter().map(|u| format!("home:{}", u.name)).collect();
        out.extend(self.groups.iter().map(|(g, _)| format!("group:{g}")));
        out
    }

    fn member(&self, user: &str, group: &str) -> bool {
        self.groups.iter().any(|(g, m)| *g == group && m.contains(&user))
    }

    fn holds(&self, user: &str, perm: &str, scope: &str) -> bool {
        self.grants.iter().any(|(subject, s, perms)| {
            let applies = match subject.split_once(':') {
                Some(("user", u)) => u == user,
                Some(("group", g)) => self.member(user, g),
                _ => false,
            };
            applies && *s == scope && perms.contains(&perm)
        })
    }

    /// (allowed, reason) for `user` doing `perm` in `scope` on a file uploaded
    /// by `uploader`.
    pub fn decide(&self, user: &str, perm: &str, scope: &str, uploader: Option<&str>) -> (bool, &'static str) {
        let u = self.users.iter().find(|u| u.name == user).expect("fixture user");
        let rules = [
            (!u.active, false, "SUSPENDED"),
            (u.admin, true, "ADMIN"),
            (scope == format!("home:{user}"), true, "OWNER"),
            (perm == "DELETE" && uploader == Some(user), true, "UPLOADER"),
            (self.holds(user, perm, scope), true, "GRANTED"),
            (true, false, "NO_GRANT"),
        ];
        let (_, allow, reason) = rules.into_iter().find(|r| r.0).unwrap();
        (allow, reason)
    }

    /// Every (user, permission, scope, uploader) the acceptance count covers:
    /// uploader is the user, someone else, or absent.
    pub fn cases(&self) -> Vec<(&'static str, &'static str, String, Option<&'static str>)> {
        let mut out = Vec::new();
        for u in &self.users {
            let other = self.users.iter().find(|o| o.name != u.name).unwrap().name;
            for perm in PERMISSIONS {
                for scope in self.scopes() {
                    for uploader in [Some(u.name), Some(other), None] {
                        out.push((u.name, perm, scope.clone(), uploader));
                    }
                }
            }
        }
        out
    }
}
