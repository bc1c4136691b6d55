//! Human-readable output.

use serde_json::Value;

/// Left-aligned columns separated by two spaces.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut l = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i + 1 == cells.len() {
                l.push_str(cell);
            } else {
                l.push_str(&format!("{cell:<w$}  "));
            }
        }
        out.push_str(l.trim_end());
        out.push('\n');
    };
    line(headers.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

pub fn s(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        Value::Array(items) => items.iter().map(s).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

fn items<'a>(v: &'a Value, key: &str) -> &'a [Value] {
    v[key].as_array().map(Vec::as_slice).unwrap_or_default()
}

pub fn files(v: &Value) -> String {
    let rows: Vec<Vec<String>> = items(v, "files")
        .iter()
        .map(|f| {
            let mut name = s(&f["name"]);
            if f["orphaned"] == Value::Bool(true) {
                name.push_str(" (orphaned)");
            }
            vec![name, s(&f["size_bytes"]), s(&f["version"]), s(&f["uploader"]), s(&f["uploaded_at"]), s(&f["sha256"])]
        })
        .collect();
    table(&["NAME", "SIZE", "VERSION", "UPLOADER", "UPLOADED", "SHA256"], &rows)
}

pub fn users(v: &Value) -> String {
    let rows: Vec<Vec<String>> = items(v, "users").iter().map(principal_row).collect();
    table(&["USERNAME", "ROLE", "STATUS", "GROUPS"], &rows)
}

fn principal_row(p: &Value) -> Vec<String> {
    vec![s(&p["username"]), s(&p["role"]), s(&p["status"]), s(&p["groups"])]
}

pub fn principal(p: &Value) -> String {
    table(&["USERNAME", "ROLE", "STATUS", "GROUPS"], &[principal_row(p)])
}

pub fn groups(v: &Value) -> String {
    let rows: Vec<Vec<String>> = items(v, "groups").iter().map(|g| vec![s(&g["name"]), s(&g["members"])]).collect();
    table(&["GROUP", "MEMBERS"], &rows)
}

pub fn acl(v: &Value) -> String {
    let rows: Vec<Vec<String>> =
        items(v, "entries").iter().map(|e| vec![s(&e["subject"]), s(&e["scope"]), s(&e["permissions"])]).collect();
    format!("ACL version {}\n{}", s(&v["version"]), table(&["SUBJECT", "SCOPE", "PERMISSIONS"], &rows))
}

pub fn audit(v: &Value) -> String {
    let rows: Vec<Vec<String>> = items(v, "events")
        .iter()
        .map(|e| {
            ["seq", "at", "principal", "action", "outcome", "target", "detail"].iter().map(|k| s(&e[*k])).collect()
        })
        .collect();
    table(&["SEQ", "AT", "PRINCIPAL", "ACTION", "OUTCOME", "TARGET", "DETAIL"], &rows)
}

pub fn whoami(v: &Value) -> String {
    let p = &v["principal"];
    let mut out = format!(
        "{} ({}, {})\ngroups: {}\ntls: {}\n",
        s(&p["username"]),
        s(&p["role"]),
        s(&p["status"]),
        s(&p["groups"]),
        s(&v["tls_version"]),
    );
    if let Some(perms) = v["effective_permissions"].as_object() {
        let rows: Vec<Vec<String>> = perms.iter().map(|(scope, p)| vec![scope.clone(), s(p)]).collect();
        out.push_str(&table(&["SCOPE", "PERMISSIONS"], &rows));
    }
    out
}
