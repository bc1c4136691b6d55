//! LDIF version 1 content records (no change records).
//!
//! Output never folds lines: every attribute value occupies one logical line.
//! Values that are not LDIF safe strings are written base64-encoded after
//! `::`. The parser also accepts folded continuation lines and comments.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use thiserror::Error;

use super::dn::DistinguishedName;
use super::entry::{AttrName, Attributes, DirectoryEntry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed LDIF at line {line}: {reason}")]
pub struct LdifError {
    pub line: usize,
    pub reason: String,
}

fn err(line: usize, reason: impl Into<String>) -> LdifError {
    LdifError { line, reason: reason.into() }
}

fn is_safe_string(v: &[u8]) -> bool {
    match v.first() {
        None => true,
        Some(b' ' | b':' | b'<') => false,
        Some(_) => v.last() != Some(&b' ') && v.iter().all(|&b| b != 0 && b != b'\n' && b != b'\r' && b < 0x80),
    }
}

fn push_line(out: &mut String, name: &str, value: &[u8]) {
    out.push_str(name);
    if value.is_empty() {
        out.push(':');
    } else if is_safe_string(value) {
        out.push_str(": ");
        // safe strings are ASCII
        out.push_str(std::str::from_utf8(value).expect("ascii"));
    } else {
        out.push_str(":: ");
        out.push_str(&B64.encode(value));
    }
    out.push('\n');
}

/// Render entries in the order given.
pub fn render<'a>(entries: impl IntoIterator<Item = &'a DirectoryEntry>) -> String {
    let mut out = String::from("version: 1\n");
    for entry in entries {
        out.push('\n');
        push_line(&mut out, "dn", entry.dn.to_string().as_bytes());
        for (name, values) in entry.attributes.iter() {
            for v in values {
                push_line(&mut out, name.as_str(), v);
            }
        }
    }
    out
}

/// Parse LDIF content records. Line numbers in errors are 1-based.
pub fn parse(text: &str) -> Result<Vec<DirectoryEntry>, LdifError> {
    // unfold continuation lines, remembering where each logical line began
    let mut logical: Vec<(usize, String)> = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let lineno = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(rest) = raw.strip_prefix(' ') {
            match logical.last_mut() {
                Some((_, prev)) if !prev.is_empty() && !prev.starts_with('#') => prev.push_str(rest),
                Some((_, prev)) if prev.starts_with('#') => {}
                _ => return Err(err(lineno, "continuation line without a preceding line")),
            }
            continue;
        }
        logical.push((lineno, raw.to_string()));
    }

    let mut entries = Vec::new();
    let mut current: Option<DirectoryEntry> = None;
    let mut seen_version = false;
    let mut seen_content = false;

    for (lineno, line) in logical {
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if let Some(e) = current.take() {
                entries.push(e);
            }
            continue;
        }
        let (name, value) = split_line(lineno, &line)?;
        if name.eq_ignore_ascii_case("version") && current.is_none() && !seen_content {
            if seen_version {
                return Err(err(lineno, "duplicate version line"));
            }
            if value != b"1" {
                return Err(err(lineno, "unsupported LDIF version"));
            }
            seen_version = true;
            continue;
        }
        seen_content = true;
        match current.as_mut() {
            None => {
                if !name.eq_ignore_ascii_case("dn") {
                    return Err(err(lineno, "record must start with `dn:`"));
                }
                let text = String::from_utf8(value).map_err(|_| err(lineno, "dn is not valid UTF-8"))?;
                let dn: DistinguishedName = text.parse().map_err(|e| err(lineno, format!("{e}")))?;
                current = Some(DirectoryEntry::new(dn, Attributes::new()));
            }
            Some(entry) => {
                if name.eq_ignore_ascii_case("dn") {
                    return Err(err(lineno, "missing blank line between records"));
                }
                if name.eq_ignore_ascii_case("changetype") {
                    return Err(err(lineno, "change records are not supported"));
                }
                if !AttrName::is_valid(&name) {
                    return Err(err(lineno, format!("invalid attribute description `{name}`")));
                }
                entry.attributes.push(name.as_str(), value);
            }
        }
    }
    if let Some(e) = current.take() {
        entries.push(e);
    }
    Ok(entries)
}

fn split_line(lineno: usize, line: &str) -> Result<(String, Vec<u8>), LdifError> {
    let colon = line.find(':').ok_or_else(|| err(lineno, "expected `name: value`"))?;
    let name = line[..colon].to_string();
    if name.is_empty() {
        return Err(err(lineno, "empty attribute description"));
    }
    let rest = &line[colon + 1..];
    let value = if let Some(b64) = rest.strip_prefix(':') {
        B64.decode(b64.trim_start_matches(' ').trim_end()).map_err(|e| err(lineno, format!("invalid base64: {e}")))?
    } else if rest.starts_with('<') {
        return Err(err(lineno, "URL values are not supported"));
    } else {
        rest.trim_start_matches(' ').as_bytes().to_vec()
    };
    Ok((name, value))
}
