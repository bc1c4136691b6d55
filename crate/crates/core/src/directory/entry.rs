use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use super::dn::DistinguishedName;

/// Attribute description such as `certFingerprint` or `userCertificate;binary`.
///
/// Compares case-insensitively and keeps the spelling it was created with.
#[derive(Clone)]
pub struct AttrName {
    display: String,
    folded: String,
}

impl AttrName {
    pub fn new(name: impl Into<String>) -> Self {
        let display = name.into();
        let folded = display.to_ascii_lowercase();
        AttrName { display, folded }
    }

    pub fn as_str(&self) -> &str {
        &self.display
    }

    /// Valid LDIF attribute description: letters, digits, `-` and `;` options.
    pub fn is_valid(name: &str) -> bool {
        let mut parts = name.split(';');
        let base = parts.next().unwrap_or_default();
        let ok = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-');
        ok(base) && base.as_bytes()[0].is_ascii_alphabetic() && parts.all(ok)
    }
}

impl PartialEq for AttrName {
    fn eq(&self, other: &Self) -> bool {
        self.folded == other.folded
    }
}

impl Eq for AttrName {}

impl Ord for AttrName {
    fn cmp(&self, other: &Self) -> Ordering {
        self.folded.cmp(&other.folded)
    }
}

impl PartialOrd for AttrName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for AttrName {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.folded.hash(state)
    }
}

impl fmt::Display for AttrName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display)
    }
}

impl fmt::Debug for AttrName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.display, f)
    }
}

impl From<&str> for AttrName {
    fn from(s: &str) -> Self {
        AttrName::new(s)
    }
}

impl Borrow<str> for AttrName {
    fn borrow(&self) -> &str {
        &self.folded
    }
}

/// Multimap from attribute description to values. Text values are UTF-8.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Attributes(BTreeMap<AttrName, Vec<Vec<u8>>>);

impl Attributes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&[Vec<u8>]> {
        self.0.get(name.to_ascii_lowercase().as_str()).map(Vec::as_slice)
    }

    /// First value as text, if present and valid UTF-8.
    pub fn get_str(&self, name: &str) -> Option<&str> {
        self.get(name)?.first().and_then(|v| std::str::from_utf8(v).ok())
    }

    /// All values as text; non-UTF-8 values are skipped.
    pub fn get_strs(&self, name: &str) -> Vec<&str> {
        self.get(name).map(|vs| vs.iter().filter_map(|v| std::str::from_utf8(v).ok()).collect()).unwrap_or_default()
    }

    /// Replace all values of `name`. An empty list removes the attribute.
    pub fn set(&mut self, name: impl Into<AttrName>, values: Vec<Vec<u8>>) {
        let name = name.into();
        if values.is_empty() {
            self.0.remove(name.folded.as_str());
        } else {
            self.0.insert(name, values);
        }
    }

    pub fn set_str(&mut self, name: &str, value: &str) {
        self.set(name, vec![value.as_bytes().to_vec()]);
    }

    pub fn push(&mut self, name: impl Into<AttrName>, value: Vec<u8>) {
        self.0.entry(name.into()).or_default().push(value);
    }

    pub fn with(mut self, name: &str, value: impl AsRef<[u8]>) -> Self {
        self.push(name, value.as_ref().to_vec());
        self
    }

    /// Record an empty value list for `name`. Only meaningful as a
    /// `modify_entry` argument, where it deletes the attribute.
    pub fn cleared(mut self, name: &str) -> Self {
        self.0.insert(AttrName::new(name), Vec::new());
        self
    }

    pub fn remove(&mut self, name: &str) -> Option<Vec<Vec<u8>>> {
        self.0.remove(name.to_ascii_lowercase().as_str())
    }

    pub fn contains_value(&self, name: &str, value: &[u8]) -> bool {
        self.get(name).is_some_and(|vs| vs.iter().any(|v| v == value))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AttrName, &[Vec<u8>])> {
        self.0.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Debug for Attributes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (k, vs) in &self.0 {
            let shown: Vec<String> = vs
                .iter()
                .map(|v| match std::str::from_utf8(v) {
                    Ok(s) => s.to_string(),
                    Err(_) => format!("<{} bytes>", v.len()),
                })
                .collect();
            m.entry(k, &shown);
        }
        m.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectoryEntry {
    pub dn: DistinguishedName,
    pub attributes: Attributes,
}

impl DirectoryEntry {
    pub fn new(dn: DistinguishedName, attributes: Attributes) -> Self {
        DirectoryEntry { dn, attributes }
    }
}

/// Equality match on one attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchFilter {
    pub attribute: String,
    pub value: Vec<u8>,
}

impl SearchFilter {
    pub fn equality(attribute: impl Into<String>, value: impl AsRef<[u8]>) -> Self {
        SearchFilter { attribute: attribute.into(), value: value.as_ref().to_vec() }
    }

    pub(crate) fn matches(&self, entry: &DirectoryEntry) -> bool {
        entry.attributes.contains_value(&self.attribute, &self.value)
    }
}
