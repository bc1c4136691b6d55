//! Distinguished names: the RFC 4514 subset used by the directory.
//!
//! Only the attribute types `dc`, `ou`, `uid`, `cn` and `o` are recognised.
//! Multi-valued RDNs are not supported, so an unescaped `+` is rejected.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed DN: {reason}")]
pub struct MalformedDn {
    pub reason: String,
}

fn malformed(reason: impl Into<String>) -> MalformedDn {
    MalformedDn { reason: reason.into() }
}

/// RDN attribute types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttributeType {
    Dc,
    Ou,
    Uid,
    Cn,
    O,
}

impl AttributeType {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeType::Dc => "dc",
            AttributeType::Ou => "ou",
            AttributeType::Uid => "uid",
            AttributeType::Cn => "cn",
            AttributeType::O => "o",
        }
    }
}

impl FromStr for AttributeType {
    type Err = MalformedDn;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dc" => Ok(AttributeType::Dc),
            "ou" => Ok(AttributeType::Ou),
            "uid" => Ok(AttributeType::Uid),
            "cn" => Ok(AttributeType::Cn),
            "o" => Ok(AttributeType::O),
            _ => Err(malformed(format!("unknown attribute type `{s}`"))),
        }
    }
}

impl fmt::Display for AttributeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rdn {
    pub attr: AttributeType,
    pub value: String,
}

impl Rdn {
    pub fn new(attr: AttributeType, value: impl Into<String>) -> Self {
        Rdn { attr, value: value.into() }
    }
}

impl fmt::Display for Rdn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}=", self.attr)?;
        for c in self.value.chars() {
            if matches!(c, ',' | '+' | '\\') {
                f.write_str("\\")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// An ordered, non-empty RDN sequence. The leftmost RDN is the most specific.
///
/// Equality and ordering follow the normalized rendering: attribute types are
/// lowercased, values compare exactly.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DistinguishedName {
    rdns: Vec<Rdn>,
}

impl DistinguishedName {
    pub fn from_rdns(rdns: Vec<Rdn>) -> Result<Self, MalformedDn> {
        if rdns.is_empty() {
            return Err(malformed("empty DN"));
        }
        if let Some(r) = rdns.iter().find(|r| r.value.is_empty()) {
            return Err(malformed(format!("empty value for `{}`", r.attr)));
        }
        Ok(DistinguishedName { rdns })
    }

    pub fn parse(text: &str) -> Result<Self, MalformedDn> {
        text.parse()
    }

    pub fn rdns(&self) -> &[Rdn] {
        &self.rdns
    }

    /// The leftmost RDN.
    pub fn rdn(&self) -> &Rdn {
        &self.rdns[0]
    }

    pub fn depth(&self) -> usize {
        self.rdns.len()
    }

    pub fn parent(&self) -> Option<DistinguishedName> {
        (self.rdns.len() > 1).then(|| DistinguishedName { rdns: self.rdns[1..].to_vec() })
    }

    pub fn child(&self, attr: AttributeType, value: impl Into<String>) -> DistinguishedName {
        let mut rdns = Vec::with_capacity(self.rdns.len() + 1);
        rdns.push(Rdn::new(attr, value));
        rdns.extend(self.rdns.iter().cloned());
        DistinguishedName { rdns }
    }

    /// True when `self` equals `base` or lies beneath it.
    pub fn is_within(&self, base: &DistinguishedName) -> bool {
        self.rdns.len() >= base.rdns.len() && self.rdns[self.rdns.len() - base.rdns.len()..] == base.rdns[..]
    }

    /// Value of the first RDN of the given type, scanning left to right.
    pub fn first(&self, attr: AttributeType) -> Option<&str> {
        self.rdns.iter().find(|r| r.attr == attr).map(|r| r.value.as_str())
    }

    pub fn count(&self, attr: AttributeType) -> usize {
        self.rdns.iter().filter(|r| r.attr == attr).count()
    }

    /// Normalized textual form.
    pub fn normalized(&self) -> String {
        self.to_string()
    }
}

impl FromStr for DistinguishedName {
    type Err = MalformedDn;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        if text.trim().is_empty() {
            return Err(malformed("empty DN"));
        }
        let mut rdns = Vec::new();
        let mut chars = text.chars().peekable();
        loop {
            // attribute type up to '='
            let mut attr = String::new();
            loop {
                match chars.next() {
                    Some('=') => break,
                    Some(',') | None => return Err(malformed("RDN without `=`")),
                    Some(c) => attr.push(c),
                }
            }
            let attr: AttributeType = attr.trim_start().parse()?;
            let mut value = String::new();
            let mut at_end = true;
            while let Some(c) = chars.next() {
                match c {
                    ',' => {
                        at_end = false;
                        break;
                    }
                    '+' => return Err(malformed("multi-valued RDNs are not supported")),
                    '\\' => value.push(unescape(&mut chars)?),
                    c => value.push(c),
                }
            }
            if value.is_empty() {
                return Err(malformed(format!("empty RDN value for `{attr}`")));
            }
            rdns.push(Rdn { attr, value });
            if at_end {
                break;
            }
        }
        Ok(DistinguishedName { rdns })
    }
}

fn unescape(chars: &mut std::iter::Peekable<std::str::Chars<'_>>) -> Result<char, MalformedDn> {
    match chars.next() {
        None => Err(malformed("dangling escape")),
        Some(c @ (',' | '+' | '\\' | '"' | '=' | '<' | '>' | ';' | '#' | ' ')) => Ok(c),
        Some(h) if h.is_ascii_hexdigit() => match chars.next() {
            Some(l) if l.is_ascii_hexdigit() => {
                let byte = u8::from_str_radix(&format!("{h}{l}"), 16).expect("hex pair");
                if byte.is_ascii() {
                    Ok(byte as char)
                } else {
                    Err(malformed("non-ASCII hex escapes are not supported"))
                }
            }
            _ => Err(malformed("incomplete hex escape")),
        },
        Some(c) => Err(malformed(format!("invalid escape `\\{c}`"))),
    }
}

impl fmt::Display for DistinguishedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, rdn) in self.rdns.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{rdn}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for DistinguishedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DistinguishedName({self})")
    }
}

impl Ord for DistinguishedName {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_string().cmp(&other.to_string())
    }
}

impl PartialOrd for DistinguishedName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for DistinguishedName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DistinguishedName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
