//! Conversion between directory DNs and X.509 `Name`s.

use x509_cert::attr::AttributeTypeAndValue;
use x509_cert::der::asn1::{Any, Ia5StringRef, PrintableStringRef, SetOfVec, Utf8StringRef};
use x509_cert::der::oid::db::rfc4519::{CN, DC, O, OU, UID};
use x509_cert::der::oid::ObjectIdentifier;
use x509_cert::der::{Tag, Tagged};
use x509_cert::name::{Name, RdnSequence, RelativeDistinguishedName};

use crate::directory::{AttributeType, DistinguishedName, Rdn};

fn oid(attr: AttributeType) -> ObjectIdentifier {
    match attr {
        AttributeType::Dc => DC,
        AttributeType::Ou => OU,
        AttributeType::Uid => UID,
        AttributeType::Cn => CN,
        AttributeType::O => O,
    }
}

fn attr_of(oid: &ObjectIdentifier) -> Option<AttributeType> {
    [AttributeType::Dc, AttributeType::Ou, AttributeType::Uid, AttributeType::Cn, AttributeType::O]
        .into_iter()
        .find(|a| self::oid(*a) == *oid)
}

/// Encode `dn` as an X.509 name. X.509 lists RDNs most-general first, the
/// reverse of the textual order.
pub(crate) fn to_x509(dn: &DistinguishedName) -> Result<Name, x509_cert::der::Error> {
    let mut rdns = Vec::with_capacity(dn.depth());
    for rdn in dn.rdns().iter().rev() {
        let tag = if rdn.attr == AttributeType::Dc { Tag::Ia5String } else { Tag::Utf8String };
        let atv = AttributeTypeAndValue { oid: oid(rdn.attr), value: Any::new(tag, rdn.value.as_bytes())? };
        rdns.push(RelativeDistinguishedName(SetOfVec::try_from(vec![atv])?));
    }
    Ok(RdnSequence(rdns))
}

/// Decode an X.509 name. Fails on multi-valued RDNs, attribute types outside
/// the directory's vocabulary, and non-string values.
pub(crate) fn from_x509(name: &Name) -> Result<DistinguishedName, String> {
    let mut rdns = Vec::with_capacity(name.0.len());
    for rdn in name.0.iter().rev() {
        let [atv] = rdn.0.as_slice() else {
            return Err("multi-valued RDN".into());
        };
        let attr = attr_of(&atv.oid).ok_or_else(|| format!("unsupported attribute {}", atv.oid))?;
        let value = match atv.value.tag() {
            Tag::Utf8String => Utf8StringRef::try_from(&atv.value).map(|s| s.as_str().to_string()),
            Tag::Ia5String => Ia5StringRef::try_from(&atv.value).map(|s| s.as_str().to_string()),
            Tag::PrintableString => PrintableStringRef::try_from(&atv.value).map(|s| s.as_str().to_string()),
            t => return Err(format!("unsupported string type {t}")),
        }
        .map_err(|e| e.to_string())?;
        rdns.push(Rdn::new(attr, value));
    }
    DistinguishedName::from_rdns(rdns).map_err(|e| e.to_string())
}
