use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AccessError;

const MAX_ADDRESS_LEN: usize = 254;

/// A syntactically valid, lowercased email address.
///
/// Addresses only ever live on the stack of a request; nothing that holds one is persisted
/// except the whitelist itself.
#[derive(Clone, PartialEq, Eq)]
pub struct EmailAddress {
    normalized: String,
    at: usize,
}

impl EmailAddress {
    pub fn parse(raw: &str) -> Result<Self, AccessError> {
        let normalized = raw.trim().to_ascii_lowercase();
        if normalized.is_empty() || normalized.len() > MAX_ADDRESS_LEN {
            return Err(AccessError::MalformedAddress);
        }
        let at = normalized.find('@').ok_or(AccessError::MalformedAddress)?;
        let (local, domain) = (&normalized[..at], &normalized[at + 1..]);
        if !valid_local_part(local) || !valid_domain(domain) {
            return Err(AccessError::MalformedAddress);
        }
        Ok(Self { normalized, at })
    }

    pub fn as_str(&self) -> &str {
        &self.normalized
    }

    pub fn domain(&self) -> &str {
        &self.normalized[self.at + 1..]
    }
}

// Never print the address itself in debug output.
impl fmt::Debug for EmailAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("EmailAddress(<redacted>)")
    }
}

fn valid_local_part(local: &str) -> bool {
    !local.is_empty()
        && local.len() <= 64
        && !local.starts_with('.')
        && !local.ends_with('.')
        && !local.contains("..")
        && local
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b"!#$%&'*+-/=?^_`{|}~.".contains(&b))
}

fn valid_domain(domain: &str) -> bool {
    let labels: Vec<&str> = domain.split('.').collect();
    labels.len() >= 2
        && labels.iter().all(|label| {
            !label.is_empty()
                && label.len() <= 63
                && !label.starts_with('-')
                && !label.ends_with('-')
                && label.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
        })
}

/// One line of the whitelist: a full address, or `@domain` admitting every address at
/// exactly that domain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WhitelistEntry {
    Address(String),
    Domain(String),
}

impl WhitelistEntry {
    pub fn matches(&self, address: &EmailAddress) -> bool {
        match self {
            WhitelistEntry::Address(a) => a == address.as_str(),
            WhitelistEntry::Domain(d) => d == address.domain(),
        }
    }
}

impl FromStr for WhitelistEntry {
    type Err = AccessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.strip_prefix('@') {
            Some(domain) if valid_domain(domain) => Ok(WhitelistEntry::Domain(domain.to_string())),
            Some(_) => Err(AccessError::MalformedAddress),
            None => Ok(WhitelistEntry::Address(EmailAddress::parse(&s)?.normalized)),
        }
    }
}

impl TryFrom<String> for WhitelistEntry {
    type Error = AccessError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<WhitelistEntry> for String {
    fn from(entry: WhitelistEntry) -> Self {
        entry.to_string()
    }
}

impl fmt::Display for WhitelistEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WhitelistEntry::Address(a) => f.write_str(a),
            WhitelistEntry::Domain(d) => write!(f, "@{d}"),
        }
    }
}

/// The set of addresses and domains allowed to request login links.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Whitelist {
    entries: BTreeSet<WhitelistEntry>,
}

impl Whitelist {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `true` if the entry was not already present.
    pub fn insert(&mut self, entry: WhitelistEntry) -> bool {
        self.entries.insert(entry)
    }

    pub fn remove(&mut self, entry: &WhitelistEntry) -> bool {
        self.entries.remove(entry)
    }

    pub fn admits(&self, address: &EmailAddress) -> bool {
        self.entries.iter().any(|e| e.matches(address))
    }

    pub fn entries(&self) -> impl Iterator<Item = &WhitelistEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses the one-entry-per-line file format. Blank lines and `#` comments are skipped.
    pub fn parse_file(text: &str) -> Result<Self, AccessError> {
        let mut list = Whitelist::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            list.insert(line.parse()?);
        }
        Ok(list)
    }

    pub fn to_file_string(&self) -> String {
        self.entries.iter().map(|e| format!("{e}\n")).collect()
    }
}

impl FromIterator<WhitelistEntry> for Whitelist {
    fn from_iter<I: IntoIterator<Item = WhitelistEntry>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_normalization() {
        let a = EmailAddress::parse("  A.Person@Uni.Example ").unwrap();
        assert_eq!(a.as_str(), "a.person@uni.example");
        assert_eq!(a.domain(), "uni.example");
    }

    #[test]
    fn malformed_addresses() {
        for bad in [
            "",
            "plain",
            "@uni.example",
            "a@",
            "a@b",
            "a@@b.example",
            "a b@uni.example",
            "a@-uni.example",
            "a@uni..example",
            ".a@uni.example",
        ] {
            assert!(EmailAddress::parse(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn domain_pattern_matches_exact_domain_only() {
        let entry: WhitelistEntry = "@uni.example".parse().unwrap();
        assert_eq!(entry, WhitelistEntry::Domain("uni.example".into()));
        assert!(entry.matches(&EmailAddress::parse("x@uni.example").unwrap()));
        assert!(!entry.matches(&EmailAddress::parse("x@cs.uni.example").unwrap()));
        assert!(!entry.matches(&EmailAddress::parse("x@notuni.example").unwrap()));
    }

    #[test]
    fn file_round_trip_dedupes() {
        let list = Whitelist::parse_file("# staff\n@uni.example\nA@other.example\na@other.example\n\n")
            .unwrap();
        assert_eq!(list.len(), 2);
        assert_eq!(list.to_file_string(), "a@other.example\n@uni.example\n");
        assert!(Whitelist::parse_file("@bad..domain\n").is_err());
    }
}
