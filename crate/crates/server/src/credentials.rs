//! Moderator credentials.
//!
//! The roster file has one moderator per line: `id salt digest`, where `digest` is the hex
//! SHA-256 of the salt bytes followed by the secret. Lines starting with `#` are ignored.
//! Moderators authenticate with `Authorization: Moderator <id>:<secret>`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::RngCore;
use sha2::{Digest, Sha256};
use slowvoice_core::moderation::{ModeratorId, MIN_PANEL};

use crate::config::ConfigError;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Credential {
    salt: [u8; 16],
    digest: [u8; 32],
}

fn digest(salt: &[u8], secret: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(salt);
    h.update(secret.as_bytes());
    h.finalize().into()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModeratorFile {
    entries: BTreeMap<ModeratorId, Credential>,
}

impl ModeratorFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [id, salt, hash] = fields.as_slice() else {
                return Err(format!("line {}: expected `id salt digest`", i + 1));
            };
            let id = ModeratorId::new(id).map_err(|e| format!("line {}: {e}", i + 1))?;
            let mut cred = Credential {
                salt: [0; 16],
                digest: [0; 32],
            };
            hex::decode_to_slice(salt, &mut cred.salt).map_err(|e| format!("line {}: salt: {e}", i + 1))?;
            hex::decode_to_slice(hash, &mut cred.digest).map_err(|e| format!("line {}: digest: {e}", i + 1))?;
            if entries.insert(id, cred).is_some() {
                return Err(format!("line {}: duplicate moderator", i + 1));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
        Self::parse(&text).map_err(|e| ConfigError::Parse(path.to_path_buf(), e))
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        fs::write(path, self.to_file_string()).map_err(|e| ConfigError::io(path, e))
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::from("# id salt sha256(salt||secret)\n");
        for (id, c) in &self.entries {
            out.push_str(&format!("{id} {} {}\n", hex::encode(c.salt), hex::encode(c.digest)));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ModeratorId> + '_ {
        self.entries.keys().cloned()
    }

    pub fn contains(&self, id: &ModeratorId) -> bool {
        self.entries.contains_key(id)
    }

    /// Sets the secret for `id`, adding the moderator if new.
    pub fn set_secret(&mut self, id: ModeratorId, secret: &str) {
        let mut salt = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut salt);
        let digest = digest(&salt, secret);
        self.entries.insert(id, Credential { salt, digest });
    }

    /// Removes `id` unless that would leave fewer than the minimum panel.
    pub fn remove(&mut self, id: &ModeratorId) -> Result<bool, String> {
        if !self.entries.contains_key(id) {
            return Ok(false);
        }
        if self.entries.len() <= MIN_PANEL {
            return Err(format!(
                "refusing to remove {id}: the roster must keep at least {MIN_PANEL} moderators"
            ));
        }
        self.entries.remove(id);
        Ok(true)
    }

    pub fn verify(&self, id: &ModeratorId, secret: &str) -> bool {
        let Some(c) = self.entries.get(id) else {
            return false;
        };
        let got = digest(&c.salt, secret);
        got.iter().zip(c.digest.iter()).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
    }

    /// Checks an `Authorization` header value.
    pub fn authenticate(&self, header: &str) -> Option<ModeratorId> {
        let rest = header.strip_prefix("Moderator ")?;
        let (id, secret) = rest.split_once(':')?;
        let id = ModeratorId::new(id).ok()?;
        self.verify(&id, secret).then_some(id)
    }
}

/// A random secret suitable for a new moderator.
pub fn generate_secret() -> String {
    let mut bytes = [0u8; 18];
    rand::thread_rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}
