use std::fmt;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Bytes of randomness in a login token (128 bits).
pub const TOKEN_BYTES: usize = 16;

/// The secret carried in a login link. Only ever held in memory and in the outgoing mail.
#[derive(Clone, PartialEq, Eq)]
pub struct TokenValue(String);

impl TokenValue {
    /// Draws a fresh value. The value depends only on the RNG stream.
    pub fn draw<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; TOKEN_BYTES];
        rng.fill_bytes(&mut bytes);
        Self(URL_SAFE_NO_PAD.encode(bytes))
    }

    pub fn from_presented(value: &str) -> Self {
        Self(value.to_string())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }

    pub fn digest(&self) -> TokenDigest {
        TokenDigest(hex::encode(Sha256::digest(self.0.as_bytes())))
    }
}

impl fmt::Debug for TokenValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TokenValue(<redacted>)")
    }
}

/// SHA-256 of a token value; the only form in which tokens are stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenDigest(String);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenState {
    Unused,
    Redeemed,
    Expired,
}

/// A stored one-time credential. Carries no reference to the address it was mailed to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessToken {
    pub digest: TokenDigest,
    pub issued_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
    pub state: TokenState,
}

impl AccessToken {
    pub fn new(value: &TokenValue, issued_at: DateTime<Utc>, expires_at: DateTime<Utc>) -> Self {
        Self {
            digest: value.digest(),
            issued_at,
            expires_at,
            state: TokenState::Unused,
        }
    }

    /// Marks the token expired if it is unused and past its deadline.
    pub fn expire_if_due(&mut self, now: DateTime<Utc>) -> bool {
        if self.state == TokenState::Unused && now >= self.expires_at {
            self.state = TokenState::Expired;
            true
        } else {
            false
        }
    }
}
