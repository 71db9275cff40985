//! Controlled, unlinkable access.
//!
//! Whitelisted addresses receive a one-time login link. The link carries a token drawn from
//! an RNG stream that never sees the address, and the stored token record is a digest with
//! no address attached. Redeeming a token yields a [`Session`] with a fresh [`Pseudonym`].

mod mailer;
mod pseudonym;
mod token;
mod whitelist;

use std::collections::{HashMap, HashSet};
use std::fmt;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, TimeDelta, Utc};
use parking_lot::{Mutex, RwLock};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mailer::{extract_token, LoginMailTemplate, MailError, Mailer, MemoryMailer, OutgoingMail};
pub use pseudonym::{mint_pseudonym, Pseudonym, WordLists, MINT_ATTEMPTS};
pub use token::{AccessToken, TokenDigest, TokenState, TokenValue, TOKEN_BYTES};
pub use whitelist::{EmailAddress, Whitelist, WhitelistEntry};

/// The acknowledgement returned for every well-formed access request.
pub const ACCESS_ACKNOWLEDGEMENT: &str =
    "If this address is eligible, a one-time login link is on its way.";

#[derive(Debug, Error)]
pub enum AccessError {
    #[error("malformed email address")]
    MalformedAddress,
    #[error("login link delivery failed")]
    Delivery,
    // Unknown, used and expired tokens all map here.
    #[error("invalid or expired login link")]
    InvalidToken,
    #[error("not signed in")]
    Unauthorized,
    #[error("pseudonym space exhausted")]
    PseudonymSpaceExhausted,
    #[error("invalid word list: {0}")]
    InvalidWordList(String),
}

/// Uniform reply to `request_access`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccessReceipt;

impl AccessReceipt {
    pub fn message(&self) -> &'static str {
        ACCESS_ACKNOWLEDGEMENT
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(String);

impl SessionId {
    fn draw<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 16];
        rng.fill_bytes(&mut bytes);
        Self(URL_SAFE_NO_PAD.encode(bytes))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for SessionId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl fmt::Debug for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SessionId(..)")
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The identity behind one use of a login link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: SessionId,
    pub pseudonym: Pseudonym,
    pub created_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

impl Session {
    pub fn is_live(&self, now: DateTime<Utc>) -> bool {
        now < self.expires_at
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GateConfig {
    pub token_ttl: TimeDelta,
    pub session_ttl: TimeDelta,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            token_ttl: TimeDelta::hours(24),
            session_ttl: TimeDelta::hours(12),
        }
    }
}

/// Persisted part of the gate: token digests and sessions.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GateState {
    pub tokens: Vec<AccessToken>,
    pub sessions: Vec<Session>,
}

pub struct AccessGate {
    config: GateConfig,
    template: LoginMailTemplate,
    words: WordLists,
    whitelist: RwLock<Whitelist>,
    tokens: Mutex<HashMap<TokenDigest, AccessToken>>,
    sessions: RwLock<HashMap<SessionId, Session>>,
    token_rng: Mutex<ChaCha20Rng>,
    session_rng: Mutex<ChaCha20Rng>,
}

impl AccessGate {
    /// With `seed`, token values are the successive 16-byte draws of
    /// `ChaCha20Rng::seed_from_u64(seed)`; sessions use a separate stream of the same key.
    pub fn new(
        config: GateConfig,
        template: LoginMailTemplate,
        words: WordLists,
        whitelist: Whitelist,
        seed: Option<u64>,
    ) -> Self {
        let (token_rng, mut session_rng) = match seed {
            Some(seed) => (
                ChaCha20Rng::seed_from_u64(seed),
                ChaCha20Rng::seed_from_u64(seed),
            ),
            None => (ChaCha20Rng::from_entropy(), ChaCha20Rng::from_entropy()),
        };
        session_rng.set_stream(1);
        Self {
            config,
            template,
            words,
            whitelist: RwLock::new(whitelist),
            tokens: Mutex::new(HashMap::new()),
            sessions: RwLock::new(HashMap::new()),
            token_rng: Mutex::new(token_rng),
            session_rng: Mutex::new(session_rng),
        }
    }

    pub fn config(&self) -> GateConfig {
        self.config
    }

    pub fn template(&self) -> &LoginMailTemplate {
        &self.template
    }

    /// Mails a login link if `email` is whitelisted. The reply is the same either way.
    pub fn request_access(
        &self,
        email: &str,
        mailer: &dyn Mailer,
        now: DateTime<Utc>,
    ) -> Result<AccessReceipt, AccessError> {
        let address = EmailAddress::parse(email)?;
        if !self.whitelist.read().admits(&address) {
            return Ok(AccessReceipt);
        }

        let value = TokenValue::draw(&mut *self.token_rng.lock());
        let token = AccessToken::new(&value, now, now + self.config.token_ttl);
        let digest = token.digest.clone();
        self.tokens.lock().insert(digest.clone(), token);

        let mail = self.template.render(address.as_str(), value.expose());
        let sent = mailer.send(&mail);
        drop(mail);
        drop(address);
        if sent.is_err() {
            self.tokens.lock().remove(&digest);
            return Err(AccessError::Delivery);
        }
        Ok(AccessReceipt)
    }

    /// Exchanges an unused, unexpired token for a new session. At most one call succeeds per
    /// token regardless of concurrency.
    pub fn redeem_token(&self, presented: &str, now: DateTime<Utc>) -> Result<Session, AccessError> {
        let digest = TokenValue::from_presented(presented).digest();
        let mut tokens = self.tokens.lock();
        let token = tokens.get_mut(&digest).ok_or(AccessError::InvalidToken)?;
        token.expire_if_due(now);
        if token.state != TokenState::Unused {
            return Err(AccessError::InvalidToken);
        }

        let mut sessions = self.sessions.write();
        let live: HashSet<Pseudonym> = sessions
            .values()
            .filter(|s| s.is_live(now))
            .map(|s| s.pseudonym.clone())
            .collect();
        let session = {
            let mut rng = self.session_rng.lock();
            let pseudonym = mint_pseudonym(&mut *rng, &self.words, &live)?;
            let mut id = SessionId::draw(&mut *rng);
            while sessions.contains_key(&id) {
                id = SessionId::draw(&mut *rng);
            }
            Session {
                id,
                pseudonym,
                created_at: now,
                expires_at: now + self.config.session_ttl,
            }
        };
        sessions.insert(session.id.clone(), session.clone());
        token.state = TokenState::Redeemed;
        Ok(session)
    }

    /// Looks up a live session by its bearer id.
    pub fn session(&self, id: &str, now: DateTime<Utc>) -> Result<Session, AccessError> {
        self.sessions
            .read()
            .get(&SessionId::from(id))
            .filter(|s| s.is_live(now))
            .cloned()
            .ok_or(AccessError::Unauthorized)
    }

    /// Adds a private address to the whitelist for the holder of a live session. Nothing
    /// relating the address to the session is kept. Returns `true` if the entry is new.
    pub fn register_alternate_address(
        &self,
        session_id: &str,
        address: &str,
        now: DateTime<Utc>,
    ) -> Result<bool, AccessError> {
        self.session(session_id, now)?;
        let address = EmailAddress::parse(address)?;
        Ok(self
            .whitelist
            .write()
            .insert(WhitelistEntry::Address(address.as_str().to_string())))
    }

    pub fn whitelist(&self) -> Whitelist {
        self.whitelist.read().clone()
    }

    pub fn replace_whitelist(&self, whitelist: Whitelist) {
        *self.whitelist.write() = whitelist;
    }

    pub fn update_whitelist<T>(&self, f: impl FnOnce(&mut Whitelist) -> T) -> T {
        f(&mut self.whitelist.write())
    }

    /// Marks overdue tokens expired and drops expired sessions.
    pub fn sweep(&self, now: DateTime<Utc>) {
        for token in self.tokens.lock().values_mut() {
            token.expire_if_due(now);
        }
        self.sessions.write().retain(|_, s| s.is_live(now));
    }

    pub fn token_count(&self, state: TokenState) -> usize {
        self.tokens.lock().values().filter(|t| t.state == state).count()
    }

    pub fn live_sessions(&self, now: DateTime<Utc>) -> Vec<Session> {
        self.sessions
            .read()
            .values()
            .filter(|s| s.is_live(now))
            .cloned()
            .collect()
    }

    pub fn state(&self) -> GateState {
        let mut tokens: Vec<AccessToken> = self.tokens.lock().values().cloned().collect();
        tokens.sort_by(|a, b| (a.issued_at, &a.digest).cmp(&(b.issued_at, &b.digest)));
        let mut sessions: Vec<Session> = self.sessions.read().values().cloned().collect();
        sessions.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
        GateState { tokens, sessions }
    }

    pub fn restore(&self, state: GateState) {
        *self.tokens.lock() = state
            .tokens
            .into_iter()
            .map(|t| (t.digest.clone(), t))
            .collect();
        *self.sessions.write() = state
            .sessions
            .into_iter()
            .map(|s| (s.id.clone(), s))
            .collect();
    }
}
