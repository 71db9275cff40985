use parking_lot::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("mail delivery failed: {0}")]
pub struct MailError(pub String);

/// A message ready for delivery. `to` is the only place an address appears.
#[derive(Clone)]
pub struct OutgoingMail {
    pub to: String,
    pub subject: String,
    pub body: String,
}

impl std::fmt::Debug for OutgoingMail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OutgoingMail")
            .field("to", &"<redacted>")
            .field("subject", &self.subject)
            .finish_non_exhaustive()
    }
}

pub trait Mailer: Send + Sync {
    fn send(&self, mail: &OutgoingMail) -> Result<(), MailError>;
}

/// Subject and body of the login mail. The body must contain `{login_url}`.
#[derive(Clone, Debug)]
pub struct LoginMailTemplate {
    pub subject: String,
    pub body: String,
    /// Prefix the token is appended to when building the link.
    pub link_base: String,
}

impl Default for LoginMailTemplate {
    fn default() -> Self {
        Self {
            subject: "Your one-time login link".to_string(),
            body: "Use this link to open the board. It works once and expires in 24 hours.\n\n{login_url}\n\nThe link is not tied to your address; nobody can tell who used it.\n".to_string(),
            link_base: "http://localhost:8080/login#token=".to_string(),
        }
    }
}

impl LoginMailTemplate {
    pub fn login_url(&self, token: &str) -> String {
        format!("{}{}", self.link_base, token)
    }

    pub fn render(&self, to: &str, token: &str) -> OutgoingMail {
        OutgoingMail {
            to: to.to_string(),
            subject: self.subject.clone(),
            body: self.body.replace("{login_url}", &self.login_url(token)),
        }
    }
}

/// Keeps sent mail in memory. Used by tests and local development.
#[derive(Debug, Default)]
pub struct MemoryMailer {
    outbox: Mutex<Vec<OutgoingMail>>,
    failing: Mutex<bool>,
}

impl MemoryMailer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_failing(&self, failing: bool) {
        *self.failing.lock() = failing;
    }

    pub fn sent(&self) -> Vec<OutgoingMail> {
        self.outbox.lock().clone()
    }

    pub fn take(&self) -> Vec<OutgoingMail> {
        std::mem::take(&mut *self.outbox.lock())
    }

    /// The token at the end of the login link in the most recent mail to `to`.
    pub fn last_token_for(&self, to: &str, template: &LoginMailTemplate) -> Option<String> {
        let outbox = self.outbox.lock();
        let mail = outbox.iter().rev().find(|m| m.to == to)?;
        extract_token(&mail.body, &template.link_base)
    }
}

impl Mailer for MemoryMailer {
    fn send(&self, mail: &OutgoingMail) -> Result<(), MailError> {
        if *self.failing.lock() {
            return Err(MailError("transport unavailable".into()));
        }
        self.outbox.lock().push(mail.clone());
        Ok(())
    }
}

/// Pulls the token out of a rendered login mail body.
pub fn extract_token(body: &str, link_base: &str) -> Option<String> {
    let start = body.find(link_base)? + link_base.len();
    let token: String = body[start..]
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '-' || *c == '_')
        .collect();
    (!token.is_empty()).then_some(token)
}
