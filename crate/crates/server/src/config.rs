//! Service configuration, read once at startup.
//!
//! Relative paths are resolved against the directory holding the configuration file.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};
use slowvoice_core::access::{GateConfig, LoginMailTemplate, Whitelist, WordLists};
use slowvoice_core::content::DEFAULT_CATEGORIES;
use slowvoice_core::moderation::{Roster, MIN_PANEL};
use slowvoice_core::release::ReleaseSchedule;
use slowvoice_core::BoardConfig;
use thiserror::Error;

use crate::credentials::ModeratorFile;

pub const ENV_LISTEN: &str = "SLOWVOICE_LISTEN";
pub const ENV_MAILER_KIND: &str = "SLOWVOICE_MAILER";
pub const ENV_MAILER_COMMAND: &str = "SLOWVOICE_MAILER_COMMAND";
pub const ENV_MAILER_SPOOL: &str = "SLOWVOICE_MAILER_SPOOL";
pub const ENV_MAILER_USERNAME: &str = "SLOWVOICE_MAILER_USERNAME";
pub const ENV_MAILER_PASSWORD: &str = "SLOWVOICE_MAILER_PASSWORD";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}: {1}")]
    Parse(PathBuf, String),
    #[error("invalid setting {0}: {1}")]
    Invalid(&'static str, String),
}

impl ConfigError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ConfigError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MailerKind {
    /// Writes each message as a file into `spool_dir` for an MTA to pick up.
    #[default]
    Spool,
    /// Pipes each message to `command` in sendmail format.
    Command,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MailerConfig {
    #[serde(default)]
    pub kind: MailerKind,
    #[serde(default)]
    pub spool_dir: Option<PathBuf>,
    #[serde(default)]
    pub command: Option<String>,
    pub from: String,
    #[serde(default = "default_subject")]
    pub subject: String,
    /// Message body; must contain `{login_url}`.
    #[serde(default = "default_body")]
    pub body: String,
    /// Prefix the token is appended to when building the login link.
    pub link_base: String,
    /// Passed to the command mailer's environment. Usually set via environment overrides.
    #[serde(default)]
    pub username: Option<String>,
    #[serde(default)]
    pub password: Option<String>,
}

fn default_subject() -> String {
    LoginMailTemplate::default().subject
}

fn default_body() -> String {
    LoginMailTemplate::default().body
}

fn default_listen() -> SocketAddr {
    "127.0.0.1:8080".parse().expect("valid default")
}

fn default_release_times() -> Vec<String> {
    ReleaseSchedule::default().time_strings()
}

fn default_timezone() -> String {
    "Europe/London".into()
}

fn default_token_ttl() -> u32 {
    24
}

fn default_session_ttl() -> u32 {
    12
}

fn default_categories() -> Vec<String> {
    DEFAULT_CATEGORIES.iter().map(|c| c.to_string()).collect()
}

fn default_tick() -> u64 {
    5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    pub whitelist: PathBuf,
    /// Adjective, modifier and noun lists. The built-in lists are used when absent.
    #[serde(default)]
    pub word_lists: Option<[PathBuf; 3]>,
    #[serde(default = "default_release_times")]
    pub release_times: Vec<String>,
    #[serde(default = "default_timezone")]
    pub timezone: String,
    #[serde(default = "default_token_ttl")]
    pub token_ttl_hours: u32,
    #[serde(default = "default_session_ttl")]
    pub session_ttl_hours: u32,
    pub moderators: PathBuf,
    /// Snapshot file for all board state.
    pub state: PathBuf,
    #[serde(default = "default_categories")]
    pub categories: Vec<String>,
    /// Seconds between release checks.
    #[serde(default = "default_tick")]
    pub tick_seconds: u64,
    pub mailer: MailerConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Everything `serve` needs, checked and loaded.
pub struct Loaded {
    pub board: BoardConfig,
    pub whitelist: Whitelist,
    pub moderators: ModeratorFile,
}

impl ServiceConfig {
    /// Reads the file and applies environment overrides.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse(_, m) => ConfigError::Parse(path.to_path_buf(), m),
            other => other,
        })?;
        config.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(PathBuf::new(), e.to_string()))
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(listen) = get(ENV_LISTEN) {
            self.listen = listen
                .parse()
                .map_err(|_| ConfigError::Invalid("listen", listen.clone()))?;
        }
        if let Some(kind) = get(ENV_MAILER_KIND) {
            self.mailer.kind = match kind.as_str() {
                "spool" => MailerKind::Spool,
                "command" => MailerKind::Command,
                _ => return Err(ConfigError::Invalid("mailer.kind", kind)),
            };
        }
        if let Some(command) = get(ENV_MAILER_COMMAND) {
            self.mailer.command = Some(command);
        }
        if let Some(dir) = get(ENV_MAILER_SPOOL) {
            self.mailer.spool_dir = Some(dir.into());
        }
        if let Some(user) = get(ENV_MAILER_USERNAME) {
            self.mailer.username = Some(user);
        }
        if let Some(password) = get(ENV_MAILER_PASSWORD) {
            self.mailer.password = Some(password);
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn whitelist_path(&self) -> PathBuf {
        self.resolve(&self.whitelist)
    }

    pub fn moderators_path(&self) -> PathBuf {
        self.resolve(&self.moderators)
    }

    pub fn state_path(&self) -> PathBuf {
        self.resolve(&self.state)
    }

    pub fn schedule(&self) -> Result<ReleaseSchedule, ConfigError> {
        ReleaseSchedule::parse(&self.release_times, &self.timezone)
            .map_err(|e| ConfigError::Invalid("release_times/timezone", e.to_string()))
    }

    pub fn template(&self) -> Result<LoginMailTemplate, ConfigError> {
        if !self.mailer.body.contains("{login_url}") {
            return Err(ConfigError::Invalid("mailer.body", "must contain {login_url}".into()));
        }
        Ok(LoginMailTemplate {
            subject: self.mailer.subject.clone(),
            body: self.mailer.body.clone(),
            link_base: self.mailer.link_base.clone(),
        })
    }

    pub fn word_lists(&self) -> Result<WordLists, ConfigError> {
        match &self.word_lists {
            None => Ok(WordLists::builtin()),
            Some([a, m, n]) => {
                let paths = [self.resolve(a), self.resolve(m), self.resolve(n)];
                for p in &paths {
                    if !p.exists() {
                        return Err(ConfigError::io(p, std::io::ErrorKind::NotFound.into()));
                    }
                }
                WordLists::from_files([&paths[0], &paths[1], &paths[2]])
                    .map_err(|e| ConfigError::Invalid("word_lists", e.to_string()))
            }
        }
    }

    pub fn gate(&self) -> Result<GateConfig, ConfigError> {
        if self.token_ttl_hours == 0 || self.session_ttl_hours == 0 {
            return Err(ConfigError::Invalid("ttl", "must be positive".into()));
        }
        Ok(GateConfig {
            token_ttl: TimeDelta::hours(self.token_ttl_hours.into()),
            session_ttl: TimeDelta::hours(self.session_ttl_hours.into()),
        })
    }

    fn check_mailer(&self) -> Result<(), ConfigError> {
        match self.mailer.kind {
            MailerKind::Spool if self.mailer.spool_dir.is_none() => {
                Err(ConfigError::Invalid("mailer.spool_dir", "required for the spool mailer".into()))
            }
            MailerKind::Command if self.mailer.command.as_deref().is_none_or(|c| c.trim().is_empty()) => {
                Err(ConfigError::Invalid("mailer.command", "required for the command mailer".into()))
            }
            _ => Ok(()),
        }
    }

    /// Validates every setting and reads every referenced file.
    pub fn load_all(&self) -> Result<Loaded, ConfigError> {
        self.check_mailer()?;
        if self.tick_seconds == 0 {
            return Err(ConfigError::Invalid("tick_seconds", "must be positive".into()));
        }
        let whitelist_path = self.whitelist_path();
        let text = fs::read_to_string(&whitelist_path).map_err(|e| ConfigError::io(&whitelist_path, e))?;
        let whitelist = Whitelist::parse_file(&text)
            .map_err(|e| ConfigError::Parse(whitelist_path.clone(), e.to_string()))?;
        let moderators = ModeratorFile::load(&self.moderators_path())?;
        if moderators.len() < MIN_PANEL {
            return Err(ConfigError::Invalid(
                "moderators",
                format!("roster needs at least {MIN_PANEL} moderators, found {}", moderators.len()),
            ));
        }
        let roster = Roster::new(moderators.ids()).map_err(|e| ConfigError::Invalid("moderators", e.to_string()))?;
        let mut board = BoardConfig::new(roster);
        board.gate = self.gate()?;
        board.template = self.template()?;
        board.words = self.word_lists()?;
        board.schedule = self.schedule()?;
        board.categories = self.categories.clone();
        Ok(Loaded {
            board,
            whitelist,
            moderators,
        })
    }
}
