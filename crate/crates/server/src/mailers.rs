//! Mail transports. Neither logs the recipient.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use rand::RngCore;
use slowvoice_core::access::{MailError, Mailer, OutgoingMail};

use crate::config::{MailerConfig, MailerKind, ENV_MAILER_PASSWORD, ENV_MAILER_USERNAME};

fn render(from: &str, mail: &OutgoingMail) -> String {
    format!(
        "From: {from}\r\nTo: {}\r\nSubject: {}\r\nContent-Type: text/plain; charset=utf-8\r\n\r\n{}",
        mail.to,
        mail.subject,
        mail.body.replace('\n', "\r\n")
    )
}

/// Drops each message into a directory, one file per message, for an MTA pickup agent.
pub struct SpoolMailer {
    dir: PathBuf,
    from: String,
}

impl SpoolMailer {
    pub fn new(dir: PathBuf, from: String) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, from })
    }
}

impl Mailer for SpoolMailer {
    fn send(&self, mail: &OutgoingMail) -> Result<(), MailError> {
        let mut name = [0u8; 12];
        rand::thread_rng().fill_bytes(&mut name);
        let tmp = self.dir.join(format!(".{}.tmp", hex::encode(name)));
        let done = self.dir.join(format!("{}.eml", hex::encode(name)));
        fs::write(&tmp, render(&self.from, mail)).map_err(|e| MailError(e.to_string()))?;
        fs::rename(&tmp, &done).map_err(|e| MailError(e.to_string()))
    }
}

/// Pipes each message to a shell command such as `sendmail -t`.
pub struct CommandMailer {
    command: String,
    from: String,
    username: Option<String>,
    password: Option<String>,
}

impl CommandMailer {
    pub fn new(command: String, from: String, username: Option<String>, password: Option<String>) -> Self {
        Self {
            command,
            from,
            username,
            password,
        }
    }
}

impl Mailer for CommandMailer {
    fn send(&self, mail: &OutgoingMail) -> Result<(), MailError> {
        let mut cmd = Command::new("sh");
        cmd.arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::null())
            .stderr(Stdio::null());
        if let Some(u) = &self.username {
            cmd.env(ENV_MAILER_USERNAME, u);
        }
        if let Some(p) = &self.password {
            cmd.env(ENV_MAILER_PASSWORD, p);
        }
        let mut child = cmd.spawn().map_err(|e| MailError(e.to_string()))?;
        child
            .stdin
            .take()
            .expect("stdin piped")
            .write_all(render(&self.from, mail).as_bytes())
            .map_err(|e| MailError(e.to_string()))?;
        let status = child.wait().map_err(|e| MailError(e.to_string()))?;
        if status.success() {
            Ok(())
        } else {
            Err(MailError(format!("mail command exited with {status}")))
        }
    }
}

pub fn from_config(config: &MailerConfig, resolve: impl Fn(&std::path::Path) -> PathBuf) -> Result<Box<dyn Mailer>, MailError> {
    match config.kind {
        MailerKind::Spool => {
            let dir = config
                .spool_dir
                .as_deref()
                .ok_or_else(|| MailError("spool_dir not set".into()))?;
            let mailer = SpoolMailer::new(resolve(dir), config.from.clone()).map_err(|e| MailError(e.to_string()))?;
            Ok(Box::new(mailer))
        }
        MailerKind::Command => {
            let command = config
                .command
                .clone()
                .ok_or_else(|| MailError("command not set".into()))?;
            Ok(Box::new(CommandMailer::new(
                command,
                config.from.clone(),
                config.username.clone(),
                config.password.clone(),
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mail() -> OutgoingMail {
        OutgoingMail {
            to: "someone@uni.example".into(),
            subject: "Login".into(),
            body: "line one\nhttp://x/#token=abc\n".into(),
        }
    }

    #[test]
    fn spool_writes_one_file_per_message() {
        let dir = tempfile::tempdir().unwrap();
        let m = SpoolMailer::new(dir.path().join("out"), "board@uni.example".into()).unwrap();
        m.send(&mail()).unwrap();
        m.send(&mail()).unwrap();
        let files: Vec<_> = fs::read_dir(dir.path().join("out")).unwrap().collect();
        assert_eq!(files.len(), 2);
        let text = fs::read_to_string(files[0].as_ref().unwrap().path()).unwrap();
        assert!(text.starts_with("From: board@uni.example\r\nTo: someone@uni.example\r\n"));
        assert!(text.contains("#token=abc"));
    }

    #[test]
    fn command_receives_message_and_credentials() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("captured");
        let command = format!("cat > {0}; echo \"$SLOWVOICE_MAILER_USERNAME\" >> {0}", out.display());
        let m = CommandMailer::new(command, "board@uni.example".into(), Some("relay-user".into()), None);
        m.send(&mail()).unwrap();
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.contains("Subject: Login"));
        assert!(text.trim_end().ends_with("relay-user"));
        assert!(CommandMailer::new("exit 3".into(), "x@y.example".into(), None, None)
            .send(&mail())
            .is_err());
    }
}
