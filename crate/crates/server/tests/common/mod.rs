//! Test harness: a file-backed service on a simulated clock, driven through the router.

#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, TimeDelta, Utc};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use slowvoice_core::access::{GateConfig, LoginMailTemplate, MemoryMailer, Whitelist};
use slowvoice_core::clock::SimClock;
use slowvoice_core::moderation::Roster;
use slowvoice_core::{Board, BoardConfig};
use slowvoice_server::api::router;
use slowvoice_server::credentials::ModeratorFile;
use slowvoice_server::state::{AppState, Paths};
use tempfile::TempDir;
use tower::ServiceExt;

pub const MODERATORS: [(&str, &str); 4] = [
    ("ana", "secret-ana"),
    ("ben", "secret-ben"),
    ("cho", "secret-cho"),
    ("dev", "secret-dev"),
];

pub struct Options {
    pub seed: u64,
    pub start: DateTime<Utc>,
    pub whitelist: String,
    pub session_ttl: TimeDelta,
}

impl Options {
    pub fn new(seed: u64, start: DateTime<Utc>) -> Self {
        Self {
            seed,
            start,
            whitelist: "@uni.example\nvisitor@partner.example\n".into(),
            session_ttl: TimeDelta::hours(12),
        }
    }
}

pub struct Harness {
    pub clock: Arc<SimClock>,
    pub mailer: Arc<MemoryMailer>,
    pub state: AppState,
    pub app: Router,
    pub template: LoginMailTemplate,
    pub paths: Paths,
    pub dir: TempDir,
}

impl Harness {
    pub fn new(opts: Options) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let paths = Paths {
            state: dir.path().join("state.json"),
            whitelist: dir.path().join("whitelist.txt"),
            moderators: dir.path().join("moderators.txt"),
        };
        fs::write(&paths.whitelist, &opts.whitelist).unwrap();
        let mut creds = ModeratorFile::default();
        for (id, secret) in MODERATORS {
            creds.set_secret(slowvoice_core::moderation::ModeratorId::new(id).unwrap(), secret);
        }
        fs::write(&paths.moderators, creds.to_file_string()).unwrap();
        Self::open(opts, dir, paths, creds)
    }

    fn open(opts: Options, dir: TempDir, paths: Paths, creds: ModeratorFile) -> Self {
        let clock = Arc::new(SimClock::new(opts.start));
        let mailer = Arc::new(MemoryMailer::new());
        let mut config = BoardConfig::new(Roster::new(creds.ids()).unwrap());
        config.seed = Some(opts.seed);
        config.gate = GateConfig {
            session_ttl: opts.session_ttl,
            ..GateConfig::default()
        };
        let template = config.template.clone();
        let whitelist = Whitelist::parse_file(&fs::read_to_string(&paths.whitelist).unwrap()).unwrap();
        let board = Board::new(config, whitelist, clock.clone(), mailer.clone()).unwrap();
        let state = AppState::with_files(Arc::new(board), creds, paths.clone()).unwrap();
        Self {
            app: router(state.clone()),
            clock,
            mailer,
            state,
            template,
            paths,
            dir,
        }
    }

    /// Opens a second service over the same files, as after a restart.
    pub fn restart(self, opts: Options) -> Self {
        let creds = ModeratorFile::parse(&fs::read_to_string(&self.paths.moderators).unwrap()).unwrap();
        let Harness { dir, paths, .. } = self;
        Self::open(opts, dir, paths, creds)
    }

    pub fn board(&self) -> &Board {
        self.state.board()
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.board().now()
    }

    pub fn set_time(&self, t: DateTime<Utc>) {
        self.clock.set(t);
    }

    pub async fn raw(&self, method: Method, path: &str, auth: Option<&str>, body: Option<&Value>) -> (StatusCode, String) {
        let mut req = Request::builder().method(method).uri(path);
        if let Some(a) = auth {
            req = req.header("authorization", a);
        }
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(serde_json::to_vec(v).unwrap())
            }
            None => Body::empty(),
        };
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    pub async fn call(&self, method: Method, path: &str, auth: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let (status, text) = self.raw(method, path, auth, body.as_ref()).await;
        let value = if text.is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or(Value::String(text))
        };
        (status, value)
    }

    pub async fn get(&self, path: &str, auth: Option<&str>) -> (StatusCode, Value) {
        self.call(Method::GET, path, auth, None).await
    }

    pub async fn post(&self, path: &str, auth: Option<&str>, body: Value) -> (StatusCode, Value) {
        self.call(Method::POST, path, auth, Some(body)).await
    }

    /// Requests a link and returns the token mailed for it.
    pub async fn request_token(&self, email: &str) -> Option<String> {
        let (status, _) = self.post("/api/access", None, json!({ "email": email })).await;
        assert_eq!(status, StatusCode::ACCEPTED);
        self.mailer.last_token_for(email, &self.template)
    }

    /// Full login: request, read the mail, redeem. Returns (bearer header, pseudonym).
    pub async fn login(&self, email: &str) -> (String, String) {
        let token = self.request_token(email).await.expect("whitelisted address gets mail");
        let (status, body) = self.post("/api/redeem", None, json!({ "token": token })).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        (
            format!("Bearer {}", body["session"].as_str().unwrap()),
            body["pseudonym"].as_str().unwrap().to_string(),
        )
    }

    pub fn moderator(i: usize) -> String {
        let (id, secret) = MODERATORS[i];
        format!("Moderator {id}:{secret}")
    }

    pub fn panel() -> Vec<&'static str> {
        MODERATORS[..3].iter().map(|(id, _)| *id).collect()
    }

    pub async fn submit_post(&self, auth: &str, category: &str, body: &str) -> String {
        let (status, v) = self
            .post("/api/posts", Some(auth), json!({ "category": category, "body": body }))
            .await;
        assert_eq!(status, StatusCode::ACCEPTED, "{v}");
        v["id"].as_str().unwrap().to_string()
    }

    pub async fn submit_comment(&self, auth: &str, post: &str, body: &str) -> String {
        let (status, v) = self
            .post(&format!("/api/posts/{post}/comments"), Some(auth), json!({ "body": body }))
            .await;
        assert_eq!(status, StatusCode::ACCEPTED, "{v}");
        v["id"].as_str().unwrap().to_string()
    }

    /// Opens a session for the next release with the first three moderators.
    pub async fn open_session(&self) -> (u64, Vec<Value>) {
        let (status, v) = self
            .post(
                "/api/moderation/sessions",
                Some(&Self::moderator(0)),
                json!({ "present": Self::panel() }),
            )
            .await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        let sid = v["id"].as_u64().unwrap();
        let (status, items) = self
            .get(&format!("/api/moderation/sessions/{sid}/worklist"), Some(&Self::moderator(1)))
            .await;
        assert_eq!(status, StatusCode::OK);
        (sid, items.as_array().unwrap().clone())
    }

    pub async fn decide(&self, sid: u64, decision: Value) -> (StatusCode, Value) {
        self.post(
            &format!("/api/moderation/sessions/{sid}/decisions"),
            Some(&Self::moderator(2)),
            decision,
        )
        .await
    }

    pub async fn approve(&self, sid: u64, message: &str) {
        let (status, v) = self.decide(sid, publish_as_is(message)).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        assert_eq!(v["outcome"], "publish_as_is");
    }

    pub async fn close(&self, sid: u64) -> Value {
        let (status, v) = self
            .post(&format!("/api/moderation/sessions/{sid}/close"), Some(&Self::moderator(0)), json!({}))
            .await;
        assert_eq!(status, StatusCode::OK, "{v}");
        v
    }

    /// Approves everything pending, closes, and moves the clock to the release and ticks.
    pub async fn moderate_all_and_release(&self) -> Value {
        let (sid, items) = self.open_session().await;
        for item in &items {
            self.approve(sid, item["id"].as_str().unwrap()).await;
        }
        let closed = self.close(sid).await;
        let at: DateTime<Utc> = serde_json::from_value(closed["release_at"].clone()).unwrap();
        self.set_time(at);
        self.state.tick().unwrap();
        closed
    }

    /// Every byte the service has written to disk.
    pub fn persisted(&self) -> Vec<(PathBuf, String)> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.dir.path()).unwrap() {
            let path = entry.unwrap().path();
            if path.is_file() {
                out.push((path.clone(), fs::read_to_string(&path).unwrap()));
            }
        }
        out
    }

    pub fn state_text(&self) -> String {
        self.state.persist();
        fs::read_to_string(&self.paths.state).unwrap()
    }
}

pub fn votes(approve: &[&str], challenge: &[&str]) -> Value {
    let mut map = serde_json::Map::new();
    for m in approve {
        map.insert(m.to_string(), json!("approve"));
    }
    for m in challenge {
        map.insert(m.to_string(), json!("challenge"));
    }
    Value::Object(map)
}

pub fn publish_as_is(message: &str) -> Value {
    json!({
        "message_id": message,
        "votes": votes(&["ana", "ben", "cho"], &[]),
        "challenge": "none",
    })
}

/// Finds every `local@domain.tld` shaped run in `text`.
pub fn find_addresses(text: &str) -> Vec<String> {
    let bytes = text.as_bytes();
    let word = |b: u8| b.is_ascii_alphanumeric() || b"._%+-".contains(&b);
    let mut found = Vec::new();
    for (i, &b) in bytes.iter().enumerate() {
        if b != b'@' {
            continue;
        }
        let mut start = i;
        while start > 0 && word(bytes[start - 1]) {
            start -= 1;
        }
        let mut end = i + 1;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || b".-".contains(&bytes[end])) {
            end += 1;
        }
        let domain = &text[i + 1..end];
        if start < i && domain.contains('.') {
            found.push(text[start..end].to_string());
        }
    }
    found
}
