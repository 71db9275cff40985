//! Shared handler state, persistence and file reloading.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::SystemTime;

use parking_lot::{Mutex, RwLock, RwLockReadGuard};
use slowvoice_core::access::Whitelist;
use slowvoice_core::moderation::Roster;
use slowvoice_core::release::PublishBatch;
use slowvoice_core::{Board, BoardError};

use crate::credentials::ModeratorFile;

/// Where state lives on disk.
#[derive(Clone, Debug)]
pub struct Paths {
    pub state: PathBuf,
    pub whitelist: PathBuf,
    pub moderators: PathBuf,
}

struct Persistence {
    paths: Paths,
    write_lock: Mutex<()>,
    whitelist_seen: Mutex<Option<SystemTime>>,
    moderators_seen: Mutex<Option<SystemTime>>,
}

struct Shared {
    board: Arc<Board>,
    moderators: RwLock<ModeratorFile>,
    persistence: Option<Persistence>,
}

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

fn modified(path: &Path) -> Option<SystemTime> {
    fs::metadata(path).and_then(|m| m.modified()).ok()
}

/// Writes via a temporary file and rename so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

impl AppState {
    /// State without any files; used by tests and offline tools.
    pub fn in_memory(board: Arc<Board>, moderators: ModeratorFile) -> Self {
        Self {
            shared: Arc::new(Shared {
                board,
                moderators: RwLock::new(moderators),
                persistence: None,
            }),
        }
    }

    /// State backed by files. Restores the snapshot if one exists and applies the roster file.
    pub fn with_files(board: Arc<Board>, moderators: ModeratorFile, paths: Paths) -> Result<Self, BoardError> {
        if paths.state.exists() {
            let text = fs::read_to_string(&paths.state).map_err(|e| BoardError::Snapshot(e.to_string()))?;
            board.restore_json(&text)?;
        }
        let roster = Roster::new(moderators.ids())?;
        board.set_roster(roster);
        let persistence = Persistence {
            whitelist_seen: Mutex::new(modified(&paths.whitelist)),
            moderators_seen: Mutex::new(modified(&paths.moderators)),
            paths,
            write_lock: Mutex::new(()),
        };
        Ok(Self {
            shared: Arc::new(Shared {
                board,
                moderators: RwLock::new(moderators),
                persistence: Some(persistence),
            }),
        })
    }

    pub fn board(&self) -> &Board {
        &self.shared.board
    }

    pub fn moderators(&self) -> RwLockReadGuard<'_, ModeratorFile> {
        self.shared.moderators.read()
    }

    /// Saves the board snapshot. Failures are logged; the in-memory state stays authoritative.
    pub fn persist(&self) {
        let Some(p) = &self.shared.persistence else {
            return;
        };
        let _guard = p.write_lock.lock();
        if let Err(e) = write_atomic(&p.paths.state, &self.board().snapshot_json()) {
            tracing::error!(error = %e, "could not save state");
        }
    }

    /// Rewrites the whitelist file from the gate's current list.
    pub fn write_whitelist(&self) {
        let Some(p) = &self.shared.persistence else {
            return;
        };
        let _guard = p.write_lock.lock();
        match write_atomic(&p.paths.whitelist, &self.board().whitelist().to_file_string()) {
            Ok(()) => *p.whitelist_seen.lock() = modified(&p.paths.whitelist),
            Err(e) => tracing::error!(error = %e, "could not save whitelist"),
        }
    }

    /// Picks up edits to the whitelist and roster files made by the operator CLI.
    pub fn reload_files(&self) {
        let Some(p) = &self.shared.persistence else {
            return;
        };
        let now = modified(&p.paths.whitelist);
        if now != *p.whitelist_seen.lock() {
            match fs::read_to_string(&p.paths.whitelist)
                .map_err(|e| e.to_string())
                .and_then(|t| Whitelist::parse_file(&t).map_err(|e| e.to_string()))
            {
                Ok(list) => {
                    tracing::info!(entries = list.len(), "whitelist reloaded");
                    self.board().replace_whitelist(list);
                }
                Err(e) => tracing::warn!(error = %e, "whitelist reload failed, keeping previous list"),
            }
            *p.whitelist_seen.lock() = now;
        }
        let now = modified(&p.paths.moderators);
        if now != *p.moderators_seen.lock() {
            match ModeratorFile::load(&p.paths.moderators)
                .map_err(|e| e.to_string())
                .and_then(|f| Roster::new(f.ids()).map(|r| (f, r)).map_err(|e| e.to_string()))
            {
                Ok((file, roster)) => {
                    tracing::info!(moderators = file.len(), "roster reloaded");
                    self.board().set_roster(roster);
                    *self.shared.moderators.write() = file;
                }
                Err(e) => tracing::warn!(error = %e, "roster reload failed, keeping previous roster"),
            }
            *p.moderators_seen.lock() = now;
        }
    }

    /// One scheduler step: expire credentials, run due releases, reload files, save.
    pub fn tick(&self) -> Result<Vec<PublishBatch>, BoardError> {
        self.reload_files();
        self.board().sweep();
        let seen = self.board().alerts().len();
        let released = self.board().tick()?;
        for b in &released {
            tracing::info!(label = %b.label, messages = b.message_ids.len(), "released batch");
        }
        for alert in self.board().alerts().iter().skip(seen) {
            tracing::warn!(message = %alert.message, "operator alert");
        }
        self.persist();
        Ok(released)
    }
}
