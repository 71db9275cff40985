//! The assembled service state.
//!
//! `Board` owns every module, reads time from a [`Clock`], and serializes cross-module
//! operations. Release flips happen under the write lock, so readers see a batch entirely
//! or not at all.

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::{
    AccessError, AccessGate, AccessReceipt, GateConfig, GateState, LoginMailTemplate, Mailer, Session,
    Whitelist, WordLists,
};
use crate::analytics::{AnalyticsError, EventKind, EventLog};
use crate::clock::Clock;
use crate::content::{
    Author, BrowseFilter, Category, ContentError, ContentState, ContentStore, ExportRecord, Message,
    MessageId, MessageKind, Submission, TallyView, Thread, VoteDirection, VoteRecord, DEFAULT_CATEGORIES,
};
use crate::moderation::{
    AuditRecord, ClosedSession, Decision, DecisionInput, DeskState, ModerationDesk, ModerationError,
    ModerationSession, ModerationSessionId, ModeratorId, Resolution, Roster,
};
use crate::release::{OperatorAlert, PublishBatch, ReleaseSchedule, ReleaseScheduler, ScheduleError, SchedulerState};

#[derive(Debug, Error)]
pub enum BoardError {
    #[error(transparent)]
    Access(#[from] AccessError),
    #[error(transparent)]
    Content(#[from] ContentError),
    #[error(transparent)]
    Moderation(#[from] ModerationError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

pub struct BoardConfig {
    pub gate: GateConfig,
    pub template: LoginMailTemplate,
    pub words: WordLists,
    pub schedule: ReleaseSchedule,
    pub categories: Vec<String>,
    pub roster: Roster,
    /// Seeds every RNG for reproducible runs. `None` uses OS entropy.
    pub seed: Option<u64>,
}

impl BoardConfig {
    pub fn new(roster: Roster) -> Self {
        Self {
            gate: GateConfig::default(),
            template: LoginMailTemplate::default(),
            words: WordLists::builtin(),
            schedule: ReleaseSchedule::default(),
            categories: DEFAULT_CATEGORIES.iter().map(|c| c.to_string()).collect(),
            roster,
            seed: None,
        }
    }
}

/// Everything the board persists. Email addresses appear nowhere in it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoardSnapshot {
    pub version: u32,
    pub gate: GateState,
    pub content: ContentState,
    pub moderation: DeskState,
    pub releases: SchedulerState,
    pub events: EventLog,
}

const SNAPSHOT_VERSION: u32 = 1;

/// A worklist entry as shown to the panel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorklistItem {
    pub id: MessageId,
    pub kind: MessageKind,
    pub parent: Option<MessageId>,
    pub category: Option<String>,
    pub title: Option<String>,
    pub body: String,
    pub pseudonym: String,
    pub held: bool,
    pub outcome: Option<Resolution>,
}

struct Inner {
    store: ContentStore,
    desk: ModerationDesk,
    scheduler: ReleaseScheduler,
}

pub struct Board {
    clock: Arc<dyn Clock>,
    mailer: Arc<dyn Mailer>,
    gate: AccessGate,
    inner: RwLock<Inner>,
    events: Mutex<EventLog>,
}

impl Board {
    pub fn new(
        config: BoardConfig,
        whitelist: Whitelist,
        clock: Arc<dyn Clock>,
        mailer: Arc<dyn Mailer>,
    ) -> Result<Self, BoardError> {
        let seed = |offset: u64| config.seed.map(|s| s.wrapping_add(offset));
        let gate = AccessGate::new(config.gate, config.template, config.words, whitelist, config.seed);
        let store = ContentStore::new(&config.categories, seed(1))?;
        let scheduler = ReleaseScheduler::new(config.schedule, clock.now(), seed(2));
        Ok(Self {
            clock,
            mailer,
            gate,
            inner: RwLock::new(Inner {
                store,
                desk: ModerationDesk::new(config.roster),
                scheduler,
            }),
            events: Mutex::new(EventLog::new()),
        })
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn gate(&self) -> &AccessGate {
        &self.gate
    }

    // --- access ---

    pub fn request_access(&self, email: &str) -> Result<AccessReceipt, BoardError> {
        Ok(self.gate.request_access(email, self.mailer.as_ref(), self.now())?)
    }

    pub fn redeem(&self, token: &str) -> Result<Session, BoardError> {
        Ok(self.gate.redeem_token(token, self.now())?)
    }

    pub fn session(&self, session_id: &str) -> Result<Session, BoardError> {
        Ok(self.gate.session(session_id, self.now())?)
    }

    pub fn register_alternate_address(&self, session_id: &str, address: &str) -> Result<bool, BoardError> {
        Ok(self.gate.register_alternate_address(session_id, address, self.now())?)
    }

    pub fn whitelist(&self) -> Whitelist {
        self.gate.whitelist()
    }

    pub fn replace_whitelist(&self, whitelist: Whitelist) {
        self.gate.replace_whitelist(whitelist);
    }

    /// Expires stale tokens and sessions.
    pub fn sweep(&self) {
        self.gate.sweep(self.now());
    }

    // --- content ---

    pub fn categories(&self) -> Vec<Category> {
        self.inner.read().store.categories().to_vec()
    }

    pub fn submit(&self, session_id: &str, submission: Submission) -> Result<Message, BoardError> {
        let now = self.now();
        let session = self.gate.session(session_id, now)?;
        let mut inner = self.inner.write();
        let message = inner.store.submit_message(&session, submission, now)?;
        self.events.lock().record(EventKind::Submission, message.id, now);
        Ok(message)
    }

    pub fn vote(&self, session_id: &str, post: MessageId, direction: VoteDirection) -> Result<TallyView, BoardError> {
        let now = self.now();
        let session = self.gate.session(session_id, now)?;
        let mut inner = self.inner.write();
        let tally = inner.store.cast_vote(&session, post, direction, now)?;
        self.events.lock().record(EventKind::Vote, post, now);
        Ok(tally)
    }

    pub fn browse(&self, filter: &BrowseFilter) -> Result<Vec<(ExportRecord, TallyView)>, BoardError> {
        Ok(self.inner.read().store.browse(filter)?)
    }

    pub fn comment_count(&self, post: MessageId) -> usize {
        self.inner.read().store.published_comment_count(post)
    }

    /// Fetches a thread and logs a view of it.
    pub fn thread(&self, post: MessageId) -> Result<Thread, BoardError> {
        let inner = self.inner.read();
        let thread = inner.store.get_thread(post)?;
        self.events.lock().record(EventKind::View, post, self.now());
        Ok(thread)
    }

    // --- moderation ---

    pub fn roster(&self) -> Roster {
        self.inner.read().desk.roster().clone()
    }

    pub fn set_roster(&self, roster: Roster) {
        *self.inner.write().desk.roster_mut() = roster;
    }

    pub fn add_moderator(&self, id: ModeratorId) -> bool {
        self.inner.write().desk.roster_mut().add(id)
    }

    pub fn remove_moderator(&self, id: &ModeratorId) -> Result<bool, BoardError> {
        Ok(self.inner.write().desk.roster_mut().remove(id)?)
    }

    /// Opens a panel for `target_release`, defaulting to the next release.
    pub fn open_session(
        &self,
        present: BTreeSet<ModeratorId>,
        target_release: Option<DateTime<Utc>>,
    ) -> Result<ModerationSession, BoardError> {
        let now = self.now();
        let mut inner = self.inner.write();
        let Inner { store, desk, scheduler } = &mut *inner;
        let target = target_release.unwrap_or_else(|| scheduler.schedule().next_release(now));
        Ok(desk.open_session(present, target, now, store)?.clone())
    }

    pub fn moderation_session(&self, id: ModerationSessionId) -> Result<ModerationSession, BoardError> {
        Ok(self.inner.read().desk.session(id)?.clone())
    }

    pub fn moderation_sessions(&self) -> Vec<ModerationSession> {
        self.inner.read().desk.sessions().to_vec()
    }

    pub fn worklist(&self, id: ModerationSessionId) -> Result<Vec<WorklistItem>, BoardError> {
        let inner = self.inner.read();
        let session = inner.desk.session(id)?;
        Ok(session
            .worklist
            .iter()
            .filter_map(|mid| inner.store.message(*mid))
            .map(|m| WorklistItem {
                id: m.id,
                kind: m.kind,
                parent: m.parent_post,
                category: m.category.clone(),
                title: m.title.clone(),
                body: m.body.clone(),
                pseudonym: m.author.to_string(),
                held: session.is_held(m.id),
                outcome: session.decision_for(m.id).map(|d| d.outcome),
            })
            .collect())
    }

    pub fn record_decision(
        &self,
        session: ModerationSessionId,
        message: MessageId,
        input: DecisionInput,
    ) -> Result<Decision, BoardError> {
        let now = self.now();
        let mut inner = self.inner.write();
        let Inner { store, desk, .. } = &mut *inner;
        Ok(desk.record_decision(session, message, input, store, now)?)
    }

    /// Closes a session and queues its approvals (and summary) for release.
    pub fn close_session(&self, id: ModerationSessionId) -> Result<(ClosedSession, DateTime<Utc>), BoardError> {
        let now = self.now();
        let mut inner = self.inner.write();
        let Inner { store, desk, scheduler } = &mut *inner;
        let target = desk.session(id)?.target_release;
        let slot = if scheduler.is_pending_slot(target) {
            target
        } else {
            scheduler.schedule().next_release(now.max(scheduler.last_tick()))
        };
        let label = scheduler.schedule().label(slot);
        let closed = desk.close_session(id, &label, store, now)?;
        let used = scheduler.enqueue(slot, now, closed.approved.iter().copied());
        debug_assert_eq!(used, slot);
        Ok((closed, slot))
    }

    // --- releases ---

    pub fn schedule(&self) -> ReleaseSchedule {
        self.inner.read().scheduler.schedule().clone()
    }

    pub fn set_schedule(&self, schedule: ReleaseSchedule) {
        self.inner.write().scheduler.set_schedule(schedule);
    }

    pub fn next_release(&self) -> DateTime<Utc> {
        self.inner.read().scheduler.schedule().next_release(self.now())
    }

    /// Runs every release slot that has come due. A slot whose moderation session is still
    /// open is deferred, never published unmoderated.
    pub fn tick(&self) -> Result<Vec<PublishBatch>, BoardError> {
        let now = self.now();
        let mut inner = self.inner.write();
        let Inner { store, desk, scheduler } = &mut *inner;
        let mut released = Vec::new();
        for slot in scheduler.due_slots(now) {
            if desk.open_session_for(slot).is_some() {
                scheduler.defer(slot, "moderation session still open");
            } else {
                released.push(scheduler.release_slot(slot, store)?);
            }
        }
        scheduler.finish_tick(now);
        Ok(released)
    }

    pub fn batches(&self) -> Vec<PublishBatch> {
        self.inner.read().scheduler.batches().to_vec()
    }

    pub fn alerts(&self) -> Vec<OperatorAlert> {
        self.inner.read().scheduler.alerts().to_vec()
    }

    // --- exports ---

    pub fn export_corpus(&self) -> Vec<ExportRecord> {
        self.inner.read().store.export()
    }

    pub fn export_votes(&self) -> Vec<VoteRecord> {
        self.inner.read().store.vote_records()
    }

    pub fn export_events(&self) -> EventLog {
        self.events.lock().clone()
    }

    pub fn export_audit(&self) -> Vec<AuditRecord> {
        self.inner.read().desk.audit_records()
    }

    /// Distinct member pseudonyms with published contributions.
    pub fn contributors(&self) -> usize {
        self.inner
            .read()
            .store
            .messages()
            .filter(|m| m.is_published())
            .filter_map(|m| match &m.author {
                Author::Member(p) => Some(p.clone()),
                Author::Moderators => None,
            })
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Direct read access to a message in any state. Operator and test use only.
    pub fn message(&self, id: MessageId) -> Option<Message> {
        self.inner.read().store.message(id).cloned()
    }

    // --- persistence ---

    pub fn snapshot(&self) -> BoardSnapshot {
        let inner = self.inner.read();
        BoardSnapshot {
            version: SNAPSHOT_VERSION,
            gate: self.gate.state(),
            content: inner.store.state().clone(),
            moderation: inner.desk.state().clone(),
            releases: inner.scheduler.state().clone(),
            events: self.events.lock().clone(),
        }
    }

    pub fn snapshot_json(&self) -> String {
        serde_json::to_string_pretty(&self.snapshot()).expect("snapshot serializes")
    }

    /// Replaces all persisted state. The roster from the snapshot wins over the configured one.
    pub fn restore(&self, snapshot: BoardSnapshot) -> Result<(), BoardError> {
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(BoardError::Snapshot(format!("unsupported version {}", snapshot.version)));
        }
        let mut inner = self.inner.write();
        self.gate.restore(snapshot.gate);
        inner.store.restore(snapshot.content);
        inner.desk.restore(snapshot.moderation);
        inner.scheduler.restore(snapshot.releases);
        *self.events.lock() = snapshot.events;
        Ok(())
    }

    pub fn restore_json(&self, json: &str) -> Result<(), BoardError> {
        let snapshot: BoardSnapshot =
            serde_json::from_str(json).map_err(|e| BoardError::Snapshot(e.to_string()))?;
        self.restore(snapshot)
    }
}
