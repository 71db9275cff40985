//! Quorum pre-moderation.
//!
//! A session of at least three moderators takes a snapshot of the pending queue, decides
//! every message in it, and closes with a transparency summary that is itself published in
//! the Moderators category. Rejected messages are erased as soon as they are decided.

mod resolve;
mod summary;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{ContentError, ContentStore, MessageId, MessageKind};
use crate::release::PublishLabel;

pub use resolve::{resolve, ChallengeKind, Resolution, Round, Vote, MIN_PANEL};
pub use summary::{SessionSummary, TopPost};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModerationError {
    #[error("a moderation panel needs at least {MIN_PANEL} moderators, got {0}")]
    QuorumTooSmall(usize),
    #[error("challenge kind does not match the votes")]
    InconsistentVotes,
    #[error("moderator {0} is not on the roster")]
    UnknownModerator(String),
    #[error("moderator {0} is not present in this session")]
    NotPresent(String),
    #[error("invalid moderator id {0:?}")]
    InvalidModeratorId(String),
    #[error("a session for this release is already open")]
    DuplicateSession,
    #[error("unknown moderation session")]
    UnknownSession,
    #[error("moderation session is closed")]
    SessionClosed,
    #[error("message is not in this session's worklist")]
    NotInWorklist,
    #[error("message already decided")]
    AlreadyDecided,
    #[error("{0} message(s) still undecided")]
    Undecided(usize),
    #[error("a rationale is required for this outcome")]
    RationaleRequired,
    #[error("an edited body is required to publish with edits")]
    EditRequired,
    #[error("an edited body was supplied but the outcome does not publish an edit")]
    UnexpectedEdit,
    #[error("removing this moderator would leave fewer than {MIN_PANEL} on the roster")]
    RosterFloor,
    #[error(transparent)]
    Content(#[from] ContentError),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModeratorId(String);

impl ModeratorId {
    pub fn new(id: &str) -> Result<Self, ModerationError> {
        let valid = !id.is_empty()
            && id.len() <= 64
            && id
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_' || b == b'.');
        if valid {
            Ok(Self(id.to_string()))
        } else {
            Err(ModerationError::InvalidModeratorId(id.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ModeratorId {
    type Error = ModerationError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(&value)
    }
}

impl From<ModeratorId> for String {
    fn from(id: ModeratorId) -> Self {
        id.0
    }
}

impl fmt::Display for ModeratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ModeratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModeratorId({})", self.0)
    }
}

/// The moderators allowed to sit on a panel. Public; never below [`MIN_PANEL`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roster {
    members: BTreeSet<ModeratorId>,
}

impl Roster {
    pub fn new(members: impl IntoIterator<Item = ModeratorId>) -> Result<Self, ModerationError> {
        let members: BTreeSet<ModeratorId> = members.into_iter().collect();
        if members.len() < MIN_PANEL {
            return Err(ModerationError::QuorumTooSmall(members.len()));
        }
        Ok(Self { members })
    }

    pub fn contains(&self, id: &ModeratorId) -> bool {
        self.members.contains(id)
    }

    pub fn members(&self) -> impl Iterator<Item = &ModeratorId> {
        self.members.iter()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn add(&mut self, id: ModeratorId) -> bool {
        self.members.insert(id)
    }

    pub fn remove(&mut self, id: &ModeratorId) -> Result<bool, ModerationError> {
        if !self.members.contains(id) {
            return Ok(false);
        }
        if self.members.len() <= MIN_PANEL {
            return Err(ModerationError::RosterFloor);
        }
        Ok(self.members.remove(id))
    }
}

/// Enumerated reasons for modifying or rejecting a message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Typos,
    Formatting,
    Clarification,
    InappropriateLanguage,
    AuthorIdentifiable,
    SubjectIdentifiable,
    Incivility,
    Other,
}

impl Reason {
    pub fn label(self) -> &'static str {
        match self {
            Reason::Typos => "typos and grammar",
            Reason::Formatting => "formatting",
            Reason::Clarification => "clarification",
            Reason::InappropriateLanguage => "inappropriate language",
            Reason::AuthorIdentifiable => "author identifiable",
            Reason::SubjectIdentifiable => "subject identifiable",
            Reason::Incivility => "incivility",
            Reason::Other => "other",
        }
    }
}

/// Why a message was edited, held or rejected. Never quotes the message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationale {
    pub reason: Reason,
    pub note: String,
}

impl Rationale {
    pub fn new(reason: Reason, note: impl Into<String>) -> Self {
        Self {
            reason,
            note: note.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub message_id: MessageId,
    pub message_kind: MessageKind,
    pub outcome: Resolution,
    pub challenge: ChallengeKind,
    pub round: Round,
    pub votes: BTreeMap<ModeratorId, Vote>,
    pub rationale: Option<Rationale>,
    pub decided_at: DateTime<Utc>,
}

impl Decision {
    pub fn approvals(&self) -> usize {
        self.votes.values().filter(|v| **v == Vote::Approve).count()
    }
}

/// What the panel submits for one message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionInput {
    pub votes: BTreeMap<ModeratorId, Vote>,
    pub challenge: ChallengeKind,
    pub final_body: Option<String>,
    pub rationale: Option<Rationale>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModerationSessionId(pub u64);

impl fmt::Display for ModerationSessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModerationSession {
    pub id: ModerationSessionId,
    pub target_release: DateTime<Utc>,
    pub moderators_present: BTreeSet<ModeratorId>,
    pub worklist: Vec<MessageId>,
    /// Final decisions, one per worklist message once the session closes.
    pub decisions: Vec<Decision>,
    /// First-round holds that were sent back for another look.
    pub holds: Vec<Decision>,
    pub state: SessionState,
    pub opened_at: DateTime<Utc>,
    pub closed_at: Option<DateTime<Utc>>,
    pub summary_post: Option<MessageId>,
    pub summary: Option<SessionSummary>,
}

impl ModerationSession {
    pub fn is_open(&self) -> bool {
        self.state == SessionState::Open
    }

    pub fn decision_for(&self, id: MessageId) -> Option<&Decision> {
        self.decisions.iter().find(|d| d.message_id == id)
    }

    pub fn is_held(&self, id: MessageId) -> bool {
        self.holds.iter().any(|d| d.message_id == id)
    }

    pub fn undecided(&self) -> Vec<MessageId> {
        self.worklist
            .iter()
            .copied()
            .filter(|id| self.decision_for(*id).is_none())
            .collect()
    }
}

/// Result of closing a session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedSession {
    pub summary: SessionSummary,
    pub summary_post: MessageId,
    /// Approved messages in approval order, summary post last.
    pub approved: Vec<MessageId>,
}

/// One line of the audit export. Votes are counted, not attributed, and no message
/// content appears.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub session_id: ModerationSessionId,
    pub target_release: DateTime<Utc>,
    pub message_id: MessageId,
    pub message_kind: MessageKind,
    pub round: Round,
    pub challenge: ChallengeKind,
    pub outcome: Resolution,
    pub approvals: usize,
    pub challenges: usize,
    pub reason: Option<Reason>,
    pub note: Option<String>,
    pub decided_at: DateTime<Utc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeskState {
    pub roster: Roster,
    pub sessions: Vec<ModerationSession>,
}

pub struct ModerationDesk {
    state: DeskState,
}

impl ModerationDesk {
    pub fn new(roster: Roster) -> Self {
        Self {
            state: DeskState {
                roster,
                sessions: Vec::new(),
            },
        }
    }

    pub fn state(&self) -> &DeskState {
        &self.state
    }

    pub fn restore(&mut self, state: DeskState) {
        self.state = state;
    }

    pub fn roster(&self) -> &Roster {
        &self.state.roster
    }

    pub fn roster_mut(&mut self) -> &mut Roster {
        &mut self.state.roster
    }

    pub fn sessions(&self) -> &[ModerationSession] {
        &self.state.sessions
    }

    pub fn session(&self, id: ModerationSessionId) -> Result<&ModerationSession, ModerationError> {
        self.state
            .sessions
            .iter()
            .find(|s| s.id == id)
            .ok_or(ModerationError::UnknownSession)
    }

    fn session_mut(&mut self, id: ModerationSessionId) -> Result<&mut ModerationSession, ModerationError> {
        self.state
            .sessions
            .iter_mut()
            .find(|s| s.id == id)
            .ok_or(ModerationError::UnknownSession)
    }

    pub fn open_session_for(&self, release: DateTime<Utc>) -> Option<&ModerationSession> {
        self.state
            .sessions
            .iter()
            .find(|s| s.is_open() && s.target_release == release)
    }

    /// Opens a session for `target_release` whose worklist is everything pending and not
    /// already claimed by another open session.
    pub fn open_session(
        &mut self,
        present: BTreeSet<ModeratorId>,
        target_release: DateTime<Utc>,
        now: DateTime<Utc>,
        store: &ContentStore,
    ) -> Result<&ModerationSession, ModerationError> {
        if present.len() < MIN_PANEL {
            return Err(ModerationError::QuorumTooSmall(present.len()));
        }
        if let Some(stranger) = present.iter().find(|m| !self.state.roster.contains(m)) {
            return Err(ModerationError::UnknownModerator(stranger.to_string()));
        }
        if self.open_session_for(target_release).is_some() {
            return Err(ModerationError::DuplicateSession);
        }
        let claimed: BTreeSet<MessageId> = self
            .state
            .sessions
            .iter()
            .filter(|s| s.is_open())
            .flat_map(|s| s.worklist.iter().copied())
            .collect();
        let worklist = store
            .pending_ids()
            .into_iter()
            .filter(|id| !claimed.contains(id))
            .collect();
        let id = ModerationSessionId(self.state.sessions.len() as u64 + 1);
        self.state.sessions.push(ModerationSession {
            id,
            target_release,
            moderators_present: present,
            worklist,
            decisions: Vec::new(),
            holds: Vec::new(),
            state: SessionState::Open,
            opened_at: now,
            closed_at: None,
            summary_post: None,
            summary: None,
        });
        Ok(self.state.sessions.last().expect("just pushed"))
    }

    /// Resolves one worklist message and applies the outcome to the store.
    pub fn record_decision(
        &mut self,
        session_id: ModerationSessionId,
        message_id: MessageId,
        input: DecisionInput,
        store: &mut ContentStore,
        now: DateTime<Utc>,
    ) -> Result<Decision, ModerationError> {
        let session = self.session_mut(session_id)?;
        if !session.is_open() {
            return Err(ModerationError::SessionClosed);
        }
        if !session.worklist.contains(&message_id) {
            return Err(ModerationError::NotInWorklist);
        }
        if session.decision_for(message_id).is_some() {
            return Err(ModerationError::AlreadyDecided);
        }
        if let Some(absent) = input
            .votes
            .keys()
            .find(|m| !session.moderators_present.contains(*m))
        {
            return Err(ModerationError::NotPresent(absent.to_string()));
        }
        let round = if session.is_held(message_id) {
            Round::AfterHold
        } else {
            Round::First
        };
        let outcome = resolve(&input.votes, input.challenge, round)?;

        match (&input.final_body, outcome) {
            (None, Resolution::PublishEdited) => return Err(ModerationError::EditRequired),
            (Some(_), o) if o != Resolution::PublishEdited => return Err(ModerationError::UnexpectedEdit),
            _ => {}
        }
        let rationale = match input.rationale {
            Some(r) if !r.note.trim().is_empty() => Some(r),
            _ if outcome == Resolution::PublishAsIs => None,
            _ => return Err(ModerationError::RationaleRequired),
        };

        let kind = store
            .message(message_id)
            .ok_or(ContentError::UnknownMessage)?
            .kind;
        match outcome {
            Resolution::PublishAsIs => store.approve(message_id, None)?,
            Resolution::PublishEdited => store.approve(message_id, input.final_body)?,
            Resolution::RejectCivility | Resolution::RejectAnonymity => store.erase(message_id)?,
            Resolution::Held => {}
        }

        let decision = Decision {
            message_id,
            message_kind: kind,
            outcome,
            challenge: input.challenge,
            round,
            votes: input.votes,
            rationale,
            decided_at: now,
        };
        if outcome == Resolution::Held {
            session.holds.push(decision.clone());
        } else {
            session.decisions.push(decision.clone());
        }
        Ok(decision)
    }

    /// Closes a fully decided session, publishing its summary into the Moderators category.
    pub fn close_session(
        &mut self,
        session_id: ModerationSessionId,
        label: &PublishLabel,
        store: &mut ContentStore,
        now: DateTime<Utc>,
    ) -> Result<ClosedSession, ModerationError> {
        let session = self.session(session_id)?;
        if !session.is_open() {
            return Err(ModerationError::SessionClosed);
        }
        let undecided = session.undecided().len();
        if undecided > 0 {
            return Err(ModerationError::Undecided(undecided));
        }
        let summary = SessionSummary::compute(session, label, store);
        let post = store.insert_moderators_post(summary.title(), summary.render(), now);

        let session = self.session_mut(session_id)?;
        let mut approved: Vec<MessageId> = session
            .decisions
            .iter()
            .filter(|d| d.outcome.publishes())
            .map(|d| d.message_id)
            .collect();
        approved.push(post);
        session.state = SessionState::Closed;
        session.closed_at = Some(now);
        session.summary_post = Some(post);
        session.summary = Some(summary.clone());
        Ok(ClosedSession {
            summary,
            summary_post: post,
            approved,
        })
    }

    pub fn audit_records(&self) -> Vec<AuditRecord> {
        let mut out = Vec::new();
        for s in &self.state.sessions {
            let mut all: Vec<&Decision> = s.holds.iter().chain(s.decisions.iter()).collect();
            all.sort_by_key(|d| d.decided_at);
            for d in all {
                let approvals = d.approvals();
                out.push(AuditRecord {
                    session_id: s.id,
                    target_release: s.target_release,
                    message_id: d.message_id,
                    message_kind: d.message_kind,
                    round: d.round,
                    challenge: d.challenge,
                    outcome: d.outcome,
                    approvals,
                    challenges: d.votes.len() - approvals,
                    reason: d.rationale.as_ref().map(|r| r.reason),
                    note: d.rationale.as_ref().map(|r| r.note.clone()),
                    decided_at: d.decided_at,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access::{Pseudonym, Session, SessionId};
    use crate::content::{MessageState, Submission, DEFAULT_CATEGORIES, MODERATORS_CATEGORY};
    use chrono::{TimeDelta, TimeZone};

    fn now() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2019, 6, 3, 7, 0, 0).unwrap()
    }

    fn mods(n: usize) -> BTreeSet<ModeratorId> {
        (0..n).map(|i| ModeratorId::new(&format!("m{i}")).unwrap()).collect()
    }

    fn desk() -> ModerationDesk {
        ModerationDesk::new(Roster::new(mods(6)).unwrap())
    }

    fn votes(v: &[Vote]) -> BTreeMap<ModeratorId, Vote> {
        mods(v.len()).into_iter().zip(v.iter().copied()).collect()
    }

    fn label() -> PublishLabel {
        crate::release::format_label(now() + TimeDelta::hours(1), chrono_tz::UTC)
    }

    fn setup(bodies: &[&str]) -> (ContentStore, Vec<MessageId>) {
        let mut store = ContentStore::new(DEFAULT_CATEGORIES, Some(4)).unwrap();
        let s = Session {
            id: SessionId::from("s"),
            pseudonym: Pseudonym::try_from("complex chestnut sheep".to_string()).unwrap(),
            created_at: now(),
            expires_at: now() + TimeDelta::hours(12),
        };
        let ids = bodies
            .iter()
            .map(|b| {
                store
                    .submit_message(
                        &s,
                        Submission::Post {
                            category: "Other".into(),
                            title: None,
                            body: b.to_string(),
                        },
                        now(),
                    )
                    .unwrap()
                    .id
            })
            .collect();
        (store, ids)
    }

    use Vote::{Approve as A, Challenge as C};

    fn as_is() -> DecisionInput {
        DecisionInput {
            votes: votes(&[A, A, A, A]),
            challenge: ChallengeKind::None,
            final_body: None,
            rationale: None,
        }
    }

    #[test]
    fn open_requires_quorum_and_roster() {
        let (store, _) = setup(&[]);
        let mut d = desk();
        let target = now() + TimeDelta::hours(1);
        assert_eq!(
            d.open_session(mods(2), target, now(), &store).unwrap_err(),
            ModerationError::QuorumTooSmall(2)
        );
        let mut strangers = mods(3);
        strangers.insert(ModeratorId::new("zed").unwrap());
        assert!(matches!(
            d.open_session(strangers, target, now(), &store),
            Err(ModerationError::UnknownModerator(_))
        ));
        assert!(d.open_session(mods(4), target, now(), &store).is_ok());
        assert_eq!(
            d.open_session(mods(3), target, now(), &store).unwrap_err(),
            ModerationError::DuplicateSession
        );
    }

    #[test]
    fn worklist_snapshot() {
        let (mut store, ids) = setup(&["a", "b"]);
        let mut d = desk();
        let sid = d.open_session(mods(3), now() + TimeDelta::hours(1), now(), &store).unwrap().id;
        assert_eq!(d.session(sid).unwrap().worklist, ids);
        // Later submissions wait for the next session.
        let s = Session {
            id: SessionId::from("s2"),
            pseudonym: Pseudonym::try_from("quiet amber otter".to_string()).unwrap(),
            created_at: now(),
            expires_at: now() + TimeDelta::hours(12),
        };
        let late = store
            .submit_message(&s, Submission::Post { category: "Other".into(), title: None, body: "c".into() }, now())
            .unwrap()
            .id;
        assert!(!d.session(sid).unwrap().worklist.contains(&late));
        assert_eq!(
            d.record_decision(sid, late, as_is(), &mut store, now()).unwrap_err(),
            ModerationError::NotInWorklist
        );
    }

    #[test]
    fn edit_sets_moderated_flag() {
        let (mut store, ids) = setup(&["teh heating is broken"]);
        let mut d = desk();
        let sid = d.open_session(mods(4), now() + TimeDelta::hours(1), now(), &store).unwrap().id;
        let dec = d
            .record_decision(
                sid,
                ids[0],
                DecisionInput {
                    votes: votes(&[A, A, A, C]),
                    challenge: ChallengeKind::Edit,
                    final_body: Some("the heating is broken".into()),
                    rationale: Some(Rationale::new(Reason::Typos, "typo fixed")),
                },
                &mut store,
                now(),
            )
            .unwrap();
        assert_eq!(dec.outcome, Resolution::PublishEdited);
        let m = store.message(ids[0]).unwrap();
        assert_eq!(m.state, MessageState::Approved);
        assert!(m.moderated_flag);
        assert_eq!(m.body, "the heating is broken");
        assert_eq!(
            d.record_decision(sid, ids[0], as_is(), &mut store, now()).unwrap_err(),
            ModerationError::AlreadyDecided
        );
    }

    #[test]
    fn anonymity_rejection_erases_but_keeps_rationale() {
        let (mut store, ids) = setup(&["SENTINEL-XYZ I sit in room 4.02"]);
        let mut d = desk();
        let sid = d.open_session(mods(3), now() + TimeDelta::hours(1), now(), &store).unwrap().id;
        let dec = d
            .record_decision(
                sid,
                ids[0],
                DecisionInput {
                    votes: votes(&[C, C, C]),
                    challenge: ChallengeKind::Anonymity,
                    final_body: None,
                    rationale: Some(Rationale::new(Reason::AuthorIdentifiable, "identifies author's office")),
                },
                &mut store,
                now(),
            )
            .unwrap();
        assert_eq!(dec.outcome, Resolution::RejectAnonymity);
        assert_eq!(store.message(ids[0]).unwrap().state, MessageState::RejectedErased);
        let persisted = serde_json::to_string(&(store.state(), d.state())).unwrap();
        assert!(!persisted.contains("SENTINEL-XYZ"));
        assert!(persisted.contains("identifies author's office"));
    }

    #[test]
    fn hold_then_second_round() {
        let (mut store, ids) = setup(&["names the head of school"]);
        let mut d = desk();
        let sid = d.open_session(mods(3), now() + TimeDelta::hours(1), now(), &store).unwrap().id;
        let anon = |v: &[Vote]| DecisionInput {
            votes: votes(v),
            challenge: ChallengeKind::Anonymity,
            final_body: None,
            rationale: Some(Rationale::new(Reason::SubjectIdentifiable, "names a person")),
        };
        let first = d.record_decision(sid, ids[0], anon(&[C, C, A]), &mut store, now()).unwrap();
        assert_eq!(first.outcome, Resolution::Held);
        assert_eq!(store.message(ids[0]).unwrap().state, MessageState::Pending);
        assert_eq!(d.session(sid).unwrap().undecided(), ids);
        let second = d
            .record_decision(
                sid,
                ids[0],
                DecisionInput {
                    votes: votes(&[A, A, C]),
                    challenge: ChallengeKind::Edit,
                    final_body: Some("names a senior manager".into()),
                    rationale: Some(Rationale::new(Reason::SubjectIdentifiable, "name removed")),
                },
                &mut store,
                now(),
            )
            .unwrap();
        assert_eq!(second.round, Round::AfterHold);
        assert_eq!(second.outcome, Resolution::PublishEdited);
    }

    #[test]
    fn input_validation() {
        let (mut store, ids) = setup(&["x"]);
        let mut d = desk();
        let sid = d.open_session(mods(3), now() + TimeDelta::hours(1), now(), &store).unwrap().id;
        let edit_no_body = DecisionInput {
            votes: votes(&[A, A, C]),
            challenge: ChallengeKind::Edit,
            final_body: None,
            rationale: Some(Rationale::new(Reason::Typos, "t")),
        };
        assert_eq!(
            d.record_decision(sid, ids[0], edit_no_body, &mut store, now()).unwrap_err(),
            ModerationError::EditRequired
        );
        let reject_no_reason = DecisionInput {
            votes: votes(&[C, C, A]),
            challenge: ChallengeKind::Civility,
            final_body: None,
            rationale: None,
        };
        assert_eq!(
            d.record_decision(sid, ids[0], reject_no_reason, &mut store, now()).unwrap_err(),
            ModerationError::RationaleRequired
        );
        let absent = DecisionInput {
            votes: votes(&[A, A, A, A]),
            ..as_is()
        };
        assert!(matches!(
            d.record_decision(sid, ids[0], absent, &mut store, now()),
            Err(ModerationError::NotPresent(_))
        ));
        assert_eq!(store.message(ids[0]).unwrap().state, MessageState::Pending);
    }

    #[test]
    fn close_requires_all_decided() {
        let (mut store, ids) = setup(&["a", "b"]);
        let mut d = desk();
        let sid = d.open_session(mods(4), now() + TimeDelta::hours(1), now(), &store).unwrap().id;
        d.record_decision(sid, ids[0], as_is(), &mut store, now()).unwrap();
        assert_eq!(
            d.close_session(sid, &label(), &mut store, now()).unwrap_err(),
            ModerationError::Undecided(1)
        );
        d.record_decision(sid, ids[1], as_is(), &mut store, now()).unwrap();
        let closed = d.close_session(sid, &label(), &mut store, now()).unwrap();
        assert_eq!(closed.approved.len(), 3);
        assert_eq!(closed.approved[..2], ids[..]);
        let summary_post = store.message(closed.summary_post).unwrap();
        assert_eq!(summary_post.category.as_deref(), Some(MODERATORS_CATEGORY));
        assert_eq!(summary_post.state, MessageState::Approved);
        assert_eq!(
            d.record_decision(sid, ids[0], as_is(), &mut store, now()).unwrap_err(),
            ModerationError::SessionClosed
        );
        assert_eq!(
            d.close_session(sid, &label(), &mut store, now()).unwrap_err(),
            ModerationError::SessionClosed
        );
    }

    #[test]
    fn empty_session_still_summarised() {
        let (mut store, _) = setup(&[]);
        let mut d = desk();
        let sid = d.open_session(mods(3), now() + TimeDelta::hours(1), now(), &store).unwrap().id;
        let closed = d.close_session(sid, &label(), &mut store, now()).unwrap();
        assert_eq!(closed.summary.rejected_count, 0);
        assert_eq!(closed.summary.modified_count, 0);
        assert_eq!(closed.approved, vec![closed.summary_post]);
    }

    #[test]
    fn roster_floor() {
        let mut r = Roster::new(mods(4)).unwrap();
        assert!(r.remove(&ModeratorId::new("m0").unwrap()).unwrap());
        assert_eq!(r.remove(&ModeratorId::new("m1").unwrap()).unwrap_err(), ModerationError::RosterFloor);
        assert!(Roster::new(mods(2)).is_err());
        assert!(ModeratorId::new("Bad Id").is_err());
    }
}
