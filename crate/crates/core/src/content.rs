//! Categorised posts, comments and votes.
//!
//! Every message starts `Pending` and is invisible to browsing until the release scheduler
//! flips it to `Published`. Rejected messages are erased in place.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::{Pseudonym, Session, SessionId};
use crate::release::PublishLabel;

/// The reserved category moderation summaries are published under.
pub const MODERATORS_CATEGORY: &str = "Moderators";
pub const MAX_BODY_CHARS: usize = 10_000;
pub const MAX_TITLE_CHARS: usize = 200;

pub const DEFAULT_CATEGORIES: &[&str] = &[
    "Building Living",
    "Work Life",
    "Teaching",
    "Research",
    "Pay and Conditions",
    "Other",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContentError {
    #[error("session expired")]
    SessionExpired,
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("category {0:?} is reserved")]
    ReservedCategory(String),
    #[error("duplicate category {0:?}")]
    DuplicateCategory(String),
    #[error("unknown post")]
    UnknownPost,
    #[error("post is not published")]
    PostNotPublished,
    #[error("unknown message")]
    UnknownMessage,
    #[error("message body is empty")]
    EmptyBody,
    #[error("message body exceeds {MAX_BODY_CHARS} characters")]
    BodyTooLong,
    #[error("title exceeds {MAX_TITLE_CHARS} characters")]
    TitleTooLong,
    #[error("message is not awaiting moderation")]
    NotPending,
    #[error("message is not approved")]
    NotApproved,
    #[error("edited body is identical to the submitted body")]
    EditUnchanged,
}

/// Opaque random message identifier, rendered as 16 hex digits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MessageId(u64);

impl MessageId {
    pub fn from_raw(raw: u64) -> Self {
        Self(raw)
    }
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl fmt::Debug for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MessageId({self})")
    }
}

impl FromStr for MessageId {
    type Err = ContentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 16 {
            return Err(ContentError::UnknownMessage);
        }
        u64::from_str_radix(s, 16)
            .map(MessageId)
            .map_err(|_| ContentError::UnknownMessage)
    }
}

impl Serialize for MessageId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MessageId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub reserved: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Post,
    Comment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageState {
    Pending,
    Approved,
    Published,
    RejectedErased,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Author {
    Member(Pseudonym),
    Moderators,
}

impl fmt::Display for Author {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Author::Member(p) => p.fmt(f),
            Author::Moderators => f.write_str(MODERATORS_CATEGORY),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: MessageId,
    pub kind: MessageKind,
    pub parent_post: Option<MessageId>,
    pub category: Option<String>,
    pub title: Option<String>,
    pub body: String,
    pub author: Author,
    pub submitted_at: DateTime<Utc>,
    pub state: MessageState,
    pub moderated_flag: bool,
    pub publish_label: Option<PublishLabel>,
    pub released_at: Option<DateTime<Utc>>,
    /// Position within the release batch.
    pub batch_position: Option<usize>,
    /// Submission sequence number; orders the moderation worklist.
    pub seq: u64,
}

impl Message {
    pub fn is_published(&self) -> bool {
        self.state == MessageState::Published
    }

    fn publish_key(&self) -> (Option<DateTime<Utc>>, Option<usize>) {
        (self.released_at, self.batch_position)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Submission {
    Post {
        category: String,
        title: Option<String>,
        body: String,
    },
    Comment {
        post: MessageId,
        body: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteDirection {
    Up,
    Down,
}

/// Votes on one post. `voters` is internal state and never leaves the store.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteTally {
    pub up: u64,
    pub down: u64,
    pub voters: BTreeMap<SessionId, VoteDirection>,
}

/// The public face of a tally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyView {
    pub post_id: MessageId,
    pub up: u64,
    pub down: u64,
    pub net: i64,
}

impl TallyView {
    fn of(post_id: MessageId, tally: Option<&VoteTally>) -> Self {
        let (up, down) = tally.map(|t| (t.up, t.down)).unwrap_or((0, 0));
        Self {
            post_id,
            up,
            down,
            net: up as i64 - down as i64,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrowseSort {
    #[default]
    Newest,
    Votes,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BrowseFilter {
    pub category: Option<String>,
    pub query: Option<String>,
    pub sort: BrowseSort,
}

/// One published message as it appears in listings, threads and the corpus export.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub id: MessageId,
    pub kind: MessageKind,
    pub parent: Option<MessageId>,
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub pseudonym: String,
    pub publish_label: PublishLabel,
    pub moderated_flag: bool,
    pub body: String,
}

impl ExportRecord {
    fn of(m: &Message) -> Self {
        Self {
            id: m.id,
            kind: m.kind,
            parent: m.parent_post,
            category: m.category.clone(),
            title: m.title.clone(),
            pseudonym: m.author.to_string(),
            publish_label: m
                .publish_label
                .clone()
                .expect("published messages carry a label"),
            moderated_flag: m.moderated_flag,
            body: m.body.clone(),
        }
    }

    pub fn is_moderators_post(&self) -> bool {
        self.pseudonym == MODERATORS_CATEGORY && self.category.as_deref() == Some(MODERATORS_CATEGORY)
    }
}

/// Per-post vote counts as exported for analytics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub post_id: MessageId,
    pub up: u64,
    pub down: u64,
}

impl VoteRecord {
    pub fn net(&self) -> i64 {
        self.up as i64 - self.down as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thread {
    pub post: ExportRecord,
    pub tally: TallyView,
    pub comments: Vec<ExportRecord>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ContentState {
    pub categories: Vec<Category>,
    pub messages: BTreeMap<MessageId, Message>,
    pub tallies: BTreeMap<MessageId, VoteTally>,
    pub next_seq: u64,
}

pub struct ContentStore {
    state: ContentState,
    rng: ChaCha20Rng,
}

impl ContentStore {
    /// Creates a store with the given user categories plus the reserved Moderators category.
    pub fn new<S: AsRef<str>>(categories: &[S], seed: Option<u64>) -> Result<Self, ContentError> {
        let mut list: Vec<Category> = Vec::new();
        for name in categories.iter().map(|c| c.as_ref().trim()) {
            if name == MODERATORS_CATEGORY {
                return Err(ContentError::ReservedCategory(name.to_string()));
            }
            if name.is_empty() || list.iter().any(|c| c.name == name) {
                return Err(ContentError::DuplicateCategory(name.to_string()));
            }
            list.push(Category {
                name: name.to_string(),
                reserved: false,
            });
        }
        list.push(Category {
            name: MODERATORS_CATEGORY.to_string(),
            reserved: true,
        });
        let rng = match seed {
            Some(s) => ChaCha20Rng::seed_from_u64(s),
            None => ChaCha20Rng::from_entropy(),
        };
        Ok(Self {
            state: ContentState {
                categories: list,
                ..ContentState::default()
            },
            rng,
        })
    }

    pub fn state(&self) -> &ContentState {
        &self.state
    }

    pub fn restore(&mut self, state: ContentState) {
        self.state = state;
    }

    pub fn categories(&self) -> &[Category] {
        &self.state.categories
    }

    fn category(&self, name: &str) -> Result<&Category, ContentError> {
        self.state
            .categories
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| ContentError::UnknownCategory(name.to_string()))
    }

    fn fresh_id(&mut self) -> MessageId {
        loop {
            let id = MessageId(self.rng.gen());
            if !self.state.messages.contains_key(&id) {
                return id;
            }
        }
    }

    fn insert(&mut self, mut message: Message) -> Message {
        message.seq = self.state.next_seq;
        self.state.next_seq += 1;
        self.state.messages.insert(message.id, message.clone());
        message
    }

    /// Queues a post or comment for moderation under the session's pseudonym.
    pub fn submit_message(
        &mut self,
        session: &Session,
        submission: Submission,
        now: DateTime<Utc>,
    ) -> Result<Message, ContentError> {
        if !session.is_live(now) {
            return Err(ContentError::SessionExpired);
        }
        let (kind, parent_post, category, title, body) = match submission {
            Submission::Post {
                category,
                title,
                body,
            } => {
                if self.category(&category)?.reserved {
                    return Err(ContentError::ReservedCategory(category));
                }
                let title = title.map(|t| t.trim().to_string()).filter(|t| !t.is_empty());
                if title.as_ref().is_some_and(|t| t.chars().count() > MAX_TITLE_CHARS) {
                    return Err(ContentError::TitleTooLong);
                }
                (MessageKind::Post, None, Some(category), title, body)
            }
            Submission::Comment { post, body } => {
                let parent = self.state.messages.get(&post).ok_or(ContentError::UnknownPost)?;
                if parent.kind != MessageKind::Post {
                    return Err(ContentError::UnknownPost);
                }
                if !parent.is_published() {
                    return Err(ContentError::PostNotPublished);
                }
                (MessageKind::Comment, Some(post), None, None, body)
            }
        };
        validate_body(&body)?;
        let id = self.fresh_id();
        Ok(self.insert(Message {
            id,
            kind,
            parent_post,
            category,
            title,
            body,
            author: Author::Member(session.pseudonym.clone()),
            submitted_at: now,
            state: MessageState::Pending,
            moderated_flag: false,
            publish_label: None,
            released_at: None,
            batch_position: None,
            seq: 0,
        }))
    }

    /// Adds a pre-approved post to the Moderators category.
    pub fn insert_moderators_post(
        &mut self,
        title: String,
        body: String,
        now: DateTime<Utc>,
    ) -> MessageId {
        let id = self.fresh_id();
        self.insert(Message {
            id,
            kind: MessageKind::Post,
            parent_post: None,
            category: Some(MODERATORS_CATEGORY.to_string()),
            title: Some(title),
            body,
            author: Author::Moderators,
            submitted_at: now,
            state: MessageState::Approved,
            moderated_flag: false,
            publish_label: None,
            released_at: None,
            batch_position: None,
            seq: 0,
        })
        .id
    }

    /// Any message regardless of state. For the moderation console and internal checks.
    pub fn message(&self, id: MessageId) -> Option<&Message> {
        self.state.messages.get(&id)
    }

    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.state.messages.values()
    }

    /// Pending messages in submission order.
    pub fn pending_ids(&self) -> Vec<MessageId> {
        let mut pending: Vec<&Message> = self
            .state
            .messages
            .values()
            .filter(|m| m.state == MessageState::Pending)
            .collect();
        pending.sort_by_key(|m| m.seq);
        pending.into_iter().map(|m| m.id).collect()
    }

    /// Moves a pending message to approved, optionally replacing its body with an edit.
    pub fn approve(&mut self, id: MessageId, edited_body: Option<String>) -> Result<(), ContentError> {
        let m = self.state.messages.get_mut(&id).ok_or(ContentError::UnknownMessage)?;
        if m.state != MessageState::Pending {
            return Err(ContentError::NotPending);
        }
        if let Some(body) = edited_body {
            validate_body(&body)?;
            if body == m.body {
                return Err(ContentError::EditUnchanged);
            }
            m.body = body;
            m.moderated_flag = true;
        }
        m.state = MessageState::Approved;
        Ok(())
    }

    /// Permanently erases a pending message's content.
    pub fn erase(&mut self, id: MessageId) -> Result<(), ContentError> {
        let m = self.state.messages.get_mut(&id).ok_or(ContentError::UnknownMessage)?;
        if m.state != MessageState::Pending {
            return Err(ContentError::NotPending);
        }
        m.body = String::new();
        m.title = None;
        m.state = MessageState::RejectedErased;
        Ok(())
    }

    /// Flips a batch of approved messages to published. Either every message flips or none.
    pub fn publish(
        &mut self,
        ordered: &[MessageId],
        label: &PublishLabel,
        released_at: DateTime<Utc>,
    ) -> Result<(), ContentError> {
        for id in ordered {
            let m = self.state.messages.get(id).ok_or(ContentError::UnknownMessage)?;
            if m.state != MessageState::Approved {
                return Err(ContentError::NotApproved);
            }
        }
        for (position, id) in ordered.iter().enumerate() {
            let m = self.state.messages.get_mut(id).expect("checked above");
            m.state = MessageState::Published;
            m.publish_label = Some(label.clone());
            m.released_at = Some(released_at);
            m.batch_position = Some(position);
        }
        Ok(())
    }

    /// Records the session's vote on a published post, replacing any earlier vote it cast.
    pub fn cast_vote(
        &mut self,
        session: &Session,
        post_id: MessageId,
        direction: VoteDirection,
        now: DateTime<Utc>,
    ) -> Result<TallyView, ContentError> {
        if !session.is_live(now) {
            return Err(ContentError::SessionExpired);
        }
        self.published_post(post_id)?;
        let tally = self.state.tallies.entry(post_id).or_default();
        if let Some(previous) = tally.voters.insert(session.id.clone(), direction) {
            match previous {
                VoteDirection::Up => tally.up -= 1,
                VoteDirection::Down => tally.down -= 1,
            }
        }
        match direction {
            VoteDirection::Up => tally.up += 1,
            VoteDirection::Down => tally.down += 1,
        }
        Ok(TallyView::of(post_id, Some(tally)))
    }

    fn published_post(&self, id: MessageId) -> Result<&Message, ContentError> {
        let m = self.state.messages.get(&id).ok_or(ContentError::UnknownPost)?;
        if m.kind != MessageKind::Post {
            return Err(ContentError::UnknownPost);
        }
        if !m.is_published() {
            return Err(ContentError::PostNotPublished);
        }
        Ok(m)
    }

    pub fn tally(&self, post_id: MessageId) -> TallyView {
        TallyView::of(post_id, self.state.tallies.get(&post_id))
    }

    pub fn published_comment_count(&self, post_id: MessageId) -> usize {
        self.state
            .messages
            .values()
            .filter(|m| m.parent_post == Some(post_id) && m.is_published())
            .count()
    }

    /// Published posts matching every supplied facet.
    pub fn browse(&self, filter: &BrowseFilter) -> Result<Vec<(ExportRecord, TallyView)>, ContentError> {
        if let Some(c) = &filter.category {
            self.category(c)?;
        }
        let needle = filter.query.as_ref().map(|q| q.to_lowercase());
        let mut posts: Vec<&Message> = self
            .state
            .messages
            .values()
            .filter(|m| m.kind == MessageKind::Post && m.is_published())
            .filter(|m| filter.category.is_none() || m.category == filter.category)
            .filter(|m| match &needle {
                None => true,
                Some(q) => {
                    m.body.to_lowercase().contains(q)
                        || m.title.as_ref().is_some_and(|t| t.to_lowercase().contains(q))
                }
            })
            .collect();
        let newest = |a: &&Message, b: &&Message| {
            b.released_at
                .cmp(&a.released_at)
                .then(a.batch_position.cmp(&b.batch_position))
                .then(a.id.cmp(&b.id))
        };
        match filter.sort {
            BrowseSort::Newest => posts.sort_by(newest),
            BrowseSort::Votes => posts.sort_by(|a, b| {
                self.tally(b.id)
                    .net
                    .cmp(&self.tally(a.id).net)
                    .then_with(|| newest(a, b))
            }),
        }
        Ok(posts
            .into_iter()
            .map(|m| (ExportRecord::of(m), self.tally(m.id)))
            .collect())
    }

    /// A published post and its published comments, oldest batch first.
    pub fn get_thread(&self, post_id: MessageId) -> Result<Thread, ContentError> {
        let post = self.published_post(post_id)?;
        let mut comments: Vec<&Message> = self
            .state
            .messages
            .values()
            .filter(|m| m.parent_post == Some(post_id) && m.is_published())
            .collect();
        comments.sort_by_key(|m| (m.publish_key(), m.id));
        Ok(Thread {
            post: ExportRecord::of(post),
            tally: self.tally(post_id),
            comments: comments.into_iter().map(ExportRecord::of).collect(),
        })
    }

    /// The published corpus in release order.
    pub fn export(&self) -> Vec<ExportRecord> {
        let mut published: Vec<&Message> =
            self.state.messages.values().filter(|m| m.is_published()).collect();
        published.sort_by_key(|m| (m.publish_key(), m.id));
        published.into_iter().map(ExportRecord::of).collect()
    }

    pub fn vote_records(&self) -> Vec<VoteRecord> {
        self.export()
            .iter()
            .filter(|r| r.kind == MessageKind::Post)
            .map(|r| {
                let t = self.tally(r.id);
                VoteRecord {
                    post_id: r.id,
                    up: t.up,
                    down: t.down,
                }
            })
            .collect()
    }

    /// The `n` most popular published member posts: net votes, then published comment
    /// count, then earliest publication.
    pub fn top_posts(&self, n: usize) -> Vec<(TallyView, usize)> {
        let mut posts: Vec<(&Message, TallyView, usize)> = self
            .state
            .messages
            .values()
            .filter(|m| m.kind == MessageKind::Post && m.is_published())
            .filter(|m| m.author != Author::Moderators)
            .map(|m| (m, self.tally(m.id), self.published_comment_count(m.id)))
            .collect();
        posts.sort_by(|a, b| {
            b.1.net
                .cmp(&a.1.net)
                .then(b.2.cmp(&a.2))
                .then(a.0.publish_key().cmp(&b.0.publish_key()))
                .then(a.0.id.cmp(&b.0.id))
        });
        posts.into_iter().take(n).map(|(_, t, c)| (t, c)).collect()
    }

    /// Distinct member pseudonyms with at least one published message.
    pub fn contributors(&self) -> BTreeSet<String> {
        self.state
            .messages
            .values()
            .filter(|m| m.is_published())
            .filter_map(|m| match &m.author {
                Author::Member(p) => Some(p.to_string()),
                Author::Moderators => None,
            })
            .collect()
    }
}

fn validate_body(body: &str) -> Result<(), ContentError> {
    if body.trim().is_empty() {
        return Err(ContentError::EmptyBody);
    }
    if body.chars().count() > MAX_BODY_CHARS {
        return Err(ContentError::BodyTooLong);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeDelta, TimeZone};

    fn now() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2019, 6, 3, 10, 0, 0).unwrap()
    }

    fn session(name: &str, id: &str) -> Session {
        Session {
            id: SessionId::from(id),
            pseudonym: Pseudonym::try_from(name.to_string()).unwrap(),
            created_at: now(),
            expires_at: now() + TimeDelta::hours(12),
        }
    }

    fn store() -> ContentStore {
        ContentStore::new(DEFAULT_CATEGORIES, Some(1)).unwrap()
    }

    fn post(store: &mut ContentStore, s: &Session, category: &str, body: &str) -> MessageId {
        store
            .submit_message(
                s,
                Submission::Post {
                    category: category.into(),
                    title: None,
                    body: body.into(),
                },
                now(),
            )
            .unwrap()
            .id
    }

    fn label(s: &str) -> PublishLabel {
        serde_json::from_str(&format!("\"{s}\"")).unwrap()
    }

    fn publish(store: &mut ContentStore, ids: &[MessageId], at: DateTime<Utc>, l: &str) {
        for id in ids {
            store.approve(*id, None).unwrap();
        }
        store.publish(ids, &label(l), at).unwrap();
    }

    #[test]
    fn moderators_category_is_reserved() {
        let mut st = store();
        assert!(st.categories().iter().any(|c| c.name == MODERATORS_CATEGORY && c.reserved));
        let s = session("complex chestnut sheep", "s1");
        let err = st
            .submit_message(
                &s,
                Submission::Post {
                    category: MODERATORS_CATEGORY.into(),
                    title: None,
                    body: "hello".into(),
                },
                now(),
            )
            .unwrap_err();
        assert_eq!(err, ContentError::ReservedCategory(MODERATORS_CATEGORY.into()));
        assert!(ContentStore::new(&["Moderators"], None).is_err());
        assert!(ContentStore::new(&["A", "A"], None).is_err());
    }

    #[test]
    fn pending_post_is_invisible() {
        let mut st = store();
        let s = session("complex chestnut sheep", "s1");
        let id = post(&mut st, &s, "Building Living", "heating is broken");
        assert_eq!(st.message(id).unwrap().state, MessageState::Pending);
        assert!(st.browse(&BrowseFilter::default()).unwrap().is_empty());
        assert_eq!(st.get_thread(id).unwrap_err(), ContentError::PostNotPublished);
        assert!(st.export().is_empty());
    }

    #[test]
    fn comment_requires_published_post() {
        let mut st = store();
        let s = session("complex chestnut sheep", "s1");
        let id = post(&mut st, &s, "Building Living", "heating is broken");
        let comment = Submission::Comment {
            post: id,
            body: "agreed".into(),
        };
        assert_eq!(
            st.submit_message(&s, comment.clone(), now()).unwrap_err(),
            ContentError::PostNotPublished
        );
        assert_eq!(
            st.submit_message(
                &s,
                Submission::Comment {
                    post: MessageId(12345),
                    body: "x".into()
                },
                now()
            )
            .unwrap_err(),
            ContentError::UnknownPost
        );
        publish(&mut st, &[id], now(), "03/06/19 PM");
        let c = st.submit_message(&s, comment, now()).unwrap();
        assert_eq!(c.parent_post, Some(id));
        // A comment cannot itself be commented on.
        assert_eq!(
            st.submit_message(
                &s,
                Submission::Comment {
                    post: c.id,
                    body: "x".into()
                },
                now()
            )
            .unwrap_err(),
            ContentError::UnknownPost
        );
    }

    #[test]
    fn submission_validation() {
        let mut st = store();
        let s = session("complex chestnut sheep", "s1");
        let mk = |body: String| Submission::Post {
            category: "Other".into(),
            title: None,
            body,
        };
        assert_eq!(st.submit_message(&s, mk("  ".into()), now()).unwrap_err(), ContentError::EmptyBody);
        assert_eq!(
            st.submit_message(&s, mk("x".repeat(MAX_BODY_CHARS + 1)), now()).unwrap_err(),
            ContentError::BodyTooLong
        );
        assert!(st.submit_message(&s, mk("x".repeat(MAX_BODY_CHARS)), now()).is_ok());
        assert_eq!(
            st.submit_message(
                &s,
                Submission::Post {
                    category: "Nope".into(),
                    title: None,
                    body: "x".into()
                },
                now()
            )
            .unwrap_err(),
            ContentError::UnknownCategory("Nope".into())
        );
        let later = now() + TimeDelta::hours(12);
        assert_eq!(st.submit_message(&s, mk("x".into()), later).unwrap_err(), ContentError::SessionExpired);
    }

    #[test]
    fn vote_replacement() {
        let mut st = store();
        let s = session("complex chestnut sheep", "s1");
        let t = session("quiet amber otter", "s2");
        let id = post(&mut st, &s, "Other", "hello");
        assert_eq!(st.cast_vote(&s, id, VoteDirection::Up, now()).unwrap_err(), ContentError::PostNotPublished);
        publish(&mut st, &[id], now(), "03/06/19 PM");
        let v = st.cast_vote(&s, id, VoteDirection::Up, now()).unwrap();
        assert_eq!((v.up, v.down), (1, 0));
        let v = st.cast_vote(&s, id, VoteDirection::Down, now()).unwrap();
        assert_eq!((v.up, v.down, v.net), (0, 1, -1));
        let v = st.cast_vote(&t, id, VoteDirection::Up, now()).unwrap();
        assert_eq!((v.up, v.down, v.net), (1, 1, 0));
        assert_eq!(st.state().tallies[&id].voters.len(), 2);
    }

    #[test]
    fn comments_are_not_votable() {
        let mut st = store();
        let s = session("complex chestnut sheep", "s1");
        let id = post(&mut st, &s, "Other", "hello");
        publish(&mut st, &[id], now(), "03/06/19 PM");
        let c = st
            .submit_message(&s, Submission::Comment { post: id, body: "c".into() }, now())
            .unwrap()
            .id;
        publish(&mut st, &[c], now() + TimeDelta::hours(12), "04/06/19 AM");
        assert_eq!(st.cast_vote(&s, c, VoteDirection::Up, now()).unwrap_err(), ContentError::UnknownPost);
    }

    #[test]
    fn browse_filters_and_sorts() {
        let mut st = store();
        let s = session("complex chestnut sheep", "s1");
        let a = post(&mut st, &s, "Pay and Conditions", "Pay review is late");
        let b = post(&mut st, &s, "Building Living", "No hot water on floor 2");
        let c = post(&mut st, &s, "Building Living", "Repayment of parking fees");
        let t1 = now();
        let t2 = now() + TimeDelta::hours(8);
        publish(&mut st, &[a, b], t1, "03/06/19 AM");
        publish(&mut st, &[c], t2, "03/06/19 PM");
        st.cast_vote(&s, b, VoteDirection::Up, now()).unwrap();

        let all = st.browse(&BrowseFilter::default()).unwrap();
        let ids: Vec<MessageId> = all.iter().map(|(r, _)| r.id).collect();
        assert_eq!(ids, vec![c, a, b]);

        let by_votes = st
            .browse(&BrowseFilter {
                sort: BrowseSort::Votes,
                ..Default::default()
            })
            .unwrap();
        assert_eq!(by_votes[0].0.id, b);

        let pay = st
            .browse(&BrowseFilter {
                query: Some("PAY".into()),
                ..Default::default()
            })
            .unwrap();
        let mut pay_ids: Vec<MessageId> = pay.iter().map(|(r, _)| r.id).collect();
        pay_ids.sort();
        let mut expected = vec![a, c];
        expected.sort();
        assert_eq!(pay_ids, expected);

        let building = st
            .browse(&BrowseFilter {
                category: Some("Building Living".into()),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(building.len(), 2);
        assert!(st
            .browse(&BrowseFilter {
                category: Some("Nope".into()),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn thread_orders_by_batch() {
        let mut st = store();
        let s = session("complex chestnut sheep", "s1");
        let p = post(&mut st, &s, "Other", "topic");
        publish(&mut st, &[p], now(), "03/06/19 AM");
        assert_eq!(st.get_thread(p).unwrap().comments.len(), 0);
        let mk = |st: &mut ContentStore, body: &str| {
            st.submit_message(&s, Submission::Comment { post: p, body: body.into() }, now())
                .unwrap()
                .id
        };
        let c1 = mk(&mut st, "one");
        let c2 = mk(&mut st, "two");
        let c3 = mk(&mut st, "three");
        st.approve(c1, None).unwrap();
        st.approve(c3, Some("three, edited".into())).unwrap();
        st.publish(&[c3], &label("03/06/19 PM"), now() + TimeDelta::hours(7)).unwrap();
        st.publish(&[c1], &label("04/06/19 AM"), now() + TimeDelta::hours(23)).unwrap();
        let thread = st.get_thread(p).unwrap();
        let ids: Vec<MessageId> = thread.comments.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![c3, c1]);
        assert!(thread.comments[0].moderated_flag);
        assert!(!thread.comments[1].moderated_flag);
        assert_eq!(st.message(c2).unwrap().state, MessageState::Pending);
    }

    #[test]
    fn erase_clears_body() {
        let mut st = store();
        let s = session("complex chestnut sheep", "s1");
        let id = post(&mut st, &s, "Other", "SENTINEL-123 my office is 4.02");
        st.erase(id).unwrap();
        let m = st.message(id).unwrap();
        assert_eq!(m.state, MessageState::RejectedErased);
        assert!(m.body.is_empty());
        assert!(!serde_json::to_string(st.state()).unwrap().contains("SENTINEL-123"));
        assert_eq!(st.approve(id, None).unwrap_err(), ContentError::NotPending);
    }

    #[test]
    fn publish_is_all_or_nothing() {
        let mut st = store();
        let s = session("complex chestnut sheep", "s1");
        let a = post(&mut st, &s, "Other", "a");
        let b = post(&mut st, &s, "Other", "b");
        st.approve(a, None).unwrap();
        assert_eq!(st.publish(&[a, b], &label("03/06/19 AM"), now()).unwrap_err(), ContentError::NotApproved);
        assert_eq!(st.message(a).unwrap().state, MessageState::Approved);
    }

    #[test]
    fn edit_must_change_body() {
        let mut st = store();
        let s = session("complex chestnut sheep", "s1");
        let a = post(&mut st, &s, "Other", "same");
        assert_eq!(st.approve(a, Some("same".into())).unwrap_err(), ContentError::EditUnchanged);
    }

    #[test]
    fn message_id_text_form() {
        let id = MessageId(0xabc);
        assert_eq!(id.to_string(), "0000000000000abc");
        assert_eq!("0000000000000abc".parse::<MessageId>().unwrap(), id);
        assert!("abc".parse::<MessageId>().is_err());
    }
}
