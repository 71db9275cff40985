use std::collections::BTreeMap;
use std::fmt::Write;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ModerationSession, ModerationSessionId, Reason, Resolution};
use crate::content::{ContentStore, MessageId, MessageKind};
use crate::release::PublishLabel;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopPost {
    pub post_id: MessageId,
    pub up: u64,
    pub down: u64,
    pub net: i64,
    pub comments: usize,
}

/// Counts published after every session. Holds no message content.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: ModerationSessionId,
    pub target_release: DateTime<Utc>,
    pub label: PublishLabel,
    pub moderators_present: usize,
    pub reviewed: usize,
    pub published_as_is: usize,
    pub top_posts: Vec<TopPost>,
    pub modified_count: usize,
    pub modified_reasons: BTreeMap<Reason, usize>,
    pub rejected_count: usize,
    pub rejected_posts: usize,
    pub rejected_comments: usize,
    pub rejected_reasons: BTreeMap<Reason, usize>,
}

impl SessionSummary {
    pub fn compute(session: &ModerationSession, label: &PublishLabel, store: &ContentStore) -> Self {
        let mut summary = SessionSummary {
            session_id: session.id,
            target_release: session.target_release,
            label: label.clone(),
            moderators_present: session.moderators_present.len(),
            reviewed: session.decisions.len(),
            published_as_is: 0,
            top_posts: store
                .top_posts(3)
                .into_iter()
                .map(|(t, comments)| TopPost {
                    post_id: t.post_id,
                    up: t.up,
                    down: t.down,
                    net: t.net,
                    comments,
                })
                .collect(),
            modified_count: 0,
            modified_reasons: BTreeMap::new(),
            rejected_count: 0,
            rejected_posts: 0,
            rejected_comments: 0,
            rejected_reasons: BTreeMap::new(),
        };
        for d in &session.decisions {
            let reason = d.rationale.as_ref().map(|r| r.reason).unwrap_or(Reason::Other);
            match d.outcome {
                Resolution::PublishAsIs => summary.published_as_is += 1,
                Resolution::PublishEdited => {
                    summary.modified_count += 1;
                    *summary.modified_reasons.entry(reason).or_default() += 1;
                }
                Resolution::RejectCivility | Resolution::RejectAnonymity => {
                    summary.rejected_count += 1;
                    match d.message_kind {
                        MessageKind::Post => summary.rejected_posts += 1,
                        MessageKind::Comment => summary.rejected_comments += 1,
                    }
                    *summary.rejected_reasons.entry(reason).or_default() += 1;
                }
                Resolution::Held => unreachable!("holds are not final decisions"),
            }
        }
        summary
    }

    pub fn title(&self) -> String {
        format!("Moderation summary {}", self.label)
    }

    /// The plain-text body posted in the Moderators category.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Moderation session for the {} release", self.label);
        let _ = writeln!(out, "Moderators present: {}", self.moderators_present);
        let _ = writeln!(out, "Messages reviewed: {}", self.reviewed);
        let _ = writeln!(out, "Published as submitted: {}", self.published_as_is);
        let _ = writeln!(
            out,
            "Published with edits: {}{}",
            self.modified_count,
            reasons_suffix(&self.modified_reasons)
        );
        let _ = writeln!(
            out,
            "Rejected: {} ({} posts, {} comments){}",
            self.rejected_count,
            self.rejected_posts,
            self.rejected_comments,
            reasons_suffix(&self.rejected_reasons)
        );
        if self.top_posts.is_empty() {
            let _ = writeln!(out, "Most popular posts: none yet");
        } else {
            let _ = writeln!(out, "Most popular posts:");
            for (i, p) in self.top_posts.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{}. post {} (net {:+}, {} comments)",
                    i + 1,
                    p.post_id,
                    p.net,
                    p.comments
                );
            }
        }
        out
    }
}

fn reasons_suffix(reasons: &BTreeMap<Reason, usize>) -> String {
    if reasons.is_empty() {
        return String::new();
    }
    let parts: Vec<String> = reasons
        .iter()
        .map(|(r, n)| format!("{}: {n}", r.label()))
        .collect();
    format!("; {}", parts.join(", "))
}
