use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ModerationError, ModeratorId};

/// Smallest panel that may decide anything.
pub const MIN_PANEL: usize = 3;

/// A moderator's vote on one message. `Challenge` supports the case raised against it
/// (an edit, or a removal); `Approve` supports publishing it, in edited form when an edit
/// is on the table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vote {
    Approve,
    Challenge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengeKind {
    None,
    Edit,
    Civility,
    Anonymity,
}

impl ChallengeKind {
    pub const ALL: [ChallengeKind; 4] = [
        ChallengeKind::None,
        ChallengeKind::Edit,
        ChallengeKind::Civility,
        ChallengeKind::Anonymity,
    ];
}

/// Whether the message has already been held once in this session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Round {
    First,
    AfterHold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    PublishAsIs,
    PublishEdited,
    RejectCivility,
    RejectAnonymity,
    Held,
}

impl Resolution {
    pub fn publishes(self) -> bool {
        matches!(self, Resolution::PublishAsIs | Resolution::PublishEdited)
    }

    pub fn rejects(self) -> bool {
        matches!(self, Resolution::RejectCivility | Resolution::RejectAnonymity)
    }
}

/// Decides a message from the panel's votes.
///
/// * No challenge publishes as is.
/// * An edit publishes in edited form on a strict majority of approvals.
/// * A civility challenge removes on a strict majority of challenges and publishes as is
///   on a strict majority of approvals.
/// * An anonymity challenge removes only if every voter challenges.
///
/// Anything short of that is held on the first round. After a hold, unanimous anonymity
/// challenges still remove, a strict approval majority publishes, and everything else is
/// rejected on civility grounds.
pub fn resolve(
    votes: &BTreeMap<ModeratorId, Vote>,
    challenge: ChallengeKind,
    round: Round,
) -> Result<Resolution, ModerationError> {
    let panel = votes.len();
    if panel < MIN_PANEL {
        return Err(ModerationError::QuorumTooSmall(panel));
    }
    let approvals = votes.values().filter(|v| **v == Vote::Approve).count();
    let challenges = panel - approvals;
    if (challenge == ChallengeKind::None) != (challenges == 0) {
        return Err(ModerationError::InconsistentVotes);
    }
    let approve_majority = 2 * approvals > panel;
    let challenge_majority = 2 * challenges > panel;
    let undecided = match round {
        Round::First => Resolution::Held,
        Round::AfterHold => Resolution::RejectCivility,
    };

    Ok(match challenge {
        ChallengeKind::None => Resolution::PublishAsIs,
        ChallengeKind::Edit if approve_majority => Resolution::PublishEdited,
        ChallengeKind::Edit => undecided,
        ChallengeKind::Civility if challenge_majority => Resolution::RejectCivility,
        ChallengeKind::Civility if approve_majority => Resolution::PublishAsIs,
        ChallengeKind::Civility => undecided,
        ChallengeKind::Anonymity if challenges == panel => Resolution::RejectAnonymity,
        ChallengeKind::Anonymity => match round {
            Round::First => Resolution::Held,
            Round::AfterHold if approve_majority => Resolution::PublishAsIs,
            Round::AfterHold => Resolution::RejectCivility,
        },
    })
}
