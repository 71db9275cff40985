//! Exhaustive check of `resolve` against a separately written decision table.

use std::collections::BTreeMap;

use slowvoice_core::moderation::{
    resolve, ChallengeKind, ModerationError, ModeratorId, Resolution, Round, Vote,
};

use ChallengeKind as K;
use Resolution as R;

/// Outcome from approval and challenge shares, with no shared code.
fn oracle(n: usize, approvals: usize, kind: K, round: Round) -> Result<R, ModerationError> {
    if n < 3 {
        return Err(ModerationError::QuorumTooSmall(n));
    }
    let challenges = n - approvals;
    let share_a = approvals as f64 / n as f64;
    let share_c = challenges as f64 / n as f64;
    let stalled = if round == Round::First { R::Held } else { R::RejectCivility };
    match kind {
        K::None if challenges == 0 => Ok(R::PublishAsIs),
        K::None => Err(ModerationError::InconsistentVotes),
        _ if challenges == 0 => Err(ModerationError::InconsistentVotes),
        K::Edit => Ok(if share_a > 0.5 { R::PublishEdited } else { stalled }),
        K::Civility => Ok(if share_c > 0.5 {
            R::RejectCivility
        } else if share_a > 0.5 {
            R::PublishAsIs
        } else {
            stalled
        }),
        K::Anonymity => Ok(if approvals == 0 {
            R::RejectAnonymity
        } else if round == Round::First {
            R::Held
        } else if share_a > 0.5 {
            R::PublishAsIs
        } else {
            R::RejectCivility
        }),
    }
}

fn panel(mask: u32, n: usize) -> BTreeMap<ModeratorId, Vote> {
    (0..n)
        .map(|i| {
            let vote = if mask & (1 << i) != 0 { Vote::Challenge } else { Vote::Approve };
            (ModeratorId::new(&format!("mod-{i}")).unwrap(), vote)
        })
        .collect()
}

#[test]
fn matches_brute_force_for_panels_of_three_to_five() {
    let mut checked = 0;
    for n in 3..=5usize {
        for mask in 0..(1u32 << n) {
            let votes = panel(mask, n);
            let approvals = n - mask.count_ones() as usize;
            for kind in K::ALL {
                for round in [Round::First, Round::AfterHold] {
                    let got = resolve(&votes, kind, round);
                    let want = oracle(n, approvals, kind, round);
                    assert_eq!(
                        format!("{got:?}"),
                        format!("{want:?}"),
                        "n={n} mask={mask:b} kind={kind:?} round={round:?}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert_eq!(checked, (8 + 16 + 32) * 4 * 2);
}

#[test]
fn panels_below_three_never_decide() {
    for n in 0..3usize {
        for mask in 0..(1u32 << n) {
            for kind in K::ALL {
                assert!(matches!(
                    resolve(&panel(mask, n), kind, Round::First),
                    Err(ModerationError::QuorumTooSmall(m)) if m == n
                ));
            }
        }
    }
}

// Frozen rows: approvals 0..=n for each panel size, first round.
#[test]
fn frozen_first_round_tables() {
    let row = |n: usize, kind: K| -> Vec<Option<R>> {
        (0..=n)
            .map(|a| {
                let mask = (1u32 << (n - a)) - 1;
                resolve(&panel(mask, n), kind, Round::First).ok()
            })
            .collect()
    };
    use R::*;
    assert_eq!(row(3, K::Anonymity), [Some(RejectAnonymity), Some(Held), Some(Held), None]);
    assert_eq!(row(4, K::Anonymity), [Some(RejectAnonymity), Some(Held), Some(Held), Some(Held), None]);
    assert_eq!(
        row(5, K::Anonymity),
        [Some(RejectAnonymity), Some(Held), Some(Held), Some(Held), Some(Held), None]
    );
    assert_eq!(
        row(4, K::Civility),
        [Some(RejectCivility), Some(RejectCivility), Some(Held), Some(PublishAsIs), None]
    );
    assert_eq!(
        row(5, K::Edit),
        [Some(Held), Some(Held), Some(Held), Some(PublishEdited), Some(PublishEdited), None]
    );
    assert_eq!(row(3, K::None), [None, None, None, Some(PublishAsIs)]);
}

#[test]
fn anonymity_needs_every_voter() {
    // Four of five challenging is not enough on either round.
    let votes = panel(0b11110, 5);
    assert_eq!(resolve(&votes, K::Anonymity, Round::First).unwrap(), R::Held);
    assert_eq!(resolve(&votes, K::Anonymity, Round::AfterHold).unwrap(), R::RejectCivility);
    let all = panel(0b11111, 5);
    assert_eq!(resolve(&all, K::Anonymity, Round::AfterHold).unwrap(), R::RejectAnonymity);
}

#[test]
fn after_hold_never_holds_again() {
    for n in 3..=5usize {
        for mask in 0..(1u32 << n) {
            for kind in K::ALL {
                if let Ok(r) = resolve(&panel(mask, n), kind, Round::AfterHold) {
                    assert_ne!(r, R::Held);
                }
            }
        }
    }
}
