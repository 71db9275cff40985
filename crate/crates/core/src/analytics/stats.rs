use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::content::{ExportRecord, MessageId, MessageKind, VoteRecord};

/// Two figures agree when they differ by less than this many percentage points, which
/// covers both rounding and truncation to one decimal.
pub const REPORT_TOLERANCE: f64 = 0.1;

/// Descriptive statistics over a published corpus. Moderation summaries are excluded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreadStats {
    pub n_posts: usize,
    pub n_comments: usize,
    pub published_total: usize,
    pub posts_with_3plus_comments: usize,
    pub pct_posts_with_3plus_comments: f64,
    pub posts_spanning_3plus_days: usize,
    pub pct_posts_spanning_3plus_days: f64,
    pub mean_votes_3plus: Option<f64>,
    pub mean_votes_lt3: Option<f64>,
    pub contributors: usize,
    pub uncivil_count: Option<usize>,
    pub incivility_ratio: Option<f64>,
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn mean(values: &[i64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<i64>() as f64 / values.len() as f64)
}

/// Rounds a percentage for reporting.
pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

pub fn thread_stats(
    corpus: &[ExportRecord],
    votes: &[VoteRecord],
    annotations: Option<&BTreeSet<MessageId>>,
) -> Result<ThreadStats, AnalyticsError> {
    let member: Vec<&ExportRecord> = corpus.iter().filter(|r| !r.is_moderators_post()).collect();
    let posts: Vec<&ExportRecord> = member.iter().copied().filter(|r| r.kind == MessageKind::Post).collect();
    let n_comments = member.iter().filter(|r| r.kind == MessageKind::Comment).count();

    let mut comment_days: HashMap<MessageId, (usize, BTreeSet<NaiveDate>)> = HashMap::new();
    for c in member.iter().filter(|r| r.kind == MessageKind::Comment) {
        let parent = c.parent.ok_or(AnalyticsError::OrphanComment(c.id))?;
        let date = c
            .publish_label
            .date()
            .ok_or_else(|| AnalyticsError::BadLabel(c.publish_label.to_string()))?;
        let entry = comment_days.entry(parent).or_default();
        entry.0 += 1;
        entry.1.insert(date);
    }
    let net: BTreeMap<MessageId, i64> = votes.iter().map(|v| (v.post_id, v.net())).collect();

    let (mut busy, mut quiet) = (Vec::new(), Vec::new());
    let mut spanning = 0;
    for p in &posts {
        let (count, days) = comment_days
            .get(&p.id)
            .map(|(n, d)| (*n, d.len()))
            .unwrap_or((0, 0));
        let v = net.get(&p.id).copied().unwrap_or(0);
        if count >= 3 {
            busy.push(v);
        } else {
            quiet.push(v);
        }
        if days >= 3 {
            spanning += 1;
        }
    }

    let published_total = posts.len() + n_comments;
    let uncivil_count =
        annotations.map(|set| member.iter().filter(|r| set.contains(&r.id)).count());
    let contributors = member
        .iter()
        .map(|r| r.pseudonym.as_str())
        .collect::<BTreeSet<_>>()
        .len();

    Ok(ThreadStats {
        n_posts: posts.len(),
        n_comments,
        published_total,
        posts_with_3plus_comments: busy.len(),
        pct_posts_with_3plus_comments: pct(busy.len(), posts.len()),
        posts_spanning_3plus_days: spanning,
        pct_posts_spanning_3plus_days: pct(spanning, posts.len()),
        mean_votes_3plus: mean(&busy),
        mean_votes_lt3: mean(&quiet),
        contributors,
        uncivil_count,
        incivility_ratio: uncivil_count.map(|u| pct(u, published_total) / 100.0),
    })
}

/// Share of the eligible population that contributed.
pub fn participation_ratio(contributors: usize, eligible: usize) -> Result<f64, AnalyticsError> {
    if eligible == 0 {
        return Err(AnalyticsError::ZeroPopulation);
    }
    Ok(contributors as f64 / eligible as f64)
}

/// Comparison of a published percentage with the one recomputed from counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShareCheck {
    pub count: usize,
    pub denominator: usize,
    pub reported_pct: f64,
    pub recomputed_pct: f64,
    pub consistent: bool,
    /// Denominators in `count..=10*count` that would reproduce the reported figure.
    pub implied_denominators: Vec<usize>,
}

pub fn check_reported_share(count: usize, denominator: usize, reported_pct: f64) -> ShareCheck {
    let close = |d: usize| (pct(count, d) - reported_pct).abs() < REPORT_TOLERANCE;
    let recomputed_pct = pct(count, denominator);
    ShareCheck {
        count,
        denominator,
        reported_pct,
        recomputed_pct,
        consistent: denominator > 0 && close(denominator),
        implied_denominators: (count.max(1)..=count.max(1) * 10).filter(|d| close(*d)).collect(),
    }
}
