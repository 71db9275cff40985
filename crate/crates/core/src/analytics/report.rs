use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::str::FromStr;

use chrono::TimeDelta;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::events::{activity_histogram, daily_series, weekly_totals, DayCount, DayProfile, EventKind, EventLog, WorkCalendar};
use super::stats::{check_reported_share, participation_ratio, round1, thread_stats, ShareCheck, ThreadStats};
use super::AnalyticsError;
use crate::content::{ExportRecord, MessageId, VoteRecord};

/// A percentage quoted elsewhere, to be checked against the recomputed counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportedFigure {
    pub metric: String,
    pub pct: f64,
}

const CHECKABLE: [&str; 2] = ["posts_with_3plus_comments", "posts_spanning_3plus_days"];

impl FromStr for ReportedFigure {
    type Err = AnalyticsError;

    /// Parses `metric=percent`, e.g. `posts_spanning_3plus_days=40.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (metric, pct) = s
            .split_once('=')
            .ok_or_else(|| AnalyticsError::UnknownFigure(s.to_string()))?;
        if !CHECKABLE.contains(&metric) {
            return Err(AnalyticsError::UnknownFigure(metric.to_string()));
        }
        let pct = pct
            .trim_end_matches('%')
            .parse()
            .map_err(|_| AnalyticsError::UnknownFigure(s.to_string()))?;
        Ok(Self {
            metric: metric.to_string(),
            pct,
        })
    }
}

pub struct AnalyticsInput<'a> {
    pub corpus: &'a [ExportRecord],
    pub votes: &'a [VoteRecord],
    pub events: &'a EventLog,
    pub annotations: Option<&'a BTreeSet<MessageId>>,
    pub eligible: Option<usize>,
    pub timezone: Tz,
    pub calendar: &'a WorkCalendar,
    pub reported: &'a [ReportedFigure],
}

/// One line of the machine-readable report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub metric: String,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsReport {
    pub stats: ThreadStats,
    pub eligible: Option<usize>,
    pub participation: Option<f64>,
    pub event_totals: BTreeMap<EventKind, usize>,
    pub hourly: BTreeMap<EventKind, DayProfile>,
    pub views_by_day: Vec<DayCount>,
    pub weekly_views: Vec<u64>,
    pub submissions_by_day: Vec<DayCount>,
    pub checks: Vec<(ReportedFigure, ShareCheck)>,
}

impl AnalyticsReport {
    pub fn compute(input: &AnalyticsInput<'_>) -> Result<Self, AnalyticsError> {
        let stats = thread_stats(input.corpus, input.votes, input.annotations)?;
        let participation = input
            .eligible
            .map(|e| participation_ratio(stats.contributors, e))
            .transpose()?;
        let mut hourly = BTreeMap::new();
        let mut event_totals = BTreeMap::new();
        for kind in EventKind::ALL {
            hourly.insert(kind, activity_histogram(input.events, TimeDelta::hours(1), &[kind], input.timezone)?);
            event_totals.insert(kind, input.events.count(kind));
        }
        let views_by_day = daily_series(input.events, EventKind::View, input.timezone, input.calendar);
        let weekly_views = weekly_totals(&views_by_day);
        let submissions_by_day = daily_series(input.events, EventKind::Submission, input.timezone, input.calendar);
        let checks = input
            .reported
            .iter()
            .map(|f| {
                let count = match f.metric.as_str() {
                    "posts_with_3plus_comments" => stats.posts_with_3plus_comments,
                    "posts_spanning_3plus_days" => stats.posts_spanning_3plus_days,
                    other => return Err(AnalyticsError::UnknownFigure(other.to_string())),
                };
                Ok((f.clone(), check_reported_share(count, stats.n_posts, f.pct)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            stats,
            eligible: input.eligible,
            participation,
            event_totals,
            hourly,
            views_by_day,
            weekly_views,
            submissions_by_day,
            checks,
        })
    }

    pub fn lines(&self) -> Vec<ReportLine> {
        let s = &self.stats;
        let mut lines = vec![
            ("n_posts", json!(s.n_posts)),
            ("n_comments", json!(s.n_comments)),
            ("published_total", json!(s.published_total)),
            ("posts_with_3plus_comments", json!(s.posts_with_3plus_comments)),
            ("pct_posts_with_3plus_comments", json!(round1(s.pct_posts_with_3plus_comments))),
            ("posts_spanning_3plus_days", json!(s.posts_spanning_3plus_days)),
            ("pct_posts_spanning_3plus_days", json!(round1(s.pct_posts_spanning_3plus_days))),
            ("mean_votes_3plus", json!(s.mean_votes_3plus)),
            ("mean_votes_lt3", json!(s.mean_votes_lt3)),
            ("contributors", json!(s.contributors)),
            ("uncivil_count", json!(s.uncivil_count)),
            ("pct_uncivil", json!(s.incivility_ratio.map(|r| round1(100.0 * r)))),
            ("eligible", json!(self.eligible)),
            ("pct_participation", json!(self.participation.map(|r| round1(100.0 * r)))),
        ];
        for (kind, total) in &self.event_totals {
            lines.push(("events_total", json!({ "kind": kind, "count": total })));
        }
        for (kind, profile) in &self.hourly {
            lines.push(("hourly_profile", json!({ "kind": kind, "counts": profile.counts })));
        }
        for d in &self.views_by_day {
            lines.push(("views_by_day", json!(d)));
        }
        lines.push(("weekly_views", json!(self.weekly_views)));
        for d in &self.submissions_by_day {
            lines.push(("submissions_by_day", json!(d)));
        }
        for (figure, check) in &self.checks {
            lines.push(("reported_check", json!({ "metric": figure.metric, "check": check })));
        }
        lines
            .into_iter()
            .map(|(metric, value)| ReportLine {
                metric: metric.to_string(),
                value,
            })
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        self.lines()
            .iter()
            .map(|l| serde_json::to_string(l).expect("report lines serialize") + "\n")
            .collect()
    }

    pub fn render_table(&self) -> String {
        let s = &self.stats;
        let opt = |v: Option<f64>, scale: f64, suffix: &str| {
            v.map_or("n/a".to_string(), |x| format!("{:.1}{suffix}", x * scale))
        };
        let mut rows: Vec<(String, String)> = vec![
            ("posts".into(), s.n_posts.to_string()),
            ("comments".into(), s.n_comments.to_string()),
            ("published total".into(), s.published_total.to_string()),
            (
                "posts with 3+ comments".into(),
                format!("{} ({:.1}%)", s.posts_with_3plus_comments, s.pct_posts_with_3plus_comments),
            ),
            (
                "posts with comments on 3+ days".into(),
                format!("{} ({:.1}%)", s.posts_spanning_3plus_days, s.pct_posts_spanning_3plus_days),
            ),
            (
                "mean net votes, 3+ comments".into(),
                s.mean_votes_3plus.map_or("n/a".into(), |m| format!("{m:.2}")),
            ),
            (
                "mean net votes, <3 comments".into(),
                s.mean_votes_lt3.map_or("n/a".into(), |m| format!("{m:.2}")),
            ),
            ("potentially uncivil".into(), opt(s.incivility_ratio, 100.0, "%")),
            ("distinct pseudonyms".into(), s.contributors.to_string()),
            ("participation".into(), opt(self.participation, 100.0, "%")),
        ];
        for (kind, total) in &self.event_totals {
            rows.push((format!("{} events", kind.name()), total.to_string()));
        }
        if !self.weekly_views.is_empty() {
            let weeks: Vec<String> = self.weekly_views.iter().map(u64::to_string).collect();
            rows.push(("views per week".into(), weeks.join(" / ")));
        }
        for (figure, check) in &self.checks {
            let verdict = if check.consistent {
                "consistent".to_string()
            } else {
                format!(
                    "INCONSISTENT with n={} (recomputed {:.1}%, implied n={:?})",
                    check.denominator, check.recomputed_pct, check.implied_denominators
                )
            };
            rows.push((format!("reported {} {:.1}%", figure.metric, figure.pct), verdict));
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        let _ = writeln!(
            out,
            "\nContributors are distinct login pseudonyms, not people; one person with several logins counts several times."
        );
        out
    }
}
