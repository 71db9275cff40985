use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeDelta, Timelike, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::content::MessageId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Submission,
    View,
    Vote,
}

impl EventKind {
    pub const ALL: [EventKind; 3] = [EventKind::Submission, EventKind::View, EventKind::Vote];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::Submission => "submission",
            EventKind::View => "view",
            EventKind::Vote => "vote",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub subject: MessageId,
    pub at: DateTime<Utc>,
}

/// Append-only activity log with non-decreasing timestamps.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) -> Result<(), AnalyticsError> {
        if self.events.last().is_some_and(|last| event.at < last.at) {
            return Err(AnalyticsError::OutOfOrder);
        }
        self.events.push(event);
        Ok(())
    }

    /// Appends at `now`, or at the last recorded instant if the clock stepped backwards.
    pub fn record(&mut self, kind: EventKind, subject: MessageId, now: DateTime<Utc>) {
        let at = self.events.last().map_or(now, |last| now.max(last.at));
        self.events.push(Event { kind, subject, at });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// Checks every subject against the corpus.
    pub fn check_subjects(&self, known: &BTreeSet<MessageId>) -> Result<(), AnalyticsError> {
        match self.events.iter().find(|e| !known.contains(&e.subject)) {
            Some(e) => Err(AnalyticsError::UnknownSubject(e.subject)),
            None => Ok(()),
        }
    }

    pub fn from_jsonl(text: &str) -> Result<Self, AnalyticsError> {
        let mut log = EventLog::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let event: Event =
                serde_json::from_str(line).map_err(|e| AnalyticsError::Parse(i + 1, e.to_string()))?;
            log.push(event)?;
        }
        Ok(log)
    }

    pub fn to_jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("events serialize") + "\n")
            .collect()
    }
}

impl FromIterator<Event> for EventLog {
    /// Sorts by timestamp, keeping the original order among equal instants.
    fn from_iter<I: IntoIterator<Item = Event>>(iter: I) -> Self {
        let mut events: Vec<Event> = iter.into_iter().collect();
        events.sort_by_key(|e| e.at);
        Self { events }
    }
}

/// Event counts by time of day, buckets starting at local midnight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayProfile {
    pub bucket_seconds: u32,
    pub counts: Vec<u64>,
}

impl DayProfile {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Local wall-clock start of bucket `i` as `HH:MM`.
    pub fn bucket_label(&self, i: usize) -> String {
        let secs = i as u32 * self.bucket_seconds;
        format!("{:02}:{:02}", secs / 3600, (secs % 3600) / 60)
    }
}

fn bucket_seconds(bucket: TimeDelta) -> Result<u32, AnalyticsError> {
    let secs = bucket.num_seconds();
    if secs <= 0 || secs > 86_400 || bucket.subsec_nanos() != 0 {
        return Err(AnalyticsError::InvalidBucket);
    }
    Ok(secs as u32)
}

/// Folds every event of the selected kinds onto one local day.
pub fn activity_histogram(
    log: &EventLog,
    bucket: TimeDelta,
    kinds: &[EventKind],
    timezone: Tz,
) -> Result<DayProfile, AnalyticsError> {
    let width = bucket_seconds(bucket)?;
    let n = 86_400u32.div_ceil(width) as usize;
    let mut counts = vec![0u64; n];
    for e in log.events().iter().filter(|e| kinds.contains(&e.kind)) {
        let secs = e.at.with_timezone(&timezone).time().num_seconds_from_midnight();
        counts[(secs / width) as usize] += 1;
    }
    Ok(DayProfile {
        bucket_seconds: width,
        counts,
    })
}

/// Event counts on a calendar of local buckets from the first event's midnight to the last
/// event. Empty for an empty log.
pub fn activity_timeline(
    log: &EventLog,
    bucket: TimeDelta,
    kinds: &[EventKind],
    timezone: Tz,
) -> Result<Vec<(NaiveDateTime, u64)>, AnalyticsError> {
    let width = bucket_seconds(bucket)? as i64;
    let selected: Vec<NaiveDateTime> = log
        .events()
        .iter()
        .filter(|e| kinds.contains(&e.kind))
        .map(|e| e.at.with_timezone(&timezone).naive_local())
        .collect();
    let (Some(first), Some(last)) = (selected.iter().min(), selected.iter().max()) else {
        return Ok(Vec::new());
    };
    let origin = first.date().and_hms_opt(0, 0, 0).expect("midnight exists");
    let index = |t: &NaiveDateTime| ((*t - origin).num_seconds() / width) as usize;
    let mut counts = vec![0u64; index(last) + 1];
    for t in &selected {
        counts[index(t)] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (origin + TimeDelta::seconds(i as i64 * width), c))
        .collect())
}

/// Dates that are not working days.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCalendar {
    pub non_working: BTreeSet<NaiveDate>,
}

impl WorkCalendar {
    pub fn new(non_working: impl IntoIterator<Item = NaiveDate>) -> Self {
        Self {
            non_working: non_working.into_iter().collect(),
        }
    }

    pub fn is_working(&self, date: NaiveDate) -> bool {
        !self.non_working.contains(&date)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayCount {
    pub date: NaiveDate,
    pub count: u64,
    pub working: bool,
}

/// Per-day counts of one event kind over every date from the first to the last event.
pub fn daily_series(log: &EventLog, kind: EventKind, timezone: Tz, calendar: &WorkCalendar) -> Vec<DayCount> {
    let mut by_day: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for e in log.events().iter().filter(|e| e.kind == kind) {
        *by_day.entry(e.at.with_timezone(&timezone).date_naive()).or_default() += 1;
    }
    let (Some(&first), Some(&last)) = (by_day.keys().next(), by_day.keys().next_back()) else {
        return Vec::new();
    };
    first
        .iter_days()
        .take_while(|d| *d <= last)
        .map(|date| DayCount {
            date,
            count: by_day.get(&date).copied().unwrap_or(0),
            working: calendar.is_working(date),
        })
        .collect()
}

/// Views per calendar day.
pub fn engagement_series(log: &EventLog, timezone: Tz, calendar: &WorkCalendar) -> Vec<DayCount> {
    daily_series(log, EventKind::View, timezone, calendar)
}

/// Sums a daily series in consecutive seven-day windows from its first day.
pub fn weekly_totals(series: &[DayCount]) -> Vec<u64> {
    series.chunks(7).map(|w| w.iter().map(|d| d.count).sum()).collect()
}
