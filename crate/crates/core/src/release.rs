//! Batched publication at fixed local times.
//!
//! Approved messages wait in a queue keyed by release instant. At each instant the whole
//! queue entry flips to published in one step, in a shuffled order, stamped with a
//! `dd/mm/yy AM|PM` label.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Datelike, NaiveDate, NaiveTime, TimeDelta, TimeZone, Timelike, Utc};
use chrono_tz::Tz;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{ContentError, ContentStore, MessageId};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule needs at least one release time")]
    Empty,
    #[error("release times must be strictly increasing")]
    NotIncreasing,
    #[error("invalid release time {0:?}, expected HH:MM")]
    BadTime(String),
    #[error("unknown timezone {0:?}")]
    BadTimezone(String),
}

/// Local wall-clock release times in one timezone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReleaseSchedule {
    times: Vec<NaiveTime>,
    timezone: Tz,
}

impl Default for ReleaseSchedule {
    fn default() -> Self {
        Self {
            times: vec![
                NaiveTime::from_hms_opt(9, 0, 0).unwrap(),
                NaiveTime::from_hms_opt(17, 0, 0).unwrap(),
            ],
            timezone: chrono_tz::Europe::London,
        }
    }
}

impl ReleaseSchedule {
    pub fn new(times: Vec<NaiveTime>, timezone: Tz) -> Result<Self, ScheduleError> {
        if times.is_empty() {
            return Err(ScheduleError::Empty);
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ScheduleError::NotIncreasing);
        }
        Ok(Self { times, timezone })
    }

    /// Builds a schedule from `"HH:MM"` strings and an IANA zone name.
    pub fn parse<S: AsRef<str>>(times: &[S], timezone: &str) -> Result<Self, ScheduleError> {
        let times = times
            .iter()
            .map(|t| {
                NaiveTime::parse_from_str(t.as_ref().trim(), "%H:%M")
                    .map_err(|_| ScheduleError::BadTime(t.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let timezone: Tz = timezone
            .parse()
            .map_err(|_| ScheduleError::BadTimezone(timezone.to_string()))?;
        Self::new(times, timezone)
    }

    pub fn times(&self) -> &[NaiveTime] {
        &self.times
    }

    pub fn time_strings(&self) -> Vec<String> {
        self.times.iter().map(|t| t.format("%H:%M").to_string()).collect()
    }

    pub fn timezone(&self) -> Tz {
        self.timezone
    }

    /// Release instants on a local calendar date. A time that falls in a DST gap has no
    /// instant that day; an ambiguous time resolves to its earlier occurrence.
    pub fn slots_on(&self, date: NaiveDate) -> Vec<DateTime<Utc>> {
        self.times
            .iter()
            .filter_map(|t| {
                self.timezone
                    .from_local_datetime(&date.and_time(*t))
                    .earliest()
                    .map(|dt| dt.with_timezone(&Utc))
            })
            .collect()
    }

    /// The earliest release instant strictly after `now`.
    pub fn next_release(&self, now: DateTime<Utc>) -> DateTime<Utc> {
        let mut date = now.with_timezone(&self.timezone).date_naive() - TimeDelta::days(1);
        loop {
            if let Some(slot) = self.slots_on(date).into_iter().find(|s| *s > now) {
                return slot;
            }
            date += TimeDelta::days(1);
        }
    }

    /// Release instants in `(after, until]`, ascending.
    pub fn releases_between(&self, after: DateTime<Utc>, until: DateTime<Utc>) -> Vec<DateTime<Utc>> {
        let mut out = Vec::new();
        let mut next = self.next_release(after);
        while next <= until {
            out.push(next);
            next = self.next_release(next);
        }
        out
    }

    pub fn label(&self, instant: DateTime<Utc>) -> PublishLabel {
        format_label(instant, self.timezone)
    }
}

/// `dd/mm/yy AM` or `dd/mm/yy PM`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PublishLabel(String);

impl PublishLabel {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Local release date encoded in the label, if it is well formed.
    pub fn date(&self) -> Option<NaiveDate> {
        parse_label(&self.0).map(|(d, _)| d)
    }
}

impl fmt::Display for PublishLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for PublishLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublishLabel({})", self.0)
    }
}

pub fn format_label(instant: DateTime<Utc>, timezone: Tz) -> PublishLabel {
    let local = instant.with_timezone(&timezone);
    let half = if local.hour() < 12 { "AM" } else { "PM" };
    PublishLabel(format!(
        "{:02}/{:02}/{:02} {half}",
        local.day(),
        local.month(),
        local.year().rem_euclid(100)
    ))
}

/// Parses `dd/mm/yy AM|PM` into the local date (years 2000–2099) and whether it is PM.
pub fn parse_label(label: &str) -> Option<(NaiveDate, bool)> {
    let (date, half) = label.split_once(' ')?;
    let pm = match half {
        "AM" => false,
        "PM" => true,
        _ => return None,
    };
    let mut parts = date.split('/');
    let mut field = || -> Option<u32> {
        let p = parts.next()?;
        (p.len() == 2).then(|| p.parse().ok()).flatten()
    };
    let (d, m, y) = (field()?, field()?, field()?);
    if parts.next().is_some() {
        return None;
    }
    Some((NaiveDate::from_ymd_opt(2000 + y as i32, m, d)?, pm))
}

/// A set of messages made visible together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishBatch {
    pub label: PublishLabel,
    pub released_at: DateTime<Utc>,
    pub message_ids: Vec<MessageId>,
}

/// Shuffles approved messages into their published order.
pub fn release_order<R: Rng + ?Sized>(approved: &[MessageId], rng: &mut R) -> Vec<MessageId> {
    let mut order = approved.to_vec();
    order.shuffle(rng);
    order
}

/// Builds the batch for one release instant.
pub fn release_batch<R: Rng + ?Sized>(
    approved: &[MessageId],
    instant: DateTime<Utc>,
    timezone: Tz,
    rng: &mut R,
) -> PublishBatch {
    PublishBatch {
        label: format_label(instant, timezone),
        released_at: instant,
        message_ids: release_order(approved, rng),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorAlert {
    pub at: DateTime<Utc>,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchedulerState {
    pub queue: BTreeMap<DateTime<Utc>, Vec<MessageId>>,
    pub batches: Vec<PublishBatch>,
    pub last_tick: DateTime<Utc>,
    pub alerts: Vec<OperatorAlert>,
}

/// Holds approved messages until their slot and performs the flips.
pub struct ReleaseScheduler {
    schedule: ReleaseSchedule,
    state: SchedulerState,
    rng: ChaCha20Rng,
}

impl ReleaseScheduler {
    /// Slots at or before `start` are considered already processed.
    pub fn new(schedule: ReleaseSchedule, start: DateTime<Utc>, seed: Option<u64>) -> Self {
        let rng = match seed {
            Some(s) => ChaCha20Rng::seed_from_u64(s),
            None => ChaCha20Rng::from_entropy(),
        };
        Self {
            schedule,
            state: SchedulerState {
                queue: BTreeMap::new(),
                batches: Vec::new(),
                last_tick: start,
                alerts: Vec::new(),
            },
            rng,
        }
    }

    pub fn schedule(&self) -> &ReleaseSchedule {
        &self.schedule
    }

    pub fn set_schedule(&mut self, schedule: ReleaseSchedule) {
        self.schedule = schedule;
    }

    pub fn state(&self) -> &SchedulerState {
        &self.state
    }

    pub fn restore(&mut self, state: SchedulerState) {
        self.state = state;
    }

    pub fn batches(&self) -> &[PublishBatch] {
        &self.state.batches
    }

    pub fn alerts(&self) -> &[OperatorAlert] {
        &self.state.alerts
    }

    pub fn last_tick(&self) -> DateTime<Utc> {
        self.state.last_tick
    }

    /// Whether `instant`'s slot is still ahead of the release actor.
    pub fn is_pending_slot(&self, instant: DateTime<Utc>) -> bool {
        instant > self.state.last_tick
    }

    /// Queues approved messages for `target`, or for the next slot after `now` if `target`
    /// has already been processed. Returns the slot used.
    pub fn enqueue(
        &mut self,
        target: DateTime<Utc>,
        now: DateTime<Utc>,
        ids: impl IntoIterator<Item = MessageId>,
    ) -> DateTime<Utc> {
        let slot = if self.is_pending_slot(target) {
            target
        } else {
            self.schedule.next_release(now.max(self.state.last_tick))
        };
        self.state.queue.entry(slot).or_default().extend(ids);
        slot
    }

    pub fn queued_for(&self, slot: DateTime<Utc>) -> &[MessageId] {
        self.state.queue.get(&slot).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Slots that have come due since the last tick.
    pub fn due_slots(&self, now: DateTime<Utc>) -> Vec<DateTime<Utc>> {
        self.schedule.releases_between(self.state.last_tick, now)
    }

    /// Publishes everything queued for `slot` as one batch.
    pub fn release_slot(
        &mut self,
        slot: DateTime<Utc>,
        store: &mut ContentStore,
    ) -> Result<PublishBatch, ContentError> {
        let approved = self.state.queue.remove(&slot).unwrap_or_default();
        let batch = release_batch(&approved, slot, self.schedule.timezone(), &mut self.rng);
        if let Err(e) = store.publish(&batch.message_ids, &batch.label, slot) {
            self.state.queue.insert(slot, approved);
            return Err(e);
        }
        self.state.batches.push(batch.clone());
        self.state.last_tick = self.state.last_tick.max(slot);
        Ok(batch)
    }

    /// Skips `slot` because its moderation session is still open. Anything queued moves to
    /// the following slot.
    pub fn defer(&mut self, slot: DateTime<Utc>, reason: &str) -> DateTime<Utc> {
        let next = self.schedule.next_release(slot);
        if let Some(ids) = self.state.queue.remove(&slot) {
            self.state.queue.entry(next).or_default().extend(ids);
        }
        self.state.alerts.push(OperatorAlert {
            at: slot,
            message: format!(
                "release {} deferred to {}: {reason}",
                self.schedule.label(slot),
                self.schedule.label(next)
            ),
        });
        self.state.last_tick = self.state.last_tick.max(slot);
        next
    }

    pub fn finish_tick(&mut self, now: DateTime<Utc>) {
        self.state.last_tick = self.state.last_tick.max(now);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn london(y: i32, m: u32, d: u32, h: u32, min: u32) -> DateTime<Utc> {
        chrono_tz::Europe::London
            .with_ymd_and_hms(y, m, d, h, min, 0)
            .unwrap()
            .with_timezone(&Utc)
    }

    #[test]
    fn next_release_same_day() {
        let s = ReleaseSchedule::default();
        assert_eq!(s.next_release(london(2019, 6, 3, 10, 30)), london(2019, 6, 3, 17, 0));
        assert_eq!(s.next_release(london(2019, 6, 3, 8, 0)), london(2019, 6, 3, 9, 0));
    }

    #[test]
    fn next_release_is_strictly_after() {
        let s = ReleaseSchedule::default();
        assert_eq!(s.next_release(london(2019, 6, 3, 17, 0)), london(2019, 6, 4, 9, 0));
        assert_eq!(s.next_release(london(2019, 6, 3, 9, 0)), london(2019, 6, 3, 17, 0));
    }

    #[test]
    fn schedule_validation() {
        assert!(matches!(ReleaseSchedule::parse::<&str>(&[], "UTC"), Err(ScheduleError::Empty)));
        assert!(matches!(
            ReleaseSchedule::parse(&["17:00", "09:00"], "UTC"),
            Err(ScheduleError::NotIncreasing)
        ));
        assert!(matches!(
            ReleaseSchedule::parse(&["09:00", "09:00"], "UTC"),
            Err(ScheduleError::NotIncreasing)
        ));
        assert!(matches!(ReleaseSchedule::parse(&["9am"], "UTC"), Err(ScheduleError::BadTime(_))));
        assert!(matches!(
            ReleaseSchedule::parse(&["09:00"], "Mars/Olympus"),
            Err(ScheduleError::BadTimezone(_))
        ));
        let s = ReleaseSchedule::parse(&["09:00", "17:00"], "Europe/London").unwrap();
        assert_eq!(s, ReleaseSchedule::default());
        assert_eq!(s.time_strings(), vec!["09:00", "17:00"]);
    }

    #[test]
    fn labels() {
        let tz = chrono_tz::Europe::London;
        assert_eq!(format_label(london(2019, 6, 3, 9, 0), tz).as_str(), "03/06/19 AM");
        assert_eq!(format_label(london(2019, 12, 25, 17, 0), tz).as_str(), "25/12/19 PM");
        assert_eq!(format_label(london(2020, 1, 2, 9, 0), tz).as_str(), "02/01/20 AM");
        assert_eq!(format_label(london(2020, 1, 2, 11, 59), tz).as_str(), "02/01/20 AM");
        assert_eq!(format_label(london(2020, 1, 2, 12, 0), tz).as_str(), "02/01/20 PM");
    }

    #[test]
    fn label_parse() {
        assert_eq!(
            parse_label("03/06/19 AM"),
            Some((NaiveDate::from_ymd_opt(2019, 6, 3).unwrap(), false))
        );
        assert_eq!(parse_label("3/06/19 AM"), None);
        assert_eq!(parse_label("03/06/19 XM"), None);
        assert_eq!(parse_label("31/02/19 PM"), None);
    }

    #[test]
    fn releases_between_counts_slots() {
        let s = ReleaseSchedule::default();
        let start = london(2019, 6, 3, 0, 0);
        let slots = s.releases_between(start, start + TimeDelta::days(14));
        assert_eq!(slots.len(), 28);
        assert!(s.releases_between(start, start).is_empty());
    }

    #[test]
    fn permutation_matches_seeded_shuffle() {
        let ids: Vec<MessageId> = (1..=10).map(MessageId::from_raw).collect();
        let batch = release_batch(
            &ids,
            london(2019, 6, 3, 9, 0),
            chrono_tz::Europe::London,
            &mut ChaCha20Rng::seed_from_u64(9),
        );
        let mut oracle = ids.clone();
        oracle.shuffle(&mut ChaCha20Rng::seed_from_u64(9));
        assert_eq!(batch.message_ids, oracle);
        assert_ne!(batch.message_ids, ids);
        assert_eq!(batch.label.as_str(), "03/06/19 AM");
    }

    #[test]
    fn empty_batch_still_labelled() {
        let batch = release_batch(
            &[],
            london(2019, 6, 3, 17, 0),
            chrono_tz::Europe::London,
            &mut ChaCha20Rng::seed_from_u64(1),
        );
        assert!(batch.message_ids.is_empty());
        assert_eq!(batch.label.as_str(), "03/06/19 PM");
    }
}
