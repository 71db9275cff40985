//! Read-only statistics over the published corpus and the activity log.

mod events;
mod report;
mod stats;

use thiserror::Error;

use crate::content::MessageId;

pub use events::{
    activity_histogram, activity_timeline, daily_series, engagement_series, weekly_totals, DayCount,
    DayProfile, Event, EventKind, EventLog, WorkCalendar,
};
pub use report::{AnalyticsInput, AnalyticsReport, ReportLine, ReportedFigure};
pub use stats::{
    check_reported_share, participation_ratio, round1, thread_stats, ShareCheck, ThreadStats,
    REPORT_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("histogram bucket must be between one second and one day")]
    InvalidBucket,
    #[error("eligible population must be positive")]
    ZeroPopulation,
    #[error("event timestamps must be non-decreasing")]
    OutOfOrder,
    #[error("event refers to unknown message {0}")]
    UnknownSubject(MessageId),
    #[error("comment {0} has no parent post")]
    OrphanComment(MessageId),
    #[error("malformed publish label {0:?}")]
    BadLabel(String),
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("unknown reported figure {0:?}")]
    UnknownFigure(String),
}
