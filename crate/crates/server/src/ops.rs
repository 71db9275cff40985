//! Operator commands that work on files without a running service.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::de::DeserializeOwned;
use serde::Serialize;
use slowvoice_core::access::{MemoryMailer, Whitelist, WhitelistEntry};
use slowvoice_core::analytics::{AnalyticsInput, AnalyticsReport, EventLog, ReportedFigure, WorkCalendar};
use slowvoice_core::clock::SystemClock;
use slowvoice_core::content::{ExportRecord, MessageId, VoteRecord};
use slowvoice_core::moderation::ModeratorId;
use slowvoice_core::release::ReleaseSchedule;
use slowvoice_core::{Board, BoardConfig, BoardSnapshot};

use crate::credentials::{generate_secret, ModeratorFile};
use crate::state::write_atomic;

pub type OpResult<T> = Result<T, String>;

fn read(path: &Path) -> OpResult<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> OpResult<()> {
    write_atomic(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

// --- whitelist ---

fn load_whitelist(path: &Path) -> OpResult<Whitelist> {
    if !path.exists() {
        return Ok(Whitelist::new());
    }
    Whitelist::parse_file(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

/// Adds an entry; returns false if it was already present.
pub fn whitelist_add(path: &Path, entry: &str) -> OpResult<bool> {
    let entry: WhitelistEntry = entry.parse().map_err(|e| format!("{entry:?}: {e}"))?;
    let mut list = load_whitelist(path)?;
    let added = list.insert(entry);
    write(path, &list.to_file_string())?;
    Ok(added)
}

pub fn whitelist_remove(path: &Path, entry: &str) -> OpResult<bool> {
    let entry: WhitelistEntry = entry.parse().map_err(|e| format!("{entry:?}: {e}"))?;
    let mut list = load_whitelist(path)?;
    let removed = list.remove(&entry);
    write(path, &list.to_file_string())?;
    Ok(removed)
}

pub fn whitelist_list(path: &Path) -> OpResult<Vec<String>> {
    Ok(load_whitelist(path)?.entries().map(|e| e.to_string()).collect())
}

// --- moderators ---

fn load_moderators(path: &Path) -> OpResult<ModeratorFile> {
    if !path.exists() {
        return Ok(ModeratorFile::default());
    }
    ModeratorFile::parse(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

/// Adds a moderator (or resets their secret) and returns the secret to hand over.
pub fn moderator_add(path: &Path, id: &str, secret: Option<String>) -> OpResult<String> {
    let id = ModeratorId::new(id).map_err(|e| e.to_string())?;
    let mut file = load_moderators(path)?;
    let secret = secret.unwrap_or_else(generate_secret);
    file.set_secret(id, &secret);
    write(path, &file.to_file_string())?;
    Ok(secret)
}

pub fn moderator_remove(path: &Path, id: &str) -> OpResult<bool> {
    let id = ModeratorId::new(id).map_err(|e| e.to_string())?;
    let mut file = load_moderators(path)?;
    let removed = file.remove(&id)?;
    write(path, &file.to_file_string())?;
    Ok(removed)
}

pub fn moderator_list(path: &Path) -> OpResult<Vec<String>> {
    Ok(load_moderators(path)?.ids().map(|id| id.to_string()).collect())
}

// --- schedule ---

/// Rewrites `release_times` (and optionally `timezone`) in the configuration file, leaving
/// other keys alone.
pub fn schedule_set(config: &Path, times: &[String], timezone: Option<&str>) -> OpResult<ReleaseSchedule> {
    let mut table: toml::Table = read(config)?.parse().map_err(|e| format!("{}: {e}", config.display()))?;
    let tz = match timezone {
        Some(tz) => tz.to_string(),
        None => table
            .get("timezone")
            .and_then(|v| v.as_str())
            .unwrap_or("Europe/London")
            .to_string(),
    };
    let schedule = ReleaseSchedule::parse(times, &tz).map_err(|e| e.to_string())?;
    table.insert(
        "release_times".into(),
        toml::Value::Array(schedule.time_strings().into_iter().map(toml::Value::String).collect()),
    );
    table.insert("timezone".into(), toml::Value::String(tz));
    write(config, &toml::to_string(&table).map_err(|e| e.to_string())?)?;
    Ok(schedule)
}

// --- exports ---

/// Opens a saved snapshot as a read-only board.
pub fn open_snapshot(path: &Path) -> OpResult<Board> {
    let snapshot: BoardSnapshot =
        serde_json::from_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    let board = Board::new(
        BoardConfig::new(snapshot.moderation.roster.clone()),
        Whitelist::new(),
        Arc::new(SystemClock),
        Arc::new(MemoryMailer::new()),
    )
    .map_err(|e| e.to_string())?;
    board.restore(snapshot).map_err(|e| e.to_string())?;
    Ok(board)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportKind {
    Corpus,
    Events,
    Votes,
    Audit,
}

fn lines<T: Serialize>(rows: &[T]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
        .collect()
}

pub fn export(board: &Board, kind: ExportKind) -> String {
    match kind {
        ExportKind::Corpus => lines(&board.export_corpus()),
        ExportKind::Events => board.export_events().to_jsonl(),
        ExportKind::Votes => lines(&board.export_votes()),
        ExportKind::Audit => lines(&board.export_audit()),
    }
}

// --- analytics ---

fn parse_lines<T: DeserializeOwned>(path: &Path) -> OpResult<Vec<T>> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1)))
        .collect()
}

/// Message ids one per line; `#` starts a comment.
pub fn parse_annotations(text: &str) -> OpResult<BTreeSet<MessageId>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<MessageId>().map_err(|e| format!("annotation {l:?}: {e}")))
        .collect()
}

#[derive(Clone, Debug)]
pub struct AnalyticsArgs {
    pub corpus: PathBuf,
    pub events: PathBuf,
    pub out: PathBuf,
    pub votes: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub eligible: Option<usize>,
    pub timezone: Tz,
    pub non_working: Vec<NaiveDate>,
    pub reported: Vec<ReportedFigure>,
}

/// Path of the plain-text table written next to the line-delimited report.
pub fn table_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".txt");
    PathBuf::from(name)
}

/// Computes the report, writes it to `out` (records) and `out.txt` (table), and returns it.
pub fn analytics_run(args: &AnalyticsArgs) -> OpResult<AnalyticsReport> {
    let corpus: Vec<ExportRecord> = parse_lines(&args.corpus)?;
    let events = EventLog::from_jsonl(&read(&args.events)?).map_err(|e| format!("{}: {e}", args.events.display()))?;
    let votes: Vec<VoteRecord> = match &args.votes {
        Some(p) => parse_lines(p)?,
        None => Vec::new(),
    };
    let annotations = match &args.annotations {
        Some(p) => Some(parse_annotations(&read(p)?)?),
        None => None,
    };
    let calendar = WorkCalendar::new(args.non_working.iter().copied());
    let report = AnalyticsReport::compute(&AnalyticsInput {
        corpus: &corpus,
        votes: &votes,
        events: &events,
        annotations: annotations.as_ref(),
        eligible: args.eligible,
        timezone: args.timezone,
        calendar: &calendar,
        reported: &args.reported,
    })
    .map_err(|e| e.to_string())?;
    write(&args.out, &report.to_jsonl())?;
    write(&table_path(&args.out), &report.render_table())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitelist_commands_edit_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("whitelist.txt");
        assert!(whitelist_add(&path, "@uni.example").unwrap());
        assert!(!whitelist_add(&path, "@uni.example").unwrap());
        assert!(whitelist_add(&path, "visitor@other.example").unwrap());
        assert_eq!(whitelist_list(&path).unwrap(), vec!["visitor@other.example", "@uni.example"]);
        assert!(whitelist_remove(&path, "visitor@other.example").unwrap());
        assert!(whitelist_add(&path, "not an entry").is_err());
    }

    #[test]
    fn moderator_commands_keep_quorum_floor() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("moderators.txt");
        for id in ["ann", "bo", "cy"] {
            moderator_add(&path, id, None).unwrap();
        }
        let secret = moderator_add(&path, "dee", Some("s3cret".into())).unwrap();
        assert_eq!(secret, "s3cret");
        assert!(!read(&path).unwrap().contains("s3cret"));
        assert!(moderator_remove(&path, "dee").unwrap());
        let refused = moderator_remove(&path, "cy");
        assert!(refused.unwrap_err().contains("at least 3"));
        assert_eq!(moderator_list(&path).unwrap(), vec!["ann", "bo", "cy"]);
    }

    #[test]
    fn schedule_set_preserves_other_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slowvoice.toml");
        fs::write(&path, "whitelist = \"w.txt\"\nrelease_times = [\"09:00\"]\n").unwrap();
        let s = schedule_set(&path, &["08:30".into(), "16:00".into()], Some("Europe/Dublin")).unwrap();
        assert_eq!(s.time_strings(), vec!["08:30", "16:00"]);
        let table: toml::Table = read(&path).unwrap().parse().unwrap();
        assert_eq!(table["whitelist"].as_str(), Some("w.txt"));
        assert_eq!(table["timezone"].as_str(), Some("Europe/Dublin"));
        assert!(schedule_set(&path, &["25:00".into()], None).is_err());
    }

    #[test]
    fn annotations_parse() {
        let set = parse_annotations("# uncivil\n00000000000000ff\n\n0000000000000001 # rude\n").unwrap();
        assert_eq!(set.len(), 2);
        assert!(parse_annotations("xyz").is_err());
    }
}
