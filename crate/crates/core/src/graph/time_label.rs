//! Classification of node labels as calendar instants.
//!
//! Accepted forms (surrounding whitespace ignored, month names case-insensitive):
//!
//! * `2007-02-20`, `2007-02-20T14:30`, `2007-02-20T14:30:05Z`, `2007-02-20 14:30:05+02:00`
//! * `February 20, 2007`, `Feb 20 2007`
//! * `2/20/2007` (month first)
//! * `20 February 2007`, `20 Feb 2007`
//!
//! A missing time of day means midnight UTC. Anything else, including
//! out-of-range calendar fields, is not a time label.

use std::sync::LazyLock;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, NaiveTime, TimeZone, Utc};
use regex::Regex;

static ISO: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(\d{4})-(\d{2})-(\d{2})(?:[T ](\d{2}):(\d{2})(?::(\d{2})(?:\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?$",
    )
    .unwrap()
});
static MONTH_FIRST: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Za-z]+)\.?\s+(\d{1,2}),?\s+(\d{4})$").unwrap());
static DAY_FIRST: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,2})\s+([A-Za-z]+)\.?\s+(\d{4})$").unwrap());
static SLASHED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,2})/(\d{1,2})/(\d{4})$").unwrap());

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

fn month_number(name: &str) -> Option<u32> {
    let lower = name.to_ascii_lowercase();
    MONTHS
        .iter()
        .position(|m| *m == lower || (lower.len() == 3 && m.starts_with(&lower)))
        .map(|i| i as u32 + 1)
}

fn midnight(year: i32, month: u32, day: u32) -> Option<DateTime<Utc>> {
    let date = NaiveDate::from_ymd_opt(year, month, day)?;
    Some(Utc.from_utc_datetime(&date.and_time(NaiveTime::MIN)))
}

fn parse_offset(raw: &str) -> Option<FixedOffset> {
    if raw == "Z" {
        return FixedOffset::east_opt(0);
    }
    let sign = if raw.starts_with('-') { -1 } else { 1 };
    let digits: String = raw[1..].chars().filter(|c| *c != ':').collect();
    let hours: i32 = digits[..2].parse().ok()?;
    let minutes: i32 = digits[2..].parse().ok()?;
    if hours > 23 || minutes > 59 {
        return None;
    }
    FixedOffset::east_opt(sign * (hours * 3600 + minutes * 60))
}

/// Returns the instant a label denotes, or `None` when the label is not a time label.
pub fn parse_time_label(label: &str) -> Option<DateTime<Utc>> {
    let label = label.trim();

    if let Some(c) = ISO.captures(label) {
        let year: i32 = c[1].parse().ok()?;
        let month: u32 = c[2].parse().ok()?;
        let day: u32 = c[3].parse().ok()?;
        let date = NaiveDate::from_ymd_opt(year, month, day)?;
        let Some(hour) = c.get(4) else {
            return midnight(year, month, day);
        };
        let hour: u32 = hour.as_str().parse().ok()?;
        let minute: u32 = c[5].parse().ok()?;
        let second: u32 = c.get(6).map_or(Some(0), |s| s.as_str().parse().ok())?;
        let local = NaiveDateTime::new(date, NaiveTime::from_hms_opt(hour, minute, second)?);
        let offset = match c.get(7) {
            Some(raw) => parse_offset(raw.as_str())?,
            None => FixedOffset::east_opt(0)?,
        };
        return offset
            .from_local_datetime(&local)
            .single()
            .map(|dt| dt.with_timezone(&Utc));
    }

    if let Some(c) = MONTH_FIRST.captures(label) {
        let month = month_number(&c[1])?;
        return midnight(c[3].parse().ok()?, month, c[2].parse().ok()?);
    }

    if let Some(c) = DAY_FIRST.captures(label) {
        let month = month_number(&c[2])?;
        return midnight(c[3].parse().ok()?, month, c[1].parse().ok()?);
    }

    if let Some(c) = SLASHED.captures(label) {
        return midnight(c[3].parse().ok()?, c[1].parse().ok()?, c[2].parse().ok()?);
    }

    None
}
