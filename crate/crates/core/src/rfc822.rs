//! RFC-822-style date-times as RSS 2.0 feeds use them.
//!
//! Three textual shapes are accepted, all of the form
//! `Www, DD Mon YYYY HH:MM:SS TZ`, differing only in the zone designator:
//! a named zone such as `GMT` or `EST`, or a signed `+HHMM`/`-HHMM` offset.
//! Day, hour, minute and second are always two digits, zero-padded.

use std::fmt;

use thiserror::Error;

pub const WEEKDAY_NAMES: [&str; 7] = ["Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"];
pub const MONTH_NAMES: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

/// Named zones with fixed offsets. No daylight-saving inference: `EST`
/// always means UTC-0500 regardless of date.
const NAMED_ZONES: [(&str, i32); 11] = [
    ("GMT", 0),
    ("UT", 0),
    ("EST", -5 * 60),
    ("EDT", -4 * 60),
    ("CST", -6 * 60),
    ("CDT", -5 * 60),
    ("MST", -7 * 60),
    ("MDT", -6 * 60),
    ("PST", -8 * 60),
    ("PDT", -7 * 60),
    ("Z", 0),
];

const MAX_OFFSET_MINUTES: i32 = 14 * 60;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimeError {
    #[error("value {0} is out of range for two-digit padding")]
    PadOutOfRange(u32),
    #[error("{field} {value} is out of range")]
    FieldOutOfRange { field: &'static str, value: i64 },
    #[error("day {day} does not exist in {year}-{month:02}")]
    NoSuchDay { year: i32, month: u8, day: u8 },
    #[error("zone offset {0} exceeds +/-1400")]
    OffsetOutOfRange(i32),
    #[error("instant falls outside the supported years 1970-9999")]
    OutsideSupportedYears,
}

/// Parse failure for a date-time string; `column` is 1-based and points at
/// the first offending token.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("column {column}: {reason} (at \"{token}\")")]
pub struct DateParseError {
    pub column: usize,
    pub token: String,
    pub reason: String,
}

/// Zone designator: either one of the eleven named zones or a signed
/// offset in minutes, rendered `+HHMM`/`-HHMM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimezoneSpec {
    Named(&'static str),
    Offset(i32),
}

impl TimezoneSpec {
    pub const GMT: TimezoneSpec = TimezoneSpec::Named("GMT");

    /// Build an offset zone, rejecting anything beyond +/-14 hours.
    pub fn offset(minutes: i32) -> Result<Self, TimeError> {
        if minutes.abs() > MAX_OFFSET_MINUTES {
            return Err(TimeError::OffsetOutOfRange(minutes));
        }
        Ok(TimezoneSpec::Offset(minutes))
    }

    /// Look up a named zone token; `None` when the token is not in the
    /// closed list.
    pub fn named(token: &str) -> Option<Self> {
        NAMED_ZONES
            .iter()
            .find(|(name, _)| *name == token)
            .map(|(name, _)| TimezoneSpec::Named(name))
    }

    pub fn offset_minutes(&self) -> i32 {
        match self {
            TimezoneSpec::Named(name) => {
                NAMED_ZONES
                    .iter()
                    .find(|(n, _)| n == name)
                    .expect("named zones come from the closed list")
                    .1
            }
            TimezoneSpec::Offset(minutes) => *minutes,
        }
    }

    /// Parse a zone token: a name from the closed list or `+HHMM`/`-HHMM`.
    pub fn parse(token: &str) -> Option<Self> {
        if let Some(named) = TimezoneSpec::named(token) {
            return Some(named);
        }
        let bytes = token.as_bytes();
        if bytes.len() == 5
            && (bytes[0] == b'+' || bytes[0] == b'-')
            && bytes[1..].iter().all(u8::is_ascii_digit)
        {
            let hours: i32 = token[1..3].parse().ok()?;
            let minutes: i32 = token[3..5].parse().ok()?;
            if minutes >= 60 {
                return None;
            }
            let total = hours * 60 + minutes;
            let signed = if bytes[0] == b'-' { -total } else { total };
            return TimezoneSpec::offset(signed).ok();
        }
        None
    }
}

impl fmt::Display for TimezoneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimezoneSpec::Named(name) => f.write_str(name),
            TimezoneSpec::Offset(minutes) => {
                let sign = if *minutes < 0 { '-' } else { '+' };
                let abs = minutes.abs();
                write!(f, "{}{:02}{:02}", sign, abs / 60, abs % 60)
            }
        }
    }
}

/// A calendar date-time with a zone designator. Always a real instant:
/// construction validates month lengths and leap years, and the year is
/// confined to 1970-9999 so the four-digit rendering is total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RssDateTime {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    pub hour: u8,
    pub minute: u8,
    pub second: u8,
    pub tz: TimezoneSpec,
}

impl RssDateTime {
    pub fn new(
        year: i32,
        month: u8,
        day: u8,
        hour: u8,
        minute: u8,
        second: u8,
        tz: TimezoneSpec,
    ) -> Result<Self, TimeError> {
        if !(1970..=9999).contains(&year) {
            return Err(TimeError::FieldOutOfRange { field: "year", value: year as i64 });
        }
        if !(1..=12).contains(&month) {
            return Err(TimeError::FieldOutOfRange { field: "month", value: month as i64 });
        }
        if day < 1 || day > days_in_month(year, month) {
            return Err(TimeError::NoSuchDay { year, month, day });
        }
        if hour > 23 {
            return Err(TimeError::FieldOutOfRange { field: "hour", value: hour as i64 });
        }
        if minute > 59 {
            return Err(TimeError::FieldOutOfRange { field: "minute", value: minute as i64 });
        }
        if second > 59 {
            return Err(TimeError::FieldOutOfRange { field: "second", value: second as i64 });
        }
        if tz.offset_minutes().abs() > MAX_OFFSET_MINUTES {
            return Err(TimeError::OffsetOutOfRange(tz.offset_minutes()));
        }
        Ok(RssDateTime { year, month, day, hour, minute, second, tz })
    }

    /// Current wall-clock time expressed in GMT.
    pub fn now_utc() -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0);
        let days = secs.div_euclid(86_400);
        let rem = secs.rem_euclid(86_400);
        let (year, month, day) = civil_from_days(days);
        RssDateTime::new(
            year,
            month,
            day,
            (rem / 3600) as u8,
            (rem % 3600 / 60) as u8,
            (rem % 60) as u8,
            TimezoneSpec::GMT,
        )
        .expect("system clock within supported years")
    }

    /// Zero-based weekday index, Sunday = 0, computed from the calendar
    /// date alone (the zone does not move the civil date).
    pub fn weekday_index(&self) -> usize {
        let days = days_from_civil(self.year as i64, self.month, self.day);
        ((days + 4).rem_euclid(7)) as usize
    }

    pub fn weekday_name(&self) -> &'static str {
        WEEKDAY_NAMES[self.weekday_index()]
    }

    /// Re-express the same instant in another zone.
    pub fn in_zone(&self, tz: TimezoneSpec) -> Result<Self, TimeError> {
        let local_minutes = to_utc_minutes(self) + tz.offset_minutes() as i64;
        let days = local_minutes.div_euclid(1440);
        let rem = local_minutes.rem_euclid(1440);
        let (year, month, day) = civil_from_days(days);
        if !(1970..=9999).contains(&year) {
            return Err(TimeError::OutsideSupportedYears);
        }
        RssDateTime::new(
            year,
            month,
            day,
            (rem / 60) as u8,
            (rem % 60) as u8,
            self.second,
            tz,
        )
    }
}

impl fmt::Display for RssDateTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rfc822(self))
    }
}

fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap_year(year) => 29,
        2 => 28,
        _ => 0,
    }
}

/// Days since 1970-01-01 for a Gregorian civil date.
fn days_from_civil(year: i64, month: u8, day: u8) -> i64 {
    let y = if month <= 2 { year - 1 } else { year };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = if month > 2 { month as i64 - 3 } else { month as i64 + 9 };
    let doy = (153 * mp + 2) / 5 + day as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Inverse of `days_from_civil`.
fn civil_from_days(days: i64) -> (i32, u8, u8) {
    let z = days + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = (doy - (153 * mp + 2) / 5 + 1) as u8;
    let month = if mp < 10 { mp + 3 } else { mp - 9 } as u8;
    let year = if month <= 2 { y + 1 } else { y };
    (year as i32, month, day)
}

/// Left-pad a value below 10 with a single zero, as the generated feed
/// requires for day, hour, minute and second fields.
pub fn pad2(n: u32) -> Result<String, TimeError> {
    if n > 99 {
        return Err(TimeError::PadOutOfRange(n));
    }
    Ok(format!("{n:02}"))
}

/// Render `Www, DD Mon YYYY HH:MM:SS TZ`.
pub fn format_rfc822(dt: &RssDateTime) -> String {
    format!(
        "{}, {:02} {} {:04} {:02}:{:02}:{:02} {}",
        dt.weekday_name(),
        dt.day,
        MONTH_NAMES[dt.month as usize - 1],
        dt.year,
        dt.hour,
        dt.minute,
        dt.second,
        dt.tz,
    )
}

/// Outcome of a successful parse. A weekday token that names the wrong
/// day (or no day at all) is not an error: the date is derived from the
/// day/month/year fields and the discrepancy is kept for the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedDate {
    pub value: RssDateTime,
    /// `Some((token, expected))` when the leading weekday token disagrees
    /// with the calendar.
    pub weekday_mismatch: Option<(String, &'static str)>,
}

struct TokenScanner<'a> {
    input: &'a str,
    /// 1-based column of the next unread character.
    column: usize,
}

impl<'a> TokenScanner<'a> {
    fn new(input: &'a str) -> Self {
        TokenScanner { input, column: 1 }
    }

    fn error(&self, token: &str, reason: impl Into<String>) -> DateParseError {
        DateParseError { column: self.column, token: token.to_string(), reason: reason.into() }
    }

    /// Take characters up to the next delimiter without consuming it.
    fn peek_until(&self, delims: &[char]) -> &'a str {
        let end = self
            .input
            .char_indices()
            .find(|(_, c)| delims.contains(c))
            .map(|(i, _)| i)
            .unwrap_or(self.input.len());
        &self.input[..end]
    }

    fn advance(&mut self, chars: usize) {
        let mut it = self.input.char_indices();
        let offset = it.nth(chars).map(|(i, _)| i).unwrap_or(self.input.len());
        self.input = &self.input[offset..];
        self.column += chars;
    }

    fn expect_char(&mut self, expected: char, what: &str) -> Result<(), DateParseError> {
        match self.input.chars().next() {
            Some(c) if c == expected => {
                self.advance(1);
                Ok(())
            }
            Some(c) => Err(self.error(&c.to_string(), format!("expected {what}"))),
            None => Err(self.error("", format!("expected {what}, found end of input"))),
        }
    }

    /// Read a fixed-width run of ASCII digits.
    fn fixed_digits(&mut self, width: usize, what: &str) -> Result<u32, DateParseError> {
        let token = self.peek_until(&[' ', ':', ',']);
        if token.len() != width || !token.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.error(token, format!("expected {width}-digit {what}")));
        }
        let value = token.parse().expect("digit run fits in u32");
        self.advance(width);
        Ok(value)
    }
}

/// Parse one of the three accepted shapes:
/// `Sat, 30 Jun 2013 15:21:36 GMT`, the same with another named zone, or
/// with a signed `+HHMM` offset.
pub fn parse_rfc822(input: &str) -> Result<ParsedDate, DateParseError> {
    let mut scan = TokenScanner::new(input);

    let weekday_token = scan.peek_until(&[',', ' ']);
    if weekday_token.len() != 3 || !weekday_token.bytes().all(|b| b.is_ascii_alphabetic()) {
        return Err(scan.error(weekday_token, "expected a three-letter weekday"));
    }
    let weekday_token = weekday_token.to_string();
    scan.advance(3);
    scan.expect_char(',', "a comma after the weekday")?;
    scan.expect_char(' ', "a space after the comma")?;

    let day = scan.fixed_digits(2, "day")?;
    scan.expect_char(' ', "a space after the day")?;

    let month_token = scan.peek_until(&[' ']);
    let month = match MONTH_NAMES.iter().position(|m| *m == month_token) {
        Some(index) => index as u8 + 1,
        None => return Err(scan.error(month_token, "expected a three-letter month name")),
    };
    scan.advance(3);
    scan.expect_char(' ', "a space after the month")?;

    let year = scan.fixed_digits(4, "year")?;
    scan.expect_char(' ', "a space after the year")?;

    let hour = scan.fixed_digits(2, "hour")?;
    scan.expect_char(':', "a colon after the hour")?;
    let minute = scan.fixed_digits(2, "minute")?;
    scan.expect_char(':', "a colon after the minute")?;
    let second = scan.fixed_digits(2, "second")?;
    scan.expect_char(' ', "a space before the zone")?;

    let zone_token = scan.input;
    let tz = TimezoneSpec::parse(zone_token)
        .ok_or_else(|| scan.error(zone_token, "expected a zone name or +HHMM offset"))?;

    let make_range_error = |scan: &TokenScanner<'_>, err: TimeError| {
        DateParseError { column: 1, token: scan.input.to_string(), reason: err.to_string() }
    };
    let value = RssDateTime::new(
        year as i32,
        month,
        day as u8,
        hour as u8,
        minute as u8,
        second as u8,
        tz,
    )
    .map_err(|e| make_range_error(&TokenScanner::new(input), e))?;

    let weekday_mismatch = if weekday_token == value.weekday_name() {
        None
    } else {
        Some((weekday_token, value.weekday_name()))
    };
    Ok(ParsedDate { value, weekday_mismatch })
}

/// Minutes since 1970-01-01 00:00 UTC, normalized across zones. Seconds
/// are truncated; callers that need sub-minute ordering compare the
/// `second` field separately.
pub fn to_utc_minutes(dt: &RssDateTime) -> i64 {
    let days = days_from_civil(dt.year as i64, dt.month, dt.day);
    days * 1440 + dt.hour as i64 * 60 + dt.minute as i64 - dt.tz.offset_minutes() as i64
}

/// Strictly later than `now`, compared to the second.
pub fn is_future(dt: &RssDateTime, now: &RssDateTime) -> bool {
    (to_utc_minutes(dt), dt.second) > (to_utc_minutes(now), now.second)
}

/// Parse the compact machine form `YYYY-MM-DDThh:mm:ss+hhmm` used by the
/// record store and the `--now` override.
pub fn parse_compact(input: &str) -> Result<RssDateTime, DateParseError> {
    let fail = |column: usize, token: &str, reason: &str| DateParseError {
        column,
        token: token.to_string(),
        reason: reason.to_string(),
    };
    let bytes = input.as_bytes();
    if bytes.len() != 24 {
        return Err(fail(1, input, "expected YYYY-MM-DDThh:mm:ss+hhmm"));
    }
    let digits = [
        (0usize, 4usize, "year"),
        (5, 2, "month"),
        (8, 2, "day"),
        (11, 2, "hour"),
        (14, 2, "minute"),
        (17, 2, "second"),
        (20, 4, "zone offset"),
    ];
    for (start, width, what) in digits {
        if !bytes[start..start + width].iter().all(u8::is_ascii_digit) {
            return Err(fail(start + 1, &input[start..start + width], what));
        }
    }
    for (index, expected) in [(4, b'-'), (7, b'-'), (10, b'T'), (13, b':'), (16, b':')] {
        if bytes[index] != expected {
            return Err(fail(index + 1, &input[index..index + 1], "unexpected separator"));
        }
    }
    if bytes[19] != b'+' && bytes[19] != b'-' {
        return Err(fail(20, &input[19..20], "expected + or - before the zone offset"));
    }
    let num = |start: usize, width: usize| -> i32 {
        input[start..start + width].parse().expect("checked digits")
    };
    let offset_minutes = num(20, 2) * 60 + num(22, 2);
    if num(22, 2) >= 60 {
        return Err(fail(23, &input[22..24], "zone minutes out of range"));
    }
    let tz = TimezoneSpec::offset(if bytes[19] == b'-' { -offset_minutes } else { offset_minutes })
        .map_err(|e| fail(20, &input[19..24], &e.to_string()))?;
    RssDateTime::new(
        num(0, 4),
        num(5, 2) as u8,
        num(8, 2) as u8,
        num(11, 2) as u8,
        num(14, 2) as u8,
        num(17, 2) as u8,
        tz,
    )
    .map_err(|e| fail(1, input, &e.to_string()))
}

/// Render the compact machine form; inverse of [`parse_compact`] for
/// offset zones (named zones are rendered as their fixed offset).
pub fn format_compact(dt: &RssDateTime) -> String {
    let offset = dt.tz.offset_minutes();
    let sign = if offset < 0 { '-' } else { '+' };
    format!(
        "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}{}{:02}{:02}",
        dt.year,
        dt.month,
        dt.day,
        dt.hour,
        dt.minute,
        dt.second,
        sign,
        offset.abs() / 60,
        offset.abs() % 60,
    )
}
