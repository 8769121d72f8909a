//! Fetching remote feeds and tracking what the reader has seen.
//!
//! A fetch never panics and never turns server misbehavior into a
//! process failure: timeouts, refusals, redirect loops, oversized and
//! malformed bodies all come back as values in [`FetchResult`]. Unread
//! tracking is a set difference over item identity keys, persisted in a
//! plain text file so state survives between invocations and diffs
//! cleanly under version control.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;
use ureq::Agent;

use crate::model::Item;
use crate::rfc822::{self, RssDateTime};
use crate::tsv;
use crate::validate::{validate, ValidationReport};
use crate::xml::{parse_feed, ParsedFeed};

/// Response bodies beyond this size abort the fetch.
pub const MAX_BODY_BYTES: u64 = 8 * 1024 * 1024;

/// Everything a single fetch produced. `feed` is present exactly when
/// the server answered 200 and the body parsed as a feed; every other
/// outcome leaves a diagnosis in `report` or `error` instead.
#[derive(Debug)]
pub struct FetchResult {
    /// HTTP status of the final response, or 0 when the request never
    /// completed (timeout, refusal, redirect loop, oversized body).
    pub status: u16,
    pub feed: Option<ParsedFeed>,
    /// Validation of the fetched bytes; empty when there were none.
    pub report: ValidationReport,
    pub bytes_len: usize,
    /// Transport-level failure text; `None` whenever bytes came back.
    pub error: Option<String>,
}

fn failure(status: u16, bytes_len: usize, error: String) -> FetchResult {
    FetchResult {
        status,
        feed: None,
        report: ValidationReport::new(Vec::new()),
        bytes_len,
        error: Some(error),
    }
}

/// GET `url` once, following up to five redirects, and parse + validate
/// whatever comes back. `now` anchors the future-date validation checks.
pub fn fetch_feed(url: &str, timeout_seconds: f64, now: &RssDateTime) -> FetchResult {
    let agent: Agent = Agent::config_builder()
        .http_status_as_error(false)
        .max_redirects(5)
        .user_agent(concat!("feedforge/", env!("CARGO_PKG_VERSION")))
        .timeout_global(Some(Duration::from_secs_f64(timeout_seconds)))
        .build()
        .new_agent();

    let mut response = match agent.get(url).call() {
        Ok(response) => response,
        Err(e) => return failure(0, 0, format!("fetch failed: {e}")),
    };
    let status = response.status().as_u16();
    let bytes = match response
        .body_mut()
        .with_config()
        .limit(MAX_BODY_BYTES)
        .read_to_vec()
    {
        Ok(bytes) => bytes,
        Err(e) => return failure(0, 0, format!("reading response body: {e}")),
    };

    if status != 200 {
        return failure(status, bytes.len(), format!("HTTP status {status}"));
    }
    match validate(&bytes, now) {
        Ok(report) => FetchResult {
            status,
            feed: parse_feed(&bytes).ok(),
            report,
            bytes_len: bytes.len(),
            error: None,
        },
        Err(hard) => failure(status, bytes.len(), format!("unreadable body: {hard}")),
    }
}

/// The identity under which an item is remembered: guid value when
/// present, else link, else title. Items carrying none of the three
/// cannot be tracked.
pub fn item_key(item: &Item) -> Option<&str> {
    if let Some(guid) = &item.guid {
        if !guid.value.is_empty() {
            return Some(&guid.value);
        }
    }
    [item.link.as_str(), item.title.as_str()]
        .into_iter()
        .find(|s| !s.is_empty())
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct FeedState {
    keys: BTreeSet<String>,
    last_fetch: Option<RssDateTime>,
}

/// What the reader has already seen, per feed URL. Keys accumulate:
/// an item dropped from the feed window stays remembered.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeenState {
    feeds: BTreeMap<String, FeedState>,
}

impl SeenState {
    pub fn is_seen(&self, url: &str, key: &str) -> bool {
        self.feeds.get(url).is_some_and(|f| f.keys.contains(key))
    }

    pub fn seen_count(&self, url: &str) -> usize {
        self.feeds.get(url).map_or(0, |f| f.keys.len())
    }

    pub fn last_fetch(&self, url: &str) -> Option<&RssDateTime> {
        self.feeds.get(url).and_then(|f| f.last_fetch.as_ref())
    }
}

/// Split a feed against the state: returns the items not yet seen (in
/// feed order) and a new state with every current key recorded and
/// `last_fetch` set to `now`. The input state is untouched, so the
/// caller decides whether the result is persisted (that choice is what
/// `--mark-read` exposes).
pub fn diff_unread(
    feed: &ParsedFeed,
    state: &SeenState,
    url: &str,
    now: &RssDateTime,
) -> (Vec<Item>, SeenState) {
    let mut updated = state.clone();
    let feed_state = updated.feeds.entry(url.to_string()).or_default();
    let mut new_items = Vec::new();
    for item in &feed.items {
        match item_key(item) {
            Some(key) => {
                if !feed_state.keys.contains(key) {
                    new_items.push(item.clone());
                    feed_state.keys.insert(key.to_string());
                }
            }
            // An item with no identity can never be marked read.
            None => new_items.push(item.clone()),
        }
    }
    // The state file writes dates in the offset-only compact form, so
    // store that spelling up front to keep save/load lossless.
    feed_state.last_fetch = Some(RssDateTime {
        tz: crate::rfc822::TimezoneSpec::Offset(now.tz.offset_minutes()),
        ..*now
    });
    (new_items, updated)
}

/// True when `url` is due for a re-fetch: never fetched, or at least
/// `ttl_minutes` old (boundary inclusive, minute resolution).
pub fn poll_due(state: &SeenState, url: &str, ttl_minutes: u32, now: &RssDateTime) -> bool {
    match state.last_fetch(url) {
        None => true,
        Some(last) => {
            rfc822::to_utc_minutes(now) - rfc822::to_utc_minutes(last) >= i64::from(ttl_minutes)
        }
    }
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {problem}")]
    Line { path: String, line: usize, problem: String },
    #[error("state file is in use (lock {path} exists; remove it if stale)")]
    Locked { path: String },
}

/// Load a state file. A missing file is an empty state (the first run
/// has nothing to remember).
///
/// Format: one `url<TAB>key` line per seen item, preceded per URL by a
/// `#last_fetch<TAB>url<TAB>date` line when a fetch time is known; both
/// fields use the record-store escapes for tabs, newlines, backslashes.
pub fn load_state(path: &Path) -> Result<SeenState, StateError> {
    let path_text = path.display().to_string();
    let content = match fs::read_to_string(path) {
        Ok(content) => content,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(SeenState::default()),
        Err(source) => return Err(StateError::Io { path: path_text, source }),
    };

    let mut state = SeenState::default();
    for (index, line) in content.lines().enumerate() {
        let line_no = index + 1;
        if line.is_empty() {
            continue;
        }
        let line_err = |problem: String| StateError::Line {
            path: path_text.clone(),
            line: line_no,
            problem,
        };
        if let Some(rest) = line.strip_prefix("#last_fetch\t") {
            let (url_raw, date_raw) = rest
                .split_once('\t')
                .ok_or_else(|| line_err("expected #last_fetch<TAB>url<TAB>date".to_string()))?;
            let url = tsv::unescape_field(url_raw).map_err(&line_err)?;
            let date = rfc822::parse_compact(date_raw)
                .map_err(|e| line_err(format!("bad last_fetch date: {e}")))?;
            state.feeds.entry(url).or_default().last_fetch = Some(date);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (url_raw, key_raw) = line
            .split_once('\t')
            .ok_or_else(|| line_err("expected url<TAB>key".to_string()))?;
        let url = tsv::unescape_field(url_raw).map_err(&line_err)?;
        let key = tsv::unescape_field(key_raw).map_err(&line_err)?;
        if key.is_empty() {
            return Err(line_err("seen key must not be empty".to_string()));
        }
        state.feeds.entry(url).or_default().keys.insert(key);
    }
    Ok(state)
}

/// Write the state file (sorted by URL, then key, so repeated saves of
/// equal states are byte-identical).
pub fn save_state(state: &SeenState, path: &Path) -> Result<(), StateError> {
    let mut out = String::new();
    for (url, feed_state) in &state.feeds {
        let escaped_url = tsv::escape_field(url);
        if let Some(last) = &feed_state.last_fetch {
            out.push_str("#last_fetch\t");
            out.push_str(&escaped_url);
            out.push('\t');
            out.push_str(&rfc822::format_compact(last));
            out.push('\n');
        }
        for key in &feed_state.keys {
            out.push_str(&escaped_url);
            out.push('\t');
            out.push_str(&tsv::escape_field(key));
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|source| StateError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Advisory lock serializing writers of one state file. Acquire before
/// a load-modify-save cycle; the lock file disappears on drop.
#[derive(Debug)]
pub struct StateLock {
    lock_path: PathBuf,
}

impl StateLock {
    pub fn acquire(state_path: &Path) -> Result<StateLock, StateError> {
        let mut name = state_path.as_os_str().to_owned();
        name.push(".lock");
        let lock_path = PathBuf::from(name);
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(_) => Ok(StateLock { lock_path }),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(StateError::Locked {
                path: lock_path.display().to_string(),
            }),
            Err(source) => Err(StateError::Io {
                path: lock_path.display().to_string(),
                source,
            }),
        }
    }
}

impl Drop for StateLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock_path);
    }
}
