//! The article record store and feed assembly.
//!
//! Records live in a line-delimited text file: one record per line,
//! seven tab-separated fields, `#` header lines ignored (format details
//! on [`load_records`]). Selection and composition mirror how a
//! publishing site turns its article table into a feed: keep the
//! finished, enabled articles, newest first, and render each one as an
//! item whose title names the author and article.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::model::{Guid, Item, SiteConfig};
use crate::rfc822::{parse_compact, parse_rfc822, to_utc_minutes, RssDateTime};
use crate::tsv;
use crate::xml::{serialize_feed, SerializeError};

/// One row of the publisher's article store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleRecord {
    pub articleid: u64,
    pub articlename: String,
    pub authorname: String,
    pub description: String,
    pub lastupdate: RssDateTime,
    /// The article is finished (drafts are not syndicated).
    pub is_final: bool,
    /// The article is withdrawn from display.
    pub disabled: bool,
}

const FIELD_NAMES: [&str; 7] = [
    "articleid",
    "articlename",
    "authorname",
    "description",
    "lastupdate",
    "final",
    "disabled",
];

impl ArticleRecord {
    /// Render the record as one store line (the inverse of a
    /// [`load_records`] line). Dates are written in the compact form;
    /// a named zone comes back as its fixed offset.
    pub fn to_line(&self) -> String {
        [
            self.articleid.to_string(),
            tsv::escape_field(&self.articlename),
            tsv::escape_field(&self.authorname),
            tsv::escape_field(&self.description),
            crate::rfc822::format_compact(&self.lastupdate),
            self.is_final.to_string(),
            self.disabled.to_string(),
        ]
        .join("\t")
    }
}

/// All records from one store file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordStore {
    pub records: Vec<ArticleRecord>,
    pub source_path: String,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: field \"{field}\": {problem}")]
    Field { path: String, line: usize, field: &'static str, problem: String },
    #[error("{path}:{line}: duplicate articleid {id} (first seen on line {first_line})")]
    DuplicateId { path: String, line: usize, id: u64, first_line: usize },
}

/// Load a record store file.
///
/// Format: UTF-8 text, one record per line, seven tab-separated fields
/// in the order `articleid, articlename, authorname, description,
/// lastupdate, final, disabled`. Booleans are literal `true`/`false`;
/// text fields escape embedded tabs, newlines and backslashes as `\t`,
/// `\n`, `\\`; `lastupdate` accepts `Www, DD Mon YYYY HH:MM:SS TZ` or
/// the compact `YYYY-MM-DDThh:mm:ss+hhmm`. Lines starting with `#` and
/// blank lines are ignored.
pub fn load_records(path: &Path) -> Result<RecordStore, StoreError> {
    let path_text = path.display().to_string();
    let content = fs::read_to_string(path)
        .map_err(|source| StoreError::Io { path: path_text.clone(), source })?;

    let mut records: Vec<ArticleRecord> = Vec::new();
    let mut seen: Vec<(u64, usize)> = Vec::new();
    for (index, line) in content.lines().enumerate() {
        let line_no = index + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field_err = |field: &'static str, problem: String| StoreError::Field {
            path: path_text.clone(),
            line: line_no,
            field,
            problem,
        };

        let raw_fields: Vec<&str> = line.split('\t').collect();
        if raw_fields.len() < FIELD_NAMES.len() {
            let missing = FIELD_NAMES[raw_fields.len()];
            return Err(field_err(missing, "field is missing".to_string()));
        }
        if raw_fields.len() > FIELD_NAMES.len() {
            return Err(field_err(
                "disabled",
                format!("expected 7 fields, found {}", raw_fields.len()),
            ));
        }
        let mut fields = Vec::with_capacity(FIELD_NAMES.len());
        for (raw, name) in raw_fields.iter().zip(FIELD_NAMES) {
            fields.push(tsv::unescape_field(raw).map_err(|e| field_err(name, e))?);
        }

        let articleid: u64 = fields[0]
            .parse()
            .ok()
            .filter(|id| *id >= 1)
            .ok_or_else(|| {
                field_err("articleid", format!("\"{}\" is not a positive integer", fields[0]))
            })?;
        if fields[1].is_empty() {
            return Err(field_err("articlename", "must not be empty".to_string()));
        }
        let lastupdate = parse_compact(&fields[4])
            .or_else(|_| parse_rfc822(&fields[4]).map(|parsed| parsed.value))
            .map_err(|_| {
                field_err(
                    "lastupdate",
                    format!(
                        "\"{}\" is neither \"YYYY-MM-DDThh:mm:ss+hhmm\" nor \
                         \"Www, DD Mon YYYY HH:MM:SS TZ\"",
                        fields[4]
                    ),
                )
            })?;
        let parse_bool = |value: &str, field: &'static str| match value {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(field_err(field, format!("\"{other}\" is not true or false"))),
        };
        let is_final = parse_bool(&fields[5], "final")?;
        let disabled = parse_bool(&fields[6], "disabled")?;

        if let Some((_, first_line)) = seen.iter().find(|(id, _)| *id == articleid) {
            return Err(StoreError::DuplicateId {
                path: path_text,
                line: line_no,
                id: articleid,
                first_line: *first_line,
            });
        }
        seen.push((articleid, line_no));

        records.push(ArticleRecord {
            articleid,
            articlename: std::mem::take(&mut fields[1]),
            authorname: std::mem::take(&mut fields[2]),
            description: std::mem::take(&mut fields[3]),
            lastupdate,
            is_final,
            disabled,
        });
    }
    Ok(RecordStore { records, source_path: path_text })
}

/// The feed window: finished, enabled records, newest first (ties broken
/// by higher articleid), at most `n` of them.
pub fn select_recent(store: &RecordStore, n: usize) -> Vec<ArticleRecord> {
    let mut eligible: Vec<ArticleRecord> = store
        .records
        .iter()
        .filter(|r| r.is_final && !r.disabled)
        .cloned()
        .collect();
    eligible.sort_unstable_by_key(|r| {
        std::cmp::Reverse((to_utc_minutes(&r.lastupdate), r.lastupdate.second, r.articleid))
    });
    eligible.truncate(n);
    eligible
}

/// Render one record as a feed item: the title announces who published
/// what, the link substitutes the article id into the configured
/// template (which also serves as the permalink guid), and the
/// description carries the abstract.
pub fn compose_item(rec: &ArticleRecord, config: &SiteConfig) -> Item {
    let link = config
        .item_link_template
        .replace("{articleid}", &rec.articleid.to_string());
    let description = if config.abstract_prefix {
        format!("ABSTRACT: {}", rec.description)
    } else {
        rec.description.clone()
    };
    // Re-expression can only fail at the far edge of the supported year
    // range; keep the original zone in that case.
    let pub_date = rec.lastupdate.in_zone(config.timezone).unwrap_or(rec.lastupdate);
    Item {
        title: format!("{} published an article {}", rec.authorname, rec.articlename),
        link: link.clone(),
        description,
        guid: Some(Guid { value: link, is_permalink: true }),
        pub_date: Some(pub_date),
        ..Item::default()
    }
}

/// Assemble the feed: the configured channel stamped with `now` as its
/// build time, carrying the composed items for the current selection.
pub fn build_feed(
    store: &RecordStore,
    config: &SiteConfig,
    now: &RssDateTime,
) -> Result<Vec<u8>, SerializeError> {
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(SerializeError::InvalidModel {
            subject: "site configuration".to_string(),
            violations,
        });
    }
    let mut channel = config.channel.clone();
    channel.last_build_date = Some(now.in_zone(config.timezone).unwrap_or(*now));
    let items: Vec<Item> = select_recent(store, config.max_items as usize)
        .iter()
        .map(|rec| compose_item(rec, config))
        .collect();
    serialize_feed(&channel, &items, config)
}
