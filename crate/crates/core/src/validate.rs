//! Rule-engine validation of feed documents, with findings that carry
//! the line and column of the offending construct.
//!
//! [`validate`] never throws for content problems — a malformed date or
//! a raw ampersand becomes a finding, not a failure. The only hard error
//! is input whose bytes cannot be decoded at all. A document that is not
//! well-formed XML yields a single [`Rule::XmlWf`] finding at the point
//! where parsing stopped.

use std::fmt;

use crate::rfc822::{is_future, RssDateTime};
use crate::xml::{parse_feed, FeedParseError, NoteKind, ParsedFeed, SourcePos};

/// The closed rule catalog. Codes are stable identifiers for machine
/// consumers; severities are fixed per rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// Channel is missing title, link, or description.
    ChReq,
    /// lastBuildDate/pubDate does not match an accepted date shape.
    DtFmt,
    /// lastBuildDate/pubDate lies in the future.
    DtFut,
    /// Date weekday token disagrees with the calendar.
    DtWkd,
    /// creator/author is not a valid email form.
    EmFmt,
    /// language is not a valid language code.
    LgFmt,
    /// Raw `&`, `<` or `>` in text content outside CDATA.
    TxRaw,
    /// Hex character references and CDATA mixed in one element.
    TxMix,
    /// ttl content is not a nonnegative integer.
    TtlNum,
    /// image block is missing url, title, or link.
    ImgReq,
    /// Bare `<creator>` without a dc namespace binding.
    CrNs,
    /// Document is not well-formed XML (or not an RSS document at all).
    XmlWf,
}

impl Rule {
    pub fn code(self) -> &'static str {
        match self {
            Rule::ChReq => "CH-REQ",
            Rule::DtFmt => "DT-FMT",
            Rule::DtFut => "DT-FUT",
            Rule::DtWkd => "DT-WKD",
            Rule::EmFmt => "EM-FMT",
            Rule::LgFmt => "LG-FMT",
            Rule::TxRaw => "TX-RAW",
            Rule::TxMix => "TX-MIX",
            Rule::TtlNum => "TTL-NUM",
            Rule::ImgReq => "IMG-REQ",
            Rule::CrNs => "CR-NS",
            Rule::XmlWf => "XML-WF",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Rule::ChReq
            | Rule::DtFmt
            | Rule::EmFmt
            | Rule::LgFmt
            | Rule::TxRaw
            | Rule::TtlNum
            | Rule::ImgReq
            | Rule::XmlWf => Severity::Error,
            Rule::DtFut | Rule::DtWkd | Rule::TxMix => Severity::Warning,
            Rule::CrNs => Severity::Info,
        }
    }

    /// Short remediation note, standing in for a linked document.
    pub fn doc_hint(self) -> &'static str {
        match self {
            Rule::ChReq => "give the channel a nonempty <title>, <link> and <description>",
            Rule::DtFmt => {
                "dates use the form \"Sun, 30 Jun 2013 15:21:36 GMT\" with a named zone or +HHMM"
            }
            Rule::DtFut => "publication times must not be ahead of the current time",
            Rule::DtWkd => "recompute the weekday token from the calendar date",
            Rule::EmFmt => "write addresses as user@site.example or user@site.example (Name)",
            Rule::LgFmt => "use a code such as en or en-us, never the spoken language name",
            Rule::TxRaw => "escape as &#x26; &#x3C; &#x3E; or wrap the text in a CDATA section",
            Rule::TxMix => "use hex references or one CDATA wrapper, not both in one element",
            Rule::TtlNum => "ttl is a cache lifetime in whole minutes, e.g. <ttl>240</ttl>",
            Rule::ImgReq => "an image block needs all of <url>, <title> and <link>",
            Rule::CrNs => "declare xmlns:dc on <rss> and spell the element <dc:creator>",
            Rule::XmlWf => "fix the document structure; no other checks run until it parses",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

/// One diagnostic: what rule fired, how bad it is, and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationFinding {
    pub rule: Rule,
    pub severity: Severity,
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub doc_hint: &'static str,
}

/// Severity tallies over a report's findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub errors: usize,
    pub warnings: usize,
    pub infos: usize,
}

/// All findings for one document, sorted by (line, column, rule code).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<ValidationFinding>,
    pub counts: Counts,
}

impl ValidationReport {
    pub(crate) fn new(mut findings: Vec<ValidationFinding>) -> Self {
        findings.sort_by(|a, b| {
            (a.line, a.column, a.rule.code()).cmp(&(b.line, b.column, b.rule.code()))
        });
        let mut counts = Counts::default();
        for finding in &findings {
            match finding.severity {
                Severity::Error => counts.errors += 1,
                Severity::Warning => counts.warnings += 1,
                Severity::Info => counts.infos += 1,
            }
        }
        ValidationReport { findings, counts }
    }

    pub fn has_errors(&self) -> bool {
        self.counts.errors > 0
    }
}

/// Output shape for [`render_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `LINE:COL SEVERITY RULE message`, for people.
    Text,
    /// Tab-separated `LINE COL SEVERITY RULE MESSAGE DOC_HINT`, for CI.
    MachineLines,
}

struct FindingSink {
    findings: Vec<ValidationFinding>,
}

impl FindingSink {
    fn push(&mut self, rule: Rule, pos: SourcePos, message: String) {
        self.findings.push(ValidationFinding {
            rule,
            severity: rule.severity(),
            line: pos.line,
            column: pos.column,
            message,
            doc_hint: rule.doc_hint(),
        });
    }
}

/// Last path segment: `item[3]/pubDate` → `pubDate`.
fn element_of(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

fn subject_of(path: &str) -> String {
    match path.split_once('/') {
        Some((scope, _)) => format!("{scope} "),
        None => String::new(),
    }
}

/// Apply the full rule catalog to a feed document.
///
/// `now` anchors the future-date check, so reports are reproducible.
/// Returns `Err` only when the bytes cannot be decoded (bad utf-8 or an
/// unsupported declared encoding); every other problem is a finding.
pub fn validate(doc: &[u8], now: &RssDateTime) -> Result<ValidationReport, FeedParseError> {
    let feed = match parse_feed(doc) {
        Ok(feed) => feed,
        Err(err @ (FeedParseError::Syntax { .. } | FeedParseError::Structure { .. })) => {
            let (line, column) = err.position().expect("syntax errors carry a position");
            let finding = ValidationFinding {
                rule: Rule::XmlWf,
                severity: Severity::Error,
                line,
                column,
                message: match &err {
                    FeedParseError::Syntax { message, .. }
                    | FeedParseError::Structure { message, .. } => message.clone(),
                    _ => unreachable!(),
                },
                doc_hint: Rule::XmlWf.doc_hint(),
            };
            return Ok(ValidationReport::new(vec![finding]));
        }
        Err(unreadable) => return Err(unreadable),
    };
    Ok(ValidationReport::new(catalog_findings(&feed, now)))
}

/// Run the catalog over an already parsed feed (used by the fetcher,
/// which has the parse in hand anyway).
pub fn validate_parsed(feed: &ParsedFeed, now: &RssDateTime) -> ValidationReport {
    ValidationReport::new(catalog_findings(feed, now))
}

fn catalog_findings(feed: &ParsedFeed, now: &RssDateTime) -> Vec<ValidationFinding> {
    let mut sink = FindingSink { findings: Vec::new() };
    let channel_pos =
        *feed.positions.get("channel").unwrap_or(&SourcePos { line: 1, column: 1, start: 0, end: 0 });

    // CH-REQ: the minimum channel content.
    let required = [
        ("title", &feed.channel.title),
        ("link", &feed.channel.link),
        ("description", &feed.channel.description),
    ];
    for (name, value) in required {
        if !value.is_empty() {
            continue;
        }
        let key = format!("channel/{name}");
        match feed.positions.get(&key) {
            Some(pos) => sink.push(Rule::ChReq, *pos, format!("channel <{name}> is empty")),
            None => sink.push(
                Rule::ChReq,
                channel_pos,
                format!("channel has no <{name}> element"),
            ),
        }
    }

    // IMG-REQ: image block completeness.
    if let Some(image) = &feed.channel.image {
        let image_pos = feed.positions.get("channel/image").copied().unwrap_or(channel_pos);
        let subfields = [("url", &image.url), ("title", &image.title), ("link", &image.link)];
        for (name, value) in subfields {
            if !value.is_empty() {
                continue;
            }
            let key = format!("channel/image/{name}");
            let pos = feed.positions.get(&key).copied().unwrap_or(image_pos);
            let what = match feed.positions.contains_key(&key) {
                true => format!("channel image <{name}> is empty"),
                false => format!("channel image has no <{name}> element"),
            };
            sink.push(Rule::ImgReq, pos, what);
        }
    }

    // DT-FUT: dates ahead of `now`.
    let mut dated: Vec<(String, &RssDateTime)> = Vec::new();
    if let Some(date) = &feed.channel.last_build_date {
        dated.push(("channel/lastBuildDate".to_string(), date));
    }
    for (index, item) in feed.items.iter().enumerate() {
        if let Some(date) = &item.pub_date {
            dated.push((format!("item[{index}]/pubDate"), date));
        }
    }
    for (path, date) in dated {
        if is_future(date, now) {
            let pos = feed.positions.get(&path).copied().unwrap_or(channel_pos);
            sink.push(
                Rule::DtFut,
                pos,
                format!("<{}> {} is in the future", element_of(&path), date),
            );
        }
    }

    // Note-backed rules.
    for note in &feed.notes {
        let element = element_of(&note.path);
        let subject = subject_of(&note.path);
        match &note.kind {
            NoteKind::RawChar(c) => sink.push(
                Rule::TxRaw,
                note.pos,
                format!("raw '{c}' in text content of {subject}<{element}>"),
            ),
            NoteKind::MixedEscaping => sink.push(
                Rule::TxMix,
                note.pos,
                format!("{subject}<{element}> mixes hex character references and CDATA"),
            ),
            NoteKind::BadDate => sink.push(
                Rule::DtFmt,
                note.pos,
                format!("malformed date in {subject}<{element}>: {}", note.detail),
            ),
            NoteKind::WeekdayMismatch => sink.push(
                Rule::DtWkd,
                note.pos,
                format!("{subject}<{element}>: {}", note.detail),
            ),
            NoteKind::BadEmail => sink.push(
                Rule::EmFmt,
                note.pos,
                format!("{subject}<{element}>: {}", note.detail),
            ),
            NoteKind::BadLanguage => {
                sink.push(Rule::LgFmt, note.pos, format!("<language>: {}", note.detail))
            }
            NoteKind::BadTtl => {
                sink.push(Rule::TtlNum, note.pos, format!("<ttl>: {}", note.detail))
            }
            NoteKind::BareCreator => sink.push(
                Rule::CrNs,
                note.pos,
                format!("<creator> has no namespace; {}", note.detail),
            ),
            // Not part of the catalog: unknown elements are legal
            // extensions, and duplicate handling is a parse concern.
            NoteKind::UnknownElement | NoteKind::Duplicate => {}
        }
    }

    sink.findings
}

/// Replace characters that would break one-finding-per-line output.
fn sanitize(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Render a report for people (`text`) or for scripts (`machine-lines`).
/// Both end with a summary line of the severity tallies; the machine
/// summary starts with `#` so consumers can split findings from it.
pub fn render_report(report: &ValidationReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Text => {
            for f in &report.findings {
                out.push_str(&format!(
                    "{}:{} {} {} {}\n",
                    f.line,
                    f.column,
                    f.severity,
                    f.rule.code(),
                    sanitize(&f.message),
                ));
            }
            let c = report.counts;
            out.push_str(&format!(
                "{} {}, {} {}, {} {}\n",
                c.errors,
                plural(c.errors, "error"),
                c.warnings,
                plural(c.warnings, "warning"),
                c.infos,
                plural(c.infos, "info"),
            ));
        }
        ReportFormat::MachineLines => {
            for f in &report.findings {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\n",
                    f.line,
                    f.column,
                    f.severity,
                    f.rule.code(),
                    sanitize(&f.message),
                    sanitize(f.doc_hint),
                ));
            }
            let c = report.counts;
            out.push_str(&format!(
                "# {} errors, {} warnings, {} infos\n",
                c.errors, c.warnings, c.infos
            ));
        }
    }
    out
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        word.to_string()
    } else {
        format!("{word}s")
    }
}
