//! RSS 2.0 XML codec.
//!
//! [`serialize_feed`] turns a channel and its items into document bytes
//! with a fixed element order and two-space indentation, so golden-file
//! comparisons are byte-stable. [`parse_feed`] reads feed bytes back into
//! the model, remembering where every mapped element sat in the source.
//!
//! The parser is strict about structure (mismatched tags, bad attributes
//! and truncated documents are hard errors) but deliberately lenient
//! about *character* problems: a raw `&`, `<` or `>` in text content is
//! kept literally and recorded as a note, because pointing at exactly
//! that line is the job of the validator, not an excuse to stop reading.

mod read;
mod write;

use std::collections::BTreeMap;

pub use read::{parse_feed, FeedParseError};
pub use write::{serialize_feed, SerializeError};

use crate::model::{Channel, Encoding, Item};

/// Location of a construct in the decoded document text. `line` and
/// `column` are 1-based (columns count characters); `start..end` is the
/// construct's byte span in the decoded text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourcePos {
    pub line: usize,
    pub column: usize,
    pub start: usize,
    pub end: usize,
}

/// What a non-fatal parse note is about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NoteKind {
    /// A raw `&`, `<` or `>` kept literally in text content.
    RawChar(char),
    /// Hex character references and a CDATA section inside one element.
    MixedEscaping,
    /// Date weekday token disagrees with the calendar date.
    WeekdayMismatch,
    /// Unparseable lastBuildDate/pubDate.
    BadDate,
    /// Unparseable creator/author email form.
    BadEmail,
    /// Unparseable language code.
    BadLanguage,
    /// ttl content is not a nonnegative integer.
    BadTtl,
    /// `<creator>` used without a dc: prefix.
    BareCreator,
    /// Element not part of the RSS 2.0 vocabulary; skipped.
    UnknownElement,
    /// Second occurrence of a field that appears at most once; ignored.
    Duplicate,
}

/// One non-fatal observation made while parsing. The feed still loads;
/// the validator turns these into findings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNote {
    pub kind: NoteKind,
    /// Model path of the concerned element, e.g. `item[3]/pubDate`.
    pub path: String,
    pub pos: SourcePos,
    /// Specifics: the offending token, the expected value, and so on.
    pub detail: String,
}

/// A feed read back from document bytes, with source positions for every
/// element that produced a model field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFeed {
    pub channel: Channel,
    pub items: Vec<Item>,
    /// Model path → source position, e.g. `channel/title`, `item[0]/guid`.
    pub positions: BTreeMap<String, SourcePos>,
    pub notes: Vec<ParseNote>,
    /// Encoding the document declared (or utf-8 when it declared none).
    pub encoding: Encoding,
}

/// Characters XML 1.0 forbids outright (no escape can carry them).
pub(crate) fn is_xml_invalid(c: char) -> bool {
    matches!(c, '\u{0}'..='\u{8}' | '\u{b}' | '\u{c}' | '\u{e}'..='\u{1f}' | '\u{fffe}' | '\u{ffff}')
}

/// Escape text content with hex character references: `&` → `&#x26;`,
/// `<` → `&#x3C;`, `>` → `&#x3E;`. The ampersand is replaced first so
/// the ampersands introduced by the other two replacements survive.
pub fn escape_hex(s: &str) -> String {
    s.replace('&', "&#x26;").replace('<', "&#x3C;").replace('>', "&#x3E;")
}

/// Wrap text in a CDATA section. Readers take the wrapped content
/// verbatim, so nothing inside needs escaping — except the terminator
/// itself: any `]]>` in the text is split across two adjacent sections
/// so the decoded content is exactly `s`.
pub fn wrap_cdata(s: &str) -> String {
    format!("<![CDATA[{}]]>", s.replace("]]>", "]]]]><![CDATA[>"))
}
