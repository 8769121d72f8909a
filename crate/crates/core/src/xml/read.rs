//! Feed parsing: RSS 2.0 document bytes → model with source positions.
//!
//! Structure problems (mismatched tags, bad attribute syntax, truncated
//! input) are hard errors carrying line and column. Character problems
//! in text content — a raw `&`, `<` or `>` — are *not*: the character is
//! kept literally and a [`ParseNote`] records exactly where it sat, so a
//! validator can report the line instead of the parse dying first.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::model::{
    Channel, ChannelImage, EmailSpec, Enclosure, Encoding, Guid, Item, LanguageCode,
};
use crate::rfc822::{parse_rfc822, RssDateTime};

use super::{is_xml_invalid, NoteKind, ParseNote, ParsedFeed, SourcePos};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeedParseError {
    /// Not well-formed XML.
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    /// Well-formed, but not shaped like an RSS document.
    #[error("{line}:{column}: {message}")]
    Structure { line: usize, column: usize, message: String },
    #[error("unsupported encoding \"{0}\" (expected utf-8 or iso-8859-1)")]
    UnsupportedEncoding(String),
    #[error("input is not valid utf-8 (first bad byte at offset {0})")]
    InvalidUtf8(usize),
}

impl FeedParseError {
    /// Position of the failure, when the document was at least decodable.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            FeedParseError::Syntax { line, column, .. }
            | FeedParseError::Structure { line, column, .. } => Some((*line, *column)),
            _ => None,
        }
    }
}

/// How one piece of an element's character data arrived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TextEvent {
    /// Literal `&`, `<` or `>` kept leniently.
    Raw(char),
    HexRef,
    DecRef,
    NamedRef,
    Cdata,
}

#[derive(Debug, Clone)]
struct RawAttr {
    name: String,
    value: String,
}

/// One element of the document tree, before any RSS interpretation.
#[derive(Debug, Clone)]
struct RawElement {
    name: String,
    attrs: Vec<RawAttr>,
    children: Vec<RawElement>,
    /// Concatenated character data directly inside this element.
    text: String,
    events: Vec<(TextEvent, SourcePos)>,
    pos: SourcePos,
}

impl RawElement {
    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|a| a.name == name).map(|a| a.value.as_str())
    }

    fn trimmed_text(&self) -> &str {
        self.text.trim()
    }
}

// ---------------------------------------------------------------------
// Lexing

#[derive(Clone, Copy)]
struct Cursor<'a> {
    src: &'a str,
    off: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src, off: 0, line: 1, column: 1 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.off..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.off += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.rest().starts_with(s)
    }

    /// Consume `s` if it is next; report whether it was.
    fn eat(&mut self, s: &str) -> bool {
        if !self.starts_with(s) {
            return false;
        }
        for _ in s.chars() {
            self.bump();
        }
        true
    }

    /// Zero-width position at the cursor, for error reporting.
    fn here(&self) -> SourcePos {
        SourcePos { line: self.line, column: self.column, start: self.off, end: self.off }
    }

    /// Position spanning the single character at the cursor.
    fn char_pos(&self) -> SourcePos {
        let width = self.peek().map_or(0, char::len_utf8);
        SourcePos { line: self.line, column: self.column, start: self.off, end: self.off + width }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn error(&self, message: impl Into<String>) -> FeedParseError {
        FeedParseError::Syntax { line: self.line, column: self.column, message: message.into() }
    }

    fn expect(&mut self, expected: char, context: &str) -> Result<(), FeedParseError> {
        match self.peek() {
            Some(c) if c == expected => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{expected}' {context}, found '{c}'"))),
            None => Err(self.error(format!("expected '{expected}' {context}, found end of input"))),
        }
    }

    /// Consume through `delim`, returning the content before it.
    fn take_until(&mut self, delim: &str, what: &str) -> Result<&'a str, FeedParseError> {
        let start_pos = *self;
        match self.rest().find(delim) {
            Some(rel) => {
                let end = self.off + rel;
                while self.off < end {
                    self.bump();
                }
                let content = &self.src[start_pos.off..end];
                self.eat(delim);
                Ok(content)
            }
            None => Err(start_pos.error(format!("unterminated {what} (no \"{delim}\")"))),
        }
    }
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')
}

fn parse_name(c: &mut Cursor<'_>) -> Result<String, FeedParseError> {
    if !c.peek().is_some_and(is_name_start) {
        return Err(c.error("expected a name"));
    }
    let mut name = String::new();
    while let Some(ch) = c.peek().filter(|&ch| is_name_char(ch)) {
        name.push(ch);
        c.bump();
    }
    Ok(name)
}

/// Try to lex a complete character/entity reference at `&`. On success
/// the cursor moves past it; on any malformation the cursor is left
/// untouched so the caller can keep the ampersand literally.
fn try_reference(c: &mut Cursor<'_>) -> Option<(char, TextEvent)> {
    let mut probe = *c;
    probe.bump(); // the '&'
    let (ch, event) = if probe.eat("#x") {
        let mut digits = String::new();
        while let Some(d) = probe.peek().filter(char::is_ascii_hexdigit) {
            digits.push(d);
            probe.bump();
        }
        if digits.is_empty() || digits.len() > 6 || !probe.eat(";") {
            return None;
        }
        (char::from_u32(u32::from_str_radix(&digits, 16).ok()?)?, TextEvent::HexRef)
    } else if probe.eat("#") {
        let mut digits = String::new();
        while let Some(d) = probe.peek().filter(char::is_ascii_digit) {
            digits.push(d);
            probe.bump();
        }
        if digits.is_empty() || digits.len() > 7 || !probe.eat(";") {
            return None;
        }
        (char::from_u32(digits.parse().ok()?)?, TextEvent::DecRef)
    } else {
        let mut name = String::new();
        while let Some(d) = probe.peek().filter(|d| d.is_ascii_alphabetic()) {
            name.push(d);
            probe.bump();
        }
        if !probe.eat(";") {
            return None;
        }
        let ch = match name.as_str() {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            _ => return None,
        };
        (ch, TextEvent::NamedRef)
    };
    if is_xml_invalid(ch) {
        return None;
    }
    *c = probe;
    Some((ch, event))
}

fn parse_attr_value(c: &mut Cursor<'_>) -> Result<String, FeedParseError> {
    let quote = match c.peek() {
        Some(q @ ('"' | '\'')) => q,
        _ => return Err(c.error("expected a quoted attribute value")),
    };
    c.bump();
    let mut value = String::new();
    loop {
        match c.peek() {
            None => return Err(c.error("unterminated attribute value")),
            Some(q) if q == quote => {
                c.bump();
                return Ok(value);
            }
            Some('&') => match try_reference(c) {
                Some((ch, _)) => value.push(ch),
                None => {
                    value.push('&');
                    c.bump();
                }
            },
            Some(ch) => {
                value.push(ch);
                c.bump();
            }
        }
    }
}

fn skip_comment(c: &mut Cursor<'_>) -> Result<(), FeedParseError> {
    c.eat("<!--");
    c.take_until("-->", "comment").map(drop)
}

fn skip_pi(c: &mut Cursor<'_>) -> Result<(), FeedParseError> {
    c.eat("<?");
    c.take_until("?>", "processing instruction").map(drop)
}

/// Skip whitespace, comments and processing instructions between
/// markup, as allowed outside the root element.
fn skip_misc(c: &mut Cursor<'_>) -> Result<(), FeedParseError> {
    loop {
        c.skip_ws();
        if c.starts_with("<!--") {
            skip_comment(c)?;
        } else if c.starts_with("<?") {
            skip_pi(c)?;
        } else {
            return Ok(());
        }
    }
}

fn parse_element(c: &mut Cursor<'_>) -> Result<RawElement, FeedParseError> {
    let open = c.here();
    c.expect('<', "to open an element")?;
    let name = parse_name(c).map_err(|_| {
        FeedParseError::Syntax {
            line: open.line,
            column: open.column,
            message: "expected an element name after '<'".to_string(),
        }
    })?;

    let mut elem = RawElement {
        name,
        attrs: Vec::new(),
        children: Vec::new(),
        text: String::new(),
        events: Vec::new(),
        pos: open,
    };

    loop {
        c.skip_ws();
        if c.eat("/>") {
            elem.pos = SourcePos { end: c.off, ..open };
            return Ok(elem);
        }
        if c.eat(">") {
            break;
        }
        if c.peek().is_none() {
            return Err(c.error(format!("unexpected end of input inside the <{}> tag", elem.name)));
        }
        let attr_pos = c.char_pos();
        let attr_name = parse_name(c)
            .map_err(|_| c.error(format!("malformed attribute in <{}>", elem.name)))?;
        c.skip_ws();
        c.expect('=', &format!("after attribute name \"{attr_name}\""))?;
        c.skip_ws();
        let value = parse_attr_value(c)?;
        if elem.attrs.iter().any(|a| a.name == attr_name) {
            return Err(FeedParseError::Syntax {
                line: attr_pos.line,
                column: attr_pos.column,
                message: format!("duplicate attribute \"{attr_name}\" on <{}>", elem.name),
            });
        }
        elem.attrs.push(RawAttr { name: attr_name, value });
    }

    loop {
        if c.starts_with("</") {
            let close = *c;
            c.eat("</");
            let close_name = parse_name(c)?;
            if close_name != elem.name {
                return Err(close.error(format!(
                    "closing tag </{close_name}> does not match <{}>",
                    elem.name
                )));
            }
            c.skip_ws();
            c.expect('>', "to finish the closing tag")?;
            elem.pos = SourcePos { end: c.off, ..open };
            return Ok(elem);
        }
        if c.starts_with("<!--") {
            skip_comment(c)?;
            continue;
        }
        if c.starts_with("<![CDATA[") {
            let pos = c.char_pos();
            c.eat("<![CDATA[");
            let content = c.take_until("]]>", "CDATA section")?;
            elem.text.push_str(content);
            elem.events.push((TextEvent::Cdata, pos));
            continue;
        }
        if c.starts_with("<?") {
            skip_pi(c)?;
            continue;
        }
        if c.starts_with("<!") {
            return Err(c.error("markup declarations are not allowed inside an element"));
        }
        match c.peek() {
            None => {
                return Err(c.error(format!("unexpected end of input inside <{}>", elem.name)))
            }
            Some('<') => {
                let mut after = *c;
                after.bump();
                if after.peek().is_some_and(is_name_start) {
                    elem.children.push(parse_element(c)?);
                } else {
                    // A '<' that opens nothing: keep it, let the
                    // validator point at it.
                    elem.events.push((TextEvent::Raw('<'), c.char_pos()));
                    elem.text.push('<');
                    c.bump();
                }
            }
            Some('&') => {
                let pos = c.char_pos();
                match try_reference(c) {
                    Some((ch, event)) => {
                        elem.events.push((event, pos));
                        elem.text.push(ch);
                    }
                    None => {
                        elem.events.push((TextEvent::Raw('&'), pos));
                        elem.text.push('&');
                        c.bump();
                    }
                }
            }
            Some('>') => {
                elem.events.push((TextEvent::Raw('>'), c.char_pos()));
                elem.text.push('>');
                c.bump();
            }
            Some(ch) => {
                elem.text.push(ch);
                c.bump();
            }
        }
    }
}

/// Parse the whole document: optional declaration and misc, one root
/// element, optional trailing misc, end of input.
fn parse_document(src: &str) -> Result<RawElement, FeedParseError> {
    let mut c = Cursor::new(src);
    c.eat("\u{feff}");
    if c.starts_with("<?xml") {
        skip_pi(&mut c)?;
    }
    skip_misc(&mut c)?;
    if c.starts_with("<!DOCTYPE") {
        return Err(c.error("DOCTYPE declarations are not supported"));
    }
    if c.peek().is_none() {
        return Err(c.error("document has no root element"));
    }
    let root = parse_element(&mut c)?;
    skip_misc(&mut c)?;
    if c.peek().is_some() {
        return Err(c.error("content after the document root"));
    }
    Ok(root)
}

// ---------------------------------------------------------------------
// Decoding

/// Read the encoding name out of an XML declaration, if one is present.
fn sniff_encoding(doc: &[u8]) -> Option<String> {
    if !doc.starts_with(b"<?xml") {
        return None;
    }
    let end = doc.windows(2).position(|w| w == b"?>")?;
    let decl: String = doc[..end].iter().map(|&b| b as char).collect();
    let after = &decl[decl.find("encoding")? + "encoding".len()..];
    let after = after.trim_start();
    let after = after.strip_prefix('=')?.trim_start();
    let quote = after.chars().next().filter(|q| matches!(q, '"' | '\''))?;
    let value = &after[1..];
    Some(value[..value.find(quote)?].to_string())
}

fn decode(doc: &[u8]) -> Result<(String, Encoding), FeedParseError> {
    let doc = doc.strip_prefix(b"\xEF\xBB\xBF".as_slice()).unwrap_or(doc);
    let encoding = match sniff_encoding(doc) {
        None => Encoding::Utf8,
        Some(name) => {
            Encoding::parse(&name).ok_or(FeedParseError::UnsupportedEncoding(name))?
        }
    };
    let text = match encoding {
        Encoding::Utf8 => std::str::from_utf8(doc)
            .map_err(|e| FeedParseError::InvalidUtf8(e.valid_up_to()))?
            .to_string(),
        Encoding::Iso8859_1 => doc.iter().map(|&b| b as char).collect(),
    };
    Ok((text, encoding))
}

// ---------------------------------------------------------------------
// Mapping the raw tree onto the model

struct Mapper {
    positions: BTreeMap<String, SourcePos>,
    notes: Vec<ParseNote>,
}

impl Mapper {
    fn note(&mut self, kind: NoteKind, path: &str, pos: SourcePos, detail: String) {
        self.notes.push(ParseNote { kind, path: path.to_string(), pos, detail });
    }

    /// Record a leaf element's position and return its trimmed text.
    /// Child elements inside a leaf are not RSS; they are noted and
    /// their content dropped.
    fn leaf<'a>(&mut self, elem: &'a RawElement, path: &str) -> &'a str {
        self.positions.insert(path.to_string(), elem.pos);
        for child in &elem.children {
            self.note(
                NoteKind::UnknownElement,
                &format!("{path}/{}", child.name),
                child.pos,
                format!("unexpected <{}> inside <{}>", child.name, elem.name),
            );
        }
        elem.trimmed_text()
    }

    /// True when `name` was already seen in this container; notes the
    /// repeat and tells the caller to skip it.
    fn is_duplicate(
        &mut self,
        seen: &mut HashSet<String>,
        key: &str,
        path: &str,
        elem: &RawElement,
    ) -> bool {
        if seen.insert(key.to_string()) {
            return false;
        }
        self.note(
            NoteKind::Duplicate,
            path,
            elem.pos,
            format!("<{}> appears more than once; the first occurrence wins", elem.name),
        );
        true
    }

    fn date_field(&mut self, elem: &RawElement, path: &str) -> Option<RssDateTime> {
        let text = self.leaf(elem, path).to_string();
        match parse_rfc822(&text) {
            Ok(parsed) => {
                if let Some((token, expected)) = &parsed.weekday_mismatch {
                    self.note(
                        NoteKind::WeekdayMismatch,
                        path,
                        elem.pos,
                        format!("weekday token \"{token}\" but the date falls on {expected}"),
                    );
                }
                Some(parsed.value)
            }
            Err(e) => {
                self.note(NoteKind::BadDate, path, elem.pos, format!("\"{text}\": {e}"));
                None
            }
        }
    }

    fn email_field(&mut self, elem: &RawElement, path: &str) -> Option<EmailSpec> {
        let text = self.leaf(elem, path).to_string();
        match EmailSpec::parse(&text) {
            Ok(email) => Some(email),
            Err(e) => {
                self.note(NoteKind::BadEmail, path, elem.pos, e.to_string());
                None
            }
        }
    }
}

fn map_image(mapper: &mut Mapper, elem: &RawElement) -> ChannelImage {
    mapper.positions.insert("channel/image".to_string(), elem.pos);
    let mut image = ChannelImage {
        url: String::new(),
        title: String::new(),
        link: String::new(),
    };
    let mut seen = HashSet::new();
    for child in &elem.children {
        let path = format!("channel/image/{}", child.name);
        match child.name.as_str() {
            "url" | "title" | "link" => {
                if mapper.is_duplicate(&mut seen, &child.name, &path, child) {
                    continue;
                }
                let text = mapper.leaf(child, &path).to_string();
                match child.name.as_str() {
                    "url" => image.url = text,
                    "title" => image.title = text,
                    _ => image.link = text,
                }
            }
            other => {
                mapper.note(
                    NoteKind::UnknownElement,
                    &path,
                    child.pos,
                    format!("unexpected <{other}> inside <image>"),
                );
            }
        }
    }
    image
}

fn map_item(mapper: &mut Mapper, elem: &RawElement, index: usize) -> Item {
    let base = format!("item[{index}]");
    mapper.positions.insert(base.clone(), elem.pos);
    let mut item = Item::default();
    let mut seen = HashSet::new();
    for child in &elem.children {
        let path = format!("{base}/{}", child.name);
        let name = child.name.clone();
        match name.as_str() {
            "title" | "link" | "description" | "pubDate" | "author" | "comments"
            | "enclosure" | "guid" => {
                if mapper.is_duplicate(&mut seen, &name, &path, child) {
                    continue;
                }
            }
            other => {
                mapper.note(
                    NoteKind::UnknownElement,
                    &path,
                    child.pos,
                    format!("unexpected <{other}> inside <item>"),
                );
                continue;
            }
        }
        match name.as_str() {
            "title" => item.title = mapper.leaf(child, &path).to_string(),
            "link" => item.link = mapper.leaf(child, &path).to_string(),
            "description" => item.description = mapper.leaf(child, &path).to_string(),
            "pubDate" => item.pub_date = mapper.date_field(child, &path),
            "author" => item.author = mapper.email_field(child, &path),
            "comments" => item.comments_url = Some(mapper.leaf(child, &path).to_string()),
            "enclosure" => {
                mapper.positions.insert(path.clone(), child.pos);
                item.enclosure = Some(Enclosure {
                    url: child.attr("url").unwrap_or_default().to_string(),
                    length_bytes: child
                        .attr("length")
                        .and_then(|v| v.trim().parse().ok())
                        .unwrap_or(0),
                    mime_type: child.attr("type").unwrap_or_default().to_string(),
                });
            }
            "guid" => {
                let value = mapper.leaf(child, &path).to_string();
                // isPermaLink defaults to true when absent.
                let is_permalink = child.attr("isPermaLink") != Some("false");
                item.guid = Some(Guid { value, is_permalink });
            }
            _ => unreachable!("unknown names handled above"),
        }
    }
    item
}

fn map_channel(
    mapper: &mut Mapper,
    elem: &RawElement,
    extra_namespaces: Vec<(String, String)>,
) -> (Channel, Vec<Item>) {
    mapper.positions.insert("channel".to_string(), elem.pos);
    let mut channel = Channel { extra_namespaces, ..Channel::default() };
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for child in &elem.children {
        let path = format!("channel/{}", child.name);
        match child.name.as_str() {
            "item" => {
                let index = items.len();
                items.push(map_item(mapper, child, index));
            }
            "title" | "link" | "description" | "language" | "copyright" | "docs"
            | "lastBuildDate" | "ttl" | "image" => {
                if mapper.is_duplicate(&mut seen, &child.name, &path, child) {
                    continue;
                }
                match child.name.as_str() {
                    "title" => channel.title = mapper.leaf(child, &path).to_string(),
                    "link" => channel.link = mapper.leaf(child, &path).to_string(),
                    "description" => {
                        channel.description = mapper.leaf(child, &path).to_string()
                    }
                    "language" => {
                        let text = mapper.leaf(child, &path).to_string();
                        match LanguageCode::parse(&text) {
                            Ok(code) => channel.language = Some(code),
                            Err(e) => {
                                mapper.note(NoteKind::BadLanguage, &path, child.pos, e.to_string())
                            }
                        }
                    }
                    "copyright" => {
                        channel.copyright = Some(mapper.leaf(child, &path).to_string())
                    }
                    "docs" => channel.docs_url = Some(mapper.leaf(child, &path).to_string()),
                    "lastBuildDate" => channel.last_build_date = mapper.date_field(child, &path),
                    "ttl" => {
                        let text = mapper.leaf(child, &path).to_string();
                        match text.parse::<u32>() {
                            Ok(ttl) => channel.ttl_minutes = Some(ttl),
                            Err(_) => mapper.note(
                                NoteKind::BadTtl,
                                &path,
                                child.pos,
                                format!("\"{text}\" is not a nonnegative integer"),
                            ),
                        }
                    }
                    "image" => channel.image = Some(map_image(mapper, child)),
                    _ => unreachable!("matched the same list above"),
                }
            }
            "creator" | "dc:creator" => {
                let path = "channel/creator".to_string();
                if mapper.is_duplicate(&mut seen, "creator", &path, child) {
                    continue;
                }
                if child.name == "creator" {
                    mapper.note(
                        NoteKind::BareCreator,
                        &path,
                        child.pos,
                        "declare xmlns:dc on <rss> and spell it <dc:creator>".to_string(),
                    );
                }
                channel.creator = mapper.email_field(child, &path);
            }
            other => {
                mapper.note(
                    NoteKind::UnknownElement,
                    &path,
                    child.pos,
                    format!("unexpected <{other}> inside <channel>"),
                );
            }
        }
    }
    (channel, items)
}

/// Walk the raw tree emitting raw-character and mixed-escaping notes for
/// every element, using the same path convention as the field mapping.
fn scan_text_events(elem: &RawElement, path: &str, mapper: &mut Mapper) {
    for (event, pos) in &elem.events {
        if let TextEvent::Raw(c) = event {
            mapper.note(
                NoteKind::RawChar(*c),
                path,
                *pos,
                format!("raw '{c}' in text content"),
            );
        }
    }
    let first_hex = elem
        .events
        .iter()
        .find(|(e, _)| *e == TextEvent::HexRef)
        .map(|(_, p)| *p);
    let first_cdata = elem
        .events
        .iter()
        .find(|(e, _)| *e == TextEvent::Cdata)
        .map(|(_, p)| *p);
    if let (Some(hex), Some(cdata)) = (first_hex, first_cdata) {
        // Point at whichever construct completed the mixture.
        let pos = if hex.start > cdata.start { hex } else { cdata };
        mapper.note(
            NoteKind::MixedEscaping,
            path,
            pos,
            "element text mixes hex character references and CDATA".to_string(),
        );
    }

    let mut item_count = 0usize;
    for child in &elem.children {
        let child_path = match (path, child.name.as_str()) {
            ("rss", "channel") => "channel".to_string(),
            ("channel", "item") => {
                let p = format!("item[{item_count}]");
                item_count += 1;
                p
            }
            ("channel", "creator" | "dc:creator") => "channel/creator".to_string(),
            _ => format!("{path}/{}", child.name),
        };
        scan_text_events(child, &child_path, mapper);
    }
}

/// Parse feed document bytes into the model.
///
/// The declared encoding (utf-8 when absent) governs decoding; the three
/// hex references, the five predefined entities and numeric references
/// are resolved; CDATA content is taken verbatim. Leading and trailing
/// whitespace around element text is not significant and is trimmed.
/// Unknown elements are skipped but remembered positionally in notes.
pub fn parse_feed(doc: &[u8]) -> Result<ParsedFeed, FeedParseError> {
    let (text, encoding) = decode(doc)?;
    let root = parse_document(&text)?;
    if root.name != "rss" {
        return Err(FeedParseError::Structure {
            line: root.pos.line,
            column: root.pos.column,
            message: format!("root element is <{}>, expected <rss>", root.name),
        });
    }

    let mut mapper = Mapper { positions: BTreeMap::new(), notes: Vec::new() };
    mapper.positions.insert("rss".to_string(), root.pos);

    let extra_namespaces: Vec<(String, String)> = root
        .attrs
        .iter()
        .filter_map(|a| a.name.strip_prefix("xmlns:").map(|p| (p.to_string(), a.value.clone())))
        .collect();

    let mut channel_elem = None;
    for child in &root.children {
        match (child.name.as_str(), &channel_elem) {
            ("channel", None) => channel_elem = Some(child),
            ("channel", Some(_)) => mapper.note(
                NoteKind::Duplicate,
                "channel",
                child.pos,
                "<channel> appears more than once; the first occurrence wins".to_string(),
            ),
            (other, _) => mapper.note(
                NoteKind::UnknownElement,
                &format!("rss/{other}"),
                child.pos,
                format!("unexpected <{other}> inside <rss>"),
            ),
        }
    }
    let channel_elem = channel_elem.ok_or(FeedParseError::Structure {
        line: root.pos.line,
        column: root.pos.column,
        message: "document has no <channel> element".to_string(),
    })?;

    let (channel, items) = map_channel(&mut mapper, channel_elem, extra_namespaces);
    scan_text_events(&root, "rss", &mut mapper);

    Ok(ParsedFeed {
        channel,
        items,
        positions: mapper.positions,
        notes: mapper.notes,
        encoding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(doc: &str) -> ParsedFeed {
        parse_feed(doc.as_bytes()).unwrap()
    }

    const MINIMAL: &str = "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n\
        <rss version=\"2.0\">\n\
        \x20 <channel>\n\
        \x20   <title>t</title>\n\
        \x20   <link>http://e.example/</link>\n\
        \x20   <description>d</description>\n\
        \x20 </channel>\n\
        </rss>\n";

    #[test]
    fn maps_minimal_channel_with_positions() {
        let feed = parse(MINIMAL);
        assert_eq!(feed.channel.title, "t");
        assert_eq!(feed.channel.link, "http://e.example/");
        assert_eq!(feed.channel.description, "d");
        assert_eq!(feed.encoding, Encoding::Utf8);
        assert!(feed.notes.is_empty());

        let title = feed.positions["channel/title"];
        assert_eq!((title.line, title.column), (4, 5));
        let channel = feed.positions["channel"];
        assert_eq!(channel.line, 3);
        assert!(channel.start < title.start && title.end < channel.end);
    }

    #[test]
    fn decodes_cdata_verbatim() {
        let doc = MINIMAL.replace(
            "<description>d</description>",
            "<description><![CDATA[x < y]]></description>",
        );
        let feed = parse(&doc);
        assert_eq!(feed.channel.description, "x < y");
        assert!(feed.notes.is_empty(), "CDATA content must not produce raw-char notes");
    }

    #[test]
    fn resolves_hex_decimal_and_named_references() {
        let doc = MINIMAL.replace("<title>t</title>", "<title>A &#x3C; B &#62; C &amp; D</title>");
        let feed = parse(&doc);
        assert_eq!(feed.channel.title, "A < B > C & D");
        assert!(feed.notes.is_empty());
    }

    #[test]
    fn keeps_raw_ampersand_with_exact_position() {
        let doc = MINIMAL.replace("<title>t</title>", "<title>Tom & Jerry</title>");
        let feed = parse(&doc);
        assert_eq!(feed.channel.title, "Tom & Jerry");
        let note = &feed.notes[0];
        assert_eq!(note.kind, NoteKind::RawChar('&'));
        assert_eq!(note.path, "channel/title");
        assert_eq!(note.pos.line, 4);
        // Column of the '&' itself: "    <title>Tom & Jerry..." puts it at 16.
        assert_eq!(note.pos.column, 16);
    }

    #[test]
    fn keeps_malformed_references_literally() {
        let doc = MINIMAL.replace("<title>t</title>", "<title>a &nosuch; b &# c &</title>");
        let feed = parse(&doc);
        assert_eq!(feed.channel.title, "a &nosuch; b &# c &");
        let raw_amps =
            feed.notes.iter().filter(|n| n.kind == NoteKind::RawChar('&')).count();
        assert_eq!(raw_amps, 3);
    }

    #[test]
    fn keeps_raw_gt_and_stray_lt() {
        let doc = MINIMAL.replace("<title>t</title>", "<title>a > b < 3</title>");
        let feed = parse(&doc);
        assert_eq!(feed.channel.title, "a > b < 3");
        let kinds: Vec<_> = feed.notes.iter().map(|n| n.kind.clone()).collect();
        assert!(kinds.contains(&NoteKind::RawChar('>')));
        assert!(kinds.contains(&NoteKind::RawChar('<')));
    }

    #[test]
    fn notes_mixed_hex_and_cdata() {
        let doc = MINIMAL.replace(
            "<description>d</description>",
            "<description>&#x26; and <![CDATA[verbatim]]></description>",
        );
        let feed = parse(&doc);
        let note = feed.notes.iter().find(|n| n.kind == NoteKind::MixedEscaping).unwrap();
        assert_eq!(note.path, "channel/description");
        // The CDATA section completed the mixture, so the note points there.
        assert!(doc.lines().nth(note.pos.line - 1).unwrap().contains("CDATA"));
    }

    #[test]
    fn named_references_do_not_count_as_mixing() {
        let doc = MINIMAL.replace(
            "<description>d</description>",
            "<description>&amp; and <![CDATA[verbatim]]></description>",
        );
        let feed = parse(&doc);
        assert!(feed.notes.iter().all(|n| n.kind != NoteKind::MixedEscaping));
    }

    #[test]
    fn parses_full_channel_and_item() {
        let doc = "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n\
            <rss version=\"2.0\" xmlns:dc=\"http://purl.org/dc/elements/1.1/\">\n\
              <channel>\n\
                <title>the JournalSite</title>\n\
                <link>http://www.journalsite.tk</link>\n\
                <description>Instant eJournal for Self Publishing Authors!</description>\n\
                <language>en-us</language>\n\
                <dc:creator>a@b.example (Name)</dc:creator>\n\
                <copyright>c</copyright>\n\
                <image>\n\
                  <url>http://e.example/logo.png</url>\n\
                  <title>logo</title>\n\
                  <link>http://e.example/</link>\n\
                </image>\n\
                <docs>http://docs.example/rss</docs>\n\
                <lastBuildDate>Sun, 30 Jun 2013 15:21:36 +0530</lastBuildDate>\n\
                <ttl>240</ttl>\n\
                <item>\n\
                  <title><![CDATA[An item]]></title>\n\
                  <link>http://e.example/1</link>\n\
                  <description><![CDATA[ABSTRACT: body]]></description>\n\
                  <pubDate>Sun, 30 Jun 2013 15:21:36 +0530</pubDate>\n\
                  <author>a@b.example</author>\n\
                  <comments>http://e.example/1#c</comments>\n\
                  <enclosure url=\"http://e.example/1.mp3\" length=\"123\" type=\"audio/mpeg\"/>\n\
                  <guid isPermaLink=\"true\">http://e.example/1</guid>\n\
                </item>\n\
              </channel>\n\
            </rss>\n";
        let feed = parse(doc);
        assert_eq!(feed.channel.title, "the JournalSite");
        assert_eq!(feed.channel.language.as_ref().unwrap().to_string(), "en-us");
        assert_eq!(
            feed.channel.creator.as_ref().unwrap().to_string(),
            "a@b.example (Name)"
        );
        assert_eq!(
            feed.channel.extra_namespaces,
            vec![("dc".to_string(), "http://purl.org/dc/elements/1.1/".to_string())]
        );
        let image = feed.channel.image.as_ref().unwrap();
        assert_eq!(image.url, "http://e.example/logo.png");
        assert_eq!(feed.channel.ttl_minutes, Some(240));
        assert_eq!(feed.channel.last_build_date.unwrap().to_string(),
            "Sun, 30 Jun 2013 15:21:36 +0530");

        assert_eq!(feed.items.len(), 1);
        let item = &feed.items[0];
        assert_eq!(item.title, "An item");
        assert_eq!(item.description, "ABSTRACT: body");
        let enclosure = item.enclosure.as_ref().unwrap();
        assert_eq!((enclosure.length_bytes, enclosure.mime_type.as_str()), (123, "audio/mpeg"));
        let guid = item.guid.as_ref().unwrap();
        assert!(guid.is_permalink);
        assert!(feed.positions.contains_key("item[0]/pubDate"));
        // dc:creator with the namespace declared is the recommended form.
        assert!(feed.notes.iter().all(|n| n.kind != NoteKind::BareCreator));
    }

    #[test]
    fn bare_creator_gets_a_note() {
        let doc = MINIMAL.replace(
            "<description>d</description>",
            "<description>d</description>\n    <creator>a@b.example</creator>",
        );
        let feed = parse(&doc);
        assert_eq!(feed.channel.creator.as_ref().unwrap().address(), "a@b.example");
        assert!(feed.notes.iter().any(|n| n.kind == NoteKind::BareCreator));
    }

    #[test]
    fn semantic_field_problems_become_notes_not_errors() {
        let doc = MINIMAL.replace(
            "<description>d</description>",
            "<description>d</description>\n\
            \x20   <language>English</language>\n\
            \x20   <ttl>soon</ttl>\n\
            \x20   <lastBuildDate>30 June 2013</lastBuildDate>\n\
            \x20   <creator>not-an-address</creator>",
        );
        let feed = parse(&doc);
        assert_eq!(feed.channel.language, None);
        assert_eq!(feed.channel.ttl_minutes, None);
        assert_eq!(feed.channel.last_build_date, None);
        assert_eq!(feed.channel.creator, None);
        let kinds: Vec<_> = feed.notes.iter().map(|n| n.kind.clone()).collect();
        for expected in [
            NoteKind::BadLanguage,
            NoteKind::BadTtl,
            NoteKind::BadDate,
            NoteKind::BadEmail,
            NoteKind::BareCreator,
        ] {
            assert!(kinds.contains(&expected), "missing {expected:?} in {kinds:?}");
        }
    }

    #[test]
    fn weekday_mismatch_is_noted() {
        let doc = MINIMAL.replace(
            "<description>d</description>",
            "<description>d</description>\n\
            \x20   <lastBuildDate>Sat, 30 Jun 2013 15:21:36 GMT</lastBuildDate>",
        );
        let feed = parse(&doc);
        assert!(feed.channel.last_build_date.is_some());
        let note = feed.notes.iter().find(|n| n.kind == NoteKind::WeekdayMismatch).unwrap();
        assert_eq!(note.path, "channel/lastBuildDate");
        assert!(note.detail.contains("Sat") && note.detail.contains("Sun"));
    }

    #[test]
    fn unknown_elements_are_noted_and_skipped() {
        let doc = MINIMAL.replace(
            "<description>d</description>",
            "<description>d</description>\n    <fancyExtension>x</fancyExtension>",
        );
        let feed = parse(&doc);
        let note = feed.notes.iter().find(|n| n.kind == NoteKind::UnknownElement).unwrap();
        assert_eq!(note.path, "channel/fancyExtension");
    }

    #[test]
    fn duplicate_fields_keep_the_first() {
        let doc = MINIMAL.replace(
            "<title>t</title>",
            "<title>first</title>\n    <title>second</title>",
        );
        let feed = parse(&doc);
        assert_eq!(feed.channel.title, "first");
        assert!(feed.notes.iter().any(|n| n.kind == NoteKind::Duplicate));
    }

    #[test]
    fn multiline_text_is_trimmed() {
        let doc = MINIMAL.replace(
            "<description>d</description>",
            "<description>\n      spread over\n      lines\n    </description>",
        );
        let feed = parse(&doc);
        assert_eq!(feed.channel.description, "spread over\n      lines");
    }

    #[test]
    fn guid_pemalink_defaults_to_true() {
        let doc = MINIMAL.replace(
            "</channel>",
            "  <item><title>i</title><link>l</link><description>x</description>\
             <guid>key-1</guid></item>\n</channel>",
        );
        let feed = parse(&doc);
        let guid = feed.items[0].guid.as_ref().unwrap();
        assert_eq!(guid.value, "key-1");
        assert!(guid.is_permalink);

        let doc = doc.replace("<guid>", "<guid isPermaLink=\"false\">");
        let feed = parse(&doc);
        assert!(!feed.items[0].guid.as_ref().unwrap().is_permalink);
    }

    #[test]
    fn missing_declaration_defaults_to_utf8() {
        let doc = MINIMAL.strip_prefix("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n").unwrap();
        let feed = parse(doc);
        assert_eq!(feed.encoding, Encoding::Utf8);
    }

    #[test]
    fn latin1_bytes_decode_per_declaration() {
        let mut doc: Vec<u8> =
            b"<?xml version=\"1.0\" encoding=\"iso-8859-1\"?>\n<rss version=\"2.0\"><channel>\
              <title>caf".to_vec();
        doc.push(0xE9);
        doc.extend_from_slice(
            b"</title><link>http://e.example/</link><description>d</description>\
              </channel></rss>",
        );
        let feed = parse_feed(&doc).unwrap();
        assert_eq!(feed.encoding, Encoding::Iso8859_1);
        assert_eq!(feed.channel.title, "caf\u{E9}");
    }

    #[test]
    fn unsupported_encoding_is_an_error() {
        let doc = MINIMAL.replace("utf-8", "utf-16");
        let err = parse_feed(doc.as_bytes()).unwrap_err();
        assert_eq!(err, FeedParseError::UnsupportedEncoding("utf-16".to_string()));
    }

    #[test]
    fn invalid_utf8_reports_the_offset() {
        let mut doc = MINIMAL.as_bytes().to_vec();
        doc[50] = 0xFF;
        let err = parse_feed(&doc).unwrap_err();
        assert!(matches!(err, FeedParseError::InvalidUtf8(_)));
    }

    #[test]
    fn mismatched_tags_error_with_position() {
        let doc = MINIMAL.replace("</title>", "</titel>");
        let err = parse_feed(doc.as_bytes()).unwrap_err();
        match err {
            FeedParseError::Syntax { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("</titel>") && message.contains("<title>"));
            }
            other => panic!("expected a syntax error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_document_is_an_error() {
        let doc = &MINIMAL[..MINIMAL.len() - 8];
        assert!(matches!(
            parse_feed(doc.as_bytes()),
            Err(FeedParseError::Syntax { .. })
        ));
    }

    #[test]
    fn duplicate_attributes_are_an_error() {
        let doc = MINIMAL.replace(
            "<rss version=\"2.0\">",
            "<rss version=\"2.0\" version=\"2.0\">",
        );
        let err = parse_feed(doc.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate attribute"));
    }

    #[test]
    fn doctype_is_rejected() {
        let doc = MINIMAL.replace(
            "<rss version=\"2.0\">",
            "<!DOCTYPE rss>\n<rss version=\"2.0\">",
        );
        let err = parse_feed(doc.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("DOCTYPE"));
    }

    #[test]
    fn non_rss_root_is_a_structure_error() {
        let err = parse_feed(b"<feed><channel/></feed>").unwrap_err();
        assert!(matches!(err, FeedParseError::Structure { .. }));
        assert!(err.to_string().contains("<rss>"));
    }

    #[test]
    fn missing_channel_is_a_structure_error() {
        let err = parse_feed(b"<rss version=\"2.0\"></rss>").unwrap_err();
        match err {
            FeedParseError::Structure { message, .. } => assert!(message.contains("channel")),
            other => panic!("expected a structure error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_pis_are_skipped() {
        let doc = MINIMAL.replace(
            "<title>t</title>",
            "<!-- a comment --><?php nothing ?><title>t<!-- inner --></title>",
        );
        let feed = parse(&doc);
        assert_eq!(feed.channel.title, "t");
    }

    #[test]
    fn bom_is_tolerated() {
        let mut doc = b"\xEF\xBB\xBF".to_vec();
        doc.extend_from_slice(MINIMAL.as_bytes());
        assert!(parse_feed(&doc).is_ok());
    }

    #[test]
    fn content_after_root_is_an_error() {
        let doc = format!("{MINIMAL}<extra/>");
        let err = parse_feed(doc.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("after the document root"));
    }
}
