//! In-memory model of an RSS 2.0 document and the site configuration
//! used to build one.
//!
//! `Channel` and `Item` are plain data with public fields; they are
//! checked against their invariants by [`channel_validate_local`] and
//! [`item_validate_local`] before serialization so no half-valid value
//! reaches the wire. `LanguageCode` and `EmailSpec` enforce their shape
//! at construction instead, since they are parsed from free text.

use std::fmt;

use thiserror::Error;

use crate::rfc822::{RssDateTime, TimezoneSpec};

/// Feed header metadata. Items are carried separately; a channel is the
/// part of the document that describes the publishing site itself.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Channel {
    pub title: String,
    /// Absolute URL of the site the feed syndicates.
    pub link: String,
    pub description: String,
    pub language: Option<LanguageCode>,
    pub copyright: Option<String>,
    pub creator: Option<EmailSpec>,
    pub docs_url: Option<String>,
    pub image: Option<ChannelImage>,
    pub last_build_date: Option<RssDateTime>,
    pub ttl_minutes: Option<u32>,
    /// Extra `xmlns:prefix="uri"` attributes on the root element.
    pub extra_namespaces: Vec<(String, String)>,
}

/// Channel logo block; all three fields are required when present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelImage {
    pub url: String,
    pub title: String,
    pub link: String,
}

/// One syndicated entry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Item {
    pub title: String,
    pub link: String,
    pub description: String,
    pub author: Option<EmailSpec>,
    pub comments_url: Option<String>,
    pub enclosure: Option<Enclosure>,
    pub guid: Option<Guid>,
    pub pub_date: Option<RssDateTime>,
}

/// Media attachment reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    pub url: String,
    pub length_bytes: u64,
    pub mime_type: String,
}

/// Per-item unique identifier. When `is_permalink` is true the value
/// doubles as the item's canonical URL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guid {
    pub value: String,
    pub is_permalink: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0} is not a valid language code (expected e.g. \"en\" or \"en-us\")")]
pub struct LanguageError(pub String);

/// ISO-639-style code: two or three lowercase letters, optionally
/// followed by a hyphen and a two-letter region. Never a spoken
/// language name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageCode {
    primary: String,
    region: Option<String>,
}

impl LanguageCode {
    pub fn parse(s: &str) -> Result<Self, LanguageError> {
        let err = || LanguageError(s.to_string());
        let (primary, region) = match s.split_once('-') {
            Some((p, r)) => (p, Some(r)),
            None => (s, None),
        };
        if !(2..=3).contains(&primary.len())
            || !primary.bytes().all(|b| b.is_ascii_lowercase())
        {
            return Err(err());
        }
        if let Some(region) = region {
            if region.len() != 2 || !region.bytes().all(|b| b.is_ascii_lowercase()) {
                return Err(err());
            }
        }
        Ok(LanguageCode {
            primary: primary.to_string(),
            region: region.map(str::to_string),
        })
    }

    pub fn primary(&self) -> &str {
        &self.primary
    }

    pub fn region(&self) -> Option<&str> {
        self.region.as_deref()
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.region {
            Some(region) => write!(f, "{}-{}", self.primary, region),
            None => f.write_str(&self.primary),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("\"{input}\" is not a valid email form: {reason}")]
pub struct EmailError {
    pub input: String,
    pub reason: String,
}

/// An email address with an optional display name, rendered either as
/// `user@site.example` or `user@site.example (Display Name)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmailSpec {
    address: String,
    display_name: Option<String>,
}

/// RFC 2822 atext: the characters allowed in an unquoted local-part atom.
fn is_atext(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b"!#$%&'*+-/=?^_`{|}~".contains(&b)
}

fn is_dot_atom(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(|atom| !atom.is_empty() && atom.bytes().all(is_atext))
}

fn is_hostname(s: &str) -> bool {
    let labels: Vec<&str> = s.split('.').collect();
    labels.len() >= 2
        && labels.iter().all(|label| {
            !label.is_empty()
                && label.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
                && !label.starts_with('-')
                && !label.ends_with('-')
        })
}

impl EmailSpec {
    pub fn new(address: &str, display_name: Option<&str>) -> Result<Self, EmailError> {
        let err = |reason: &str| EmailError {
            input: address.to_string(),
            reason: reason.to_string(),
        };
        let (local, domain) = address
            .split_once('@')
            .ok_or_else(|| err("missing @"))?;
        if !is_dot_atom(local) {
            return Err(err("local part is not a dot-atom"));
        }
        if !is_hostname(domain) {
            return Err(err("domain must be dotted alphanumeric-hyphen labels"));
        }
        if let Some(name) = display_name {
            if name.is_empty() {
                return Err(err("display name must not be empty"));
            }
            if name.contains(['(', ')']) {
                return Err(err("display name must not contain parentheses"));
            }
        }
        Ok(EmailSpec {
            address: address.to_string(),
            display_name: display_name.map(str::to_string),
        })
    }

    /// Parse either accepted textual form. The display name, when
    /// present, is everything between ` (` and the trailing `)`.
    pub fn parse(s: &str) -> Result<Self, EmailError> {
        match s.split_once(" (") {
            Some((address, rest)) => {
                let name = rest.strip_suffix(')').ok_or_else(|| EmailError {
                    input: s.to_string(),
                    reason: "display name is missing its closing parenthesis".to_string(),
                })?;
                EmailSpec::new(address, Some(name))
            }
            None => EmailSpec::new(s, None),
        }
    }

    pub fn address(&self) -> &str {
        &self.address
    }

    pub fn display_name(&self) -> Option<&str> {
        self.display_name.as_deref()
    }
}

impl fmt::Display for EmailSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.display_name {
            Some(name) => write!(f, "{} ({})", self.address, name),
            None => f.write_str(&self.address),
        }
    }
}

/// How a given text-bearing element is rendered: three-character hex
/// escaping, or a CDATA wrapper taken verbatim by readers. The two are
/// mutually exclusive within one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextMode {
    HexEscape,
    Cdata,
}

impl TextMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hex-escape" => Some(TextMode::HexEscape),
            "cdata" => Some(TextMode::Cdata),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TextMode::HexEscape => "hex-escape",
            TextMode::Cdata => "cdata",
        }
    }
}

/// Per-element-kind text rendering choices. The default mirrors the
/// generated feed's house style: plain channel metadata hex-escaped,
/// item titles and descriptions wrapped in CDATA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextPolicy {
    pub channel_text: TextMode,
    pub item_title: TextMode,
    pub item_description: TextMode,
}

impl Default for TextPolicy {
    fn default() -> Self {
        TextPolicy {
            channel_text: TextMode::HexEscape,
            item_title: TextMode::Cdata,
            item_description: TextMode::Cdata,
        }
    }
}

/// Output byte encoding. Latin-1 exists for feeds whose text carries
/// characters that upstream tooling mangles in UTF-8 (curly quotes being
/// the classic case).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    #[default]
    Utf8,
    Iso8859_1,
}

impl Encoding {
    pub fn parse(s: &str) -> Option<Self> {
        // Encoding names are case-insensitive in XML declarations.
        match s.to_ascii_lowercase().as_str() {
            "utf-8" => Some(Encoding::Utf8),
            "iso-8859-1" => Some(Encoding::Iso8859_1),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Encoding::Utf8 => "utf-8",
            Encoding::Iso8859_1 => "iso-8859-1",
        }
    }
}

/// Everything needed to turn a record store into feed bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteConfig {
    /// Channel header; its `last_build_date` is ignored and computed at
    /// build time.
    pub channel: Channel,
    /// Item link pattern containing the literal placeholder
    /// `{articleid}` exactly once.
    pub item_link_template: String,
    /// Zone in which lastBuildDate and pubDate are expressed.
    pub timezone: TimezoneSpec,
    pub max_items: u32,
    pub encoding: Encoding,
    pub text_policy: TextPolicy,
    /// Prefix item descriptions with `ABSTRACT: `.
    pub abstract_prefix: bool,
}

impl Default for SiteConfig {
    fn default() -> Self {
        SiteConfig {
            channel: Channel::default(),
            item_link_template: String::new(),
            timezone: TimezoneSpec::GMT,
            max_items: 10,
            encoding: Encoding::Utf8,
            text_policy: TextPolicy::default(),
            abstract_prefix: true,
        }
    }
}

/// One broken invariant, naming the field it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintViolation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn violation(field: &'static str, message: &str) -> ConstraintViolation {
    ConstraintViolation { field, message: message.to_string() }
}

/// True when `s` starts with a URI scheme (`letter (letter|digit|+|-|.)*`
/// followed by a colon) and has content after it.
pub fn is_absolute_url(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    let mut bytes = scheme.bytes();
    let starts_alpha = bytes.next().is_some_and(|b| b.is_ascii_alphabetic());
    starts_alpha
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'+' || b == b'-' || b == b'.')
        && !rest.is_empty()
}

/// Check every channel invariant; the empty list means the channel is
/// ready to serialize. Each violation names the offending field, with
/// image subfields reported as `image.url` and friends.
pub fn channel_validate_local(channel: &Channel) -> Vec<ConstraintViolation> {
    let mut violations = Vec::new();
    if channel.title.is_empty() {
        violations.push(violation("title", "must not be empty"));
    }
    if channel.link.is_empty() {
        violations.push(violation("link", "must not be empty"));
    } else if !is_absolute_url(&channel.link) {
        violations.push(violation("link", "must be an absolute URL with a scheme"));
    }
    if channel.description.is_empty() {
        violations.push(violation("description", "must not be empty"));
    }
    if let Some(image) = &channel.image {
        if image.url.is_empty() {
            violations.push(violation("image.url", "must not be empty"));
        }
        if image.title.is_empty() {
            violations.push(violation("image.title", "must not be empty"));
        }
        if image.link.is_empty() {
            violations.push(violation("image.link", "must not be empty"));
        }
    }
    for (prefix, uri) in &channel.extra_namespaces {
        if prefix.is_empty() || uri.is_empty() {
            violations.push(violation("extra_namespaces", "prefix and URI must not be empty"));
        }
    }
    violations
}

/// Check every item invariant, mirroring [`channel_validate_local`].
pub fn item_validate_local(item: &Item) -> Vec<ConstraintViolation> {
    let mut violations = Vec::new();
    if item.title.is_empty() && item.description.is_empty() {
        violations.push(violation(
            "title",
            "at least one of title or description must be nonempty",
        ));
    }
    if let Some(enclosure) = &item.enclosure {
        if enclosure.url.is_empty() {
            violations.push(violation("enclosure.url", "must not be empty"));
        }
        if enclosure.mime_type.is_empty() {
            violations.push(violation("enclosure.mime_type", "must not be empty"));
        }
    }
    violations
}

impl SiteConfig {
    /// Configuration-level invariants: the link template has exactly one
    /// placeholder, at least one item is requested, and the embedded
    /// channel is itself valid.
    pub fn violations(&self) -> Vec<ConstraintViolation> {
        let mut violations = channel_validate_local(&self.channel);
        match self.item_link_template.matches("{articleid}").count() {
            1 => {}
            0 => violations.push(violation(
                "item_link_template",
                "must contain the placeholder {articleid}",
            )),
            _ => violations.push(violation(
                "item_link_template",
                "must contain {articleid} exactly once",
            )),
        }
        if self.max_items == 0 {
            violations.push(violation("max_items", "must be at least 1"));
        }
        violations
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_channel() -> Channel {
        Channel {
            title: "t".to_string(),
            link: "http://e.example/".to_string(),
            description: "d".to_string(),
            ..Channel::default()
        }
    }

    #[test]
    fn full_channel_passes() {
        let channel = Channel {
            title: "the JournalSite".to_string(),
            link: "http://www.journalsite.tk".to_string(),
            description: "Instant eJournal for Self Publishing Authors!".to_string(),
            ..Channel::default()
        };
        assert_eq!(channel_validate_local(&channel), vec![]);
    }

    #[test]
    fn empty_title_is_named() {
        let channel = Channel { title: String::new(), ..minimal_channel() };
        let violations = channel_validate_local(&channel);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].field, "title");
    }

    #[test]
    fn empty_image_subfield_is_named() {
        let channel = Channel {
            image: Some(ChannelImage {
                url: "http://x.example/logo.png".to_string(),
                title: String::new(),
                link: "http://x.example".to_string(),
            }),
            ..minimal_channel()
        };
        let violations = channel_validate_local(&channel);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].field, "image.title");
    }

    #[test]
    fn relative_link_is_rejected() {
        let channel = Channel { link: "/feed".to_string(), ..minimal_channel() };
        assert_eq!(channel_validate_local(&channel)[0].field, "link");
        let channel = Channel { link: "www.example.org".to_string(), ..minimal_channel() };
        assert!(!channel_validate_local(&channel).is_empty());
    }

    #[test]
    fn absolute_url_shapes() {
        assert!(is_absolute_url("http://www.journalsite.tk"));
        assert!(is_absolute_url("https://e.example/a?b=c"));
        assert!(is_absolute_url("mailto:user@site.example"));
        assert!(!is_absolute_url("//protocol-relative.example"));
        assert!(!is_absolute_url("no-colon"));
        assert!(!is_absolute_url("1http://bad-scheme.example"));
        assert!(!is_absolute_url("scheme:"));
    }

    #[test]
    fn item_needs_title_or_description() {
        let empty = Item::default();
        assert_eq!(item_validate_local(&empty).len(), 1);
        let titled = Item { title: "t".to_string(), ..Item::default() };
        assert_eq!(item_validate_local(&titled), vec![]);
        let described = Item { description: "d".to_string(), ..Item::default() };
        assert_eq!(item_validate_local(&described), vec![]);
    }

    #[test]
    fn enclosure_fields_are_checked() {
        let item = Item {
            title: "t".to_string(),
            enclosure: Some(Enclosure {
                url: String::new(),
                length_bytes: 0,
                mime_type: "audio/mpeg".to_string(),
            }),
            ..Item::default()
        };
        assert_eq!(item_validate_local(&item)[0].field, "enclosure.url");
    }

    #[test]
    fn language_codes_round_trip() {
        for code in ["en", "en-us", "fra", "pt-br"] {
            let parsed = LanguageCode::parse(code).unwrap();
            assert_eq!(parsed.to_string(), code);
            assert_eq!(LanguageCode::parse(&parsed.to_string()).unwrap(), parsed);
        }
    }

    #[test]
    fn spoken_names_are_not_language_codes() {
        for bad in ["English", "english", "en_US", "e", "en-usa", "en-", "EN-US", "abcd"] {
            assert!(LanguageCode::parse(bad).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn email_forms_round_trip() {
        let bare = EmailSpec::parse("umakant@trizsite.tk").unwrap();
        assert_eq!(bare.address(), "umakant@trizsite.tk");
        assert_eq!(bare.display_name(), None);
        assert_eq!(bare.to_string(), "umakant@trizsite.tk");

        let named = EmailSpec::parse("umakant@trizsite.tk (Umakant Mishra)").unwrap();
        assert_eq!(named.address(), "umakant@trizsite.tk");
        assert_eq!(named.display_name(), Some("Umakant Mishra"));
        assert_eq!(EmailSpec::parse(&named.to_string()).unwrap(), named);
    }

    #[test]
    fn bad_email_forms_are_rejected() {
        for bad in [
            "no-at-sign",
            "user@nodot",
            "user@-bad.example",
            "user@bad-.example",
            "@site.example",
            "user@site.example (",
            "user@site.example (unclosed",
            "user@site.example ()",
            "us..er@site.example",
            "Umakant Mishra (umakant@trizsite.tk)",
        ] {
            assert!(EmailSpec::parse(bad).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn text_mode_and_encoding_labels_round_trip() {
        for mode in [TextMode::HexEscape, TextMode::Cdata] {
            assert_eq!(TextMode::parse(mode.label()), Some(mode));
        }
        for encoding in [Encoding::Utf8, Encoding::Iso8859_1] {
            assert_eq!(Encoding::parse(encoding.label()), Some(encoding));
        }
        assert_eq!(Encoding::parse("UTF-8"), Some(Encoding::Utf8));
        assert_eq!(Encoding::parse("latin1"), None);
    }

    #[test]
    fn config_template_must_have_one_placeholder() {
        let mut config = SiteConfig {
            channel: minimal_channel(),
            item_link_template: "http://e.example/view?articleid={articleid}".to_string(),
            ..SiteConfig::default()
        };
        assert_eq!(config.violations(), vec![]);

        config.item_link_template = "http://e.example/view".to_string();
        assert_eq!(config.violations()[0].field, "item_link_template");

        config.item_link_template = "{articleid}/{articleid}".to_string();
        assert_eq!(config.violations()[0].field, "item_link_template");
    }

    #[test]
    fn config_rejects_zero_max_items() {
        let config = SiteConfig {
            channel: minimal_channel(),
            item_link_template: "x{articleid}".to_string(),
            max_items: 0,
            ..SiteConfig::default()
        };
        assert_eq!(config.violations()[0].field, "max_items");
    }
}
