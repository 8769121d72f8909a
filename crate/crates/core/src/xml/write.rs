//! Feed serialization: model → RSS 2.0 document bytes.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{
    channel_validate_local, item_validate_local, Channel, ConstraintViolation, Encoding, Item,
    SiteConfig, TextMode,
};

use super::{escape_hex, is_xml_invalid, wrap_cdata};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SerializeError {
    #[error("invalid {subject}: {}", format_violations(.violations))]
    InvalidModel { subject: String, violations: Vec<ConstraintViolation> },
    #[error("element <{element}> contains U+{:04X}, which XML cannot carry", *.ch as u32)]
    InvalidChar { element: String, ch: char },
}

fn format_violations(violations: &[ConstraintViolation]) -> String {
    violations.iter().map(ConstraintViolation::to_string).collect::<Vec<_>>().join("; ")
}

/// Render one text node in hex-escape mode. Characters the target
/// encoding cannot carry become numeric character references, which
/// decode back to the original text on re-parse.
fn render_hex(text: &str, encoding: Encoding, element: &str) -> Result<String, SerializeError> {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if is_xml_invalid(c) {
            return Err(SerializeError::InvalidChar { element: element.to_string(), ch: c });
        }
        match c {
            '&' => out.push_str("&#x26;"),
            '<' => out.push_str("&#x3C;"),
            '>' => out.push_str("&#x3E;"),
            c if encoding == Encoding::Iso8859_1 && c as u32 > 0xFF => {
                write!(out, "&#x{:X};", c as u32).expect("write to String cannot fail")
            }
            c => out.push(c),
        }
    }
    if encoding == Encoding::Utf8 {
        debug_assert_eq!(out, escape_hex(text), "char-wise pass must agree with escape_hex");
    }
    Ok(out)
}

/// Render one text node per the requested mode. CDATA cannot carry
/// characters the target encoding lacks (character references are not
/// recognized inside a CDATA section), so such nodes fall back to
/// hex-escape rendering; each node still uses exactly one mechanism.
fn render_text(
    text: &str,
    mode: TextMode,
    encoding: Encoding,
    element: &str,
) -> Result<String, SerializeError> {
    let encodable = encoding == Encoding::Utf8 || text.chars().all(|c| (c as u32) <= 0xFF);
    match mode {
        TextMode::Cdata if encodable => {
            if let Some(c) = text.chars().find(|&c| is_xml_invalid(c)) {
                return Err(SerializeError::InvalidChar { element: element.to_string(), ch: c });
            }
            Ok(wrap_cdata(text))
        }
        _ => render_hex(text, encoding, element),
    }
}

/// Escape an attribute value. Attributes use the named entities so the
/// hex-reference scan that enforces text-node exclusivity never matches
/// inside a tag.
fn render_attr(value: &str, encoding: Encoding, element: &str) -> Result<String, SerializeError> {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        if is_xml_invalid(c) {
            return Err(SerializeError::InvalidChar { element: element.to_string(), ch: c });
        }
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c if encoding == Encoding::Iso8859_1 && c as u32 > 0xFF => {
                write!(out, "&#x{:X};", c as u32).expect("write to String cannot fail")
            }
            c => out.push(c),
        }
    }
    Ok(out)
}

struct FeedWriter {
    out: String,
    encoding: Encoding,
}

impl FeedWriter {
    /// One `<name>content</name>` line at the given indent depth.
    fn element(
        &mut self,
        depth: usize,
        name: &str,
        text: &str,
        mode: TextMode,
    ) -> Result<(), SerializeError> {
        let rendered = render_text(text, mode, self.encoding, name)?;
        let pad = "  ".repeat(depth);
        writeln!(self.out, "{pad}<{name}>{rendered}</{name}>")
            .expect("write to String cannot fail");
        Ok(())
    }

    fn line(&mut self, depth: usize, content: &str) {
        let pad = "  ".repeat(depth);
        writeln!(self.out, "{pad}{content}").expect("write to String cannot fail");
    }
}

/// Serialize a validated channel and its items to document bytes.
///
/// Layout is fixed: the declaration line, an `<rss version="2.0">` root
/// carrying any extra namespace attributes, one `<channel>` with fields
/// in the order title, link, description, language, creator, copyright,
/// image, docs, lastBuildDate, ttl, then the items in input order with
/// fields in the order title, link, description, pubDate, author,
/// comments, enclosure, guid. Optional fields are omitted when absent.
pub fn serialize_feed(
    channel: &Channel,
    items: &[Item],
    config: &SiteConfig,
) -> Result<Vec<u8>, SerializeError> {
    let violations = channel_validate_local(channel);
    if !violations.is_empty() {
        return Err(SerializeError::InvalidModel { subject: "channel".to_string(), violations });
    }
    for (index, item) in items.iter().enumerate() {
        let violations = item_validate_local(item);
        if !violations.is_empty() {
            return Err(SerializeError::InvalidModel {
                subject: format!("item {index}"),
                violations,
            });
        }
    }

    let encoding = config.encoding;
    let policy = config.text_policy;
    let mut w = FeedWriter { out: String::new(), encoding };

    w.line(0, &format!("<?xml version=\"1.0\" encoding=\"{}\"?>", encoding.label()));
    let mut root = String::from("<rss version=\"2.0\"");
    for (prefix, uri) in &channel.extra_namespaces {
        write!(root, " xmlns:{}=\"{}\"", prefix, render_attr(uri, encoding, "rss")?)
            .expect("write to String cannot fail");
    }
    root.push('>');
    w.line(0, &root);
    w.line(1, "<channel>");

    let ch = policy.channel_text;
    w.element(2, "title", &channel.title, ch)?;
    w.element(2, "link", &channel.link, TextMode::HexEscape)?;
    w.element(2, "description", &channel.description, ch)?;
    if let Some(language) = &channel.language {
        w.element(2, "language", &language.to_string(), TextMode::HexEscape)?;
    }
    if let Some(creator) = &channel.creator {
        // The dc:creator spelling is used as soon as the dc prefix is
        // declared on the root; otherwise the element stays bare.
        let has_dc = channel.extra_namespaces.iter().any(|(p, _)| p == "dc");
        let name = if has_dc { "dc:creator" } else { "creator" };
        w.element(2, name, &creator.to_string(), TextMode::HexEscape)?;
    }
    if let Some(copyright) = &channel.copyright {
        w.element(2, "copyright", copyright, ch)?;
    }
    if let Some(image) = &channel.image {
        w.line(2, "<image>");
        w.element(3, "url", &image.url, TextMode::HexEscape)?;
        w.element(3, "title", &image.title, TextMode::HexEscape)?;
        w.element(3, "link", &image.link, TextMode::HexEscape)?;
        w.line(2, "</image>");
    }
    if let Some(docs) = &channel.docs_url {
        w.element(2, "docs", docs, TextMode::HexEscape)?;
    }
    if let Some(date) = &channel.last_build_date {
        w.element(2, "lastBuildDate", &date.to_string(), TextMode::HexEscape)?;
    }
    if let Some(ttl) = channel.ttl_minutes {
        w.element(2, "ttl", &ttl.to_string(), TextMode::HexEscape)?;
    }

    for item in items {
        w.line(2, "<item>");
        w.element(3, "title", &item.title, policy.item_title)?;
        w.element(3, "link", &item.link, TextMode::HexEscape)?;
        w.element(3, "description", &item.description, policy.item_description)?;
        if let Some(date) = &item.pub_date {
            w.element(3, "pubDate", &date.to_string(), TextMode::HexEscape)?;
        }
        if let Some(author) = &item.author {
            w.element(3, "author", &author.to_string(), TextMode::HexEscape)?;
        }
        if let Some(comments) = &item.comments_url {
            w.element(3, "comments", comments, TextMode::HexEscape)?;
        }
        if let Some(enclosure) = &item.enclosure {
            w.line(
                3,
                &format!(
                    "<enclosure url=\"{}\" length=\"{}\" type=\"{}\"/>",
                    render_attr(&enclosure.url, encoding, "enclosure")?,
                    enclosure.length_bytes,
                    render_attr(&enclosure.mime_type, encoding, "enclosure")?,
                ),
            );
        }
        if let Some(guid) = &item.guid {
            let rendered = render_text(&guid.value, TextMode::HexEscape, encoding, "guid")?;
            w.line(
                3,
                &format!(
                    "<guid isPermaLink=\"{}\">{}</guid>",
                    if guid.is_permalink { "true" } else { "false" },
                    rendered,
                ),
            );
        }
        w.line(2, "</item>");
    }

    w.line(1, "</channel>");
    w.line(0, "</rss>");

    Ok(match encoding {
        Encoding::Utf8 => w.out.into_bytes(),
        Encoding::Iso8859_1 => w
            .out
            .chars()
            .map(|c| {
                debug_assert!((c as u32) <= 0xFF, "non-latin-1 char survived escaping: {c:?}");
                c as u8
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChannelImage, Guid, TextPolicy};
    use crate::rfc822::{RssDateTime, TimezoneSpec};

    fn minimal_channel() -> Channel {
        Channel {
            title: "t".to_string(),
            link: "http://e.example/".to_string(),
            description: "d".to_string(),
            ..Channel::default()
        }
    }

    fn hex_config() -> SiteConfig {
        SiteConfig {
            text_policy: TextPolicy {
                channel_text: TextMode::HexEscape,
                item_title: TextMode::HexEscape,
                item_description: TextMode::HexEscape,
            },
            ..SiteConfig::default()
        }
    }

    fn as_text(bytes: Vec<u8>) -> String {
        String::from_utf8(bytes).unwrap()
    }

    #[test]
    fn minimal_channel_layout() {
        let doc = as_text(serialize_feed(&minimal_channel(), &[], &hex_config()).unwrap());
        assert_eq!(
            doc,
            "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n\
             <rss version=\"2.0\">\n\
            \x20 <channel>\n\
            \x20   <title>t</title>\n\
            \x20   <link>http://e.example/</link>\n\
            \x20   <description>d</description>\n\
            \x20 </channel>\n\
             </rss>\n"
        );
    }

    #[test]
    fn declaration_names_the_latin1_encoding() {
        let config = SiteConfig { encoding: Encoding::Iso8859_1, ..hex_config() };
        let doc = serialize_feed(&minimal_channel(), &[], &config).unwrap();
        assert!(doc.starts_with(b"<?xml version=\"1.0\" encoding=\"iso-8859-1\"?>\n"));
    }

    #[test]
    fn invalid_channel_is_rejected_before_output() {
        let channel = Channel { title: String::new(), ..minimal_channel() };
        let err = serialize_feed(&channel, &[], &hex_config()).unwrap_err();
        assert!(err.to_string().contains("title"));
    }

    #[test]
    fn channel_fields_render_in_fixed_order() {
        let channel = Channel {
            language: Some(crate::model::LanguageCode::parse("en-us").unwrap()),
            creator: Some(crate::model::EmailSpec::parse("a@b.example (N)").unwrap()),
            copyright: Some("c".to_string()),
            image: Some(ChannelImage {
                url: "http://e.example/logo.png".to_string(),
                title: "t".to_string(),
                link: "http://e.example/".to_string(),
            }),
            docs_url: Some("http://docs.example/rss".to_string()),
            last_build_date: Some(
                RssDateTime::new(2013, 6, 30, 15, 21, 36, TimezoneSpec::GMT).unwrap(),
            ),
            ttl_minutes: Some(240),
            ..minimal_channel()
        };
        let doc = as_text(serialize_feed(&channel, &[], &hex_config()).unwrap());
        let order = [
            "<title>", "<link>", "<description>", "<language>", "<creator>", "<copyright>",
            "<image>", "<docs>", "<lastBuildDate>", "<ttl>",
        ];
        let indexes: Vec<usize> = order.iter().map(|tag| doc.find(tag).unwrap()).collect();
        let mut sorted = indexes.clone();
        sorted.sort_unstable();
        assert_eq!(indexes, sorted, "channel children out of order in:\n{doc}");
        assert!(doc.contains("<lastBuildDate>Sun, 30 Jun 2013 15:21:36 GMT</lastBuildDate>"));
        assert!(doc.contains("<ttl>240</ttl>"));
    }

    #[test]
    fn creator_uses_dc_prefix_when_namespace_declared() {
        let mut channel = Channel {
            creator: Some(crate::model::EmailSpec::parse("a@b.example").unwrap()),
            ..minimal_channel()
        };
        let doc = as_text(serialize_feed(&channel, &[], &hex_config()).unwrap());
        assert!(doc.contains("<creator>a@b.example</creator>"));

        channel.extra_namespaces =
            vec![("dc".to_string(), "http://purl.org/dc/elements/1.1/".to_string())];
        let doc = as_text(serialize_feed(&channel, &[], &hex_config()).unwrap());
        assert!(doc.contains("xmlns:dc=\"http://purl.org/dc/elements/1.1/\""));
        assert!(doc.contains("<dc:creator>a@b.example</dc:creator>"));
    }

    #[test]
    fn item_fields_render_in_fixed_order() {
        let item = Item {
            title: "t".to_string(),
            link: "http://e.example/1".to_string(),
            description: "d".to_string(),
            pub_date: Some(RssDateTime::new(2013, 6, 30, 15, 21, 36, TimezoneSpec::GMT).unwrap()),
            author: Some(crate::model::EmailSpec::parse("a@b.example").unwrap()),
            comments_url: Some("http://e.example/1#comments".to_string()),
            enclosure: Some(crate::model::Enclosure {
                url: "http://e.example/1.mp3".to_string(),
                length_bytes: 123,
                mime_type: "audio/mpeg".to_string(),
            }),
            guid: Some(Guid { value: "http://e.example/1".to_string(), is_permalink: true }),
        };
        let doc = as_text(serialize_feed(&minimal_channel(), &[item], &hex_config()).unwrap());
        let item_block = &doc[doc.find("<item>").unwrap()..];
        let order = [
            "<title>t", "<link>http://e.example/1<", "<description>d", "<pubDate>",
            "<author>", "<comments>", "<enclosure", "<guid", "</item>",
        ];
        let indexes: Vec<usize> = order.iter().map(|tag| item_block.find(tag).unwrap()).collect();
        let mut sorted = indexes.clone();
        sorted.sort_unstable();
        assert_eq!(indexes, sorted, "item children out of order in:\n{doc}");
        assert!(doc.contains(
            "<enclosure url=\"http://e.example/1.mp3\" length=\"123\" type=\"audio/mpeg\"/>"
        ));
        assert!(doc.contains("<guid isPermaLink=\"true\">http://e.example/1</guid>"));
    }

    #[test]
    fn cdata_mode_wraps_item_text() {
        let config = SiteConfig::default(); // item title/description default to CDATA
        let item = Item {
            title: "A <b>bold</b> title".to_string(),
            link: "http://e.example/1".to_string(),
            description: "x < y".to_string(),
            ..Item::default()
        };
        let doc = as_text(serialize_feed(&minimal_channel(), &[item], &config).unwrap());
        assert!(doc.contains("<title><![CDATA[A <b>bold</b> title]]></title>"));
        assert!(doc.contains("<description><![CDATA[x < y]]></description>"));
    }

    #[test]
    fn hex_mode_escapes_item_text() {
        let item = Item {
            title: "Tom & Jerry".to_string(),
            link: "http://e.example/1".to_string(),
            description: "A<B".to_string(),
            ..Item::default()
        };
        let doc = as_text(serialize_feed(&minimal_channel(), &[item], &hex_config()).unwrap());
        assert!(doc.contains("<title>Tom &#x26; Jerry</title>"));
        assert!(doc.contains("<description>A&#x3C;B</description>"));
    }

    #[test]
    fn latin1_hex_mode_carries_curly_quotes_as_references() {
        let channel = Channel {
            description: "\u{2018}curly\u{2019} \u{201C}quotes\u{201D}".to_string(),
            ..minimal_channel()
        };
        let config = SiteConfig { encoding: Encoding::Iso8859_1, ..hex_config() };
        let doc = serialize_feed(&channel, &[], &config).unwrap();
        let text = doc.iter().map(|&b| b as char).collect::<String>();
        assert!(text.contains("&#x2018;curly&#x2019; &#x201C;quotes&#x201D;"));
        assert!(doc.iter().all(|&b| b < 0x80), "latin-1 output should be pure ASCII here");
    }

    #[test]
    fn latin1_cdata_mode_falls_back_to_references_per_node() {
        let items = [
            Item {
                title: "plain".to_string(),
                link: "http://e.example/1".to_string(),
                description: "no fancy characters".to_string(),
                ..Item::default()
            },
            Item {
                title: "\u{2018}curly\u{2019}".to_string(),
                link: "http://e.example/2".to_string(),
                description: "also plain".to_string(),
                ..Item::default()
            },
        ];
        let config = SiteConfig { encoding: Encoding::Iso8859_1, ..SiteConfig::default() };
        let doc = serialize_feed(&minimal_channel(), &items, &config).unwrap();
        let text = doc.iter().map(|&b| b as char).collect::<String>();
        // The node the encoding can carry keeps its CDATA wrapper; the one
        // it cannot switches wholesale to references.
        assert!(text.contains("<title><![CDATA[plain]]></title>"));
        assert!(text.contains("<title>&#x2018;curly&#x2019;</title>"));
    }

    #[test]
    fn latin1_passes_native_bytes_through() {
        let channel = Channel { description: "caf\u{E9} na\u{EF}ve".to_string(), ..minimal_channel() };
        let config = SiteConfig { encoding: Encoding::Iso8859_1, ..hex_config() };
        let doc = serialize_feed(&channel, &[], &config).unwrap();
        let needle: Vec<u8> = "caf\u{E9} na\u{EF}ve".chars().map(|c| c as u8).collect();
        assert!(
            doc.windows(needle.len()).any(|w| w == needle),
            "latin-1 chars should be emitted as single bytes"
        );
    }

    #[test]
    fn utf8_emits_curly_quotes_as_multibyte() {
        let channel = Channel { description: "\u{201C}q\u{201D}".to_string(), ..minimal_channel() };
        let doc = serialize_feed(&channel, &[], &hex_config()).unwrap();
        let text = String::from_utf8(doc).unwrap();
        assert!(text.contains("\u{201C}q\u{201D}"));
    }

    #[test]
    fn control_characters_are_reported_with_element_name() {
        let channel = Channel { description: "bad\u{0}".to_string(), ..minimal_channel() };
        let err = serialize_feed(&channel, &[], &hex_config()).unwrap_err();
        assert!(matches!(err, SerializeError::InvalidChar { ref element, .. } if element == "description"));

        let config = SiteConfig::default();
        let item = Item {
            title: "ok".to_string(),
            link: "http://e.example/1".to_string(),
            description: "bad\u{1}".to_string(),
            ..Item::default()
        };
        let err = serialize_feed(&minimal_channel(), &[item], &config).unwrap_err();
        assert!(matches!(err, SerializeError::InvalidChar { ref element, .. } if element == "description"));
    }

    #[test]
    fn tab_and_newline_are_legal_text() {
        let item = Item {
            title: "a\tb".to_string(),
            link: "http://e.example/1".to_string(),
            description: "line one\nline two".to_string(),
            ..Item::default()
        };
        assert!(serialize_feed(&minimal_channel(), &[item], &SiteConfig::default()).is_ok());
    }

    #[test]
    fn attribute_values_use_named_entities() {
        let item = Item {
            title: "t".to_string(),
            link: "http://e.example/1".to_string(),
            description: "d".to_string(),
            enclosure: Some(crate::model::Enclosure {
                url: "http://e.example/a?b=1&c=\"2\"".to_string(),
                length_bytes: 9,
                mime_type: "audio/mpeg".to_string(),
            }),
            ..Item::default()
        };
        let doc = as_text(serialize_feed(&minimal_channel(), &[item], &hex_config()).unwrap());
        assert!(doc.contains("url=\"http://e.example/a?b=1&amp;c=&quot;2&quot;\""));
    }
}
