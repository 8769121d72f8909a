//! Site configuration files.
//!
//! A configuration is a flat `key = value` text file, one pair per
//! line, with `#` comments and blank lines ignored. Keys mirror the
//! [`SiteConfig`](crate::model::SiteConfig) fields; the nested image
//! block uses dotted keys. The full key set:
//!
//! | key | value |
//! |---|---|
//! | `title`, `link`, `description` | required channel text |
//! | `language` | e.g. `en-us` |
//! | `copyright` | free text |
//! | `creator` | `addr@host` or `addr@host (Name)` |
//! | `docs` | format documentation URL |
//! | `ttl` | caching lifetime in minutes |
//! | `image.url`, `image.title`, `image.link` | channel image block |
//! | `namespace.<prefix>` | extra `xmlns:` declaration |
//! | `item_link_template` | must contain `{articleid}` exactly once |
//! | `timezone` | `GMT`, `EST`, ... or `+0530` |
//! | `max_items` | feed window size, default 10 |
//! | `encoding` | `utf-8` (default) or `iso-8859-1` |
//! | `text_mode.channel` | `hex-escape` (default) or `cdata` |
//! | `text_mode.item_title` | `cdata` (default) or `hex-escape` |
//! | `text_mode.item_description` | `cdata` (default) or `hex-escape` |
//! | `abstract_prefix` | `true` (default) or `false` |
//!
//! Unknown and duplicate keys are errors, not warnings: a typo in a
//! config should stop the build, not silently fall back to a default.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::model::{
    ChannelImage, ConstraintViolation, EmailSpec, Encoding, LanguageCode, SiteConfig, TextMode,
};
use crate::rfc822::TimezoneSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {problem}")]
    Line { path: String, line: usize, problem: String },
    #[error("{path}: invalid configuration: {}", join_violations(violations))]
    Invalid { path: String, violations: Vec<ConstraintViolation> },
}

fn join_violations(violations: &[ConstraintViolation]) -> String {
    let parts: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    parts.join("; ")
}

/// Read and fully validate a site configuration file.
///
/// Every broken rule is reported where it is most precise: value-level
/// problems (an unparsable timezone, an unknown key) name the line,
/// while cross-field problems (a missing required field, a template
/// without its placeholder) name the field.
pub fn load_config(path: &Path) -> Result<SiteConfig, ConfigError> {
    let path_text = path.display().to_string();
    let content = fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path_text.clone(), source })?;

    let mut config = SiteConfig::default();
    let mut image_url = None;
    let mut image_title = None;
    let mut image_link = None;
    let mut seen: Vec<String> = Vec::new();

    for (index, raw_line) in content.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let line_err = |problem: String| ConfigError::Line {
            path: path_text.clone(),
            line: line_no,
            problem,
        };
        let Some((raw_key, raw_value)) = line.split_once('=') else {
            return Err(line_err("expected \"key = value\"".to_string()));
        };
        let key = raw_key.trim();
        let value = raw_value.trim();
        if key.is_empty() {
            return Err(line_err("key must not be empty".to_string()));
        }
        if seen.iter().any(|k| k == key) {
            return Err(line_err(format!("duplicate key \"{key}\"")));
        }
        seen.push(key.to_string());

        let value_err =
            |reason: String| line_err(format!("key \"{key}\": {reason}"));
        match key {
            "title" => config.channel.title = value.to_string(),
            "link" => config.channel.link = value.to_string(),
            "description" => config.channel.description = value.to_string(),
            "language" => {
                config.channel.language = Some(
                    LanguageCode::parse(value).map_err(|e| value_err(e.to_string()))?,
                );
            }
            "copyright" => config.channel.copyright = Some(value.to_string()),
            "creator" => {
                config.channel.creator =
                    Some(EmailSpec::parse(value).map_err(|e| value_err(e.to_string()))?);
            }
            "docs" => config.channel.docs_url = Some(value.to_string()),
            "ttl" => {
                config.channel.ttl_minutes = Some(value.parse().map_err(|_| {
                    value_err(format!("\"{value}\" is not a whole number of minutes"))
                })?);
            }
            "image.url" => image_url = Some(value.to_string()),
            "image.title" => image_title = Some(value.to_string()),
            "image.link" => image_link = Some(value.to_string()),
            "item_link_template" => config.item_link_template = value.to_string(),
            "timezone" => {
                config.timezone = TimezoneSpec::parse(value)
                    .ok_or_else(|| value_err(format!("\"{value}\" is not a known zone")))?;
            }
            "max_items" => {
                config.max_items = value.parse().map_err(|_| {
                    value_err(format!("\"{value}\" is not a whole number"))
                })?;
            }
            "encoding" => {
                config.encoding = Encoding::parse(value).ok_or_else(|| {
                    value_err(format!("\"{value}\" is not utf-8 or iso-8859-1"))
                })?;
            }
            "abstract_prefix" => {
                config.abstract_prefix = match value {
                    "true" => true,
                    "false" => false,
                    other => return Err(value_err(format!("\"{other}\" is not true or false"))),
                };
            }
            _ if key.starts_with("text_mode.") => {
                let mode = TextMode::parse(value).ok_or_else(|| {
                    value_err(format!("\"{value}\" is not hex-escape or cdata"))
                })?;
                match &key["text_mode.".len()..] {
                    "channel" => config.text_policy.channel_text = mode,
                    "item_title" => config.text_policy.item_title = mode,
                    "item_description" => config.text_policy.item_description = mode,
                    other => {
                        return Err(line_err(format!(
                            "unknown text_mode target \"{other}\" (expected channel, \
                             item_title or item_description)"
                        )));
                    }
                }
            }
            _ if key.starts_with("namespace.") => {
                let prefix = &key["namespace.".len()..];
                config
                    .channel
                    .extra_namespaces
                    .push((prefix.to_string(), value.to_string()));
            }
            other => return Err(line_err(format!("unknown key \"{other}\""))),
        }
    }

    if image_url.is_some() || image_title.is_some() || image_link.is_some() {
        config.channel.image = Some(ChannelImage {
            url: image_url.unwrap_or_default(),
            title: image_title.unwrap_or_default(),
            link: image_link.unwrap_or_default(),
        });
    }

    let violations = config.violations();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid { path: path_text, violations })
    }
}
