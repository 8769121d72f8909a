//! RSS 2.0 feed toolkit: build feeds from an article record store, parse
//! and validate arbitrary feeds with line-numbered diagnostics, and fetch
//! remote feeds with unread tracking.
//!
//! The crate is organized around four jobs:
//!
//! * [`store`] + [`model`] — load article records, select the publishable
//!   ones, and assemble a [`model::Channel`] ready for serialization.
//! * [`xml`] — serialize a channel to RSS 2.0 bytes and parse feed bytes
//!   back into a positioned document tree. The parser is deliberately
//!   lenient about raw `&`/`<`/`>` so the validator can point at them.
//! * [`validate`] — run the rule catalog over a parsed document and render
//!   findings as human- or machine-readable report lines.
//! * [`fetch`] — download a feed over HTTP, diff it against a seen-state
//!   file, and honor `<ttl>` poll intervals.
//!
//! Dates follow the RFC-822-style shapes RSS uses ([`rfc822`]); text
//! escaping offers hex entities or CDATA per element ([`model::TextPolicy`]).

pub mod config;
pub mod fetch;
pub mod model;
pub mod rfc822;
pub mod store;
pub mod tsv;
pub mod validate;
pub mod xml;

pub use model::{
    Channel, ChannelImage, EmailSpec, Enclosure, Guid, Item, LanguageCode, SiteConfig, TextMode,
    TextPolicy,
};
pub use rfc822::{RssDateTime, TimezoneSpec};
pub use validate::{Severity, ValidationFinding, ValidationReport};
