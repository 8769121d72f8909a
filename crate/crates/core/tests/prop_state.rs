//! The seen-state file must reproduce any state it can hold, however
//! hostile the item keys (tabs, newlines, carriage returns, multi-byte
//! text) and however many feeds are tracked.

use feedforge_core::fetch::{diff_unread, load_state, save_state, SeenState};
use feedforge_core::rfc822::{RssDateTime, TimezoneSpec};
use feedforge_core::xml::{parse_feed, ParsedFeed};
use feedforge_core::{Guid, Item};
use proptest::prelude::*;

fn feed_with_keys(keys: &[String]) -> ParsedFeed {
    let shell = "<rss version=\"2.0\"><channel><title>t</title>\
                 <link>http://e/</link><description>d</description></channel></rss>";
    let mut feed = parse_feed(shell.as_bytes()).unwrap();
    feed.items = keys
        .iter()
        .map(|key| Item {
            title: "x".to_string(),
            guid: Some(Guid { value: key.clone(), is_permalink: false }),
            ..Item::default()
        })
        .collect();
    feed
}

fn arb_key() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z0-9:/._-]{1,30}",
        Just("key\twith\ttabs".to_string()),
        Just("key\nwith\nnewlines".to_string()),
        Just("trailing cr\r".to_string()),
        Just("back\\slash".to_string()),
        Just("caf\u{E9} \u{201C}smart\u{201D}".to_string()),
        Just("#looks-like-a-comment".to_string()),
    ]
}

fn arb_url() -> impl Strategy<Value = String> {
    "[a-z]{2,8}".prop_map(|host| format!("http://{host}.example/feed.xml"))
}

fn arb_date() -> impl Strategy<Value = RssDateTime> {
    (1990..=2050i32, 1..=12u8, 1..=28u8, 0..24u8, 0..60u8, 0..60u8, -840..=840i32).prop_map(
        |(year, month, day, hour, minute, second, offset)| {
            RssDateTime::new(year, month, day, hour, minute, second, TimezoneSpec::Offset(offset))
                .unwrap()
        },
    )
}

fn arb_state() -> impl Strategy<Value = SeenState> {
    prop::collection::vec(
        (arb_url(), prop::collection::vec(arb_key(), 0..12), arb_date()),
        0..6,
    )
    .prop_map(|feeds| {
        let mut state = SeenState::default();
        for (url, keys, fetched_at) in feeds {
            let feed = feed_with_keys(&keys);
            (_, state) = diff_unread(&feed, &state, &url, &fetched_at);
        }
        state
    })
}

proptest! {
    #[test]
    fn state_survives_save_and_load(state in arb_state()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seen.tsv");
        save_state(&state, &path).unwrap();
        let reloaded = load_state(&path).unwrap();
        prop_assert_eq!(reloaded, state);
    }
}
