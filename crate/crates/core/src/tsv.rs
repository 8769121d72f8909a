//! Escaping for tab-separated record lines: embedded tabs, newlines and
//! carriage returns become `\t`/`\n`/`\r`, backslash doubles itself,
//! everything else passes through. Unescape is the exact inverse.
//!
//! Carriage returns must be escaped because files are read line-wise
//! and a literal `\r` before a line ending would be folded into it.

pub fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

/// Decode one escaped field. A trailing lone backslash or an unknown
/// escape is an error described in the returned string.
pub fn unescape_field(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling backslash at end of field".to_string()),
        }
    }
    Ok(out)
}
