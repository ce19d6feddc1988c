//! Line-oriented `key=value` logging to stderr.

use std::fmt::Display;
use std::io::Write;

/// Quotes a value when it contains whitespace, `=` or quotes.
pub fn format_value(v: &str) -> String {
    if v.is_empty() || v.contains(|c: char| c.is_whitespace() || c == '=' || c == '"') {
        format!("{:?}", v)
    } else {
        v.to_string()
    }
}

pub fn format_line(event: &str, fields: &[(&str, &dyn Display)]) -> String {
    let mut line = format!("event={}", format_value(event));
    for (k, v) in fields {
        line.push(' ');
        line.push_str(k);
        line.push('=');
        line.push_str(&format_value(&v.to_string()));
    }
    line
}

pub fn log(event: &str, fields: &[(&str, &dyn Display)]) {
    let _ = writeln!(std::io::stderr().lock(), "{}", format_line(event, fields));
}
