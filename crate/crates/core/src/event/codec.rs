//! Line-based event text format.
//!
//! ```text
//! - command: HaveLeaf
//!   id: Editor
//!   time: 2020-01-01T13:36:00.000Z
//!   parent: serv
//!   vTag: "1.0 beta"
//! ```
//!
//! A block starts with `- ` and continues with lines indented by two spaces.
//! `command`, `id` and `time` come first, then parameters in ascending key
//! order. Values that are empty or contain whitespace, control characters,
//! `"` or `\` are written as JSON string literals. Blank lines and lines
//! starting with `#` are ignored by the decoder.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use super::{Event, Timestamp};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct DecodeError {
    pub line: usize,
    pub message: String,
}

impl DecodeError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        DecodeError {
            line,
            message: message.into(),
        }
    }

    /// Shifts the reported line, for text embedded in a larger file.
    pub fn offset(mut self, lines: usize) -> Self {
        self.line += lines;
        self
    }
}

pub fn encode(events: &[Event]) -> String {
    let mut out = String::new();
    for event in events {
        write_entry(&mut out, "- ", "command", &event.command);
        if !event.id.is_empty() {
            write_entry(&mut out, "  ", "id", &event.id);
        }
        if let Some(time) = &event.time {
            write_entry(&mut out, "  ", "time", time.as_str());
        }
        for (key, value) in &event.params {
            write_entry(&mut out, "  ", key, value);
        }
    }
    out
}

fn write_entry(out: &mut String, prefix: &str, key: &str, value: &str) {
    if needs_quotes(value) {
        let quoted = serde_json::to_string(value).expect("strings always serialize");
        let _ = writeln!(out, "{prefix}{key}: {quoted}");
    } else {
        let _ = writeln!(out, "{prefix}{key}: {value}");
    }
}

fn needs_quotes(value: &str) -> bool {
    value.is_empty()
        || value
            .chars()
            .any(|c| c.is_whitespace() || c.is_control() || c == '"' || c == '\\')
}

fn valid_key(key: &str) -> bool {
    let mut chars = key.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

struct Block {
    start: usize,
    fields: Vec<(usize, String, String)>,
}

pub fn decode(text: &str) -> Result<Vec<Event>, DecodeError> {
    let mut events = Vec::new();
    let mut current: Option<Block> = None;

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let entry = if let Some(rest) = raw.strip_prefix("- ") {
            if let Some(done) = current.take() {
                events.push(finish(done)?);
            }
            current = Some(Block {
                start: line,
                fields: Vec::new(),
            });
            rest
        } else if let Some(rest) = raw.strip_prefix("  ") {
            if current.is_none() {
                return Err(DecodeError::new(line, "indented entry outside of a block"));
            }
            rest
        } else {
            return Err(DecodeError::new(
                line,
                "expected a block start `- key: value` or an entry indented by two spaces",
            ));
        };
        let (key, value) = parse_entry(entry, line)?;
        let block = current.as_mut().expect("a block is open");
        if block.fields.iter().any(|(_, k, _)| *k == key) {
            return Err(DecodeError::new(line, format!("duplicate key `{key}`")));
        }
        block.fields.push((line, key, value));
    }
    if let Some(done) = current {
        events.push(finish(done)?);
    }
    Ok(events)
}

fn parse_entry(entry: &str, line: usize) -> Result<(String, String), DecodeError> {
    let (key, rest) = entry
        .split_once(':')
        .ok_or_else(|| DecodeError::new(line, "missing `:` after key"))?;
    if !valid_key(key) {
        return Err(DecodeError::new(line, format!("invalid key {key:?}")));
    }
    let value = match rest {
        "" => String::new(),
        _ => {
            let raw = rest
                .strip_prefix(' ')
                .ok_or_else(|| DecodeError::new(line, "expected a space after `:`"))?
                .trim_end();
            if raw.starts_with('"') {
                serde_json::from_str::<String>(raw)
                    .map_err(|e| DecodeError::new(line, format!("bad quoted value: {e}")))?
            } else {
                raw.to_string()
            }
        }
    };
    Ok((key.to_string(), value))
}

fn finish(block: Block) -> Result<Event, DecodeError> {
    let mut command = None;
    let mut id = String::new();
    let mut time = None;
    let mut params = BTreeMap::new();
    for (line, key, value) in block.fields {
        match key.as_str() {
            "command" => {
                if value.is_empty() {
                    return Err(DecodeError::new(line, "empty `command`"));
                }
                command = Some(value);
            }
            "id" => id = value,
            "time" => {
                let parsed =
                    Timestamp::parse(&value).map_err(|e| DecodeError::new(line, e.to_string()))?;
                time = Some(parsed);
            }
            _ => {
                params.insert(key, value);
            }
        }
    }
    let command =
        command.ok_or_else(|| DecodeError::new(block.start, "block is missing `command`"))?;
    Ok(Event {
        command,
        id,
        time,
        params,
    })
}
