//! Events, timestamps, the overwrite relation and the event text codec.
//!
//! An [`Event`] is a serialized command: a type tag, an identifier, a creation
//! time and a flat map of string parameters. Parameters never hold object
//! references, only object ids, so events can be written to text and replayed
//! by any editor that knows the type tag.

mod codec;
mod strategy;
mod time;

use std::collections::BTreeMap;

use thiserror::Error;

pub use codec::{decode, encode, DecodeError};
pub use strategy::{compare_versions, overwrites, precedence, OverwriteStrategy};
pub use time::{ClockState, FixedClock, ManualClock, SystemClock, TimeSource, Timestamp};

/// Keys with a fixed position in the text format. They cannot be used as
/// parameter names.
pub const RESERVED_KEYS: [&str; 3] = ["command", "id", "time"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EventError {
    #[error("invalid timestamp {0:?}, expected YYYY-MM-DDTHH:MM:SS.mmmZ")]
    InvalidTimestamp(String),
    #[error("cannot compare events with different ids ({new:?} vs {old:?})")]
    IdMismatch { new: String, old: String },
    #[error("unknown overwrite strategy {0:?}")]
    UnknownStrategy(String),
}

/// One command record.
///
/// An empty `id` means "not assigned yet"; editors assign one on execution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub command: String,
    pub id: String,
    pub time: Option<Timestamp>,
    pub params: BTreeMap<String, String>,
}

impl Event {
    pub fn new(command: impl Into<String>) -> Self {
        Event {
            command: command.into(),
            id: String::new(),
            time: None,
            params: BTreeMap::new(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn at(mut self, time: Timestamp) -> Self {
        self.time = Some(time);
        self
    }

    /// # Panics
    ///
    /// If `key` is one of [`RESERVED_KEYS`].
    pub fn with_param(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.set_param(key, value);
        self
    }

    pub fn set_param(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        assert!(
            !RESERVED_KEYS.contains(&key.as_str()),
            "{key:?} is reserved and cannot be a parameter"
        );
        self.params.insert(key, value.into());
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    /// Equal in everything but the timestamp.
    pub fn equals_but_time(&self, other: &Event) -> bool {
        self.command == other.command && self.id == other.id && self.params == other.params
    }

    /// A copy with the timestamp cleared.
    pub fn untimed(&self) -> Event {
        Event {
            time: None,
            ..self.clone()
        }
    }

    /// The single-event text block for this event.
    pub fn encoded(&self) -> String {
        encode(std::slice::from_ref(self))
    }
}

impl std::fmt::Display for Event {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({} {}", self.command, self.id)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        if let Some(t) = &self.time {
            write!(f, " @{t}")?;
        }
        f.write_str(")")
    }
}
