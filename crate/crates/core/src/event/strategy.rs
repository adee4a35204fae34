use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::{Event, EventError};

/// Merge policy deciding which of two events with the same id survives.
///
/// Every variant is a strict total order on distinct events: exactly one of
/// two different events overwrites the other, and an event never overwrites
/// a byte-identical copy of itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OverwriteStrategy {
    #[default]
    LastEditWins,
    FirstEditWins,
    /// Compares the `vTag` parameter component-wise; a missing `vTag` ranks
    /// below every present one. Equal versions fall back to last-edit-wins.
    HighestVersionWins,
}

impl OverwriteStrategy {
    pub const ALL: [OverwriteStrategy; 3] = [
        OverwriteStrategy::LastEditWins,
        OverwriteStrategy::FirstEditWins,
        OverwriteStrategy::HighestVersionWins,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OverwriteStrategy::LastEditWins => "last-edit-wins",
            OverwriteStrategy::FirstEditWins => "first-edit-wins",
            OverwriteStrategy::HighestVersionWins => "highest-version-wins",
        }
    }
}

impl fmt::Display for OverwriteStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OverwriteStrategy {
    type Err = EventError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OverwriteStrategy::ALL
            .into_iter()
            .find(|strategy| strategy.name() == s)
            .ok_or_else(|| EventError::UnknownStrategy(s.to_string()))
    }
}

/// Ranks `new` against `old` under `strategy`. `Greater` means `new` wins.
pub fn precedence(new: &Event, old: &Event, strategy: OverwriteStrategy) -> Ordering {
    let tie_break = || new.encoded().cmp(&old.encoded());
    match strategy {
        OverwriteStrategy::LastEditWins => new.time.cmp(&old.time).then_with(tie_break),
        OverwriteStrategy::FirstEditWins => old.time.cmp(&new.time).then_with(tie_break),
        OverwriteStrategy::HighestVersionWins => {
            compare_versions(new.param("vTag"), old.param("vTag"))
                .then_with(|| new.time.cmp(&old.time))
                .then_with(tie_break)
        }
    }
}

/// Whether executing `new` should replace `old` in the command store.
pub fn overwrites(new: &Event, old: &Event, strategy: OverwriteStrategy) -> Result<bool, EventError> {
    if new.id != old.id {
        return Err(EventError::IdMismatch {
            new: new.id.clone(),
            old: old.id.clone(),
        });
    }
    Ok(precedence(new, old, strategy) == Ordering::Greater)
}

/// Orders dotted version strings. Numeric components compare as numbers of
/// any length, numeric sorts before non-numeric, and a version that is a
/// prefix of another sorts first.
pub fn compare_versions(a: Option<&str>, b: Option<&str>) -> Ordering {
    let (a, b) = match (a, b) {
        (None, None) => return Ordering::Equal,
        (None, Some(_)) => return Ordering::Less,
        (Some(_), None) => return Ordering::Greater,
        (Some(a), Some(b)) => (a, b),
    };
    let mut left = a.split('.');
    let mut right = b.split('.');
    loop {
        match (left.next(), right.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) => {
                let order = compare_component(x, y);
                if order != Ordering::Equal {
                    return order;
                }
            }
        }
    }
}

fn compare_component(x: &str, y: &str) -> Ordering {
    let numeric = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    match (numeric(x), numeric(y)) {
        (true, true) => {
            let x = x.trim_start_matches('0');
            let y = y.trim_start_matches('0');
            x.len().cmp(&y.len()).then_with(|| x.cmp(y))
        }
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => x.cmp(y),
    }
}
