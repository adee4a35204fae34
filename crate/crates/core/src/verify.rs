//! Oracles for the properties commutative event sourcing relies on.
//!
//! All of them work by replay: events are executed into fresh editors built
//! by a factory, and the resulting models are compared with
//! [`model_diff`]. Untimed events are stamped before replay so that every
//! variant of a sequence sees the same timestamps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::editor::{Editor, StoreKey};
use crate::event::{Event, Timestamp};
use crate::graph::{model_diff, ModelDiff};

/// Base time used for stamping untimed events: 2020-01-01T00:00:00.000Z.
pub const STAMP_BASE: i64 = 1_577_836_800_000;

/// Gives every untimed event the time `base + position` in ms.
pub fn stamp_untimed(events: &[Event], base: i64) -> Vec<Event> {
    events
        .iter()
        .enumerate()
        .map(|(i, e)| match e.time {
            Some(_) => e.clone(),
            None => e.clone().at(Timestamp::from_millis(base + i as i64)),
        })
        .collect()
}

/// Executes `events` in order into a fresh editor. Execution errors are
/// dropped; use [`Editor::execute_all`] to see them.
pub fn replay(factory: &dyn Fn() -> Editor, events: &[Event]) -> Editor {
    let mut editor = factory();
    editor.execute_all(events.iter().cloned());
    editor
}

/// True when removing the event at `position` leaves the replayed model
/// unchanged.
pub fn is_ineffective(factory: &dyn Fn() -> Editor, events: &[Event], position: usize) -> bool {
    assert!(position < events.len(), "position {position} out of range");
    let events = stamp_untimed(events, STAMP_BASE);
    let full = replay(factory, &events);
    let mut rest = events;
    rest.remove(position);
    model_diff(full.registry(), replay(factory, &rest).registry()).is_empty()
}

/// Removes ineffective events one at a time, scanning left to right and
/// starting over until no event can be removed.
pub fn effective_subsequence(factory: &dyn Fn() -> Editor, events: &[Event]) -> Vec<Event> {
    let mut current = stamp_untimed(events, STAMP_BASE);
    let target = replay(factory, &current);
    loop {
        let mut removed = false;
        let mut i = 0;
        while i < current.len() {
            let mut candidate = current.clone();
            candidate.remove(i);
            let model = replay(factory, &candidate);
            if model_diff(target.registry(), model.registry()).is_empty() {
                current = candidate;
                removed = true;
            } else {
                i += 1;
            }
        }
        if !removed {
            return current;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("effective events {first} and {second} share store key {key}")]
    SharedKey {
        key: String,
        first: Event,
        second: Event,
    },
}

/// The effective events of `events` as a set. Fails when two of them would
/// occupy the same slot of the command store.
pub fn active_set(
    factory: &dyn Fn() -> Editor,
    events: &[Event],
) -> Result<BTreeSet<Event>, VerifyError> {
    let keys = factory();
    let mut seen: BTreeMap<StoreKey, Event> = BTreeMap::new();
    for event in effective_subsequence(factory, events) {
        let key = keys.store_key(&event);
        if let Some(first) = seen.get(&key) {
            return Err(VerifyError::SharedKey {
                key: key.to_string(),
                first: first.clone(),
                second: event,
            });
        }
        seen.insert(key, event);
    }
    Ok(seen.into_values().collect())
}

/// A replay that disagreed with the reference run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub label: String,
    pub diff: ModelDiff,
    /// The two command stores differ, even if the models agree.
    pub store_differs: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommuteReport {
    /// Replays compared against the reference order.
    pub runs: usize,
    /// Execution errors in the reference run.
    pub errors: usize,
    pub divergences: Vec<Divergence>,
}

impl CommuteReport {
    pub fn passed(&self) -> bool {
        self.divergences.is_empty()
    }
}

impl fmt::Display for CommuteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "commutative: {} orders agree", self.runs);
        }
        writeln!(f, "not commutative: {} of {} orders differ", self.divergences.len(), self.runs)?;
        for d in &self.divergences {
            writeln!(f, "{}:{}", d.label, if d.store_differs { " store differs" } else { "" })?;
            for line in d.diff.lines() {
                writeln!(f, "  {line}")?;
            }
        }
        Ok(())
    }
}

/// Replays `events` in the given order, in reverse, and in `trials` seeded
/// random permutations, comparing every result with the first.
pub fn check_commutative(
    factory: &dyn Fn() -> Editor,
    events: &[Event],
    trials: usize,
    seed: u64,
) -> CommuteReport {
    let events = stamp_untimed(events, STAMP_BASE);
    let mut reference = factory();
    let errors = reference.execute_all(events.iter().cloned()).errors.len();
    let reference_store = reference.export_all();

    let mut orders: Vec<(String, Vec<Event>)> = Vec::with_capacity(trials + 1);
    let mut reversed = events.clone();
    reversed.reverse();
    orders.push(("reverse".into(), reversed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let mut shuffled = events.clone();
        shuffled.shuffle(&mut rng);
        orders.push((format!("permutation {trial}"), shuffled));
    }

    let mut report = CommuteReport {
        runs: orders.len(),
        errors,
        divergences: Vec::new(),
    };
    for (label, order) in orders {
        let other = replay(factory, &order);
        let diff = model_diff(reference.registry(), other.registry());
        let store_differs = other.export_all() != reference_store;
        if !diff.is_empty() || store_differs {
            report.divergences.push(Divergence {
                label,
                diff,
                store_differs,
            });
        }
    }
    report
}

/// Result of comparing a full-model parse with the command store.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CesReport {
    /// Visible active commands that parsing does not recover.
    pub missing: Vec<Event>,
    /// Non-tombstone commands parsing finds that the store does not hold.
    pub unexpected: Vec<Event>,
    /// Tombstones parsing emits, i.e. objects it considers garbage.
    pub garbage: Vec<Event>,
}

impl CesReport {
    pub fn passed(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty() && self.garbage.is_empty()
    }

    /// Ids whose commands disagree.
    pub fn divergent_ids(&self) -> BTreeSet<&str> {
        self.missing
            .iter()
            .chain(&self.unexpected)
            .chain(&self.garbage)
            .map(|e| e.id.as_str())
            .collect()
    }
}

impl fmt::Display for CesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("parse reproduces the active commands");
        }
        for (label, events) in [
            ("missing", &self.missing),
            ("unexpected", &self.unexpected),
            ("garbage", &self.garbage),
        ] {
            for e in events {
                writeln!(f, "{label}: {e}")?;
            }
        }
        Ok(())
    }
}

/// Checks that parsing the whole model yields exactly the active commands
/// visible in it, ignoring times. Does not modify the editor.
pub fn check_ces_model(editor: &Editor) -> CesReport {
    let ids = editor.model_and_detached_ids();
    let mut parsed: BTreeSet<Event> = BTreeSet::new();
    let mut garbage = Vec::new();
    for event in editor.parse_events(ids.iter().map(String::as_str)) {
        if editor.is_tombstone(&event) {
            garbage.push(event);
        } else {
            parsed.insert(event);
        }
    }
    let stored: BTreeSet<Event> = editor
        .materialized_commands()
        .into_iter()
        .map(Event::untimed)
        .collect();
    CesReport {
        missing: stored.difference(&parsed).cloned().collect(),
        unexpected: parsed.difference(&stored).cloned().collect(),
        garbage,
    }
}

/// Two sequences that build the same model but have different active sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniquenessViolation {
    pub first: usize,
    pub second: usize,
    pub first_set: BTreeSet<Event>,
    pub second_set: BTreeSet<Event>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UniquenessReport {
    pub sequences: usize,
    /// Distinct models among the replays.
    pub models: usize,
    pub violations: Vec<UniquenessViolation>,
    /// Sequences whose effective events share a store key.
    pub invalid: Vec<(usize, VerifyError)>,
}

impl UniquenessReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.invalid.is_empty()
    }
}

/// Replays every sequence and checks that sequences building the same model
/// have the same active set, ignoring times.
pub fn check_active_uniqueness(
    factory: &dyn Fn() -> Editor,
    sequences: &[Vec<Event>],
) -> UniquenessReport {
    let mut report = UniquenessReport {
        sequences: sequences.len(),
        ..Default::default()
    };
    let mut by_model: BTreeMap<String, (usize, BTreeSet<Event>)> = BTreeMap::new();
    for (index, events) in sequences.iter().enumerate() {
        let dump = replay(factory, &stamp_untimed(events, STAMP_BASE)).registry().dump();
        let set = match active_set(factory, events) {
            Ok(set) => set.iter().map(Event::untimed).collect::<BTreeSet<_>>(),
            Err(err) => {
                report.invalid.push((index, err));
                continue;
            }
        };
        match by_model.get(&dump) {
            Some((first, first_set)) if *first_set != set => {
                report.violations.push(UniquenessViolation {
                    first: *first,
                    second: index,
                    first_set: first_set.clone(),
                    second_set: set,
                });
            }
            Some(_) => {}
            None => {
                by_model.insert(dump, (index, set));
            }
        }
    }
    report.models = by_model.len();
    report
}
