//! The editor: executes commands against a model, keeps one active command
//! per id, resolves conflicting edits, and turns direct model edits back into
//! commands by parsing.

mod commands;
mod handler;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::event::{
    decode, encode, overwrites, ClockState, DecodeError, Event, EventError, OverwriteStrategy,
};
use crate::graph::{GraphError, Registry};

pub use commands::{DropLink, HaveLink, RemoveCommand};
pub use handler::{require, CommandHandler, ExecContext, StoreKey};

use handler::HandlerMap;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EditorError {
    #[error("no handler for command type {0:?}")]
    UnknownCommand(String),
    #[error("{command} {id:?} is missing parameter {param:?}")]
    MissingParam {
        command: String,
        id: String,
        param: String,
    },
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("generated id {0:?} is already in use")]
    IdCollision(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Event(#[from] EventError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Applied,
    /// The store already held a command for this id that wins over the new one.
    Ignored,
}

/// Result of [`Editor::execute`]: the outcome and the event as stored, with
/// its id and time filled in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub outcome: Outcome,
    pub event: Event,
}

impl Execution {
    pub fn is_applied(&self) -> bool {
        self.outcome == Outcome::Applied
    }
}

/// Summary of a batch of executions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub applied: usize,
    pub ignored: usize,
    /// Excluded by the sync filter.
    pub skipped: usize,
    /// Position in the batch and the error it raised.
    pub errors: Vec<(usize, EditorError)>,
}

pub struct Editor {
    domain: String,
    registry: Registry,
    active: BTreeMap<StoreKey, Event>,
    handlers: HandlerMap,
    order: Vec<String>,
    clock: ClockState,
    strategy: OverwriteStrategy,
    strategy_overrides: BTreeMap<String, OverwriteStrategy>,
    sync_filter: Option<BTreeSet<String>>,
}

impl Editor {
    pub fn new(domain: impl Into<String>, registry: Registry) -> Self {
        Editor {
            domain: domain.into(),
            registry,
            active: BTreeMap::new(),
            handlers: BTreeMap::new(),
            order: Vec::new(),
            clock: ClockState::system(),
            strategy: OverwriteStrategy::default(),
            strategy_overrides: BTreeMap::new(),
            sync_filter: None,
        }
    }

    /// Adds a handler. Parsing offers objects to handlers in registration order.
    pub fn register(&mut self, handler: impl CommandHandler + 'static) -> &mut Self {
        let tag = handler.type_tag().to_string();
        if !self.handlers.contains_key(&tag) {
            self.order.push(tag.clone());
        }
        self.handlers.insert(tag, Arc::new(handler));
        self
    }

    pub fn with_clock(mut self, clock: ClockState) -> Self {
        self.clock = clock;
        self
    }

    pub fn set_clock(&mut self, clock: ClockState) {
        self.clock = clock;
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Direct access for hand edits. Follow up with [`Editor::parse_changed`]
    /// to turn the edits into commands.
    pub fn registry_mut(&mut self) -> &mut Registry {
        &mut self.registry
    }

    pub fn handler_tags(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    pub fn handler(&self, tag: &str) -> Option<&dyn CommandHandler> {
        self.handlers.get(tag).map(|h| h.as_ref())
    }

    pub fn strategy(&self) -> OverwriteStrategy {
        self.strategy
    }

    pub fn set_strategy(&mut self, strategy: OverwriteStrategy) {
        self.strategy = strategy;
    }

    pub fn set_strategy_for(&mut self, tag: &str, strategy: OverwriteStrategy) {
        self.strategy_overrides.insert(tag.to_string(), strategy);
    }

    pub fn strategy_for(&self, tag: &str) -> OverwriteStrategy {
        self.strategy_overrides
            .get(tag)
            .copied()
            .or_else(|| self.handlers.get(tag).and_then(|h| h.strategy()))
            .unwrap_or(self.strategy)
    }

    /// `None` lets every type through.
    pub fn sync_filter(&self) -> Option<&BTreeSet<String>> {
        self.sync_filter.as_ref()
    }

    pub fn set_sync_filter(&mut self, filter: Option<BTreeSet<String>>) {
        self.sync_filter = filter;
    }

    pub fn syncs(&self, tag: &str) -> bool {
        self.sync_filter.as_ref().is_none_or(|f| f.contains(tag))
    }

    pub fn active_commands(&self) -> impl Iterator<Item = (&StoreKey, &Event)> {
        self.active.iter()
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    /// The active command for `id` in the default scope.
    pub fn active_command(&self, id: &str) -> Option<&Event> {
        self.active.get(&StoreKey::new("", id))
    }

    pub fn active_in_scope(&self, scope: &str, id: &str) -> Option<&Event> {
        self.active.get(&StoreKey::new(scope, id))
    }

    pub fn store_key(&self, event: &Event) -> StoreKey {
        let scope = self.handlers.get(&event.command).map_or("", |h| h.scope());
        StoreKey::new(scope, &event.id)
    }

    pub fn is_tombstone(&self, event: &Event) -> bool {
        self.handlers
            .get(&event.command)
            .is_some_and(|h| h.is_tombstone())
    }

    /// The merge policy used between two events of possibly different types.
    /// Types that disagree fall back to the editor default.
    pub fn strategy_between(&self, new: &Event, old: &Event) -> OverwriteStrategy {
        let a = self.strategy_for(&new.command);
        let b = self.strategy_for(&old.command);
        if a == b {
            a
        } else {
            self.strategy
        }
    }

    pub fn execute(&mut self, mut event: Event) -> Result<Execution, EditorError> {
        let handler = self
            .handlers
            .get(&event.command)
            .cloned()
            .ok_or_else(|| EditorError::UnknownCommand(event.command.clone()))?;

        if event.id.is_empty() {
            event.id = match handler.derive_id(&event) {
                Some(id) => id,
                None => {
                    let id = format!("obj{}", self.active.len());
                    if self.active.contains_key(&StoreKey::new(handler.scope(), &id)) {
                        return Err(EditorError::IdCollision(id));
                    }
                    id
                }
            };
        }
        match &event.time {
            Some(time) => self.clock.observe(time),
            None => event.time = Some(self.clock.now()),
        }

        let key = StoreKey::new(handler.scope(), &event.id);
        if let Some(old) = self.active.get(&key) {
            let strategy = self.strategy_between(&event, old);
            if !overwrites(&event, old, strategy)? {
                return Ok(Execution {
                    outcome: Outcome::Ignored,
                    event,
                });
            }
        }

        let mut ctx = ExecContext {
            registry: &mut self.registry,
            active: &self.active,
            handlers: &self.handlers,
        };
        handler.run(&mut ctx, &event)?;
        self.active.insert(key, event.clone());
        Ok(Execution {
            outcome: Outcome::Applied,
            event,
        })
    }

    /// Runs `f` with direct access to the model and the command store, as a
    /// handler would see them. Nothing is recorded in the store.
    pub fn with_context<T>(
        &mut self,
        f: impl FnOnce(&mut ExecContext<'_>) -> Result<T, EditorError>,
    ) -> Result<T, EditorError> {
        let mut ctx = ExecContext {
            registry: &mut self.registry,
            active: &self.active,
            handlers: &self.handlers,
        };
        f(&mut ctx)
    }

    /// Executes every event in order, collecting errors instead of stopping.
    pub fn execute_all(&mut self, events: impl IntoIterator<Item = Event>) -> LoadReport {
        self.execute_batch(events, false)
    }

    /// Decodes and executes events received from another editor. Types
    /// excluded by the sync filter are skipped.
    pub fn load_events(&mut self, text: &str) -> Result<LoadReport, DecodeError> {
        let events = decode(text)?;
        Ok(self.execute_batch(events, true))
    }

    fn execute_batch(&mut self, events: impl IntoIterator<Item = Event>, filtered: bool) -> LoadReport {
        let mut report = LoadReport::default();
        for (index, event) in events.into_iter().enumerate() {
            if filtered && !self.syncs(&event.command) {
                report.skipped += 1;
                continue;
            }
            match self.execute(event) {
                Ok(e) if e.is_applied() => report.applied += 1,
                Ok(_) => report.ignored += 1,
                Err(err) => report.errors.push((index, err)),
            }
        }
        report
    }

    /// Active commands passing the sync filter, in ascending id order.
    pub fn exported_events(&self) -> Vec<Event> {
        self.active
            .values()
            .filter(|e| self.syncs(&e.command))
            .cloned()
            .collect()
    }

    pub fn export_active(&self) -> String {
        encode(&self.exported_events())
    }

    /// Every active command, unfiltered, in ascending id order.
    pub fn export_all(&self) -> String {
        let events: Vec<Event> = self.active.values().cloned().collect();
        encode(&events)
    }

    /// Events the handlers recognise in the given objects, without executing
    /// them. Identical events found twice are kept once.
    pub fn parse_events<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Vec<Event> {
        let mut found: Vec<Event> = Vec::new();
        for id in ids {
            let Some(object) = self.registry.get(id) else {
                continue;
            };
            for tag in &self.order {
                for event in self.handlers[tag].parse(object, self.registry.schema()) {
                    if !found.contains(&event) {
                        found.push(event);
                    }
                }
            }
        }
        found
    }

    /// Brings the command store in line with the given objects.
    ///
    /// The objects are registered as parsed objects for the duration of the
    /// pass, so commands claim the existing instances instead of creating new
    /// ones. A parsed command is executed only when no active command for
    /// its id exists or the active one differs in something other than its
    /// time; an unchanged command keeps its original timestamp.
    ///
    /// Returns the number of commands executed.
    pub fn parse<I, S>(&mut self, ids: I) -> Result<usize, EditorError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let ids: Vec<String> = ids.into_iter().map(|s| s.as_ref().to_string()).collect();
        let mut pending = self.registry.take_changes();
        for id in &ids {
            self.registry.register_parsed(id);
            pending.remove(id);
        }
        let found = self.parse_events(ids.iter().map(String::as_str));

        let mut executed = 0;
        let mut failure = None;
        for event in found {
            let key = self.store_key(&event);
            let unchanged = self
                .active
                .get(&key)
                .is_some_and(|old| old.equals_but_time(&event));
            if unchanged {
                continue;
            }
            match self.execute(event) {
                Ok(e) if e.is_applied() => executed += 1,
                Ok(_) => {}
                Err(err) => {
                    failure.get_or_insert(err);
                }
            }
        }
        self.registry.clear_parsed();
        self.registry.restore_changes(pending);
        match failure {
            Some(err) => Err(err),
            None => Ok(executed),
        }
    }

    /// Parses every object touched since the dirty set was last cleared.
    pub fn parse_changed(&mut self) -> Result<usize, EditorError> {
        let changed: Vec<String> = self.registry.changed_ids().iter().cloned().collect();
        self.parse(changed)
    }

    /// Parses all model objects and all detached objects.
    pub fn parse_all(&mut self) -> Result<usize, EditorError> {
        let ids = self.model_and_detached_ids();
        self.parse(ids)
    }

    pub(crate) fn model_and_detached_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .registry
            .model_objects()
            .chain(self.registry.detached_objects())
            .map(|o| o.id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Active commands that are visible in the model: not tombstones, and
    /// anchored on at least one model object.
    pub fn materialized_commands(&self) -> Vec<&Event> {
        self.active
            .values()
            .filter(|e| {
                let Some(handler) = self.handlers.get(&e.command) else {
                    return false;
                };
                !handler.is_tombstone()
                    && handler
                        .anchors(e)
                        .iter()
                        .any(|id| self.registry.is_model_object(id))
            })
            .collect()
    }
}

impl std::fmt::Debug for Editor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Editor")
            .field("domain", &self.domain)
            .field("active", &self.active.len())
            .field("model_objects", &self.registry.model_len())
            .field("strategy", &self.strategy)
            .finish()
    }
}
