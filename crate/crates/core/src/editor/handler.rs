use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::event::{Event, OverwriteStrategy};
use crate::graph::{AssociationSchema, ModelObject, Registry};

use super::EditorError;

/// Key of the active-command store.
///
/// Commands normally share the default (empty) scope, giving one active
/// command per id. A handler may claim its own scope when it edits a slice of
/// an object that another command type owns the rest of.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StoreKey {
    pub id: String,
    pub scope: String,
}

impl StoreKey {
    pub fn new(scope: &str, id: &str) -> Self {
        StoreKey {
            id: id.to_string(),
            scope: scope.to_string(),
        }
    }
}

impl fmt::Display for StoreKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scope.is_empty() {
            f.write_str(&self.id)
        } else {
            write!(f, "{}:{}", self.scope, self.id)
        }
    }
}

/// Behaviour of one command type.
///
/// `run` must edit only the command's increment: its core object (the one
/// with the event's id), attributes of that object named by parameters, and
/// the links the command owns. Other objects may only be looked up as
/// context through [`Registry::get_object_frame`]. `run` should validate its
/// inputs before mutating anything, since a failed run is not rolled back.
pub trait CommandHandler: Send + Sync {
    fn type_tag(&self) -> &str;

    /// Applies the event. Returns the id of the core object, if any.
    fn run(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<Option<String>, EditorError>;

    /// Undoes what `run` created. The default demotes the core object.
    fn remove(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<(), EditorError> {
        ctx.registry.remove_model_object(&event.id);
        Ok(())
    }

    /// Events for which `object` is the core object. Most handlers return at
    /// most one.
    fn parse(&self, _object: &ModelObject, _schema: &AssociationSchema) -> Vec<Event> {
        Vec::new()
    }

    /// A merge policy that replaces the editor default for this type.
    fn strategy(&self) -> Option<OverwriteStrategy> {
        None
    }

    fn scope(&self) -> &str {
        ""
    }

    /// Tombstones block older commands but leave nothing in the model that
    /// parsing could find.
    fn is_tombstone(&self) -> bool {
        false
    }

    /// An id computed from the parameters, used when the event has none.
    fn derive_id(&self, _event: &Event) -> Option<String> {
        None
    }

    /// Objects whose presence as model objects makes this command visible.
    fn anchors(&self, event: &Event) -> Vec<String> {
        vec![event.id.clone()]
    }
}

pub(crate) type HandlerMap = BTreeMap<String, Arc<dyn CommandHandler>>;

/// What a handler sees while it runs: the registry to edit and read access
/// to the current command store.
pub struct ExecContext<'a> {
    pub registry: &'a mut Registry,
    pub(crate) active: &'a BTreeMap<StoreKey, Event>,
    pub(crate) handlers: &'a HandlerMap,
}

impl ExecContext<'_> {
    pub fn active_command(&self, scope: &str, id: &str) -> Option<&Event> {
        self.active.get(&StoreKey::new(scope, id))
    }

    /// Runs the `remove` step of whichever handler owns `event`.
    pub fn remove_command(&mut self, event: &Event) -> Result<(), EditorError> {
        let handler = self
            .handlers
            .get(&event.command)
            .cloned()
            .ok_or_else(|| EditorError::UnknownCommand(event.command.clone()))?;
        handler.remove(self, event)
    }

    pub fn schema(&self) -> &AssociationSchema {
        self.registry.schema()
    }
}

/// Fetches a required parameter.
pub fn require<'e>(event: &'e Event, param: &str) -> Result<&'e str, EditorError> {
    match event.param(param) {
        Some(value) if !value.is_empty() => Ok(value),
        _ => Err(EditorError::MissingParam {
            command: event.command.clone(),
            id: event.id.clone(),
            param: param.to_string(),
        }),
    }
}
