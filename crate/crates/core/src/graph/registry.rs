use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{AssociationSchema, GraphError, LinkEnd, ModelObject};

/// How the registry currently knows an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Created and initialized by a command.
    Model,
    /// Only referenced as context so far.
    Frame,
    /// Created by a direct edit and not yet claimed by any command.
    Detached,
}

/// Object identity and lifecycle.
///
/// Every object lives in one id-keyed arena. Three id sets sit on top of it:
/// model objects, frames and parsed objects. Model objects and frames are
/// disjoint. Parsed ids are only populated during a parse pass and may
/// shadow either of the other two.
///
/// Every mutator records the ids it actually changed in a dirty set, which
/// incremental parsing consumes.
#[derive(Debug, Clone)]
pub struct Registry {
    schema: Arc<AssociationSchema>,
    objects: BTreeMap<String, ModelObject>,
    model_ids: BTreeSet<String>,
    frame_ids: BTreeSet<String>,
    parsed_ids: BTreeSet<String>,
    changed: BTreeSet<String>,
}

impl Registry {
    pub fn new(schema: Arc<AssociationSchema>) -> Self {
        Registry {
            schema,
            objects: BTreeMap::new(),
            model_ids: BTreeSet::new(),
            frame_ids: BTreeSet::new(),
            parsed_ids: BTreeSet::new(),
            changed: BTreeSet::new(),
        }
    }

    pub fn schema(&self) -> &AssociationSchema {
        &self.schema
    }

    pub fn shared_schema(&self) -> Arc<AssociationSchema> {
        Arc::clone(&self.schema)
    }

    /// Any object the registry holds, whatever its role.
    pub fn get(&self, id: &str) -> Option<&ModelObject> {
        self.objects.get(id)
    }

    pub fn role(&self, id: &str) -> Option<Role> {
        if self.model_ids.contains(id) {
            Some(Role::Model)
        } else if self.frame_ids.contains(id) {
            Some(Role::Frame)
        } else if self.objects.contains_key(id) {
            Some(Role::Detached)
        } else {
            None
        }
    }

    pub fn is_model_object(&self, id: &str) -> bool {
        self.model_ids.contains(id)
    }

    pub fn is_frame(&self, id: &str) -> bool {
        self.frame_ids.contains(id)
    }

    pub fn is_parsed(&self, id: &str) -> bool {
        self.parsed_ids.contains(id)
    }

    pub fn model_objects(&self) -> impl Iterator<Item = &ModelObject> {
        self.model_ids.iter().map(|id| &self.objects[id])
    }

    pub fn frames(&self) -> impl Iterator<Item = &ModelObject> {
        self.frame_ids.iter().map(|id| &self.objects[id])
    }

    pub fn parsed_objects(&self) -> impl Iterator<Item = &ModelObject> {
        self.parsed_ids.iter().map(|id| &self.objects[id])
    }

    /// Objects created by direct edits that no command has claimed yet.
    pub fn detached_objects(&self) -> impl Iterator<Item = &ModelObject> {
        self.objects
            .values()
            .filter(|o| !self.model_ids.contains(&o.id) && !self.frame_ids.contains(&o.id))
    }

    pub fn model_len(&self) -> usize {
        self.model_ids.len()
    }

    /// Fails when `id` is already bound to an object of another type.
    pub fn expect_type(&self, object_type: &str, id: &str) -> Result<(), GraphError> {
        if id.is_empty() {
            return Err(GraphError::EmptyId);
        }
        match self.objects.get(id) {
            Some(existing) if existing.object_type != object_type => Err(GraphError::TypeConflict {
                id: id.to_string(),
                existing: existing.object_type.clone(),
                requested: object_type.to_string(),
            }),
            _ => Ok(()),
        }
    }

    /// Looks an object up as context: parsed objects first, then model
    /// objects, then frames. On a miss a new frame is created. Never promotes.
    pub fn get_object_frame(&mut self, object_type: &str, id: &str) -> Result<&ModelObject, GraphError> {
        self.expect_type(object_type, id)?;
        let known = self.parsed_ids.contains(id)
            || self.model_ids.contains(id)
            || self.frame_ids.contains(id);
        if !known {
            // A detached object with this id becomes the frame; otherwise a
            // fresh one is made.
            self.objects
                .entry(id.to_string())
                .or_insert_with(|| ModelObject::new(object_type, id));
            self.frame_ids.insert(id.to_string());
        }
        Ok(&self.objects[id])
    }

    /// Looks an object up for creation, promoting it to a model object.
    /// A parsed object with this id is reused as is.
    pub fn get_or_create(&mut self, object_type: &str, id: &str) -> Result<&ModelObject, GraphError> {
        self.expect_type(object_type, id)?;
        if !self.parsed_ids.contains(id) && !self.model_ids.contains(id) {
            self.get_object_frame(object_type, id)?;
        }
        self.frame_ids.remove(id);
        self.model_ids.insert(id.to_string());
        Ok(&self.objects[id])
    }

    /// Demotes a model object to a frame, since other commands may still use
    /// it as context. Returns the frame held for `id`, if any.
    pub fn remove_model_object(&mut self, id: &str) -> Option<&ModelObject> {
        if self.model_ids.remove(id) {
            self.frame_ids.insert(id.to_string());
        }
        if self.frame_ids.contains(id) {
            self.objects.get(id)
        } else {
            None
        }
    }

    /// Creates an object outside every role, like constructing it by hand in
    /// an editing tool. A command or a parse pass will claim it later.
    pub fn create_detached(&mut self, object_type: &str, id: &str) -> Result<&ModelObject, GraphError> {
        if id.is_empty() {
            return Err(GraphError::EmptyId);
        }
        if self.objects.contains_key(id) {
            return Err(GraphError::DuplicateObject(id.to_string()));
        }
        self.objects
            .insert(id.to_string(), ModelObject::new(object_type, id));
        self.changed.insert(id.to_string());
        Ok(&self.objects[id])
    }

    pub(crate) fn register_parsed(&mut self, id: &str) {
        if self.objects.contains_key(id) {
            self.parsed_ids.insert(id.to_string());
        }
    }

    pub(crate) fn clear_parsed(&mut self) {
        self.parsed_ids.clear();
    }

    /// Sets or clears an attribute.
    pub fn set_attribute(&mut self, id: &str, name: &str, value: Option<&str>) -> Result<(), GraphError> {
        let object = self.object_mut(id)?;
        let changed = match value {
            Some(v) => object.attributes.insert(name.to_string(), v.to_string()).as_deref() != Some(v),
            None => object.attributes.remove(name).is_some(),
        };
        if changed {
            self.changed.insert(id.to_string());
        }
        Ok(())
    }

    /// Sets or clears a to-one link and keeps the opposite end in step.
    pub fn set_link(&mut self, source: &str, link: &str, target: Option<&str>) -> Result<(), GraphError> {
        let end = self.end_of(source, link)?;
        if end.many {
            return Err(GraphError::Schema(format!("{link} is a to-many link")));
        }
        if let Some(target) = target {
            self.check_target(&end, target)?;
        }
        let old = self.objects[source].to_one.get(link).cloned();
        if old.as_deref() == target {
            return Ok(());
        }
        if let Some(old) = &old {
            self.detach_end(old, &end.reverse, end.reverse_many, source);
        }
        if let Some(target) = target {
            if !end.reverse_many {
                // one-to-one: the target's previous partner loses its link.
                if let Some(previous) = self.objects[target].to_one.get(&end.reverse).cloned() {
                    if previous != source {
                        self.detach_end(&previous, link, false, target);
                    }
                }
            }
            self.attach_end(target, &end.reverse, end.reverse_many, source);
            self.attach_end(source, link, false, target);
        } else {
            self.detach_end(source, link, false, old.as_deref().unwrap_or_default());
        }
        Ok(())
    }

    pub fn unset_link(&mut self, source: &str, link: &str) -> Result<(), GraphError> {
        self.set_link(source, link, None)
    }

    /// Adds `target` to a to-many link of `source`.
    pub fn add_to_many(&mut self, source: &str, link: &str, target: &str) -> Result<(), GraphError> {
        let end = self.end_of(source, link)?;
        if !end.many {
            return Err(GraphError::Schema(format!("{link} is a to-one link")));
        }
        self.check_target(&end, target)?;
        if !end.reverse_many {
            return self.set_link(target, &end.reverse, Some(source));
        }
        self.attach_end(source, link, true, target);
        self.attach_end(target, &end.reverse, true, source);
        Ok(())
    }

    /// Removes `target` from a to-many link of `source`. Absent links are a no-op.
    pub fn remove_from_many(&mut self, source: &str, link: &str, target: &str) -> Result<(), GraphError> {
        let end = self.end_of(source, link)?;
        if !end.many {
            return Err(GraphError::Schema(format!("{link} is a to-one link")));
        }
        self.check_target(&end, target)?;
        if !end.reverse_many {
            if self.objects[target].to_one.get(&end.reverse).map(String::as_str) == Some(source) {
                return self.set_link(target, &end.reverse, None);
            }
            return Ok(());
        }
        self.detach_end(source, link, true, target);
        self.detach_end(target, &end.reverse, true, source);
        Ok(())
    }

    pub fn changed_ids(&self) -> &BTreeSet<String> {
        &self.changed
    }

    pub fn take_changes(&mut self) -> BTreeSet<String> {
        std::mem::take(&mut self.changed)
    }

    pub fn clear_changes(&mut self) {
        self.changed.clear();
    }

    pub(crate) fn restore_changes(&mut self, changes: BTreeSet<String>) {
        self.changed = changes;
    }

    /// Deterministic dump of the model objects, one line each, ids ascending.
    pub fn dump(&self) -> String {
        self.model_objects()
            .map(|o| o.dump_line() + "\n")
            .collect()
    }

    /// Ids named by a link of any object that the registry does not hold.
    pub fn dangling_targets(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for object in self.objects.values() {
            let targets = object
                .to_one
                .iter()
                .map(|(l, t)| (l, t))
                .chain(object.to_many.iter().flat_map(|(l, ts)| ts.iter().map(move |t| (l, t))));
            for (link, target) in targets {
                if !self.objects.contains_key(target) {
                    out.push((object.id.clone(), link.clone(), target.clone()));
                }
            }
        }
        out
    }

    /// Checks every stored link against its opposite end. Returns one message
    /// per inconsistency.
    pub fn check_link_consistency(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for object in self.objects.values() {
            for (link, target) in &object.to_one {
                problems.extend(self.check_pair(object, link, target));
            }
            for (link, targets) in &object.to_many {
                for target in targets {
                    problems.extend(self.check_pair(object, link, target));
                }
            }
        }
        problems
    }

    fn check_pair(&self, object: &ModelObject, link: &str, target: &str) -> Option<String> {
        let Some(end) = self.schema.end(&object.object_type, link) else {
            return Some(format!("{}.{link} is not in the schema", object.id));
        };
        let Some(other) = self.objects.get(target) else {
            return Some(format!("{}.{link} -> {target} does not resolve", object.id));
        };
        let back = if end.reverse_many {
            other.to_many.get(&end.reverse).is_some_and(|s| s.contains(&object.id))
        } else {
            other.to_one.get(&end.reverse) == Some(&object.id)
        };
        (!back).then(|| format!("{}.{link} -> {target} has no matching {}", object.id, end.reverse))
    }

    fn object_mut(&mut self, id: &str) -> Result<&mut ModelObject, GraphError> {
        self.objects
            .get_mut(id)
            .ok_or_else(|| GraphError::UnknownObject(id.to_string()))
    }

    fn end_of(&self, source: &str, link: &str) -> Result<LinkEnd, GraphError> {
        let object = self
            .objects
            .get(source)
            .ok_or_else(|| GraphError::UnknownObject(source.to_string()))?;
        self.schema
            .end(&object.object_type, link)
            .cloned()
            .ok_or_else(|| {
                GraphError::Schema(format!("{} has no link {link}", object.object_type))
            })
    }

    fn check_target(&self, end: &LinkEnd, target: &str) -> Result<(), GraphError> {
        let object = self
            .objects
            .get(target)
            .ok_or_else(|| GraphError::UnknownObject(target.to_string()))?;
        if object.object_type != end.target_type {
            return Err(GraphError::Schema(format!(
                "{} expects a {}, got {} {target}",
                end.name, end.target_type, object.object_type
            )));
        }
        Ok(())
    }

    // Single-end primitives. Callers keep both ends in step.

    fn attach_end(&mut self, owner: &str, link: &str, many: bool, target: &str) {
        let Some(object) = self.objects.get_mut(owner) else {
            return;
        };
        let changed = if many {
            object
                .to_many
                .entry(link.to_string())
                .or_default()
                .insert(target.to_string())
        } else {
            object.to_one.insert(link.to_string(), target.to_string()).as_deref() != Some(target)
        };
        if changed {
            self.changed.insert(owner.to_string());
        }
    }

    fn detach_end(&mut self, owner: &str, link: &str, many: bool, target: &str) {
        let Some(object) = self.objects.get_mut(owner) else {
            return;
        };
        let changed = if many {
            let removed = object
                .to_many
                .get_mut(link)
                .is_some_and(|set| set.remove(target));
            if object.to_many.get(link).is_some_and(|set| set.is_empty()) {
                object.to_many.remove(link);
            }
            removed
        } else if object.to_one.get(link).map(String::as_str) == Some(target) {
            object.to_one.remove(link);
            true
        } else {
            false
        };
        if changed {
            self.changed.insert(owner.to_string());
        }
    }
}
