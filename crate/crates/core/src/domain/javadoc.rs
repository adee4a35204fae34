//! Documentation folders and files.
//!
//! Mirrors the package tree: each package becomes a `Folder`, each class a
//! `DocFile` with a `version`. Every sub folder also owns a generated file
//! `<folder>.Doc` whose content is `<folder> docu`; root folders have none.
//! Hand-written file content is tracked by `HaveContent`, which lives in its
//! own store scope and is not synchronized by default.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::editor::{
    require, CommandHandler, DropLink, Editor, EditorError, ExecContext, HaveLink, RemoveCommand,
};
use crate::event::Event;
use crate::graph::{Association, AssociationSchema, Cardinality::*, ModelObject, Registry};

pub const FOLDER: &str = "Folder";
pub const FILE: &str = "DocFile";
pub const DOC_SUFFIX: &str = ".Doc";
pub const CONTENT_SCOPE: &str = "content";

pub fn schema() -> AssociationSchema {
    AssociationSchema::new(
        "javadoc",
        vec![
            Association::new(FOLDER, "pFolder", One, FOLDER, "subFolders", Many),
            Association::new(FILE, "folder", One, FOLDER, "files", Many),
            Association::new(FILE, "uses", Many, FILE, "usedBy", Many),
        ],
    )
    .expect("static schema is well formed")
}

/// Editor with every handler registered. Its sync filter admits all command
/// types except `HaveContent`.
pub fn editor() -> Editor {
    let mut editor = Editor::new("javadoc", Registry::new(Arc::new(schema())));
    editor
        .register(HaveRoot)
        .register(HaveSubUnit)
        .register(HaveLeaf)
        .register(HaveContent)
        .register(RemoveCommand)
        .register(HaveLink)
        .register(DropLink);
    let filter: BTreeSet<String> = editor
        .handler_tags()
        .filter(|t| *t != HaveContent::TAG)
        .map(str::to_string)
        .collect();
    editor.set_sync_filter(Some(filter));
    editor
}

/// Id of the generated documentation file of a folder.
pub fn doc_file_id(folder: &str) -> String {
    format!("{folder}{DOC_SUFFIX}")
}

pub fn is_doc_file_id(id: &str) -> bool {
    id.ends_with(DOC_SUFFIX)
}

fn reject_doc_id(event: &Event) -> Result<(), EditorError> {
    if is_doc_file_id(&event.id) {
        return Err(EditorError::InvalidEvent(format!(
            "{} {:?}: ids ending in {DOC_SUFFIX} are reserved for generated files",
            event.command, event.id
        )));
    }
    Ok(())
}

/// A folder without a parent, and without a generated doc file.
#[derive(Debug, Default, Clone, Copy)]
pub struct HaveRoot;

impl HaveRoot {
    pub fn event(id: &str) -> Event {
        Event::new("HaveRoot").with_id(id)
    }
}

impl CommandHandler for HaveRoot {
    fn type_tag(&self) -> &str {
        "HaveRoot"
    }

    fn run(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<Option<String>, EditorError> {
        reject_doc_id(event)?;
        ctx.registry.expect_type(FOLDER, &event.id)?;
        ctx.registry.get_or_create(FOLDER, &event.id)?;
        ctx.registry.set_link(&event.id, "pFolder", None)?;
        let doc = doc_file_id(&event.id);
        let owns_doc = ctx
            .registry
            .get(&event.id)
            .is_some_and(|f| f.targets("files").any(|t| t == doc));
        if owns_doc {
            ctx.registry.remove_model_object(&doc);
            ctx.registry.set_link(&doc, "folder", None)?;
        }
        Ok(Some(event.id.clone()))
    }

    fn parse(&self, object: &ModelObject, _schema: &AssociationSchema) -> Vec<Event> {
        if object.object_type != FOLDER || object.target("pFolder").is_some() {
            return vec![];
        }
        if !object.has_targets("files") && !object.has_targets("subFolders") {
            return vec![RemoveCommand::event(&object.id)];
        }
        vec![HaveRoot::event(&object.id)]
    }
}

/// A folder below `parent`, with its generated doc file.
#[derive(Debug, Default, Clone, Copy)]
pub struct HaveSubUnit;

impl HaveSubUnit {
    pub fn event(id: &str, parent: &str) -> Event {
        Event::new("HaveSubUnit").with_id(id).with_param("parent", parent)
    }
}

impl CommandHandler for HaveSubUnit {
    fn type_tag(&self) -> &str {
        "HaveSubUnit"
    }

    fn run(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<Option<String>, EditorError> {
        reject_doc_id(event)?;
        let parent = require(event, "parent")?;
        let doc = doc_file_id(&event.id);
        ctx.registry.expect_type(FOLDER, &event.id)?;
        ctx.registry.expect_type(FOLDER, parent)?;
        ctx.registry.expect_type(FILE, &doc)?;
        ctx.registry.get_or_create(FOLDER, &event.id)?;
        ctx.registry.get_object_frame(FOLDER, parent)?;
        ctx.registry.set_link(&event.id, "pFolder", Some(parent))?;
        ctx.registry.get_or_create(FILE, &doc)?;
        ctx.registry
            .set_attribute(&doc, "content", Some(&format!("{} docu", event.id)))?;
        ctx.registry.set_link(&doc, "folder", Some(&event.id))?;
        Ok(Some(event.id.clone()))
    }

    fn remove(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<(), EditorError> {
        ctx.registry.remove_model_object(&event.id);
        if ctx.registry.get(&event.id).is_some() {
            ctx.registry.set_link(&event.id, "pFolder", None)?;
        }
        let doc = doc_file_id(&event.id);
        ctx.registry.remove_model_object(&doc);
        if ctx.registry.get(&doc).is_some_and(|d| d.target("folder") == Some(event.id.as_str())) {
            ctx.registry.set_link(&doc, "folder", None)?;
        }
        Ok(())
    }

    fn parse(&self, object: &ModelObject, _schema: &AssociationSchema) -> Vec<Event> {
        match object.target("pFolder") {
            Some(parent) if object.object_type == FOLDER => {
                vec![HaveSubUnit::event(&object.id, parent)]
            }
            _ => vec![],
        }
    }
}

/// A documentation file in folder `parent`, at version `vTag`.
#[derive(Debug, Default, Clone, Copy)]
pub struct HaveLeaf;

impl HaveLeaf {
    pub fn event(id: &str, parent: &str, vtag: &str) -> Event {
        Event::new("HaveLeaf")
            .with_id(id)
            .with_param("parent", parent)
            .with_param("vTag", vtag)
    }
}

impl CommandHandler for HaveLeaf {
    fn type_tag(&self) -> &str {
        "HaveLeaf"
    }

    fn run(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<Option<String>, EditorError> {
        reject_doc_id(event)?;
        let parent = require(event, "parent")?;
        let vtag = event.param("vTag").unwrap_or_default();
        ctx.registry.expect_type(FILE, &event.id)?;
        ctx.registry.expect_type(FOLDER, parent)?;
        ctx.registry.get_or_create(FILE, &event.id)?;
        ctx.registry.get_object_frame(FOLDER, parent)?;
        ctx.registry.set_link(&event.id, "folder", Some(parent))?;
        ctx.registry.set_attribute(&event.id, "version", Some(vtag))?;
        Ok(Some(event.id.clone()))
    }

    fn remove(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<(), EditorError> {
        ctx.registry.remove_model_object(&event.id);
        if ctx.registry.get(&event.id).is_some() {
            ctx.registry.set_link(&event.id, "folder", None)?;
        }
        Ok(())
    }

    fn parse(&self, object: &ModelObject, _schema: &AssociationSchema) -> Vec<Event> {
        if object.object_type != FILE || is_doc_file_id(&object.id) {
            return vec![];
        }
        match object.target("folder") {
            Some(parent) => vec![HaveLeaf::event(
                &object.id,
                parent,
                object.attribute("version").unwrap_or_default(),
            )],
            None => vec![RemoveCommand::event(&object.id)],
        }
    }
}

/// Hand-written content of a documentation file.
#[derive(Debug, Default, Clone, Copy)]
pub struct HaveContent;

impl HaveContent {
    pub const TAG: &'static str = "HaveContent";

    pub fn event(id: &str, content: &str) -> Event {
        Event::new(Self::TAG).with_id(id).with_param("content", content)
    }
}

impl CommandHandler for HaveContent {
    fn type_tag(&self) -> &str {
        Self::TAG
    }

    fn scope(&self) -> &str {
        CONTENT_SCOPE
    }

    fn run(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<Option<String>, EditorError> {
        reject_doc_id(event)?;
        let content = event.param("content").ok_or_else(|| EditorError::MissingParam {
            command: event.command.clone(),
            id: event.id.clone(),
            param: "content".into(),
        })?;
        ctx.registry.expect_type(FILE, &event.id)?;
        ctx.registry.get_object_frame(FILE, &event.id)?;
        ctx.registry.set_attribute(&event.id, "content", Some(content))?;
        Ok(Some(event.id.clone()))
    }

    fn remove(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<(), EditorError> {
        if ctx.registry.get(&event.id).is_some() {
            ctx.registry.set_attribute(&event.id, "content", None)?;
        }
        Ok(())
    }

    fn parse(&self, object: &ModelObject, _schema: &AssociationSchema) -> Vec<Event> {
        if object.object_type != FILE || is_doc_file_id(&object.id) {
            return vec![];
        }
        match object.attribute("content") {
            Some(content) => vec![HaveContent::event(&object.id, content)],
            None => vec![],
        }
    }
}
