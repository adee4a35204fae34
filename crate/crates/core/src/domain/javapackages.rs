//! Java packages and classes.
//!
//! `JavaPackage` objects form a tree through `pPack`/`subPackages` and hold
//! `JavaClass` objects through `classes`/`pack`. Classes carry a `vTag`
//! attribute and may reference each other through the many-to-many
//! `uses`/`usedBy` association.

use std::sync::Arc;

use crate::editor::{require, CommandHandler, DropLink, Editor, EditorError, ExecContext, HaveLink, RemoveCommand};
use crate::event::Event;
use crate::graph::{Association, AssociationSchema, Cardinality::*, ModelObject, Registry};

pub const PACKAGE: &str = "JavaPackage";
pub const CLASS: &str = "JavaClass";

pub fn schema() -> AssociationSchema {
    AssociationSchema::new(
        "javapackages",
        vec![
            Association::new(PACKAGE, "pPack", One, PACKAGE, "subPackages", Many),
            Association::new(CLASS, "pack", One, PACKAGE, "classes", Many),
            Association::new(CLASS, "uses", Many, CLASS, "usedBy", Many),
        ],
    )
    .expect("static schema is well formed")
}

pub fn editor() -> Editor {
    let mut editor = Editor::new("javapackages", Registry::new(Arc::new(schema())));
    editor
        .register(HaveRoot)
        .register(HaveSubUnit)
        .register(HaveLeaf)
        .register(RemoveCommand)
        .register(HaveLink)
        .register(DropLink);
    editor
}

/// org ▸ fulib ▸ serv ▸ Editor (vTag 1.0), untimed.
pub fn start_situation() -> Vec<Event> {
    vec![
        HaveRoot::event("org"),
        HaveSubUnit::event("fulib", "org"),
        HaveSubUnit::event("serv", "fulib"),
        HaveLeaf::event("Editor", "serv", "1.0"),
    ]
}

/// A package without a parent.
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
        ctx.registry.expect_type(PACKAGE, &event.id)?;
        ctx.registry.get_or_create(PACKAGE, &event.id)?;
        ctx.registry.set_link(&event.id, "pPack", None)?;
        Ok(Some(event.id.clone()))
    }

    fn parse(&self, object: &ModelObject, _schema: &AssociationSchema) -> Vec<Event> {
        if object.object_type != PACKAGE || object.target("pPack").is_some() {
            return vec![];
        }
        if !object.has_targets("classes") && !object.has_targets("subPackages") {
            // an empty root is garbage
            return vec![RemoveCommand::event(&object.id)];
        }
        vec![HaveRoot::event(&object.id)]
    }
}

/// A package below `parent`.
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
        let parent = require(event, "parent")?;
        ctx.registry.expect_type(PACKAGE, &event.id)?;
        ctx.registry.expect_type(PACKAGE, parent)?;
        ctx.registry.get_or_create(PACKAGE, &event.id)?;
        ctx.registry.get_object_frame(PACKAGE, parent)?;
        ctx.registry.set_link(&event.id, "pPack", Some(parent))?;
        Ok(Some(event.id.clone()))
    }

    fn remove(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<(), EditorError> {
        ctx.registry.remove_model_object(&event.id);
        if ctx.registry.get(&event.id).is_some() {
            ctx.registry.set_link(&event.id, "pPack", None)?;
        }
        Ok(())
    }

    fn parse(&self, object: &ModelObject, _schema: &AssociationSchema) -> Vec<Event> {
        match object.target("pPack") {
            Some(parent) if object.object_type == PACKAGE => {
                vec![HaveSubUnit::event(&object.id, parent)]
            }
            _ => vec![],
        }
    }
}

/// A class inside package `parent`, tagged with `vTag`.
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
        let parent = require(event, "parent")?;
        let vtag = event.param("vTag").unwrap_or_default();
        ctx.registry.expect_type(CLASS, &event.id)?;
        ctx.registry.expect_type(PACKAGE, parent)?;
        ctx.registry.get_or_create(CLASS, &event.id)?;
        ctx.registry.get_object_frame(PACKAGE, parent)?;
        ctx.registry.set_link(&event.id, "pack", Some(parent))?;
        ctx.registry.set_attribute(&event.id, "vTag", Some(vtag))?;
        Ok(Some(event.id.clone()))
    }

    fn remove(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<(), EditorError> {
        ctx.registry.remove_model_object(&event.id);
        if ctx.registry.get(&event.id).is_some() {
            ctx.registry.set_link(&event.id, "pack", None)?;
        }
        Ok(())
    }

    fn parse(&self, object: &ModelObject, _schema: &AssociationSchema) -> Vec<Event> {
        if object.object_type != CLASS {
            return vec![];
        }
        match object.target("pack") {
            Some(parent) => vec![HaveLeaf::event(
                &object.id,
                parent,
                object.attribute("vTag").unwrap_or_default(),
            )],
            None => vec![RemoveCommand::event(&object.id)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{FixedClock, ClockState};
    use crate::graph::{model_diff, model_equal, Role};

    fn fresh() -> Editor {
        editor().with_clock(ClockState::new(FixedClock(1_577_836_800_000)))
    }

    fn run_all(events: Vec<Event>) -> Editor {
        let mut e = fresh();
        for event in events {
            e.execute(event).unwrap();
        }
        e
    }

    #[test]
    fn root_has_no_parent() {
        let e = run_all(vec![HaveRoot::event("org")]);
        assert_eq!(e.registry().dump(), "JavaPackage org {} links{}\n");
    }

    #[test]
    fn root_detaches_a_sub_package_and_keeps_its_subtree() {
        let mut e = run_all(start_situation());
        e.execute(HaveRoot::event("fulib")).unwrap();
        let r = e.registry();
        assert_eq!(r.get("fulib").unwrap().target("pPack"), None);
        assert!(!r.get("org").unwrap().has_targets("subPackages"));
        assert_eq!(r.get("serv").unwrap().target("pPack"), Some("fulib"));
        assert_eq!(r.get("Editor").unwrap().target("pack"), Some("serv"));
    }

    #[test]
    fn root_twice_is_idempotent() {
        let once = run_all(vec![HaveRoot::event("org")]);
        let twice = run_all(vec![HaveRoot::event("org"), HaveRoot::event("org")]);
        assert!(model_equal(once.registry(), twice.registry()));
    }

    #[test]
    fn sub_unit_before_its_parent_frames_the_parent() {
        let e = run_all(vec![HaveSubUnit::event("serv", "fulib")]);
        assert_eq!(e.registry().role("fulib"), Some(Role::Frame));
        assert!(e.registry().get("fulib").unwrap().targets("subPackages").eq(["serv"]));
    }

    #[test]
    fn reparenting_moves_the_package() {
        let mut e = run_all(start_situation());
        e.execute(HaveSubUnit::event("serv", "org")).unwrap();
        let r = e.registry();
        assert!(!r.get("fulib").unwrap().has_targets("subPackages"));
        let mut under_org: Vec<&str> = r.get("org").unwrap().targets("subPackages").collect();
        under_org.sort();
        assert_eq!(under_org, ["fulib", "serv"]);
    }

    #[test]
    fn sub_unit_requires_a_parent() {
        let mut e = fresh();
        let err = e.execute(Event::new("HaveSubUnit").with_id("x")).unwrap_err();
        assert!(matches!(err, EditorError::MissingParam { .. }));
        assert_eq!(e.active_len(), 0);
    }

    #[test]
    fn leaf_sets_tag_and_package() {
        let e = run_all(start_situation());
        assert_eq!(
            e.registry().get("Editor").unwrap().dump_line(),
            "JavaClass Editor {vTag=1.0} links{pack->serv}"
        );
    }

    #[test]
    fn leaf_retag_keeps_one_object() {
        let mut e = run_all(start_situation());
        e.execute(HaveLeaf::event("Editor", "serv", "1.1")).unwrap();
        assert_eq!(e.registry().get("Editor").unwrap().attribute("vTag"), Some("1.1"));
        assert_eq!(e.registry().model_objects().filter(|o| o.object_type == CLASS).count(), 1);
    }

    #[test]
    fn leaf_before_parent() {
        let e = run_all(vec![HaveLeaf::event("Editor", "serv", "1.0")]);
        assert_eq!(e.registry().role("serv"), Some(Role::Frame));
        assert_eq!(e.registry().role("Editor"), Some(Role::Model));
    }

    #[test]
    fn removing_a_sub_unit() {
        let mut e = run_all(vec![HaveRoot::event("org"), HaveSubUnit::event("fulib", "org")]);
        let event = e.active_command("fulib").unwrap().clone();
        e.with_context(|ctx| HaveSubUnit.remove(ctx, &event)).unwrap();
        assert_eq!(e.registry().role("fulib"), Some(Role::Frame));
        assert!(!e.registry().get("org").unwrap().has_targets("subPackages"));
    }

    #[test]
    fn remove_of_never_run_command_is_harmless() {
        let mut e = run_all(vec![HaveRoot::event("org")]);
        let before = e.registry().clone();
        for (event, handler) in [
            (HaveRoot::event("x"), &HaveRoot as &dyn CommandHandler),
            (HaveSubUnit::event("x", "org"), &HaveSubUnit),
            (HaveLeaf::event("x", "org", "1"), &HaveLeaf),
        ] {
            e.with_context(|ctx| handler.remove(ctx, &event)).unwrap();
        }
        assert!(model_diff(&before, e.registry()).is_empty());
    }

    #[test]
    fn run_remove_run_restores_the_state() {
        for (event, handler) in [
            (HaveSubUnit::event("serv", "fulib"), &HaveSubUnit as &dyn CommandHandler),
            (HaveLeaf::event("Editor", "serv", "1.0"), &HaveLeaf),
            (HaveRoot::event("org"), &HaveRoot),
        ] {
            let mut e = run_all(start_situation());
            let after_run = e.registry().clone();
            e.with_context(|ctx| handler.remove(ctx, &event)).unwrap();
            e.with_context(|ctx| handler.run(ctx, &event).map(|_| ())).unwrap();
            assert!(model_equal(&after_run, e.registry()), "{event}");
        }
    }

    #[test]
    fn parse_rules() {
        let e = run_all(start_situation());
        let schema = schema();
        let r = e.registry();
        assert_eq!(HaveRoot.parse(r.get("org").unwrap(), &schema), vec![HaveRoot::event("org")]);
        assert_eq!(HaveRoot.parse(r.get("fulib").unwrap(), &schema), vec![]);
        assert_eq!(
            HaveSubUnit.parse(r.get("fulib").unwrap(), &schema),
            vec![HaveSubUnit::event("fulib", "org")]
        );
        assert_eq!(
            HaveLeaf.parse(r.get("Editor").unwrap(), &schema),
            vec![HaveLeaf::event("Editor", "serv", "1.0")]
        );
        let empty = ModelObject::new(PACKAGE, "lonely");
        assert_eq!(HaveRoot.parse(&empty, &schema), vec![RemoveCommand::event("lonely")]);
        let folder = ModelObject::new("Folder", "org");
        for handler in [&HaveRoot as &dyn CommandHandler, &HaveSubUnit, &HaveLeaf] {
            assert!(handler.parse(&folder, &schema).is_empty());
        }
    }
}
