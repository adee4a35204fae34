//! Command types shared by every metamodel.

use crate::event::Event;
use crate::graph::{AssociationSchema, LinkEnd, ModelObject};

use super::{require, CommandHandler, EditorError, ExecContext};

/// Removes the increment of the active command with the same id and stays in
/// the store as a tombstone, so an older copy of that command arriving later
/// is ignored instead of re-executed.
#[derive(Debug, Default, Clone, Copy)]
pub struct RemoveCommand;

impl RemoveCommand {
    pub const TAG: &'static str = "RemoveCommand";

    pub fn event(id: &str) -> Event {
        Event::new(Self::TAG).with_id(id)
    }
}

impl CommandHandler for RemoveCommand {
    fn type_tag(&self) -> &str {
        Self::TAG
    }

    fn run(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<Option<String>, EditorError> {
        ctx.registry.remove_model_object(&event.id);
        if let Some(old) = ctx.active_command("", &event.id).cloned() {
            ctx.remove_command(&old)?;
        }
        Ok(None)
    }

    fn remove(&self, _ctx: &mut ExecContext<'_>, _event: &Event) -> Result<(), EditorError> {
        Ok(())
    }

    fn is_tombstone(&self) -> bool {
        true
    }
}

/// Id of the link command for one source, link name and target.
pub fn link_id(source: &str, link: &str, target: &str) -> String {
    format!("{source}~{link}~{target}")
}

struct LinkParams<'e> {
    source: &'e str,
    target: &'e str,
    link: &'e str,
    source_type: String,
    end: LinkEnd,
}

fn link_params<'e>(schema: &AssociationSchema, event: &'e Event) -> Result<LinkParams<'e>, EditorError> {
    let source = require(event, "source")?;
    let target = require(event, "target")?;
    let link = require(event, "link")?;
    let (source_type, end) = schema.many_to_many(link).ok_or_else(|| {
        EditorError::InvalidEvent(format!(
            "{link:?} is not the forward end of a many-to-many association"
        ))
    })?;
    let expected = link_id(source, link, target);
    if event.id != expected {
        return Err(EditorError::InvalidEvent(format!(
            "{} id must be {expected:?}, got {:?}",
            event.command, event.id
        )));
    }
    Ok(LinkParams {
        source,
        target,
        link,
        source_type: source_type.to_string(),
        end: end.clone(),
    })
}

fn frame_ends(ctx: &mut ExecContext<'_>, p: &LinkParams<'_>) -> Result<(), EditorError> {
    ctx.registry.expect_type(&p.source_type, p.source)?;
    ctx.registry.expect_type(&p.end.target_type, p.target)?;
    ctx.registry.get_object_frame(&p.source_type, p.source)?;
    ctx.registry.get_object_frame(&p.end.target_type, p.target)?;
    Ok(())
}

fn link_event(tag: &str, source: &str, link: &str, target: &str) -> Event {
    Event::new(tag)
        .with_id(link_id(source, link, target))
        .with_param("source", source)
        .with_param("target", target)
        .with_param("link", link)
}

fn link_derive_id(event: &Event) -> Option<String> {
    Some(link_id(
        event.param("source")?,
        event.param("link")?,
        event.param("target")?,
    ))
}

fn link_anchors(event: &Event) -> Vec<String> {
    ["source", "target"]
        .iter()
        .filter_map(|p| event.param(p).map(String::from))
        .collect()
}

/// Creates one link of a many-to-many association between two context
/// objects. Its id names the source, link and target, so a later
/// [`DropLink`] for the same pair overwrites it and vice versa.
#[derive(Debug, Default, Clone, Copy)]
pub struct HaveLink;

impl HaveLink {
    pub const TAG: &'static str = "HaveLink";

    pub fn event(source: &str, link: &str, target: &str) -> Event {
        link_event(Self::TAG, source, link, target)
    }
}

impl CommandHandler for HaveLink {
    fn type_tag(&self) -> &str {
        Self::TAG
    }

    fn run(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<Option<String>, EditorError> {
        let p = link_params(ctx.schema(), event)?;
        frame_ends(ctx, &p)?;
        ctx.registry.add_to_many(p.source, p.link, p.target)?;
        Ok(None)
    }

    fn remove(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<(), EditorError> {
        let p = link_params(ctx.schema(), event)?;
        if ctx.registry.get(p.source).is_some() && ctx.registry.get(p.target).is_some() {
            ctx.registry.remove_from_many(p.source, p.link, p.target)?;
        }
        Ok(())
    }

    fn parse(&self, object: &ModelObject, schema: &AssociationSchema) -> Vec<Event> {
        let mut events = Vec::new();
        for end in schema.ends_of(&object.object_type) {
            if !end.many_to_many() {
                continue;
            }
            for other in object.targets(&end.name) {
                events.push(if end.forward {
                    Self::event(&object.id, &end.name, other)
                } else {
                    Self::event(other, &end.reverse, &object.id)
                });
            }
        }
        events
    }

    fn derive_id(&self, event: &Event) -> Option<String> {
        link_derive_id(event)
    }

    fn anchors(&self, event: &Event) -> Vec<String> {
        link_anchors(event)
    }
}

/// Deletes one many-to-many link. Absent links are left alone; the event
/// still enters the store and blocks older [`HaveLink`]s for the pair.
#[derive(Debug, Default, Clone, Copy)]
pub struct DropLink;

impl DropLink {
    pub const TAG: &'static str = "DropLink";

    pub fn event(source: &str, link: &str, target: &str) -> Event {
        link_event(Self::TAG, source, link, target)
    }
}

impl CommandHandler for DropLink {
    fn type_tag(&self) -> &str {
        Self::TAG
    }

    fn run(&self, ctx: &mut ExecContext<'_>, event: &Event) -> Result<Option<String>, EditorError> {
        let p = link_params(ctx.schema(), event)?;
        frame_ends(ctx, &p)?;
        ctx.registry.remove_from_many(p.source, p.link, p.target)?;
        Ok(None)
    }

    fn remove(&self, _ctx: &mut ExecContext<'_>, _event: &Event) -> Result<(), EditorError> {
        Ok(())
    }

    fn is_tombstone(&self) -> bool {
        true
    }

    fn derive_id(&self, event: &Event) -> Option<String> {
        link_derive_id(event)
    }

    fn anchors(&self, event: &Event) -> Vec<String> {
        link_anchors(event)
    }
}
