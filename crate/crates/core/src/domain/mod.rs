//! The two reference metamodels and the correspondence between them.

pub mod javadoc;
pub mod javapackages;

use std::fmt;
use std::str::FromStr;

use crate::editor::Editor;
use crate::event::ClockState;
use crate::graph::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    JavaPackages,
    JavaDoc,
}

impl Domain {
    pub const ALL: [Domain; 2] = [Domain::JavaPackages, Domain::JavaDoc];

    pub fn name(self) -> &'static str {
        match self {
            Domain::JavaPackages => "javapackages",
            Domain::JavaDoc => "javadoc",
        }
    }

    /// A fresh editor on the system clock.
    pub fn editor(self) -> Editor {
        match self {
            Domain::JavaPackages => javapackages::editor(),
            Domain::JavaDoc => javadoc::editor(),
        }
    }

    pub fn editor_with_clock(self, clock: ClockState) -> Editor {
        self.editor().with_clock(clock)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown domain {0:?} (expected javapackages or javadoc)")]
pub struct UnknownDomain(pub String);

impl FromStr for Domain {
    type Err = UnknownDomain;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownDomain(s.to_string()))
    }
}

/// Compares a package model with a documentation model that should mirror
/// it. Returns one line per mismatch; an empty result means they agree.
///
/// Packages map to folders and classes to files with the same id, `vTag` to
/// `version`, and parent links and `uses` links carry over unchanged. Every
/// sub folder must own its generated doc file and no root folder may.
pub fn correspondence(packages: &Registry, docs: &Registry) -> Vec<String> {
    use javadoc::{doc_file_id, is_doc_file_id, FILE, FOLDER};
    use javapackages::{CLASS, PACKAGE};

    let mut problems = Vec::new();
    for object in packages.model_objects() {
        let id = &object.id;
        let (want_type, parent_link, mirror_parent) = match object.object_type.as_str() {
            PACKAGE => (FOLDER, "pPack", "pFolder"),
            CLASS => (FILE, "pack", "folder"),
            other => {
                problems.push(format!("{id}: unexpected package object type {other}"));
                continue;
            }
        };
        let Some(mirror) = docs.get(id).filter(|_| docs.is_model_object(id)) else {
            problems.push(format!("{id}: no {want_type} in the documentation model"));
            continue;
        };
        if mirror.object_type != want_type {
            problems.push(format!("{id}: {} instead of {want_type}", mirror.object_type));
            continue;
        }
        if object.target(parent_link) != mirror.target(mirror_parent) {
            problems.push(format!(
                "{id}: parent {:?} vs {:?}",
                object.target(parent_link),
                mirror.target(mirror_parent)
            ));
        }
        if object.object_type == CLASS {
            if object.attribute("vTag") != mirror.attribute("version") {
                problems.push(format!(
                    "{id}: vTag {:?} vs version {:?}",
                    object.attribute("vTag"),
                    mirror.attribute("version")
                ));
            }
            let uses: Vec<&str> = object.targets("uses").collect();
            let mirrored: Vec<&str> = mirror.targets("uses").collect();
            if uses != mirrored {
                problems.push(format!("{id}: uses {uses:?} vs {mirrored:?}"));
            }
        }
        if object.object_type == PACKAGE {
            let doc = doc_file_id(id);
            let owned = mirror.targets("files").any(|f| f == doc) && docs.is_model_object(&doc);
            let is_sub = object.target("pPack").is_some();
            if is_sub && !owned {
                problems.push(format!("{id}: sub folder lacks {doc}"));
            }
            if !is_sub && owned {
                problems.push(format!("{id}: root folder owns {doc}"));
            }
            if is_sub && owned {
                let want = format!("{id} docu");
                let content = docs.get(&doc).and_then(|d| d.attribute("content"));
                if content != Some(want.as_str()) {
                    problems.push(format!("{doc}: content {content:?}, expected {want:?}"));
                }
            }
        }
    }
    for object in docs.model_objects() {
        if is_doc_file_id(&object.id) {
            continue;
        }
        if !packages.is_model_object(&object.id) {
            problems.push(format!("{}: no package counterpart", object.id));
        }
    }
    problems
}
