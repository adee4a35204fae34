//! The in-memory model: id-bearing objects, bidirectional links, the object
//! registry and model comparison.

mod diff;
mod registry;
mod schema;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

pub use diff::{model_diff, model_equal, Difference, ModelDiff};
pub use registry::{Registry, Role};
pub use schema::{Association, AssociationSchema, Cardinality, LinkEnd};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("object ids must not be empty")]
    EmptyId,
    #[error("object {id:?} is a {existing}, not a {requested}")]
    TypeConflict {
        id: String,
        existing: String,
        requested: String,
    },
    #[error("unknown object {0:?}")]
    UnknownObject(String),
    #[error("object {0:?} already exists")]
    DuplicateObject(String),
    #[error("schema violation: {0}")]
    Schema(String),
}

/// A model node. Attribute values are strings; to-one links hold the target id
/// and to-many links hold sets of target ids. Unset links and empty sets are
/// not stored, so two objects with the same content compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelObject {
    pub object_type: String,
    pub id: String,
    pub attributes: BTreeMap<String, String>,
    pub to_one: BTreeMap<String, String>,
    pub to_many: BTreeMap<String, BTreeSet<String>>,
}

impl ModelObject {
    pub fn new(object_type: impl Into<String>, id: impl Into<String>) -> Self {
        ModelObject {
            object_type: object_type.into(),
            id: id.into(),
            attributes: BTreeMap::new(),
            to_one: BTreeMap::new(),
            to_many: BTreeMap::new(),
        }
    }

    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }

    pub fn target(&self, link: &str) -> Option<&str> {
        self.to_one.get(link).map(String::as_str)
    }

    /// Targets of a to-many link, empty when unset.
    pub fn targets(&self, link: &str) -> impl Iterator<Item = &str> {
        self.to_many
            .get(link)
            .into_iter()
            .flat_map(|set| set.iter().map(String::as_str))
    }

    pub fn has_targets(&self, link: &str) -> bool {
        self.to_many.get(link).is_some_and(|set| !set.is_empty())
    }

    /// One-line rendering: `TYPE id {attr=val,...} links{name->id|{ids}}`,
    /// everything in ascending order.
    pub fn dump_line(&self) -> String {
        let mut out = format!("{} {} {{", self.object_type, self.id);
        let attrs: Vec<String> = self
            .attributes
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        out.push_str(&attrs.join(","));
        out.push_str("} links{");
        let mut links: Vec<(&str, String)> = self
            .to_one
            .iter()
            .map(|(name, target)| (name.as_str(), target.clone()))
            .collect();
        for (name, targets) in &self.to_many {
            let ids: Vec<&str> = targets.iter().map(String::as_str).collect();
            links.push((name.as_str(), format!("{{{}}}", ids.join(","))));
        }
        links.sort();
        let rendered: Vec<String> = links
            .into_iter()
            .map(|(name, target)| format!("{name}->{target}"))
            .collect();
        let _ = write!(out, "{}}}", rendered.join(","));
        out
    }
}
