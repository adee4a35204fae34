use std::collections::BTreeMap;

use super::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cardinality {
    One,
    Many,
}

/// A bidirectional association. `link` is stored on `owner_type` objects and
/// points at `target_type` objects; `reverse` is the opposite end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    pub owner_type: String,
    pub link: String,
    pub cardinality: Cardinality,
    pub target_type: String,
    pub reverse: String,
    pub reverse_cardinality: Cardinality,
}

impl Association {
    pub fn new(
        owner_type: &str,
        link: &str,
        cardinality: Cardinality,
        target_type: &str,
        reverse: &str,
        reverse_cardinality: Cardinality,
    ) -> Self {
        Association {
            owner_type: owner_type.to_string(),
            link: link.to_string(),
            cardinality,
            target_type: target_type.to_string(),
            reverse: reverse.to_string(),
            reverse_cardinality,
        }
    }
}

/// One end of an association, as seen from an object holding it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkEnd {
    pub name: String,
    pub target_type: String,
    pub many: bool,
    pub reverse: String,
    pub reverse_many: bool,
    /// True for the `link` end of its [`Association`], false for the reverse.
    pub forward: bool,
}

impl LinkEnd {
    pub fn many_to_many(&self) -> bool {
        self.many && self.reverse_many
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationSchema {
    name: String,
    associations: Vec<Association>,
    ends: BTreeMap<(String, String), LinkEnd>,
}

impl AssociationSchema {
    pub fn new(name: impl Into<String>, associations: Vec<Association>) -> Result<Self, GraphError> {
        let mut ends = BTreeMap::new();
        for a in &associations {
            let forward = LinkEnd {
                name: a.link.clone(),
                target_type: a.target_type.clone(),
                many: a.cardinality == Cardinality::Many,
                reverse: a.reverse.clone(),
                reverse_many: a.reverse_cardinality == Cardinality::Many,
                forward: true,
            };
            let backward = LinkEnd {
                name: a.reverse.clone(),
                target_type: a.owner_type.clone(),
                many: forward.reverse_many,
                reverse: a.link.clone(),
                reverse_many: forward.many,
                forward: false,
            };
            for (owner, end) in [(&a.owner_type, forward), (&a.target_type, backward)] {
                let key = (owner.clone(), end.name.clone());
                if ends.contains_key(&key) {
                    return Err(GraphError::Schema(format!(
                        "link {}.{} declared twice",
                        key.0, key.1
                    )));
                }
                ends.insert(key, end);
            }
        }
        Ok(AssociationSchema {
            name: name.into(),
            associations,
            ends,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn associations(&self) -> &[Association] {
        &self.associations
    }

    pub fn end(&self, object_type: &str, link: &str) -> Option<&LinkEnd> {
        self.ends.get(&(object_type.to_string(), link.to_string()))
    }

    /// Every link end declared for `object_type`.
    pub fn ends_of<'a>(&'a self, object_type: &'a str) -> impl Iterator<Item = &'a LinkEnd> + 'a {
        self.ends
            .iter()
            .filter(move |((owner, _), _)| owner == object_type)
            .map(|(_, end)| end)
    }

    /// The forward end of a many-to-many association named `link`, with the
    /// type that owns it.
    pub fn many_to_many(&self, link: &str) -> Option<(&str, &LinkEnd)> {
        self.ends
            .iter()
            .find(|((_, name), end)| name == link && end.forward && end.many_to_many())
            .map(|((owner, _), end)| (owner.as_str(), end))
    }
}
