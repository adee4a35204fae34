use std::collections::BTreeSet;
use std::fmt;

use super::{ModelObject, Registry};

/// One way in which two models differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Difference {
    OnlyInA { object_type: String, id: String },
    OnlyInB { object_type: String, id: String },
    Type { id: String, a: String, b: String },
    Attribute { id: String, name: String, a: Option<String>, b: Option<String> },
    ToOne { id: String, link: String, a: Option<String>, b: Option<String> },
    ToMany { id: String, link: String, only_a: Vec<String>, only_b: Vec<String> },
}

fn show(value: &Option<String>) -> String {
    match value {
        Some(v) => format!("{v:?}"),
        None => "-".to_string(),
    }
}

impl fmt::Display for Difference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Difference::OnlyInA { object_type, id } => write!(f, "{id}: only in a ({object_type})"),
            Difference::OnlyInB { object_type, id } => write!(f, "{id}: only in b ({object_type})"),
            Difference::Type { id, a, b } => write!(f, "{id}: type {a} vs {b}"),
            Difference::Attribute { id, name, a, b } => {
                write!(f, "{id}: attribute {name}: {} vs {}", show(a), show(b))
            }
            Difference::ToOne { id, link, a, b } => {
                write!(f, "{id}: link {link}: {} vs {}", show(a), show(b))
            }
            Difference::ToMany { id, link, only_a, only_b } => write!(
                f,
                "{id}: link {link}: only in a {{{}}}, only in b {{{}}}",
                only_a.join(","),
                only_b.join(",")
            ),
        }
    }
}

/// Result of comparing two registries. Frames never make two models unequal,
/// but frames held by only one side are listed as warnings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelDiff {
    pub differences: Vec<Difference>,
    pub warnings: Vec<String>,
}

impl ModelDiff {
    pub fn is_empty(&self) -> bool {
        self.differences.is_empty()
    }

    pub fn lines(&self) -> Vec<String> {
        self.differences.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for ModelDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.differences {
            writeln!(f, "{d}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

pub fn model_equal(a: &Registry, b: &Registry) -> bool {
    model_diff(a, b).is_empty()
}

pub fn model_diff(a: &Registry, b: &Registry) -> ModelDiff {
    let mut diff = ModelDiff::default();
    let mut left = a.model_objects().peekable();
    let mut right = b.model_objects().peekable();
    // Both iterators run in ascending id order.
    loop {
        match (left.peek(), right.peek()) {
            (None, None) => break,
            (Some(x), Some(y)) if x.id == y.id => {
                compare_objects(x, y, &mut diff.differences);
                left.next();
                right.next();
            }
            (Some(x), Some(y)) if x.id < y.id => {
                diff.differences.push(only_in_a(x));
                left.next();
            }
            (Some(x), None) => {
                diff.differences.push(only_in_a(x));
                left.next();
            }
            (_, Some(y)) => {
                diff.differences.push(Difference::OnlyInB {
                    object_type: y.object_type.clone(),
                    id: y.id.clone(),
                });
                right.next();
            }
        }
    }

    let frames_a: BTreeSet<&str> = a.frames().map(|o| o.id.as_str()).collect();
    let frames_b: BTreeSet<&str> = b.frames().map(|o| o.id.as_str()).collect();
    for id in frames_a.difference(&frames_b) {
        diff.warnings.push(format!("frame {id} only in a"));
    }
    for id in frames_b.difference(&frames_a) {
        diff.warnings.push(format!("frame {id} only in b"));
    }
    diff
}

fn only_in_a(o: &ModelObject) -> Difference {
    Difference::OnlyInA {
        object_type: o.object_type.clone(),
        id: o.id.clone(),
    }
}

fn compare_objects(a: &ModelObject, b: &ModelObject, out: &mut Vec<Difference>) {
    let id = &a.id;
    if a.object_type != b.object_type {
        out.push(Difference::Type {
            id: id.clone(),
            a: a.object_type.clone(),
            b: b.object_type.clone(),
        });
    }
    let names: BTreeSet<&String> = a.attributes.keys().chain(b.attributes.keys()).collect();
    for name in names {
        let (x, y) = (a.attributes.get(name), b.attributes.get(name));
        if x != y {
            out.push(Difference::Attribute {
                id: id.clone(),
                name: name.clone(),
                a: x.cloned(),
                b: y.cloned(),
            });
        }
    }
    let links: BTreeSet<&String> = a.to_one.keys().chain(b.to_one.keys()).collect();
    for link in links {
        let (x, y) = (a.to_one.get(link), b.to_one.get(link));
        if x != y {
            out.push(Difference::ToOne {
                id: id.clone(),
                link: link.clone(),
                a: x.cloned(),
                b: y.cloned(),
            });
        }
    }
    let empty = BTreeSet::new();
    let links: BTreeSet<&String> = a.to_many.keys().chain(b.to_many.keys()).collect();
    for link in links {
        let x = a.to_many.get(link).unwrap_or(&empty);
        let y = b.to_many.get(link).unwrap_or(&empty);
        if x != y {
            out.push(Difference::ToMany {
                id: id.clone(),
                link: link.clone(),
                only_a: x.difference(y).cloned().collect(),
                only_b: y.difference(x).cloned().collect(),
            });
        }
    }
}
