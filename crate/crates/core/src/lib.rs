#![doc = include_str!("../README.md")]

pub mod event;
pub mod graph;
pub mod domain;
pub mod editor;
pub mod gen;
pub mod verify;
pub mod sync;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/events.md")]
    mod events {}
    #[doc = include_str!("../../../book/src/overwriting.md")]
    mod overwriting {}
    #[doc = include_str!("../../../book/src/object-graph.md")]
    mod object_graph {}
    #[doc = include_str!("../../../book/src/editor.md")]
    mod editor {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/parsing.md")]
    mod parsing {}
    #[doc = include_str!("../../../book/src/synchronization.md")]
    mod synchronization {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
