//! Seeded event generators for property tests and simulations.
//!
//! Package ids and class ids come from disjoint alphabets, so no id ever
//! changes its object type. Times fall into a narrow window to make equal
//! timestamps, and with them the serialization tie-break, common.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::domain::javadoc::HaveContent;
use crate::domain::javapackages::{HaveLeaf, HaveRoot, HaveSubUnit};
use crate::editor::{DropLink, HaveLink, RemoveCommand};
use crate::event::{Event, Timestamp};
use crate::verify::STAMP_BASE;

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub packages: Vec<String>,
    pub classes: Vec<String>,
    pub vtags: Vec<String>,
    /// Events get times in `[base, base + window)` ms.
    pub base: i64,
    pub window: i64,
    /// Emit JavaDoc-only `HaveContent` events.
    pub content: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            packages: ids("p", 5),
            classes: ids("c", 5),
            vtags: ["1.0", "1.1", "2.0"].map(String::from).to_vec(),
            base: STAMP_BASE,
            window: 40,
            content: false,
        }
    }
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

impl GenConfig {
    /// Events understood by both example editors.
    pub fn shared() -> Self {
        Self::default()
    }

    /// Adds `HaveContent`, which only the JavaDoc editor accepts.
    pub fn with_content(mut self) -> Self {
        self.content = true;
        self
    }

    pub fn time<R: Rng>(&self, rng: &mut R) -> Timestamp {
        Timestamp::from_millis(self.base + rng.gen_range(0..self.window.max(1)))
    }

    /// One random untimed event.
    pub fn untimed_event<R: Rng>(&self, rng: &mut R) -> Event {
        let p = |rng: &mut R| self.packages.choose(rng).expect("package ids").clone();
        let c = |rng: &mut R| self.classes.choose(rng).expect("class ids").clone();
        let kinds = if self.content { 8 } else { 7 };
        match rng.gen_range(0..kinds) {
            0 => HaveRoot::event(&p(rng)),
            1 | 2 => {
                let (id, parent) = (p(rng), p(rng));
                HaveSubUnit::event(&id, &parent)
            }
            3 => {
                let (id, parent) = (c(rng), p(rng));
                let vtag = self.vtags.choose(rng).expect("vtags");
                HaveLeaf::event(&id, &parent, vtag)
            }
            4 => {
                let id = if rng.gen_bool(0.5) { p(rng) } else { c(rng) };
                RemoveCommand::event(&id)
            }
            5 => {
                let (a, b) = (c(rng), c(rng));
                HaveLink::event(&a, "uses", &b)
            }
            6 => {
                let (a, b) = (c(rng), c(rng));
                DropLink::event(&a, "uses", &b)
            }
            _ => {
                let id = c(rng);
                let text = format!("notes {}", rng.gen_range(0..3));
                HaveContent::event(&id, &text)
            }
        }
    }

    pub fn event<R: Rng>(&self, rng: &mut R) -> Event {
        let event = self.untimed_event(rng);
        event.at(self.time(rng))
    }

    /// `len` timed events.
    pub fn sequence<R: Rng>(&self, rng: &mut R, len: usize) -> Vec<Event> {
        (0..len).map(|_| self.event(rng)).collect()
    }

    /// Sequences that start with a package tree and then edit it, so most
    /// commands land on existing objects.
    pub fn grown_sequence<R: Rng>(&self, rng: &mut R, len: usize) -> Vec<Event> {
        let mut events = Vec::with_capacity(len);
        let root = self.packages[0].clone();
        events.push(HaveRoot::event(&root).at(self.time(rng)));
        for id in self.packages.iter().skip(1) {
            if events.len() >= len {
                break;
            }
            let parent = self.packages.choose(rng).expect("package ids");
            events.push(HaveSubUnit::event(id, parent).at(self.time(rng)));
        }
        while events.len() < len {
            events.push(self.event(rng));
        }
        events.truncate(len);
        events
    }
}

/// A fixed alphabet of timestamped events that touches every command type
/// and includes overwriting pairs: two tags of one class, a tombstone, a
/// re-parented package and a link that is both added and dropped.
pub fn small_alphabet() -> Vec<Event> {
    let t = |ms: i64| Timestamp::from_millis(STAMP_BASE + ms);
    vec![
        HaveRoot::event("p0").at(t(0)),
        HaveSubUnit::event("p1", "p0").at(t(1)),
        HaveRoot::event("p1").at(t(2)),
        HaveLeaf::event("c0", "p1", "1.0").at(t(1)),
        HaveLeaf::event("c0", "p0", "1.1").at(t(3)),
        HaveLeaf::event("c1", "p0", "2.0").at(t(0)),
        RemoveCommand::event("c1").at(t(2)),
        HaveLink::event("c0", "uses", "c1").at(t(1)),
        DropLink::event("c0", "uses", "c1").at(t(2)),
        RemoveCommand::event("p0").at(t(4)),
    ]
}

/// Every subset of `alphabet` with at most `max_len` elements, each in
/// alphabet order. Includes the empty subset.
pub fn subsets(alphabet: &[Event], max_len: usize) -> Vec<Vec<Event>> {
    assert!(alphabet.len() < 24, "alphabet too large to enumerate");
    (0u32..1 << alphabet.len())
        .filter(|mask| mask.count_ones() as usize <= max_len)
        .map(|mask| {
            alphabet
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

/// All orderings of `events`. Meant for short inputs.
pub fn permutations(events: &[Event]) -> Vec<Vec<Event>> {
    if events.len() <= 1 {
        return vec![events.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..events.len() {
        let mut rest = events.to_vec();
        let first = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, first.clone());
            out.push(tail);
        }
    }
    out
}
