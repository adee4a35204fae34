//! Simulated collaboration: several editors exchanging encoded events over
//! unreliable channels.
//!
//! A [`Session`] runs a script of local submissions and flush points. Every
//! applied local event that passes the submitting editor's sync filter is
//! sent to every other editor. Channels may drop, duplicate and reorder
//! messages, driven by a seeded RNG, so a run is reproducible from its seed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::mpsc;
use std::thread;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{correspondence, Domain, UnknownDomain};
use crate::editor::Editor;
use crate::event::{decode, encode, ClockState, Event, EventError, ManualClock, OverwriteStrategy};
use crate::graph::{model_diff, ModelDiff};
use crate::verify::STAMP_BASE;

/// Fault model of a channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub drop: f64,
    pub duplicate: f64,
    /// Shuffle the messages delivered by one flush.
    pub reorder: bool,
    /// A dropped message is retried at the next flush instead of being lost.
    pub eventual: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            drop: 0.0,
            duplicate: 0.0,
            reorder: false,
            eventual: true,
        }
    }
}

impl ChannelConfig {
    pub fn reliable() -> Self {
        Self::default()
    }
}

/// What happened to one message during a flush.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fate {
    Delivered,
    Duplicated,
    Deferred,
    Lost,
}

/// A one-way link between two editors.
#[derive(Debug, Clone)]
pub struct Channel {
    config: ChannelConfig,
    rng: ChaCha8Rng,
    in_flight: Vec<String>,
}

impl Channel {
    pub fn new(config: ChannelConfig, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&config.drop), "drop probability out of range");
        assert!((0.0..=1.0).contains(&config.duplicate), "duplicate probability out of range");
        Channel {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
            in_flight: Vec::new(),
        }
    }

    pub fn config(&self) -> ChannelConfig {
        self.config
    }

    pub fn send(&mut self, message: String) {
        self.in_flight.push(message);
    }

    pub fn pending(&self) -> usize {
        self.in_flight.len()
    }

    /// Messages delivered now, each with its fate, in delivery order.
    /// Deferred and lost messages are reported but not delivered.
    pub fn flush(&mut self) -> Vec<(String, Fate)> {
        self.deliver(false)
    }

    /// Delivers everything in flight without dropping. Duplication and
    /// reordering still apply.
    pub fn drain(&mut self) -> Vec<(String, Fate)> {
        self.deliver(true)
    }

    fn deliver(&mut self, force: bool) -> Vec<(String, Fate)> {
        let mut delivered = Vec::new();
        let mut held = Vec::new();
        let mut report = Vec::new();
        for message in std::mem::take(&mut self.in_flight) {
            if !force && self.config.drop > 0.0 && self.rng.gen_bool(self.config.drop) {
                if self.config.eventual {
                    report.push((message.clone(), Fate::Deferred));
                    held.push(message);
                } else {
                    report.push((message, Fate::Lost));
                }
                continue;
            }
            if self.config.duplicate > 0.0 && self.rng.gen_bool(self.config.duplicate) {
                delivered.push((message.clone(), Fate::Duplicated));
            }
            delivered.push((message, Fate::Delivered));
        }
        if self.config.reorder {
            delivered.shuffle(&mut self.rng);
        }
        self.in_flight = held;
        report.extend(delivered);
        report
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Execute events locally at the editor with this index and broadcast
    /// the applied ones.
    Submit { editor: usize, events: Vec<Event> },
    Flush,
}

/// One entry of an editor's input, in the order it was processed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delivery {
    Local(Event),
    Remote(String),
}

/// Final state of one editor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditorSummary {
    pub name: String,
    pub domain: String,
    pub active: usize,
    /// SHA-256 of the export restricted to the command types all editors
    /// synchronize.
    pub digest: String,
    pub dump: String,
    pub shared_export: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceReport {
    pub editors: Vec<EditorSummary>,
    /// Pairs of editors whose shared exports differ.
    pub store_mismatches: Vec<(usize, usize)>,
    /// Differences between editors of the same metamodel.
    pub model_diffs: Vec<(usize, usize, ModelDiff)>,
    /// Mismatches between a package editor and a documentation editor.
    pub correspondence: Vec<(usize, usize, Vec<String>)>,
    pub undelivered: usize,
    pub trace: Vec<String>,
    pub inboxes: Vec<Vec<Delivery>>,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.store_mismatches.is_empty()
            && self.model_diffs.iter().all(|(_, _, d)| d.is_empty())
            && self.correspondence.iter().all(|(_, _, c)| c.is_empty())
    }

    /// Plain-text rendering: comment-prefixed summary and trace, the shared
    /// export of the first editor in event format, and a diff section.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# converged: {}", if self.converged() { "yes" } else { "no" });
        for e in &self.editors {
            let _ = writeln!(out, "# editor {} {} active={} {}", e.name, e.domain, e.active, e.digest);
        }
        let _ = writeln!(out, "# undelivered: {}", self.undelivered);
        for (index, e) in self.editors.iter().enumerate() {
            let _ = writeln!(out, "# model {index} {}", e.name);
            for line in e.dump.lines() {
                let _ = writeln!(out, "#   {line}");
            }
        }
        out.push_str("# trace\n");
        for line in &self.trace {
            let _ = writeln!(out, "#   {line}");
        }
        out.push_str("# diff\n");
        for (a, b) in &self.store_mismatches {
            let _ = writeln!(out, "#   stores {} and {} differ", self.editors[*a].name, self.editors[*b].name);
        }
        for (a, b, diff) in &self.model_diffs {
            for line in diff.lines() {
                let _ = writeln!(out, "#   {} vs {}: {line}", self.editors[*a].name, self.editors[*b].name);
            }
        }
        for (a, b, problems) in &self.correspondence {
            for line in problems {
                let _ = writeln!(out, "#   {} vs {}: {line}", self.editors[*a].name, self.editors[*b].name);
            }
        }
        if let Some(first) = self.editors.first() {
            out.push_str(&first.shared_export);
        }
        out
    }
}

/// A set of named editors, the channels between them, and a script.
pub struct Session {
    names: Vec<String>,
    editors: Vec<Editor>,
    channels: BTreeMap<(usize, usize), Channel>,
    script: Vec<Step>,
    clock: ManualClock,
}

impl Session {
    /// Editors run on a shared manual clock starting at [`STAMP_BASE`] that
    /// advances 1 ms per script step.
    pub fn new(domains: &[(&str, Domain)], channel: ChannelConfig, seed: u64) -> Self {
        let clock = ManualClock::new(STAMP_BASE);
        let mut names = Vec::new();
        let mut editors = Vec::new();
        for (name, domain) in domains {
            names.push(name.to_string());
            editors.push(domain.editor_with_clock(ClockState::new(clock.clone())));
        }
        let mut session = Session {
            names,
            editors,
            channels: BTreeMap::new(),
            script: Vec::new(),
            clock,
        };
        session.set_channels(channel, seed);
        session
    }

    /// Replaces every channel with a fresh one. Channel `(from, to)` is
    /// seeded from `seed` and its endpoints.
    pub fn set_channels(&mut self, config: ChannelConfig, seed: u64) {
        self.channels.clear();
        let n = self.editors.len();
        for from in 0..n {
            for to in 0..n {
                if from != to {
                    let channel_seed = seed
                        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                        .wrapping_add((from * n + to) as u64);
                    self.channels.insert((from, to), Channel::new(config, channel_seed));
                }
            }
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn editors(&self) -> &[Editor] {
        &self.editors
    }

    pub fn editor_mut(&mut self, index: usize) -> &mut Editor {
        &mut self.editors[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn set_strategy(&mut self, strategy: OverwriteStrategy) {
        for e in &mut self.editors {
            e.set_strategy(strategy);
        }
    }

    pub fn submit(&mut self, editor: usize, event: Event) -> &mut Self {
        assert!(editor < self.editors.len(), "no editor {editor}");
        self.script.push(Step::Submit {
            editor,
            events: vec![event],
        });
        self
    }

    pub fn flush(&mut self) -> &mut Self {
        self.script.push(Step::Flush);
        self
    }

    pub fn push(&mut self, step: Step) -> &mut Self {
        self.script.push(step);
        self
    }

    pub fn script(&self) -> &[Step] {
        &self.script
    }

    /// Runs the script, then drains the channels (when they deliver
    /// eventually) and reports the final state.
    pub fn run(mut self) -> ConvergenceReport {
        let mut trace = Vec::new();
        let mut inboxes = vec![Vec::new(); self.editors.len()];
        let script = std::mem::take(&mut self.script);
        let mut flushes = 0;
        for step in script {
            self.clock.advance(1);
            match step {
                Step::Submit { editor, events } => {
                    for event in events {
                        self.submit_now(editor, event, &mut trace, &mut inboxes);
                    }
                }
                Step::Flush => {
                    flushes += 1;
                    self.flush_now(&format!("flush {flushes}"), false, &mut trace, &mut inboxes);
                }
            }
        }
        let eventual = self.channels.values().all(|c| c.config().eventual);
        if eventual {
            let mut round = 0;
            while self.channels.values().any(|c| c.pending() > 0) {
                round += 1;
                self.flush_now(&format!("drain {round}"), true, &mut trace, &mut inboxes);
            }
        }
        let undelivered = self.channels.values().map(Channel::pending).sum();
        self.report(trace, inboxes, undelivered)
    }

    fn submit_now(
        &mut self,
        index: usize,
        event: Event,
        trace: &mut Vec<String>,
        inboxes: &mut [Vec<Delivery>],
    ) {
        let name = self.names[index].clone();
        let result = self.editors[index].execute(event.clone());
        match result {
            Ok(execution) => {
                let outcome = if execution.is_applied() { "applied" } else { "ignored" };
                trace.push(format!("submit {name} {} {outcome}", execution.event));
                inboxes[index].push(Delivery::Local(execution.event.clone()));
                if execution.is_applied() && self.editors[index].syncs(&execution.event.command) {
                    let message = execution.event.encoded();
                    for ((from, _), channel) in self.channels.iter_mut() {
                        if *from == index {
                            channel.send(message.clone());
                        }
                    }
                }
            }
            Err(err) => {
                trace.push(format!("submit {name} {event} error: {err}"));
            }
        }
    }

    fn flush_now(
        &mut self,
        label: &str,
        force: bool,
        trace: &mut Vec<String>,
        inboxes: &mut [Vec<Delivery>],
    ) {
        let keys: Vec<(usize, usize)> = self.channels.keys().copied().collect();
        for (from, to) in keys {
            let channel = self.channels.get_mut(&(from, to)).expect("channel");
            let messages = if force { channel.drain() } else { channel.flush() };
            for (message, fate) in messages {
                let shown = describe(&message);
                let route = format!("{label} {}->{}", self.names[from], self.names[to]);
                match fate {
                    Fate::Deferred => trace.push(format!("{route} {shown} deferred")),
                    Fate::Lost => trace.push(format!("{route} {shown} lost")),
                    Fate::Delivered | Fate::Duplicated => {
                        let tag = if fate == Fate::Duplicated { " (copy)" } else { "" };
                        let outcome = match self.editors[to].load_events(&message) {
                            Ok(r) if !r.errors.is_empty() => format!("error: {}", r.errors[0].1),
                            Ok(r) if r.applied > 0 => "applied".to_string(),
                            Ok(r) if r.skipped > 0 => "skipped".to_string(),
                            Ok(_) => "ignored".to_string(),
                            Err(err) => format!("error: {err}"),
                        };
                        trace.push(format!("{route} {shown}{tag} {outcome}"));
                        inboxes[to].push(Delivery::Remote(message));
                    }
                }
            }
        }
    }

    fn report(
        self,
        trace: Vec<String>,
        inboxes: Vec<Vec<Delivery>>,
        undelivered: usize,
    ) -> ConvergenceReport {
        let shared = shared_filter(&self.editors);
        let editors: Vec<EditorSummary> = self
            .editors
            .iter()
            .zip(&self.names)
            .map(|(editor, name)| {
                let shared_export = shared_export(editor, shared.as_ref());
                EditorSummary {
                    name: name.clone(),
                    domain: editor.domain().to_string(),
                    active: editor.active_len(),
                    digest: digest(&shared_export),
                    dump: editor.registry().dump(),
                    shared_export,
                }
            })
            .collect();

        let mut store_mismatches = Vec::new();
        let mut model_diffs = Vec::new();
        let mut correspondences = Vec::new();
        for a in 0..self.editors.len() {
            for b in a + 1..self.editors.len() {
                if editors[a].shared_export != editors[b].shared_export {
                    store_mismatches.push((a, b));
                }
                let (ea, eb) = (&self.editors[a], &self.editors[b]);
                if ea.domain() == eb.domain() {
                    model_diffs.push((a, b, model_diff(ea.registry(), eb.registry())));
                } else if let (Ok(da), Ok(db)) = (ea.domain().parse::<Domain>(), eb.domain().parse::<Domain>()) {
                    let problems = match (da, db) {
                        (Domain::JavaPackages, Domain::JavaDoc) => correspondence(ea.registry(), eb.registry()),
                        (Domain::JavaDoc, Domain::JavaPackages) => correspondence(eb.registry(), ea.registry()),
                        _ => Vec::new(),
                    };
                    correspondences.push((a, b, problems));
                }
            }
        }
        ConvergenceReport {
            editors,
            store_mismatches,
            model_diffs,
            correspondence: correspondences,
            undelivered,
            trace,
            inboxes,
        }
    }
}

fn describe(message: &str) -> String {
    match decode(message) {
        Ok(events) => events.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        Err(_) => format!("{message:?}"),
    }
}

/// Command types every editor synchronizes; `None` when no editor filters.
fn shared_filter(editors: &[Editor]) -> Option<BTreeSet<String>> {
    if editors.iter().all(|e| e.sync_filter().is_none()) {
        return None;
    }
    editors
        .iter()
        .map(|e| match e.sync_filter() {
            Some(filter) => filter.clone(),
            None => e.handler_tags().map(str::to_string).collect(),
        })
        .reduce(|a, b| a.intersection(&b).cloned().collect())
}

fn shared_export(editor: &Editor, shared: Option<&BTreeSet<String>>) -> String {
    let events: Vec<Event> = editor
        .active_commands()
        .map(|(_, e)| e)
        .filter(|e| shared.map_or(true, |s| s.contains(&e.command)))
        .cloned()
        .collect();
    encode(&events)
}

/// `sha256:` followed by the hex digest of an encoded command store. An
/// empty store digests to all zeros.
pub fn digest(text: &str) -> String {
    if text.is_empty() {
        return format!("sha256:{}", "0".repeat(64));
    }
    format!("sha256:{}", hex::encode(Sha256::digest(text.as_bytes())))
}

/// Replays each editor's recorded inbox on its own thread. Messages reach
/// the threads only through channels. Returns the editors in input order.
pub fn replay_threaded(editors: Vec<Editor>, inboxes: Vec<Vec<Delivery>>) -> Vec<Editor> {
    assert_eq!(editors.len(), inboxes.len(), "one inbox per editor");
    let mut handles = Vec::new();
    let mut senders = Vec::new();
    for mut editor in editors {
        let (tx, rx) = mpsc::channel::<Delivery>();
        senders.push(tx);
        handles.push(thread::spawn(move || {
            for delivery in rx {
                match delivery {
                    Delivery::Local(event) => {
                        let _ = editor.execute(event);
                    }
                    Delivery::Remote(text) => {
                        let _ = editor.load_events(&text);
                    }
                }
            }
            editor
        }));
    }
    for (tx, inbox) in senders.into_iter().zip(inboxes) {
        for delivery in inbox {
            tx.send(delivery).expect("editor thread alive");
        }
    }
    handles
        .into_iter()
        .map(|h| h.join().expect("editor thread panicked"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Domain { line: usize, source: UnknownDomain },
    #[error("line {line}: {source}")]
    Strategy { line: usize, source: EventError },
    #[error("script declares no editors")]
    NoEditors,
}

/// A parsed session script.
///
/// ```text
/// editor alice javapackages
/// editor bob javadoc
/// strategy last-edit-wins
/// channel drop=0.1 dup=0.3 reorder=on eventual=on
/// filter bob HaveRoot,HaveSubUnit,HaveLeaf
/// submit alice
///   - command: HaveRoot
///     id: org
/// flush
/// ```
///
/// Events of a `submit` block are indented below it. Blank lines and
/// lines starting with `#` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub editors: Vec<(String, Domain)>,
    pub strategy: Option<OverwriteStrategy>,
    pub channel: ChannelConfig,
    pub filters: Vec<(String, BTreeSet<String>)>,
    pub steps: Vec<Step>,
}

impl Script {
    pub fn session(&self, seed: u64) -> Session {
        let domains: Vec<(&str, Domain)> = self.editors.iter().map(|(n, d)| (n.as_str(), *d)).collect();
        let mut session = Session::new(&domains, self.channel, seed);
        if let Some(strategy) = self.strategy {
            session.set_strategy(strategy);
        }
        for (name, filter) in &self.filters {
            let index = session.index_of(name).expect("validated at parse time");
            session.editor_mut(index).set_sync_filter(Some(filter.clone()));
        }
        for step in &self.steps {
            session.push(step.clone());
        }
        session
    }
}

impl FromStr for Script {
    type Err = ScriptError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut script = Script {
            editors: Vec::new(),
            strategy: None,
            channel: ChannelConfig::default(),
            filters: Vec::new(),
            steps: Vec::new(),
        };
        let lines: Vec<&str> = text.lines().collect();
        let syntax = |line: usize, message: String| ScriptError::Syntax { line, message };
        let editor_index = |script: &Script, name: &str, line: usize| {
            script
                .editors
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| syntax(line, format!("unknown editor {name:?}")))
        };
        let mut i = 0;
        while i < lines.len() {
            let number = i + 1;
            let line = lines[i].trim_end();
            i += 1;
            let trimmed = line.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if line.starts_with(char::is_whitespace) {
                return Err(syntax(number, "indented line outside a submit block".into()));
            }
            let words: Vec<&str> = trimmed.split_whitespace().collect();
            match words.as_slice() {
                ["editor", name, domain] => {
                    if script.editors.iter().any(|(n, _)| n == name) {
                        return Err(syntax(number, format!("editor {name:?} declared twice")));
                    }
                    let domain = domain
                        .parse()
                        .map_err(|source| ScriptError::Domain { line: number, source })?;
                    script.editors.push((name.to_string(), domain));
                }
                ["strategy", name] => {
                    let strategy = name
                        .parse()
                        .map_err(|source| ScriptError::Strategy { line: number, source })?;
                    script.strategy = Some(strategy);
                }
                ["channel", settings @ ..] => {
                    for setting in settings {
                        let (key, value) = setting
                            .split_once('=')
                            .ok_or_else(|| syntax(number, format!("expected key=value, got {setting:?}")))?;
                        let flag = |v: &str| match v {
                            "on" | "true" | "yes" => Ok(true),
                            "off" | "false" | "no" => Ok(false),
                            _ => Err(syntax(number, format!("expected on or off, got {v:?}"))),
                        };
                        let probability = |v: &str| match v.parse::<f64>() {
                            Ok(p) if (0.0..=1.0).contains(&p) => Ok(p),
                            _ => Err(syntax(number, format!("expected a probability, got {v:?}"))),
                        };
                        match key {
                            "drop" => script.channel.drop = probability(value)?,
                            "dup" => script.channel.duplicate = probability(value)?,
                            "reorder" => script.channel.reorder = flag(value)?,
                            "eventual" => script.channel.eventual = flag(value)?,
                            _ => return Err(syntax(number, format!("unknown channel setting {key:?}"))),
                        }
                    }
                }
                ["filter", name, tags] => {
                    editor_index(&script, name, number)?;
                    let tags = tags.split(',').filter(|t| !t.is_empty()).map(str::to_string).collect();
                    script.filters.push((name.to_string(), tags));
                }
                ["submit", name] => {
                    let editor = editor_index(&script, name, number)?;
                    let start = i;
                    while i < lines.len()
                        && (lines[i].trim().is_empty() || lines[i].starts_with(char::is_whitespace))
                    {
                        i += 1;
                    }
                    let indent = lines[start..i]
                        .iter()
                        .find(|l| !l.trim().is_empty())
                        .map_or(0, |l| l.len() - l.trim_start().len());
                    let block: Vec<&str> = lines[start..i]
                        .iter()
                        .map(|l| {
                            let lead = l.len() - l.trim_start().len();
                            l[lead.min(indent)..].trim_end()
                        })
                        .collect();
                    let events = decode(&block.join("\n")).map_err(|e| ScriptError::Syntax {
                        line: start + e.line,
                        message: e.message,
                    })?;
                    if events.is_empty() {
                        return Err(syntax(number, "submit without events".into()));
                    }
                    script.steps.push(Step::Submit { editor, events });
                }
                ["flush"] => script.steps.push(Step::Flush),
                _ => return Err(syntax(number, format!("unrecognised line {trimmed:?}"))),
            }
        }
        if script.editors.is_empty() {
            return Err(ScriptError::NoEditors);
        }
        Ok(script)
    }
}
