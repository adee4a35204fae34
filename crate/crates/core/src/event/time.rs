use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, NaiveDateTime, Utc};

use super::EventError;

const FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.3fZ";

/// A UTC instant with millisecond precision, written as
/// `YYYY-MM-DDTHH:MM:SS.mmmZ`.
///
/// The textual form is fixed width, so comparing two timestamps as strings
/// gives the same answer as comparing them as instants. `Ord` is derived on
/// the string for exactly that reason.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(String);

impl Timestamp {
    /// Parses the canonical form. Anything that does not re-render to the
    /// identical string (wrong precision, offsets, years past 9999) is rejected.
    pub fn parse(text: &str) -> Result<Self, EventError> {
        let invalid = || EventError::InvalidTimestamp(text.to_string());
        let parsed = NaiveDateTime::parse_from_str(text, FORMAT).map_err(|_| invalid())?;
        let canonical = parsed.and_utc().format(FORMAT).to_string();
        if canonical != text {
            return Err(invalid());
        }
        Ok(Timestamp(canonical))
    }

    /// Milliseconds since the Unix epoch, clamped to years 0000..=9999.
    pub fn from_millis(millis: i64) -> Self {
        const MIN: i64 = -62_167_219_200_000; // 0000-01-01T00:00:00.000Z
        const MAX: i64 = 253_402_300_799_999; // 9999-12-31T23:59:59.999Z
        let clamped = millis.clamp(MIN, MAX);
        let instant = DateTime::<Utc>::from_timestamp_millis(clamped)
            .expect("clamped millis are representable");
        Timestamp(instant.format(FORMAT).to_string())
    }

    pub fn millis(&self) -> i64 {
        NaiveDateTime::parse_from_str(&self.0, FORMAT)
            .expect("timestamps are validated on construction")
            .and_utc()
            .timestamp_millis()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The instant `millis` milliseconds later.
    pub fn plus_millis(&self, millis: i64) -> Self {
        Timestamp::from_millis(self.millis().saturating_add(millis))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Timestamp {
    type Err = EventError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse(s)
    }
}

/// Where a [`ClockState`] reads wall time from.
pub trait TimeSource: Send {
    fn now_millis(&mut self) -> i64;
}

/// The operating system clock.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl TimeSource for SystemClock {
    fn now_millis(&mut self) -> i64 {
        Utc::now().timestamp_millis()
    }
}

/// Always reports the same instant.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub i64);

impl TimeSource for FixedClock {
    fn now_millis(&mut self) -> i64 {
        self.0
    }
}

/// A clock driven by hand. Clones share the same underlying time, which lets
/// a simulation advance every editor's clock at once.
#[derive(Debug, Clone, Default)]
pub struct ManualClock(Arc<AtomicI64>);

impl ManualClock {
    pub fn new(millis: i64) -> Self {
        ManualClock(Arc::new(AtomicI64::new(millis)))
    }

    pub fn set(&self, millis: i64) {
        self.0.store(millis, Ordering::SeqCst);
    }

    pub fn advance(&self, millis: i64) {
        self.0.fetch_add(millis, Ordering::SeqCst);
    }

    pub fn get(&self) -> i64 {
        self.0.load(Ordering::SeqCst)
    }
}

impl TimeSource for ManualClock {
    fn now_millis(&mut self) -> i64 {
        self.get()
    }
}

/// Per-editor clock. Successive readings are strictly increasing: when the
/// source has not moved past the previous reading, the previous reading plus
/// one millisecond is returned instead.
pub struct ClockState {
    source: Box<dyn TimeSource>,
    last: Option<i64>,
}

impl ClockState {
    pub fn new(source: impl TimeSource + 'static) -> Self {
        ClockState {
            source: Box::new(source),
            last: None,
        }
    }

    pub fn system() -> Self {
        ClockState::new(SystemClock)
    }

    pub fn now(&mut self) -> Timestamp {
        let wall = self.source.now_millis();
        let next = match self.last {
            Some(last) if wall <= last => last + 1,
            _ => wall,
        };
        self.last = Some(next);
        Timestamp::from_millis(next)
    }

    /// Records a timestamp seen on an incoming event so that later local
    /// readings sort after it.
    pub fn observe(&mut self, seen: &Timestamp) {
        let seen = seen.millis();
        if self.last.is_none_or(|last| seen > last) {
            self.last = Some(seen);
        }
    }

    pub fn last(&self) -> Option<Timestamp> {
        self.last.map(Timestamp::from_millis)
    }
}

impl Default for ClockState {
    fn default() -> Self {
        ClockState::system()
    }
}

impl fmt::Debug for ClockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClockState").field("last", &self.last).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: i64 = 1_577_883_720_000; // 2020-01-01T13:02:00.000Z

    #[test]
    fn canonical_format() {
        let t = Timestamp::from_millis(T);
        assert_eq!(t.as_str(), "2020-01-01T13:02:00.000Z");
        assert_eq!(Timestamp::parse("2020-01-01T13:02:00.000Z").unwrap(), t);
        assert_eq!(t.millis(), T);
    }

    #[test]
    fn rejects_non_canonical_text() {
        for bad in [
            "2020-01-01T13:02:00Z",
            "2020-01-01T13:02:00.0000Z",
            "2020-01-01 13:02:00.000Z",
            "13:02",
            "2020-01-01T13:02:00.000+01:00",
            "",
        ] {
            assert!(Timestamp::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn same_millisecond_bumps() {
        let mut clock = ClockState::new(FixedClock(T));
        let a = clock.now();
        let b = clock.now();
        let c = clock.now();
        assert_eq!(a.millis(), T);
        assert_eq!(b.millis(), T + 1);
        assert_eq!(c.millis(), T + 2);
    }

    #[test]
    fn readings_follow_the_source_when_it_moves() {
        let source = ManualClock::new(T);
        let mut clock = ClockState::new(source.clone());
        let a = clock.now();
        source.advance(1000);
        let b = clock.now();
        assert_eq!(b.millis() - a.millis(), 1000);
        assert!(a < b);
    }

    #[test]
    fn observed_times_push_the_clock_forward() {
        let mut clock = ClockState::new(FixedClock(T));
        clock.observe(&Timestamp::from_millis(T + 50));
        assert_eq!(clock.now().millis(), T + 51);
        clock.observe(&Timestamp::from_millis(T));
        assert_eq!(clock.now().millis(), T + 52);
    }

    #[test]
    fn string_order_is_time_order() {
        let instants = [-5_000_000_000_000, -1, 0, 1, 999, 1000, T, T + 86_400_000];
        for a in instants {
            for b in instants {
                let (ta, tb) = (Timestamp::from_millis(a), Timestamp::from_millis(b));
                assert_eq!(ta.cmp(&tb), a.cmp(&b), "{ta} vs {tb}");
            }
        }
    }
}
