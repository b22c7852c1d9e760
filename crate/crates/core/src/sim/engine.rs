use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Display;

use crate::error::{Error, Result};

/// Short human-readable name of an event payload, used in diagnostics.
pub trait EventTag {
    fn tag(&self) -> &'static str;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(pub u64);

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub fire_time: f64,
    pub sequence_no: u64,
    pub payload: P,
}

impl<P> Event<P> {
    pub fn id(&self) -> EventId {
        EventId(self.sequence_no)
    }
}

struct Queued<P>(Event<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    // BinaryHeap is a max-heap: invert so the earliest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .fire_time
            .total_cmp(&self.0.fire_time)
            .then_with(|| other.0.sequence_no.cmp(&self.0.sequence_no))
    }
}

/// Single-queue event scheduler. Events with equal fire times run in the
/// order they were scheduled.
pub struct Engine<P> {
    now: f64,
    horizon: f64,
    next_seq: u64,
    processed: u64,
    queue: BinaryHeap<Queued<P>>,
}

impl<P: EventTag> Default for Engine<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P: EventTag> Engine<P> {
    pub fn new() -> Self {
        Self::with_horizon(f64::INFINITY)
    }

    /// Engine that refuses new events once the clock has passed `horizon`.
    pub fn with_horizon(horizon: f64) -> Self {
        Engine {
            now: 0.0,
            horizon,
            next_seq: 0,
            processed: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Total events handled over the engine's lifetime.
    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn schedule(&mut self, delay: f64, payload: P) -> Result<EventId> {
        if !delay.is_finite() || delay < 0.0 {
            return Err(Error::config(format!(
                "cannot schedule `{}` with delay {delay}",
                payload.tag()
            )));
        }
        if self.now > self.horizon {
            return Err(Error::config(format!(
                "engine is past its end time ({} s)",
                self.horizon
            )));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(Event {
            fire_time: self.now + delay,
            sequence_no: seq,
            payload,
        }));
        Ok(EventId(seq))
    }

    /// Schedules at an absolute time, which must not lie in the past.
    pub fn schedule_at(&mut self, time: f64, payload: P) -> Result<EventId> {
        self.schedule(time - self.now, payload)
    }

    /// Processes every event with `fire_time <= t_end` and leaves the clock at
    /// `t_end`. A handler error aborts the run with the event time and tag.
    pub fn run_until<F, E>(&mut self, t_end: f64, mut handler: F) -> Result<u64>
    where
        F: FnMut(&mut Self, Event<P>) -> std::result::Result<(), E>,
        E: Display,
    {
        if t_end.is_nan() || t_end < self.now {
            return Err(Error::config(format!(
                "run_until({t_end}) is before the current time {}",
                self.now
            )));
        }
        let mut count = 0;
        while self.queue.peek().is_some_and(|q| q.0.fire_time <= t_end) {
            let Queued(event) = self.queue.pop().expect("peeked");
            debug_assert!(event.fire_time >= self.now);
            self.now = event.fire_time;
            let tag = event.payload.tag();
            let time_s = event.fire_time;
            handler(self, event).map_err(|e| Error::Handler {
                time_s,
                tag: tag.to_string(),
                message: e.to_string(),
            })?;
            count += 1;
            self.processed += 1;
        }
        self.now = t_end;
        Ok(count)
    }
}
