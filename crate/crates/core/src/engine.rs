//! Continuous-time event-driven kernel for the classical CSMA dynamics.
//!
//! Every link independently senses its interfering links. A link whose
//! conflicting links are all silent draws a backoff that is exponentially
//! distributed with mean `1/z_l`; if the timer runs out while the channel is
//! still idle the link transmits for an exponentially distributed unit-mean
//! duration. Backoff timers are resampled, never frozen, each time a link
//! re-enters the sensing-idle condition; under exponential timers the law of
//! the process is unchanged.
//!
//! The event queue is a binary heap keyed by `(time, link)`; ties break by
//! ascending link id. Cancelled timers are removed lazily through per-link
//! generation counters.

use crate::error::{Error, Result};
use crate::graph::{InterferenceGraph, LinkId};
use crate::rng::{RngStreams, StreamId};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

/// Per-link channel state. A link is `BackingOff` only while it senses the
/// channel as idle; the set of `Transmitting` links is always a valid
/// schedule (independent set).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelState {
    /// Silent: blocked by a transmitting neighbour, suspended, or waiting to
    /// be re-armed.
    Idle,
    /// Counting down a backoff; field is the expiry time.
    BackingOff(f64),
    /// Transmitting; field is the end time.
    Transmitting(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EventKind {
    BackoffExpiry,
    TransmissionEnd,
    SuspendEnd,
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    link: u32,
    generation: u32,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap; reversed so the earliest (time, link) pops first
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.link.cmp(&self.link))
            .then_with(|| other.generation.cmp(&self.generation))
    }
}

/// Activity change emitted by the engine, drained by the caller to drive
/// queue accounting.
#[derive(Clone, Copy, Debug)]
pub struct Toggle {
    pub time: f64,
    pub link: LinkId,
    pub active: bool,
}

/// One row of the optional event trace.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub time: f64,
    pub link: LinkId,
    pub event: &'static str,
}

pub struct Engine<'g> {
    graph: &'g InterferenceGraph,
    rates: Vec<f64>,
    state: Vec<ChannelState>,
    suspended_until: Vec<f64>,
    generation: Vec<u32>,
    heap: BinaryHeap<Event>,
    now: f64,
    rng: Vec<ChaCha8Rng>,
    active_count: usize,
    toggles: Vec<Toggle>,
    events_processed: u64,
    trace: Option<Vec<TraceRow>>,
}

impl<'g> Engine<'g> {
    /// All links idle at time zero; every link immediately draws its first
    /// backoff (an idle system senses an idle channel everywhere).
    pub fn new(graph: &'g InterferenceGraph, rates: Vec<f64>, streams: &RngStreams) -> Result<Self> {
        if rates.len() != graph.len() {
            return Err(Error::config("one attempt rate per link required"));
        }
        if let Some(z) = rates.iter().find(|z| !(**z > 0.0)) {
            return Err(Error::config(format!("attempt rates must be positive, got {z}")));
        }
        let l = graph.len();
        let rng = (0..l).map(|i| streams.stream(StreamId::Channel(i))).collect();
        let mut engine = Engine {
            graph,
            rates,
            state: vec![ChannelState::Idle; l],
            suspended_until: vec![f64::NEG_INFINITY; l],
            generation: vec![0; l],
            heap: BinaryHeap::with_capacity(4 * l),
            now: 0.0,
            rng,
            active_count: 0,
            toggles: Vec::new(),
            events_processed: 0,
            trace: None,
        };
        for l in 0..engine.graph.len() {
            engine.try_arm(l);
        }
        Ok(engine)
    }

    pub fn uniform(graph: &'g InterferenceGraph, z: f64, streams: &RngStreams) -> Result<Self> {
        Self::new(graph, vec![z; graph.len()], streams)
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn events_processed(&self) -> u64 {
        self.events_processed
    }

    pub fn state(&self, l: LinkId) -> ChannelState {
        self.state[l]
    }

    pub fn is_transmitting(&self, l: LinkId) -> bool {
        matches!(self.state[l], ChannelState::Transmitting(_))
    }

    /// True iff no conflicting link is transmitting. A transmitting link is
    /// not sensing; callers decide what the value means for it.
    pub fn sense_idle(&self, l: LinkId) -> bool {
        self.graph.neighbors(l).iter().all(|&nb| !self.is_transmitting(nb))
    }

    /// Attempt-rate change; takes effect at the link's next backoff draw.
    pub fn set_rate(&mut self, l: LinkId, z: f64) -> Result<()> {
        if !(z > 0.0) {
            return Err(Error::config(format!("attempt rate must be positive, got {z}")));
        }
        self.rates[l] = z;
        Ok(())
    }

    pub fn rate(&self, l: LinkId) -> f64 {
        self.rates[l]
    }

    /// Fraction of links transmitting.
    pub fn active_density(&self) -> f64 {
        self.active_count as f64 / self.graph.len() as f64
    }

    /// Distance to the limit maximum schedules on grid topologies.
    pub fn delta(&self) -> f64 {
        0.5 - self.active_density()
    }

    /// Fraction of links that are inactive and sense the channel as idle.
    pub fn idle_sensing_density(&self) -> f64 {
        let n = (0..self.graph.len())
            .filter(|&l| !self.is_transmitting(l) && self.sense_idle(l))
            .count();
        n as f64 / self.graph.len() as f64
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn active_set(&self) -> Vec<LinkId> {
        (0..self.graph.len()).filter(|&l| self.is_transmitting(l)).collect()
    }

    pub fn take_toggles(&mut self) -> Vec<Toggle> {
        std::mem::take(&mut self.toggles)
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<TraceRow> {
        self.trace.take().unwrap_or_default()
    }

    /// Time of the next pending valid event, discarding stale timers.
    pub fn peek_next_event(&mut self) -> Option<f64> {
        while let Some(ev) = self.heap.peek() {
            if ev.generation == self.generation[ev.link as usize] {
                return Some(ev.time);
            }
            self.heap.pop();
        }
        None
    }

    /// Process every event with timestamp `<= until`, in time order, then
    /// move the clock to `until`.
    pub fn advance(&mut self, until: f64) -> Result<()> {
        if until < self.now {
            return Err(Error::config(format!(
                "cannot advance backwards: clock {} target {until}",
                self.now
            )));
        }
        while let Some(ev) = self.heap.peek() {
            if ev.time > until {
                break;
            }
            let ev = self.heap.pop().expect("peeked");
            if ev.generation != self.generation[ev.link as usize] {
                continue; // cancelled timer, lazily deleted
            }
            self.now = ev.time;
            self.events_processed += 1;
            self.dispatch(ev);
        }
        self.now = until;
        Ok(())
    }

    fn dispatch(&mut self, ev: Event) {
        let l = ev.link as usize;
        match ev.kind {
            EventKind::BackoffExpiry => {
                debug_assert!(matches!(self.state[l], ChannelState::BackingOff(_)));
                debug_assert!(self.sense_idle(l), "backoff expired while blocked");
                self.start_transmission(l);
            }
            EventKind::TransmissionEnd => {
                debug_assert!(matches!(self.state[l], ChannelState::Transmitting(_)));
                self.set_silent(l);
                self.trace_event(l, "end");
                // the ended link and any neighbour that now senses idle
                // re-enter contention with fresh backoffs
                self.try_arm(l);
                for i in 0..self.graph.neighbors(l).len() {
                    let nb = self.graph.neighbors(l)[i];
                    self.try_arm(nb);
                }
            }
            EventKind::SuspendEnd => {
                self.suspended_until[l] = f64::NEG_INFINITY;
                self.trace_event(l, "resume");
                self.try_arm(l);
            }
        }
    }

    fn start_transmission(&mut self, l: LinkId) {
        let duration = Exp::new(1.0).expect("unit rate").sample(&mut self.rng[l]);
        let end = self.now + duration;
        self.state[l] = ChannelState::Transmitting(end);
        self.active_count += 1;
        self.toggles.push(Toggle { time: self.now, link: l, active: true });
        self.trace_event(l, "start");
        self.heap.push(Event {
            time: end,
            link: l as u32,
            generation: self.generation[l],
            kind: EventKind::TransmissionEnd,
        });
        // neighbours can no longer sense idle; cancel their backoffs
        for i in 0..self.graph.neighbors(l).len() {
            let nb = self.graph.neighbors(l)[i];
            if matches!(self.state[nb], ChannelState::BackingOff(_)) {
                self.cancel_timer(nb);
                self.state[nb] = ChannelState::Idle;
            }
            debug_assert!(
                !self.is_transmitting(nb),
                "independent-set invariant violated: {l} started next to {nb}"
            );
        }
    }

    /// Arm a fresh backoff if the link is idle, not suspended, and senses an
    /// idle channel.
    fn try_arm(&mut self, l: LinkId) {
        if self.state[l] != ChannelState::Idle
            || self.suspended_until[l] > self.now
            || !self.sense_idle(l)
        {
            return;
        }
        let d = Exp::new(self.rates[l]).expect("positive rate").sample(&mut self.rng[l]);
        let expiry = self.now + d;
        self.state[l] = ChannelState::BackingOff(expiry);
        self.trace_event(l, "arm");
        self.heap.push(Event {
            time: expiry,
            link: l as u32,
            generation: self.generation[l],
            kind: EventKind::BackoffExpiry,
        });
    }

    fn cancel_timer(&mut self, l: LinkId) {
        self.generation[l] = self.generation[l].wrapping_add(1);
    }

    fn set_silent(&mut self, l: LinkId) {
        if self.is_transmitting(l) {
            self.active_count -= 1;
            self.toggles.push(Toggle { time: self.now, link: l, active: false });
        }
        self.state[l] = ChannelState::Idle;
    }

    /// Force every link silent instantaneously, then restart contention:
    /// every link that senses idle (all of them) draws a fresh backoff.
    /// Suspensions are preserved.
    pub fn unlock_all(&mut self) {
        for l in 0..self.graph.len() {
            self.cancel_timer(l);
            self.set_silent(l);
        }
        self.trace_event(0, "unlock");
        for l in 0..self.graph.len() {
            self.try_arm(l);
        }
        debug_assert_eq!(self.active_count, 0);
    }

    /// Take the link out of contention until `until`: any transmission is
    /// interrupted, any backoff cancelled; newly unblocked neighbours re-arm.
    /// The link rejoins contention at `until` if it then senses idle.
    pub fn suspend(&mut self, l: LinkId, until: f64) -> Result<()> {
        if until < self.now {
            return Err(Error::config("suspension must end in the future"));
        }
        let was_transmitting = self.is_transmitting(l);
        self.cancel_timer(l);
        self.set_silent(l);
        self.suspended_until[l] = until;
        self.trace_event(l, "suspend");
        self.heap.push(Event {
            time: until,
            link: l as u32,
            generation: self.generation[l],
            kind: EventKind::SuspendEnd,
        });
        if was_transmitting {
            for i in 0..self.graph.neighbors(l).len() {
                let nb = self.graph.neighbors(l)[i];
                self.try_arm(nb);
            }
        }
        Ok(())
    }

    fn trace_event(&mut self, l: LinkId, event: &'static str) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRow { time: self.now, link: l, event });
        }
    }

    /// Active links as CSV (`link` header, one id per row).
    pub fn write_active_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["link"])?;
        for l in self.active_set() {
            out.write_record([l.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Full invariant sweep, test support.
    #[cfg(any(test, debug_assertions))]
    pub fn check_invariants(&self) {
        let active = self.active_set();
        assert!(self.graph.is_independent(&active), "transmitting set not independent");
        assert_eq!(active.len(), self.active_count);
        for l in 0..self.graph.len() {
            if matches!(self.state[l], ChannelState::BackingOff(_)) {
                assert!(self.sense_idle(l), "link {l} backing off while blocked");
            }
        }
    }
}

/// Event-trace CSV: `time,link,event`.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time", "link", "event"])?;
    for r in rows {
        out.write_record([r.time.to_string(), r.link.to_string(), r.event.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
