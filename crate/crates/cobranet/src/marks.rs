//! Marked Poisson event streams of the graphical construction.
//!
//! Each vertex carries an independent rate-1 Poisson clock; at every
//! arrival the vertex draws `s` uniform out-edge slots and `s` independent
//! bias bits. The same stream drives the forward opinion process and, read
//! backward, the dual particle system, so both see one common source of
//! randomness.
//!
//! Marks store edge-slot indices rather than resolved neighbor ids: on a
//! multigraph, uniform choice over slots is what realizes uniform neighbor
//! choice with replacement, and resolution happens at application time.
//!
//! Streams are generated by superposition: global inter-event gaps are
//! Exponential(n) and the ringing vertex is uniform. The streaming
//! simulator in [`crate::forward`] consumes the identical draw sequence,
//! which is what makes materialized replay and streaming execution agree
//! event for event.

use std::io::{Read, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Digraph;

/// Largest supported stubbornness; bias bits are packed into a byte.
pub const MAX_STUBBORNNESS: usize = 8;

/// One arrival of a vertex's marked Poisson process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarkEvent {
    pub time: f64,
    pub vertex: u32,
    slots: [u32; MAX_STUBBORNNESS],
    n_slots: u8,
    bits: u8,
}

impl MarkEvent {
    /// Build an event from explicit slots and bias bits (lengths must agree
    /// and stay within [`MAX_STUBBORNNESS`]).
    pub fn new(time: f64, vertex: u32, slots: &[u32], bits: &[bool]) -> Self {
        assert_eq!(slots.len(), bits.len(), "one bias bit per sampled slot");
        assert!(slots.len() <= MAX_STUBBORNNESS && !slots.is_empty());
        let mut slot_buf = [0u32; MAX_STUBBORNNESS];
        slot_buf[..slots.len()].copy_from_slice(slots);
        let mut mask = 0u8;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                mask |= 1 << i;
            }
        }
        MarkEvent {
            time,
            vertex,
            slots: slot_buf,
            n_slots: slots.len() as u8,
            bits: mask,
        }
    }

    pub fn slots(&self) -> &[u32] {
        &self.slots[..self.n_slots as usize]
    }

    pub fn stubbornness(&self) -> usize {
        self.n_slots as usize
    }

    /// Bias bit of observation `i`: true means the observed neighbor is
    /// perceived blue regardless of its color.
    pub fn bias_bit(&self, i: usize) -> bool {
        assert!(i < self.n_slots as usize);
        self.bits & (1 << i) != 0
    }

    pub fn all_bits_set(&self) -> bool {
        self.bits == ((1u16 << self.n_slots) - 1) as u8
    }

    fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }
}

/// A time-ordered sequence of mark events on `[0, horizon]`.
///
/// Reversal is an orientation flip, not a recomputation: the reversed view
/// yields the same events in reverse order at times `horizon - t`, and
/// reversing twice restores the original stream exactly (no floating-point
/// round trip).
#[derive(Clone, Debug, PartialEq)]
pub struct MarkStream {
    horizon: f64,
    s: u8,
    forward: Vec<MarkEvent>,
    reversed: bool,
}

impl MarkStream {
    /// Wrap explicit events (forward orientation). Times must be
    /// non-decreasing; simultaneous events keep their insertion order.
    pub fn from_events(horizon: f64, s: u8, events: Vec<MarkEvent>) -> Result<Self> {
        if !(horizon >= 0.0) {
            return Err(Error::Domain(format!(
                "horizon must be non-negative, got {horizon}"
            )));
        }
        for pair in events.windows(2) {
            if pair[1].time < pair[0].time {
                return Err(Error::Domain("event times must be non-decreasing".into()));
            }
        }
        if let Some(ev) = events
            .iter()
            .find(|e| e.time < 0.0 || e.time > horizon || e.stubbornness() != s as usize)
        {
            return Err(Error::Domain(format!(
                "event at t={} does not fit a horizon-{horizon}, s={s} stream",
                ev.time
            )));
        }
        Ok(MarkStream {
            horizon,
            s,
            forward: events,
            reversed: false,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn stubbornness(&self) -> u8 {
        self.s
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    /// Event `i` in the stream's own orientation.
    pub fn event(&self, i: usize) -> MarkEvent {
        if self.reversed {
            let ev = self.forward[self.forward.len() - 1 - i];
            ev.with_time(self.horizon - ev.time)
        } else {
            self.forward[i]
        }
    }

    /// Iterate events in the stream's orientation.
    pub fn events(&self) -> impl Iterator<Item = MarkEvent> + '_ {
        (0..self.len()).map(move |i| self.event(i))
    }

    /// Time-reverse the stream: the event at `t` moves to `horizon - t`,
    /// order flips, marks stay attached. An exact involution.
    pub fn reverse(self) -> MarkStream {
        MarkStream {
            reversed: !self.reversed,
            ..self
        }
    }
}

/// Inter-event gap of the superposed rate-`n` process.
#[inline]
pub(crate) fn exponential_gap(rate: f64, rng: &mut impl Rng) -> f64 {
    // u in [0,1) so 1-u in (0,1]; no log(0)
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// The shared event-draw discipline: gap, vertex, `s` slots, `s` bits, in
/// that order. Both stream materialization and the streaming simulator use
/// this iterator, so a given RNG state produces the identical event
/// sequence either way.
pub(crate) struct PoissonEventSource<'a, R: Rng> {
    graph: &'a Digraph,
    s: u8,
    p: f64,
    horizon: f64,
    clock: f64,
    rng: &'a mut R,
}

impl<'a, R: Rng> PoissonEventSource<'a, R> {
    pub(crate) fn new(graph: &'a Digraph, horizon: f64, s: u8, p: f64, rng: &'a mut R) -> Self {
        PoissonEventSource {
            graph,
            s,
            p,
            horizon,
            clock: 0.0,
            rng,
        }
    }
}

impl<R: Rng> Iterator for PoissonEventSource<'_, R> {
    type Item = MarkEvent;

    fn next(&mut self) -> Option<MarkEvent> {
        let n = self.graph.n();
        self.clock += exponential_gap(n as f64, self.rng);
        if self.clock > self.horizon {
            return None;
        }
        let vertex = self.rng.random_range(0..n as u32);
        let d = self.graph.out_degree(vertex);
        let mut slots = [0u32; MAX_STUBBORNNESS];
        for slot in slots.iter_mut().take(self.s as usize) {
            *slot = self.rng.random_range(0..d);
        }
        let mut bits = 0u8;
        for i in 0..self.s as usize {
            if self.rng.random_bool(self.p) {
                bits |= 1 << i;
            }
        }
        Some(MarkEvent {
            time: self.clock,
            vertex,
            slots,
            n_slots: self.s,
            bits,
        })
    }
}

/// Materialize the full mark stream for `g` on `[0, horizon]`.
///
/// Per-vertex arrival counts are Poisson(horizon), arrival times uniform
/// given the counts, slots uniform over the vertex's out-slots, bias bits
/// independent Bernoulli(p); deterministic given the RNG state.
pub fn generate_marks(
    g: &Digraph,
    horizon: f64,
    s: u8,
    p: f64,
    rng: &mut impl Rng,
) -> Result<MarkStream> {
    if !(horizon >= 0.0) {
        return Err(Error::Domain(format!(
            "horizon must be non-negative, got {horizon}"
        )));
    }
    if s == 0 || s as usize > MAX_STUBBORNNESS {
        return Err(Error::Domain(format!(
            "stubbornness must lie in 1..={MAX_STUBBORNNESS}, got {s}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [0,1], got {p}")));
    }
    let events: Vec<MarkEvent> = PoissonEventSource::new(g, horizon, s, p, rng).collect();
    Ok(MarkStream {
        horizon,
        s,
        forward: events,
        reversed: false,
    })
}

const EVENT_LOG_MAGIC: &[u8; 4] = b"CBMK";
const EVENT_LOG_VERSION: u32 = 1;

/// Metadata stored in an event-log header.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventLogHeader {
    pub n: u64,
    pub horizon: f64,
    pub s: u8,
    pub p: f64,
    pub seed: u64,
}

/// Write a stream as a little-endian binary log.
///
/// Layout: magic `CBMK`, version u32, n u64, horizon f64, s u8, p f64,
/// seed u64, event count u64; then per event: time f64, vertex u32,
/// `s` slot indices u32 each, bias bits packed in one u8. Events are
/// written in the stream's current orientation.
pub fn write_event_log(
    stream: &MarkStream,
    header: &EventLogHeader,
    w: &mut impl Write,
) -> Result<()> {
    w.write_all(EVENT_LOG_MAGIC)?;
    w.write_all(&EVENT_LOG_VERSION.to_le_bytes())?;
    w.write_all(&header.n.to_le_bytes())?;
    w.write_all(&header.horizon.to_le_bytes())?;
    w.write_all(&[header.s])?;
    w.write_all(&header.p.to_le_bytes())?;
    w.write_all(&header.seed.to_le_bytes())?;
    w.write_all(&(stream.len() as u64).to_le_bytes())?;
    for ev in stream.events() {
        w.write_all(&ev.time.to_le_bytes())?;
        w.write_all(&ev.vertex.to_le_bytes())?;
        for &slot in ev.slots() {
            w.write_all(&slot.to_le_bytes())?;
        }
        w.write_all(&[ev.bits])?;
    }
    Ok(())
}

/// Read a binary event log back into a header and a forward-oriented
/// stream.
pub fn read_event_log(r: &mut impl Read) -> Result<(EventLogHeader, MarkStream)> {
    fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        r.read_exact(&mut buf)?;
        Ok(buf)
    }
    let magic: [u8; 4] = read_exact(r)?;
    if &magic != EVENT_LOG_MAGIC {
        return Err(Error::EventLog("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_exact(r)?);
    if version != EVENT_LOG_VERSION {
        return Err(Error::EventLog(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(read_exact(r)?);
    let horizon = f64::from_le_bytes(read_exact(r)?);
    let s = read_exact::<1>(r)?[0];
    if s == 0 || s as usize > MAX_STUBBORNNESS {
        return Err(Error::EventLog(format!("bad stubbornness {s}")));
    }
    let p = f64::from_le_bytes(read_exact(r)?);
    let seed = u64::from_le_bytes(read_exact(r)?);
    let count = u64::from_le_bytes(read_exact(r)?);
    let mut events = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let time = f64::from_le_bytes(read_exact(r)?);
        let vertex = u32::from_le_bytes(read_exact(r)?);
        let mut slots = [0u32; MAX_STUBBORNNESS];
        for slot in slots.iter_mut().take(s as usize) {
            *slot = u32::from_le_bytes(read_exact(r)?);
        }
        let bits = read_exact::<1>(r)?[0];
        events.push(MarkEvent {
            time,
            vertex,
            slots,
            n_slots: s,
            bits,
        });
    }
    let header = EventLogHeader {
        n,
        horizon,
        s,
        p,
        seed,
    };
    Ok((header, MarkStream::from_events(horizon, s, events)?))
}
