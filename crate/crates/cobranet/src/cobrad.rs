//! The dual system of coalescing, branching and dying labeled particles.
//!
//! Labels are vertex ids; a vertex holds at most one particle per label.
//! At an arrival of vertex `x`'s clock, every particle at `x` is moved to
//! the set of distinct resolved targets of the slots whose bias bit is 0:
//! no such slot means the particles die, one means they move, two or more
//! mean they branch. Copies landing where the label is already present
//! coalesce. For stubbornness 2 this is exactly: both bits set kills,
//! one bit set moves along the unbiased slot, no bit set branches onto
//! both sampled neighbors (coalescing immediately if they are the same
//! vertex).
//!
//! The rule for general `s` is the unique extension under which the
//! pathwise duality with the opinion process carries over: a vertex turns
//! blue exactly when every unbiased observation is blue, so a label's
//! survival must track the set of unbiased dependencies.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::marks::{exponential_gap, MarkEvent, MarkStream, MAX_STUBBORNNESS};
use crate::seeding::stream_rng;
use crate::SurvivalEstimate;

/// Particle configuration: per-vertex label sets plus the incrementally
/// maintained per-label particle counts and set of alive labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParticleConfig {
    occupancy: Vec<BTreeSet<u32>>,
    particle_counts: Vec<u32>,
    alive: BTreeSet<u32>,
}

impl ParticleConfig {
    /// Start with one particle labeled `x` at every `x` in `labels`.
    pub fn init(n: usize, labels: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut config = ParticleConfig {
            occupancy: vec![BTreeSet::new(); n],
            particle_counts: vec![0; n],
            alive: BTreeSet::new(),
        };
        for x in labels {
            if (x as usize) >= n {
                return Err(Error::VertexOutOfRange { vertex: x, n });
            }
            if config.occupancy[x as usize].insert(x) {
                config.particle_counts[x as usize] += 1;
                config.alive.insert(x);
            }
        }
        Ok(config)
    }

    pub fn n(&self) -> usize {
        self.occupancy.len()
    }

    pub fn labels_at(&self, x: u32) -> &BTreeSet<u32> {
        &self.occupancy[x as usize]
    }

    pub fn is_occupied(&self, x: u32) -> bool {
        !self.occupancy[x as usize].is_empty()
    }

    pub fn is_alive(&self, label: u32) -> bool {
        self.alive.contains(&label)
    }

    pub fn alive_labels(&self) -> &BTreeSet<u32> {
        &self.alive
    }

    pub fn total_particles(&self) -> u64 {
        self.particle_counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Recompute the alive set and counts from the occupancy and compare
    /// with the maintained ones.
    pub fn is_consistent(&self) -> bool {
        let mut counts = vec![0u32; self.n()];
        let mut alive = BTreeSet::new();
        for set in &self.occupancy {
            for &label in set {
                counts[label as usize] += 1;
                alive.insert(label);
            }
        }
        counts == self.particle_counts && alive == self.alive
    }
}

/// Per-event outcome at an occupied vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventOutcome {
    /// Every bias bit set: all particles at the vertex die.
    Die,
    /// Exactly one distinct target vertex (including a branch whose slots
    /// resolve to the same vertex).
    Move,
    /// Two or more distinct target vertices.
    Branch,
}

fn zero_bit_targets(g: &Digraph, ev: &MarkEvent) -> [Option<u32>; MAX_STUBBORNNESS] {
    let mut targets = [None; MAX_STUBBORNNESS];
    let mut count = 0;
    for (i, &slot) in ev.slots().iter().enumerate() {
        if !ev.bias_bit(i) {
            let y = g.head(ev.vertex, slot);
            if !targets[..count].contains(&Some(y)) {
                targets[count] = Some(y);
                count += 1;
            }
        }
    }
    targets
}

/// Classify what an event does to particles sitting at its vertex
/// (independent of the occupancy itself).
pub fn classify_event(g: &Digraph, ev: &MarkEvent) -> Result<EventOutcome> {
    if (ev.vertex as usize) >= g.n() {
        return Err(Error::VertexOutOfRange {
            vertex: ev.vertex,
            n: g.n(),
        });
    }
    let targets = zero_bit_targets(g, ev);
    let count = targets.iter().filter(|t| t.is_some()).count();
    Ok(match count {
        0 => EventOutcome::Die,
        1 => EventOutcome::Move,
        _ => EventOutcome::Branch,
    })
}

/// Apply one event to the particle configuration.
pub fn step(g: &Digraph, config: &mut ParticleConfig, ev: &MarkEvent) -> Result<()> {
    if (ev.vertex as usize) >= g.n() {
        return Err(Error::VertexOutOfRange {
            vertex: ev.vertex,
            n: g.n(),
        });
    }
    let v = ev.vertex as usize;
    if config.occupancy[v].is_empty() {
        return Ok(());
    }
    let targets = zero_bit_targets(g, ev);
    let moved = std::mem::take(&mut config.occupancy[v]);
    for &label in &moved {
        config.particle_counts[label as usize] -= 1;
    }
    for y in targets.iter().flatten() {
        let set = &mut config.occupancy[*y as usize];
        for &label in &moved {
            if set.insert(label) {
                config.particle_counts[label as usize] += 1;
            }
        }
    }
    for &label in &moved {
        if config.particle_counts[label as usize] == 0 {
            config.alive.remove(&label);
        }
    }
    Ok(())
}

/// Run the particle system over a stream (normally the reversal of a
/// forward stream) starting from one particle per label in `labels`, and
/// report which labels are still alive at the end. Exits early once every
/// label is extinct.
pub fn run_backward(
    g: &Digraph,
    stream: &MarkStream,
    labels: &[u32],
) -> Result<BTreeMap<u32, bool>> {
    let mut config = ParticleConfig::init(g.n(), labels.iter().copied())?;
    for ev in stream.events() {
        if config.alive.is_empty() {
            break;
        }
        step(g, &mut config, &ev)?;
    }
    Ok(labels
        .iter()
        .map(|&label| (label, config.is_alive(label)))
        .collect())
}

#[derive(PartialEq)]
struct TimeKey(f64);

impl Eq for TimeKey {}

impl PartialOrd for TimeKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimeKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct ArrivalCalendar {
    next_time: Vec<f64>,
    scheduled: Vec<bool>,
    queue: BinaryHeap<Reverse<(TimeKey, u32)>>,
}

impl ArrivalCalendar {
    fn new(n: usize) -> Self {
        ArrivalCalendar {
            next_time: vec![0.0; n],
            scheduled: vec![false; n],
            queue: BinaryHeap::new(),
        }
    }

    fn schedule(&mut self, v: u32, now: f64, rng: &mut impl Rng) {
        let t = now + exponential_gap(1.0, rng);
        self.next_time[v as usize] = t;
        self.scheduled[v as usize] = true;
        self.queue.push(Reverse((TimeKey(t), v)));
    }

    /// Next non-stale arrival, ties broken by vertex id.
    fn pop(&mut self) -> Option<(f64, u32)> {
        while let Some(Reverse((TimeKey(t), v))) = self.queue.pop() {
            if self.scheduled[v as usize] && self.next_time[v as usize] == t {
                self.scheduled[v as usize] = false;
                return Some((t, v));
            }
        }
        None
    }

    fn is_scheduled(&self, v: u32) -> bool {
        self.scheduled[v as usize]
    }
}

/// One survival trial driven by a lazily generated stream.
///
/// Arrivals are scheduled only for occupied vertices. That is exact: a
/// vertex can only become empty at its own arrival (other vertices' events
/// only add particles), so no revealed randomness is ever discarded, and
/// memorylessness lets a newly occupied vertex draw a fresh Exp(1) gap.
fn single_run_survives(
    g: &Digraph,
    p: f64,
    s: u8,
    start: u32,
    horizon: f64,
    rng: &mut impl Rng,
) -> Result<bool> {
    let mut config = ParticleConfig::init(g.n(), [start])?;
    let mut calendar = ArrivalCalendar::new(g.n());
    calendar.schedule(start, 0.0, rng);

    while let Some((t, v)) = calendar.pop() {
        if t > horizon {
            return Ok(!config.alive.is_empty());
        }
        let d = g.out_degree(v);
        let mut slots = [0u32; MAX_STUBBORNNESS];
        let mut bits = [false; MAX_STUBBORNNESS];
        for slot in slots.iter_mut().take(s as usize) {
            *slot = rng.random_range(0..d);
        }
        for bit in bits.iter_mut().take(s as usize) {
            *bit = rng.random_bool(p);
        }
        let ev = MarkEvent::new(t, v, &slots[..s as usize], &bits[..s as usize]);
        let targets = zero_bit_targets(g, &ev);
        step(g, &mut config, &ev)?;
        if config.alive.is_empty() {
            return Ok(false);
        }
        if config.is_occupied(v) && !calendar.is_scheduled(v) {
            calendar.schedule(v, t, rng);
        }
        for y in targets.iter().flatten() {
            if config.is_occupied(*y) && !calendar.is_scheduled(*y) {
                calendar.schedule(*y, t, rng);
            }
        }
    }
    // calendar exhausted: occupied vertices are always scheduled, so the
    // configuration must be empty
    Ok(false)
}

fn check_dynamics_params(p: f64, s: u8, horizon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [0,1], got {p}")));
    }
    if s == 0 || s as usize > MAX_STUBBORNNESS {
        return Err(Error::Domain(format!(
            "stubbornness must lie in 1..={MAX_STUBBORNNESS}, got {s}"
        )));
    }
    if !(horizon >= 0.0) {
        return Err(Error::Domain(format!(
            "horizon must be non-negative, got {horizon}"
        )));
    }
    Ok(())
}

/// Monte-Carlo estimate of the probability that the label started at `x`
/// is still alive at `horizon`.
///
/// Each trial draws a fresh stream (the reversed process has the same law,
/// so fresh streams are distributionally valid); trial `i` uses the
/// ChaCha stream `i` of `seed` and trials run in parallel.
pub fn estimate_survival(
    g: &Digraph,
    p: f64,
    s: u8,
    x: u32,
    horizon: f64,
    trials: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    check_dynamics_params(p, s, horizon)?;
    if (x as usize) >= g.n() {
        return Err(Error::VertexOutOfRange { vertex: x, n: g.n() });
    }
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let survivors = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            single_run_survives(g, p, s, x, horizon, &mut rng).map(u64::from)
        })
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    Ok(SurvivalEstimate::from_counts(survivors, trials))
}

/// Like [`estimate_survival`] but each trial starts the particle at a
/// uniformly random vertex, so the estimate targets the vertex-averaged
/// survival probability (the predicted red density).
pub fn estimate_mean_survival(
    g: &Digraph,
    p: f64,
    s: u8,
    horizon: f64,
    trials: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    check_dynamics_params(p, s, horizon)?;
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let n = g.n() as u32;
    let survivors = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            let x = rng.random_range(0..n);
            single_run_survives(g, p, s, x, horizon, &mut rng).map(u64::from)
        })
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    Ok(SurvivalEstimate::from_counts(survivors, trials))
}
