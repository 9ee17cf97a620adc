//! The forward opinion process.
//!
//! At each mark event the vertex observes its sampled out-neighbors, each
//! seen blue when its bias bit is set or the neighbor really is blue, and
//! turns blue only if every observation is blue; any red observation makes
//! it red. All observations of one event read the pre-event state (left
//! limit), including self-loops.
//!
//! With stubbornness 1 this degenerates to the biased voter model: the
//! vertex copies the single perceived opinion.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::marks::{MarkEvent, MarkStream, PoissonEventSource, MAX_STUBBORNNESS};

/// Binary opinion of a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Opinion {
    Red,
    Blue,
}

/// Color assignment of every vertex at one time instant, with the red
/// count maintained incrementally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpinionConfig {
    colors: Vec<Opinion>,
    red_count: usize,
}

impl OpinionConfig {
    pub fn all_red(n: usize) -> Self {
        OpinionConfig {
            colors: vec![Opinion::Red; n],
            red_count: n,
        }
    }

    pub fn all_blue(n: usize) -> Self {
        OpinionConfig {
            colors: vec![Opinion::Blue; n],
            red_count: 0,
        }
    }

    pub fn from_colors(colors: Vec<Opinion>) -> Self {
        let red_count = colors.iter().filter(|&&c| c == Opinion::Red).count();
        OpinionConfig { colors, red_count }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn opinion(&self, x: u32) -> Opinion {
        self.colors[x as usize]
    }

    pub fn red_count(&self) -> usize {
        self.red_count
    }

    pub fn red_density(&self) -> f64 {
        self.red_count as f64 / self.colors.len() as f64
    }

    /// Recount reds from scratch (consistency checks in tests).
    pub fn recount_red(&self) -> usize {
        self.colors.iter().filter(|&&c| c == Opinion::Red).count()
    }

    fn set(&mut self, x: u32, c: Opinion) {
        let old = &mut self.colors[x as usize];
        match (*old, c) {
            (Opinion::Red, Opinion::Blue) => self.red_count -= 1,
            (Opinion::Blue, Opinion::Red) => self.red_count += 1,
            _ => {}
        }
        *old = c;
    }
}

/// Apply one mark event: resolve every sampled slot, evaluate the
/// perceptions against the pre-event colors, and recolor the vertex.
pub fn apply_event(g: &Digraph, config: &mut OpinionConfig, ev: &MarkEvent) -> Result<()> {
    if (ev.vertex as usize) >= g.n() {
        return Err(Error::VertexOutOfRange {
            vertex: ev.vertex,
            n: g.n(),
        });
    }
    let mut all_blue = true;
    for (i, &slot) in ev.slots().iter().enumerate() {
        let neighbor = g.head(ev.vertex, slot);
        let perceived_blue = ev.bias_bit(i) || config.opinion(neighbor) == Opinion::Blue;
        if !perceived_blue {
            all_blue = false;
            break;
        }
    }
    let new_color = if all_blue { Opinion::Blue } else { Opinion::Red };
    config.set(ev.vertex, new_color);
    Ok(())
}

/// Run the opinion process along a materialized stream and return the
/// final configuration.
pub fn run_forward(
    g: &Digraph,
    stream: &MarkStream,
    initial: &OpinionConfig,
) -> Result<OpinionConfig> {
    let mut config = initial.clone();
    for ev in stream.events() {
        apply_event(g, &mut config, &ev)?;
    }
    Ok(config)
}

/// Red-density trajectory sampled on a uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySeries {
    pub sample_times: Vec<f64>,
    pub red_density: Vec<f64>,
}

impl DensitySeries {
    pub fn len(&self) -> usize {
        self.sample_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_times.is_empty()
    }

    /// Mean density over sample times in `[from, to]` (inclusive).
    pub fn window_mean(&self, from: f64, to: f64) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (&t, &d) in self.sample_times.iter().zip(&self.red_density) {
            if t >= from - 1e-9 && t <= to + 1e-9 {
                sum += d;
                count += 1;
            }
        }
        assert!(count > 0, "no samples in window [{from}, {to}]");
        sum / count as f64
    }
}

/// Sampler shared by replay and streaming execution: densities are
/// recorded at `k * sample_dt` with the last value carried forward, the
/// sample at an event time reading the pre-event state.
struct DensitySampler {
    sample_dt: f64,
    horizon: f64,
    next: u64,
    times: Vec<f64>,
    densities: Vec<f64>,
}

impl DensitySampler {
    fn new(sample_dt: f64, horizon: f64) -> Self {
        DensitySampler {
            sample_dt,
            horizon,
            next: 0,
            times: Vec::new(),
            densities: Vec::new(),
        }
    }

    fn record_before(&mut self, event_time: f64, density: f64) {
        loop {
            let t = self.next as f64 * self.sample_dt;
            if t >= event_time || t > self.horizon {
                break;
            }
            self.times.push(t);
            self.densities.push(density);
            self.next += 1;
        }
    }

    fn finish(mut self, density: f64) -> DensitySeries {
        loop {
            let t = self.next as f64 * self.sample_dt;
            if t > self.horizon {
                break;
            }
            self.times.push(t);
            self.densities.push(density);
            self.next += 1;
        }
        DensitySeries {
            sample_times: self.times,
            red_density: self.densities,
        }
    }
}

/// Replay a materialized stream while sampling the density trajectory.
pub fn sample_density(
    g: &Digraph,
    stream: &MarkStream,
    initial: &OpinionConfig,
    sample_dt: f64,
) -> Result<(DensitySeries, OpinionConfig)> {
    if !(sample_dt > 0.0) {
        return Err(Error::Domain(format!(
            "sample_dt must be positive, got {sample_dt}"
        )));
    }
    let mut config = initial.clone();
    let mut sampler = DensitySampler::new(sample_dt, stream.horizon());
    for ev in stream.events() {
        sampler.record_before(ev.time, config.red_density());
        apply_event(g, &mut config, &ev)?;
    }
    let series = sampler.finish(config.red_density());
    Ok((series, config))
}

/// Streaming Gillespie-style execution: events are drawn on the fly and
/// never stored, in the same order [`crate::marks::generate_marks`] draws
/// them, so a materialized replay with the same RNG state produces the
/// identical trajectory and final configuration.
pub fn simulate_density(
    g: &Digraph,
    p: f64,
    s: u8,
    horizon: f64,
    sample_dt: f64,
    initial: &OpinionConfig,
    rng: &mut impl Rng,
) -> Result<(DensitySeries, OpinionConfig)> {
    if !(sample_dt > 0.0) {
        return Err(Error::Domain(format!(
            "sample_dt must be positive, got {sample_dt}"
        )));
    }
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
    if initial.len() != g.n() {
        return Err(Error::Domain(format!(
            "initial configuration has {} vertices but the graph has {}",
            initial.len(),
            g.n()
        )));
    }
    let mut config = initial.clone();
    let mut sampler = DensitySampler::new(sample_dt, horizon);
    let source = PoissonEventSource::new(g, horizon, s, p, rng);
    for ev in source {
        sampler.record_before(ev.time, config.red_density());
        apply_event(g, &mut config, &ev)?;
    }
    let series = sampler.finish(config.red_density());
    Ok((series, config))
}
