//! Pathwise and distributional checks of the forward/backward duality.
//!
//! One shared mark realization drives both processes: the opinion process
//! forward in time from all-red, the particle system backward over the
//! reversed stream from one particle per tracked vertex. A vertex is blue
//! at the horizon exactly when its label is extinct at backward horizon.
//! The identity holds path by path, for every seed, graph, bias and
//! stubbornness, which makes it the strongest oracle in the crate: any
//! mismatch is an implementation bug, reported with the seed for replay.

use rand::Rng;
use rayon::prelude::*;

use crate::cobrad;
use crate::error::{Error, Result};
use crate::forward::{self, Opinion, OpinionConfig};
use crate::graph::Digraph;
use crate::marks::{generate_marks, MAX_STUBBORNNESS};
use crate::seeding::stream_rng;

/// Result of one pathwise verification.
#[derive(Clone, Debug)]
pub struct MismatchReport {
    pub seed: u64,
    pub checked: usize,
    /// Vertices where forward color and backward survival disagree;
    /// must be empty.
    pub violations: Vec<u32>,
}

impl MismatchReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Generate one stream from `seed`, run the opinion process forward from
/// all-red and the particle system backward from `labels`, and compare:
/// blue at the horizon must coincide with label extinction.
pub fn verify_pathwise(
    g: &Digraph,
    horizon: f64,
    p: f64,
    s: u8,
    labels: &[u32],
    seed: u64,
) -> Result<MismatchReport> {
    if labels.is_empty() {
        return Err(Error::Domain("need at least one label to track".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let stream = generate_marks(g, horizon, s, p, &mut rng)?;
    let final_config = forward::run_forward(g, &stream, &OpinionConfig::all_red(g.n()))?;
    let survival = cobrad::run_backward(g, &stream.reverse(), labels)?;
    let violations = labels
        .iter()
        .copied()
        .filter(|&x| {
            let blue = final_config.opinion(x) == Opinion::Blue;
            let extinct = !survival[&x];
            blue != extinct
        })
        .collect();
    Ok(MismatchReport {
        seed,
        checked: labels.len(),
        violations,
    })
}

/// Run [`verify_pathwise`] for `seed_count` consecutive seeds starting at
/// `base_seed` and collect the reports of the failing ones.
pub fn verify_pathwise_many(
    g: &Digraph,
    horizon: f64,
    p: f64,
    s: u8,
    labels: &[u32],
    base_seed: u64,
    seed_count: u64,
) -> Result<Vec<MismatchReport>> {
    (base_seed..base_seed + seed_count)
        .into_par_iter()
        .map(|seed| verify_pathwise(g, horizon, p, s, labels, seed))
        .filter(|r| match r {
            Ok(report) => !report.is_clean(),
            Err(_) => true,
        })
        .collect()
}

/// Two-sided Monte-Carlo comparison of the joint laws on a small graph.
#[derive(Clone, Debug)]
pub struct DistributionalReport {
    /// For every color pattern (bit `x` set = vertex `x` blue / extinct):
    /// forward frequency, backward frequency.
    pub cells: Vec<(f64, f64)>,
    pub trials: u64,
    pub max_abs_deviation: f64,
    /// Largest deviation measured in per-cell standard errors.
    pub max_deviation_in_se: f64,
}

/// Estimate the joint law of blue patterns (forward, fresh streams) and of
/// extinction patterns (backward, independent fresh streams) over all
/// `2^n` cells and compare cell by cell. Small graphs only.
pub fn verify_distributional(
    g: &Digraph,
    horizon: f64,
    p: f64,
    s: u8,
    trials: u64,
    seed: u64,
) -> Result<DistributionalReport> {
    let n = g.n();
    if n > 4 {
        return Err(Error::Domain(format!(
            "distributional check enumerates 2^n cells; n = {n} is too large (max 4)"
        )));
    }
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    if s == 0 || s as usize > MAX_STUBBORNNESS {
        return Err(Error::Domain(format!(
            "stubbornness must lie in 1..={MAX_STUBBORNNESS}, got {s}"
        )));
    }
    let labels: Vec<u32> = (0..n as u32).collect();
    let cell_count = 1usize << n;

    let count_cells = |backward: bool| -> Result<Vec<u64>> {
        (0..trials)
            .into_par_iter()
            .map(|trial| {
                // forward trials use even streams, backward odd ones
                let stream_id = 2 * trial + u64::from(backward);
                let mut rng = stream_rng(seed, stream_id);
                let stream = generate_marks(g, horizon, s, p, &mut rng)?;
                let mut cell = 0usize;
                if backward {
                    let survival = cobrad::run_backward(g, &stream.reverse(), &labels)?;
                    for (&label, &alive) in &survival {
                        if !alive {
                            cell |= 1 << label;
                        }
                    }
                } else {
                    let config =
                        forward::run_forward(g, &stream, &OpinionConfig::all_red(n))?;
                    for x in 0..n as u32 {
                        if config.opinion(x) == Opinion::Blue {
                            cell |= 1 << x;
                        }
                    }
                }
                Ok(cell)
            })
            .try_fold(
                || vec![0u64; cell_count],
                |mut acc, cell: Result<usize>| {
                    acc[cell?] += 1;
                    Ok(acc)
                },
            )
            .try_reduce(
                || vec![0u64; cell_count],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    Ok(a)
                },
            )
    };

    let fwd = count_cells(false)?;
    let bwd = count_cells(true)?;
    let t = trials as f64;
    let mut cells = Vec::with_capacity(cell_count);
    let mut max_abs = 0.0f64;
    let mut max_in_se = 0.0f64;
    for i in 0..cell_count {
        let f = fwd[i] as f64 / t;
        let b = bwd[i] as f64 / t;
        let dev = (f - b).abs();
        let pooled = ((fwd[i] + bwd[i]) as f64 / (2.0 * t)).clamp(1.0 / t, 1.0);
        let se = (pooled * (1.0 - pooled) * 2.0 / t).sqrt().max(1.0 / t);
        max_abs = max_abs.max(dev);
        max_in_se = max_in_se.max(dev / se);
        cells.push((f, b));
    }
    Ok(DistributionalReport {
        cells,
        trials,
        max_abs_deviation: max_abs,
        max_deviation_in_se: max_in_se,
    })
}

/// Convenience used by tests and the CLI: a random generable sequence with
/// out-degrees in `[d_min, d_max]` and in-degrees distributed by repeated
/// uniform assignment of the matching stub total.
pub fn random_generable_sequence(
    n: usize,
    d_min: u32,
    d_max: u32,
    rng: &mut impl Rng,
) -> crate::degree::DegreeSequence {
    assert!(n > 0 && d_min >= 1 && d_min <= d_max);
    let d_plus: Vec<u32> = (0..n).map(|_| rng.random_range(d_min..=d_max)).collect();
    let m: u64 = d_plus.iter().map(|&d| u64::from(d)).sum();
    let mut d_minus = vec![0u32; n];
    for _ in 0..m {
        d_minus[rng.random_range(0..n)] += 1;
    }
    crate::degree::DegreeSequence::from_degrees(d_minus, d_plus)
        .expect("construction is structurally valid")
}
