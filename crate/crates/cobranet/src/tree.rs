//! The approximating random tree and its percolated branching process.
//!
//! The local out-neighborhood of a vertex looks like a random tree whose
//! root has the vertex's out-degree while every other vertex draws its
//! number of children from the in-degree-size-biased out-degree law. The
//! dual particle started at the root percolates this tree: at each vertex
//! it dies, moves to one child, or branches onto two distinct children,
//! so the retained subtree is a {0,1,2}-offspring branching process whose
//! extinction probability is the closed-form `z_star`.

use rand::Rng;
use rayon::prelude::*;

use crate::degree::{self, DegreeSequence, ValidationMode};
use crate::error::{Error, Result};
use crate::seeding::stream_rng;
use crate::theory::{self, OutcomeProbs};
use crate::SurvivalEstimate;

/// In-degree-size-biased out-degree law: the offspring distribution of
/// non-root tree vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct OffspringLaw {
    support: Vec<u32>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl OffspringLaw {
    /// Mass at `k` proportional to the total in-degree of vertices with
    /// out-degree `k`.
    pub fn from_sequence(seq: &DegreeSequence) -> Result<Self> {
        let report = degree::validate(seq, ValidationMode::TheoryValid);
        if !report.ok {
            return Err(Error::Sequence(format!(
                "offspring law needs a theory-valid sequence: {}",
                report.violations.join("; ")
            )));
        }
        let m = seq.edge_count() as f64;
        let mut support = Vec::new();
        let mut probs = Vec::new();
        for (&k, &mass) in &seq.in_mass_by_out_degree() {
            if mass > 0 {
                support.push(k);
                probs.push(mass as f64 / m);
            }
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        Ok(OffspringLaw {
            support,
            probs,
            cumulative,
        })
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn prob(&self, k: u32) -> f64 {
        match self.support.binary_search(&k) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mean of `1/X`; coincides with the sequence statistic `rho`.
    pub fn mean_inverse(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&k, &p)| p / f64::from(k))
            .sum()
    }

    fn sample_index(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.support.len() - 1)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> u32 {
        self.support[self.sample_index(rng)]
    }
}

/// Iterate `z <- p0 + p1 z + p2 z^2` from `z = 0` until the step size
/// drops below `tol`. Converges monotonically to the smallest fixed point
/// in `[0,1]`; an exhausted iteration budget reports the last iterate.
pub fn extinction_prob_iterate(probs: &OutcomeProbs, tol: f64, max_iter: u32) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    let sum = probs.sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "outcome probabilities must be normalized (sum {sum})"
        )));
    }
    let mut z = 0.0f64;
    for _ in 0..max_iter {
        let next = probs.p_die + probs.p_move * z + probs.p_branch * z * z;
        if (next - z).abs() < tol {
            return Ok(next);
        }
        z = next;
    }
    Err(Error::NoConvergence { max_iter, last: z })
}

/// Degree-indexed cumulative outcome thresholds used by the tree walk.
struct OutcomeCdfs {
    root: (f64, f64),
    per_support: Vec<(f64, f64)>,
}

impl OutcomeCdfs {
    fn new(d_root: u32, law: &OffspringLaw, p: f64) -> Result<Self> {
        let to_cdf = |probs: OutcomeProbs| (probs.p_die, probs.p_die + probs.p_move);
        let root = to_cdf(theory::outcome_probs_for_degree(d_root, p)?);
        let per_support = law
            .support
            .iter()
            .map(|&d| theory::outcome_probs_for_degree(d, p).map(to_cdf))
            .collect::<Result<Vec<_>>>()?;
        Ok(OutcomeCdfs { root, per_support })
    }
}

fn draw_children(cdf: (f64, f64), rng: &mut impl Rng) -> u8 {
    let u: f64 = rng.random();
    if u < cdf.0 {
        0
    } else if u < cdf.1 {
        1
    } else {
        2
    }
}

fn walk_survives(
    cdfs: &OutcomeCdfs,
    law: &OffspringLaw,
    generation_cap: u32,
    rng: &mut impl Rng,
) -> bool {
    // depth-first with early exit: the survival event "some vertex reaches
    // the cap generation" does not depend on exploration order
    let root_children = draw_children(cdfs.root, rng);
    if root_children == 0 {
        return false;
    }
    let mut stack: Vec<(u32, u8)> = vec![(1, root_children)];
    while let Some((depth, pending)) = stack.last_mut() {
        if *pending == 0 {
            stack.pop();
            continue;
        }
        *pending -= 1;
        let depth = *depth;
        if depth >= generation_cap {
            return true;
        }
        let idx = law.sample_index(rng);
        let children = draw_children(cdfs.per_support[idx], rng);
        if children > 0 {
            stack.push((depth + 1, children));
        }
    }
    false
}

/// Grow one percolated tree and report whether any lineage is alive at
/// `generation_cap`. The root draws its outcome from
/// `outcome_probs_for_degree(d_root, p)`; every other vertex first draws
/// its degree from `law`.
pub fn simulate_percolated_tree(
    d_root: u32,
    law: &OffspringLaw,
    p: f64,
    generation_cap: u32,
    rng: &mut impl Rng,
) -> Result<bool> {
    if generation_cap == 0 {
        return Err(Error::Domain("generation cap must be at least 1".into()));
    }
    let cdfs = OutcomeCdfs::new(d_root, law, p)?;
    Ok(walk_survives(&cdfs, law, generation_cap, rng))
}

/// Monte-Carlo survival estimate over independent percolated trees,
/// trial `i` on ChaCha stream `i` of `seed`.
pub fn survival_probability_mc(
    d_root: u32,
    law: &OffspringLaw,
    p: f64,
    generation_cap: u32,
    trials: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    if generation_cap == 0 {
        return Err(Error::Domain("generation cap must be at least 1".into()));
    }
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let cdfs = OutcomeCdfs::new(d_root, law, p)?;
    let survivors = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            u64::from(walk_survives(&cdfs, law, generation_cap, &mut rng))
        })
        .sum();
    Ok(SurvivalEstimate::from_counts(survivors, trials))
}

/// Tree-level statement of the limiting red density; delegates to
/// [`theory::q_star_sum`].
pub fn predicted_red_density(seq: &DegreeSequence, p: f64) -> Result<f64> {
    theory::q_star_sum(seq, p)
}
