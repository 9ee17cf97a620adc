//! Closed-form predictions for the biased dynamics with stubbornness 2.
//!
//! Everything here is a pure function of the bias `p` and the two degree
//! statistics `rho` and `lambda`: the per-event outcome probabilities of
//! the dual particle at a vertex of given out-degree, the critical bias
//! `p_c`, the extinction fixed point `z_star` of the associated branching
//! process, its root-degree correction `z_hat`, and the limiting red
//! density `q_star` in both closed and per-vertex sum form.
//!
//! The formulas are specific to stubbornness `s = 2`; the CLI refuses to
//! attach them to runs with any other `s` (see [`require_stubbornness_two`]).

use serde::Serialize;

use crate::degree::{self, DegreeSequence, ValidationMode};
use crate::error::{Error, Result};

/// Probabilities of the three ways a dual particle leaves a vertex:
/// die, move to a single child, or branch onto two distinct children.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutcomeProbs {
    pub p_die: f64,
    pub p_move: f64,
    pub p_branch: f64,
}

impl OutcomeProbs {
    pub fn sum(&self) -> f64 {
        self.p_die + self.p_move + self.p_branch
    }

    /// Expected offspring count of the embedded branching step.
    pub fn mean_offspring(&self) -> f64 {
        self.p_move + 2.0 * self.p_branch
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "{name} must be a probability in [0,1], got {p}"
        )));
    }
    Ok(())
}

fn check_rho_open(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho must lie in (0,1), got {rho}")));
    }
    Ok(())
}

/// Outcome probabilities for a particle sitting at a vertex with
/// out-degree `d`: die `p^2`, move `(1-p)[2(1-1/d)p + (1/d)(1+p)]`,
/// branch `(1-1/d)(1-p)^2`.
pub fn outcome_probs_for_degree(d: u32, p: f64) -> Result<OutcomeProbs> {
    if d == 0 {
        return Err(Error::Domain("out-degree must be at least 1".into()));
    }
    check_probability("p", p)?;
    let inv_d = 1.0 / f64::from(d);
    Ok(OutcomeProbs {
        p_die: p * p,
        p_move: (1.0 - p) * (2.0 * (1.0 - inv_d) * p + inv_d * (1.0 + p)),
        p_branch: (1.0 - inv_d) * (1.0 - p) * (1.0 - p),
    })
}

/// Outcome probabilities averaged over the in-degree-biased vertex law,
/// which replaces `1/d` by `rho`.
pub fn averaged_outcome_probs(rho: f64, p: f64) -> Result<OutcomeProbs> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Domain(format!("rho must lie in (0,1], got {rho}")));
    }
    check_probability("p", p)?;
    Ok(OutcomeProbs {
        p_die: p * p,
        p_move: (1.0 - p) * (2.0 * p - p * rho + rho),
        p_branch: (1.0 - rho) * (1.0 - p) * (1.0 - p),
    })
}

/// Critical bias `p_c(rho) = (sqrt(1-rho) - (1-rho)) / rho`.
///
/// `rho = 0` is rejected rather than mapped to its limit 1/2: the model
/// guarantees `rho > 0` and silently extending the domain would mask
/// upstream mistakes.
pub fn p_critical(rho: f64) -> Result<f64> {
    check_rho_open(rho)?;
    let one_minus = 1.0 - rho;
    Ok((one_minus.sqrt() - one_minus) / rho)
}

/// Smallest fixed point of `p0 + p1 z + p2 z^2 = z` under the averaged
/// outcome probabilities: `min(p^2 / ((1-p)^2 (1-rho)), 1)`.
///
/// Returns exactly 1 for `p >= p_c(rho)` (including `p = 1`), so the
/// supercritical classification and the fixed point never disagree by a
/// rounding error at the boundary.
pub fn z_star(p: f64, rho: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_rho_open(rho)?;
    if p >= p_critical(rho)? {
        return Ok(1.0);
    }
    let ratio = (p * p) / ((1.0 - p) * (1.0 - p) * (1.0 - rho));
    Ok(ratio.min(1.0))
}

/// Extinction probability of the dual tree rooted at a vertex with
/// out-degree `d_root`: `p0(d) + p1(d) z + p2(d) z^2` at `z = z_star`.
pub fn z_hat_root(d_root: u32, p: f64, rho: f64) -> Result<f64> {
    let z = z_star(p, rho)?;
    if z == 1.0 {
        // probabilities sum to one, so the corrected value is exactly one
        return Ok(1.0);
    }
    let probs = outcome_probs_for_degree(d_root, p)?;
    Ok(probs.p_die + probs.p_move * z + probs.p_branch * z * z)
}

/// Limiting red density in closed form:
/// `(1 - p^2/((1-p)^2(1-rho))) (1 - p^2(lambda-rho)/(1-rho))`.
///
/// Evaluable for all `p` in `[0,1)`; only below `p_c` does it carry the
/// metastable-density meaning.
pub fn q_star_closed(p: f64, rho: f64, lambda: f64) -> Result<f64> {
    check_probability("p", p)?;
    if p == 1.0 {
        return Err(Error::Domain(
            "q_star is undefined at p = 1 (division by zero)".into(),
        ));
    }
    check_rho_open(rho)?;
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!(
            "lambda must lie in (0,1], got {lambda}"
        )));
    }
    let one_minus_rho = 1.0 - rho;
    let ratio = (p * p) / ((1.0 - p) * (1.0 - p) * one_minus_rho);
    Ok((1.0 - ratio) * (1.0 - p * p * (lambda - rho) / one_minus_rho))
}

/// Limiting red density as the per-vertex sum
/// `(1/n) sum_x (1 - z_hat(d_x^+, p, rho_n))`.
///
/// Agrees with [`q_star_closed`] to floating-point accuracy for every
/// generable sequence; requires a theory-valid sequence because the
/// interpretation does.
pub fn q_star_sum(seq: &DegreeSequence, p: f64) -> Result<f64> {
    check_probability("p", p)?;
    if p == 1.0 {
        return Err(Error::Domain(
            "q_star is undefined at p = 1 (division by zero)".into(),
        ));
    }
    let report = degree::validate(seq, ValidationMode::TheoryValid);
    if !report.ok {
        return Err(Error::Sequence(format!(
            "q_star_sum needs a theory-valid sequence: {}",
            report.violations.join("; ")
        )));
    }
    let stats = degree::compute_stats(seq, 1.0)?;
    let n = seq.n() as f64;
    let mut acc = 0.0;
    for (&d, &count) in &seq.count_by_out_degree() {
        acc += (count as f64) * (1.0 - z_hat_root(d, p, stats.rho)?);
    }
    Ok(acc / n)
}

/// Phase classification of a `(p, rho)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RegimeTag {
    /// `p < p_c`: a positive red fraction persists metastably.
    Subcritical,
    /// `p >= p_c`: fast consensus on blue (the boundary belongs here).
    Supercritical,
}

/// Classification result carrying the threshold and fixed point it was
/// derived from.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub p_c: f64,
    pub z_star: f64,
}

pub fn classify(p: f64, rho: f64) -> Result<Regime> {
    check_probability("p", p)?;
    let p_c = p_critical(rho)?;
    let z = z_star(p, rho)?;
    let tag = if p >= p_c {
        RegimeTag::Supercritical
    } else {
        RegimeTag::Subcritical
    };
    Ok(Regime { tag, p_c, z_star: z })
}

/// Gate used by every surface that attaches closed-form predictions to a
/// run: the formulas exist only for stubbornness 2.
pub fn require_stubbornness_two(s: u8) -> Result<()> {
    if s != 2 {
        return Err(Error::Stubbornness(s));
    }
    Ok(())
}
