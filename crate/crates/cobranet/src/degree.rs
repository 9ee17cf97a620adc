//! Prescribed in-/out-degree sequences and their summary statistics.
//!
//! A [`DegreeProfile`] is the compact on-disk description of a sequence:
//! a list of blocks, each assigning `count` vertices the same in-degree
//! `d_in` and out-degree `d_out`. A [`DegreeSequence`] is the expanded
//! per-vertex form consumed by the graph sampler and the closed-form
//! predictions.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One block of a degree profile: `count` vertices with in-degree `d_in`
/// and out-degree `d_out`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeBlock {
    pub count: usize,
    pub d_in: u32,
    pub d_out: u32,
}

/// Block-compressed description of a degree sequence.
///
/// Serialized as JSON: `{"blocks": [{"count": 4, "d_in": 6, "d_out": 6}]}`.
/// Counts are absolute, not fractions, so the expansion is deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub blocks: Vec<DegreeBlock>,
}

impl DegreeProfile {
    pub fn new(blocks: Vec<DegreeBlock>) -> Result<Self> {
        let profile = DegreeProfile { blocks };
        profile.check()?;
        Ok(profile)
    }

    /// Parse a profile from its JSON representation.
    pub fn from_json(text: &str) -> Result<Self> {
        let profile: DegreeProfile =
            serde_json::from_str(text).map_err(|e| Error::Profile(e.to_string()))?;
        profile.check()?;
        Ok(profile)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serialization cannot fail")
    }

    fn check(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::Profile("profile has no blocks".into()));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.count == 0 {
                return Err(Error::Profile(format!("block {i} has count 0")));
            }
            if b.d_out == 0 {
                return Err(Error::Profile(format!(
                    "block {i} has out-degree 0; every vertex needs at least one out-edge"
                )));
            }
        }
        Ok(())
    }

    /// Total number of vertices described by the profile.
    pub fn vertex_count(&self) -> usize {
        self.blocks.iter().map(|b| b.count).sum()
    }

    /// Expand the profile into a per-vertex sequence, block by block in
    /// profile order.
    pub fn build_sequence(&self) -> Result<DegreeSequence> {
        self.check()?;
        let n = self.vertex_count();
        let mut d_minus = Vec::with_capacity(n);
        let mut d_plus = Vec::with_capacity(n);
        for b in &self.blocks {
            for _ in 0..b.count {
                d_minus.push(b.d_in);
                d_plus.push(b.d_out);
            }
        }
        DegreeSequence::from_degrees(d_minus, d_plus)
    }
}

/// Paired per-vertex in-/out-degree sequences.
///
/// Construction only enforces structural invariants (equal lengths,
/// positive out-degrees); [`validate`] reports the model-level
/// requirements so that callers can inspect violations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequence {
    d_minus: Vec<u32>,
    d_plus: Vec<u32>,
    in_sum: u64,
    out_sum: u64,
}

impl DegreeSequence {
    pub fn from_degrees(d_minus: Vec<u32>, d_plus: Vec<u32>) -> Result<Self> {
        if d_minus.len() != d_plus.len() {
            return Err(Error::Sequence(format!(
                "length mismatch: {} in-degrees vs {} out-degrees",
                d_minus.len(),
                d_plus.len()
            )));
        }
        if d_minus.is_empty() {
            return Err(Error::Sequence("empty degree sequence".into()));
        }
        if let Some(x) = d_plus.iter().position(|&d| d == 0) {
            return Err(Error::Sequence(format!("vertex {x} has out-degree 0")));
        }
        let in_sum = d_minus.iter().map(|&d| u64::from(d)).sum();
        let out_sum = d_plus.iter().map(|&d| u64::from(d)).sum();
        Ok(DegreeSequence {
            d_minus,
            d_plus,
            in_sum,
            out_sum,
        })
    }

    pub fn n(&self) -> usize {
        self.d_plus.len()
    }

    /// Total edge count `m`. Equals the in-degree sum exactly when the
    /// sequence is generable; `validate` reports a mismatch otherwise.
    pub fn edge_count(&self) -> u64 {
        self.out_sum
    }

    pub fn in_degree_sum(&self) -> u64 {
        self.in_sum
    }

    pub fn out_degree_sum(&self) -> u64 {
        self.out_sum
    }

    pub fn d_minus(&self) -> &[u32] {
        &self.d_minus
    }

    pub fn d_plus(&self) -> &[u32] {
        &self.d_plus
    }

    pub fn max_out_degree(&self) -> u32 {
        *self.d_plus.iter().max().expect("sequence is non-empty")
    }

    pub fn min_out_degree(&self) -> u32 {
        *self.d_plus.iter().min().expect("sequence is non-empty")
    }

    /// Total in-degree mass per out-degree class: `class_mass[k] = sum of
    /// d_x^- over vertices with d_x^+ = k`. Shared by the statistics and
    /// the size-biased offspring law.
    pub(crate) fn in_mass_by_out_degree(&self) -> BTreeMap<u32, u64> {
        let mut map = BTreeMap::new();
        for (&dm, &dp) in self.d_minus.iter().zip(&self.d_plus) {
            *map.entry(dp).or_insert(0u64) += u64::from(dm);
        }
        map
    }

    /// Vertex count per out-degree class.
    pub(crate) fn count_by_out_degree(&self) -> BTreeMap<u32, u64> {
        let mut map = BTreeMap::new();
        for &dp in &self.d_plus {
            *map.entry(dp).or_insert(0u64) += 1;
        }
        map
    }
}

/// Which set of requirements [`validate`] checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValidationMode {
    /// Only what the stub-matching construction needs: equal degree sums.
    Generable,
    /// Additionally the hypotheses under which the closed-form predictions
    /// hold, chiefly minimum out-degree 2.
    TheoryValid,
}

/// Outcome of [`validate`]: hard violations plus informational warnings.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            write!(f, "ok")?;
        } else {
            write!(f, "invalid: {}", self.violations.join("; "))?;
        }
        for w in &self.warnings {
            write!(f, "\nwarning: {w}")?;
        }
        Ok(())
    }
}

/// Check a sequence against the requested mode.
///
/// The bounded-maximum-degree and bounded-moment hypotheses are asymptotic
/// statements about sequences of sequences; at a single `n` they cannot
/// fail, so their values are reported as warnings rather than checked.
pub fn validate(seq: &DegreeSequence, mode: ValidationMode) -> ValidationReport {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    if seq.in_degree_sum() != seq.out_degree_sum() {
        violations.push(format!(
            "degree sums differ: sum d- = {} but sum d+ = {}",
            seq.in_degree_sum(),
            seq.out_degree_sum()
        ));
    }
    if mode == ValidationMode::TheoryValid {
        if seq.min_out_degree() < 2 {
            violations.push(format!(
                "min out-degree < 2 (found {})",
                seq.min_out_degree()
            ));
        }
        let delta = 1.0;
        let moment = in_degree_moment(seq, 2.0 + delta);
        warnings.push(format!(
            "max out-degree Delta = {} (boundedness is an asymptotic hypothesis)",
            seq.max_out_degree()
        ));
        warnings.push(format!(
            "(1/n) sum (d-)^(2+delta) = {moment:.6} at delta = {delta} (boundedness is an asymptotic hypothesis)"
        ));
    }
    ValidationReport {
        ok: violations.is_empty(),
        violations,
        warnings,
    }
}

fn in_degree_moment(seq: &DegreeSequence, exponent: f64) -> f64 {
    let mut by_value: BTreeMap<u32, u64> = BTreeMap::new();
    for &dm in seq.d_minus() {
        *by_value.entry(dm).or_insert(0) += 1;
    }
    let n = seq.n() as f64;
    by_value
        .iter()
        .map(|(&v, &cnt)| (cnt as f64) * f64::from(v).powf(exponent))
        .sum::<f64>()
        / n
}

/// Summary statistics of a degree sequence.
///
/// `rho` is the in-degree-weighted mean of inverse out-degrees and `lambda`
/// its uniform counterpart; both lie in (0, 1/2] whenever every out-degree
/// is at least 2.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SequenceStats {
    pub rho: f64,
    pub lambda: f64,
    pub delta_max: u32,
    pub moment_2_plus_delta: f64,
}

/// Compute `rho`, `lambda`, the maximum out-degree and the `(2+delta)`
/// in-degree moment.
///
/// Sums are grouped by degree class so the floating-point result carries
/// only a handful of roundings, well inside a 1e-12 relative error budget.
pub fn compute_stats(seq: &DegreeSequence, delta: f64) -> Result<SequenceStats> {
    if seq.in_degree_sum() != seq.out_degree_sum() {
        return Err(Error::Sequence(format!(
            "stats need a generable sequence (sum d- = {} vs sum d+ = {})",
            seq.in_degree_sum(),
            seq.out_degree_sum()
        )));
    }
    if seq.edge_count() == 0 {
        return Err(Error::Sequence("sequence has no edges".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let m = seq.edge_count() as f64;
    let n = seq.n() as f64;
    let rho = seq
        .in_mass_by_out_degree()
        .iter()
        .map(|(&k, &mass)| (mass as f64) / f64::from(k))
        .sum::<f64>()
        / m;
    let lambda = seq
        .count_by_out_degree()
        .iter()
        .map(|(&k, &cnt)| (cnt as f64) / f64::from(k))
        .sum::<f64>()
        / n;
    Ok(SequenceStats {
        rho,
        lambda,
        delta_max: seq.max_out_degree(),
        moment_2_plus_delta: in_degree_moment(seq, 2.0 + delta),
    })
}

/// The three degree profiles used throughout the examples and the
/// experiment presets: regular (6,6); half (10,5) / half (5,10);
/// half (10,2) / half (2,10). `n` must be even for the mixed ones.
pub mod presets {
    use super::{DegreeBlock, DegreeProfile};

    pub fn regular6(n: usize) -> DegreeProfile {
        DegreeProfile {
            blocks: vec![DegreeBlock {
                count: n,
                d_in: 6,
                d_out: 6,
            }],
        }
    }

    pub fn half_10_5(n: usize) -> DegreeProfile {
        assert!(n.is_multiple_of(2), "mixed profile needs an even vertex count");
        DegreeProfile {
            blocks: vec![
                DegreeBlock {
                    count: n / 2,
                    d_in: 10,
                    d_out: 5,
                },
                DegreeBlock {
                    count: n / 2,
                    d_in: 5,
                    d_out: 10,
                },
            ],
        }
    }

    pub fn half_10_2(n: usize) -> DegreeProfile {
        assert!(n.is_multiple_of(2), "mixed profile needs an even vertex count");
        DegreeProfile {
            blocks: vec![
                DegreeBlock {
                    count: n / 2,
                    d_in: 10,
                    d_out: 2,
                },
                DegreeBlock {
                    count: n / 2,
                    d_in: 2,
                    d_out: 10,
                },
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(blocks: &[(usize, u32, u32)]) -> DegreeProfile {
        DegreeProfile {
            blocks: blocks
                .iter()
                .map(|&(count, d_in, d_out)| DegreeBlock { count, d_in, d_out })
                .collect(),
        }
    }

    #[test]
    fn regular_block_expands_to_regular_sequence() {
        let seq = profile(&[(4, 6, 6)]).build_sequence().unwrap();
        assert_eq!(seq.n(), 4);
        assert!(seq.d_minus().iter().all(|&d| d == 6));
        assert!(seq.d_plus().iter().all(|&d| d == 6));
        assert_eq!(seq.edge_count(), 24);
    }

    #[test]
    fn mixed_profile_has_expected_size() {
        let seq = profile(&[(5000, 10, 5), (5000, 5, 10)])
            .build_sequence()
            .unwrap();
        assert_eq!(seq.n(), 10_000);
        assert_eq!(seq.edge_count(), 75_000);
        assert_eq!(seq.in_degree_sum(), 75_000);
    }

    #[test]
    fn blocks_expand_in_order() {
        let seq = profile(&[(2, 1, 2), (2, 3, 2)]).build_sequence().unwrap();
        assert_eq!(seq.d_minus(), &[1, 1, 3, 3]);
        assert_eq!(seq.d_plus(), &[2, 2, 2, 2]);
        assert_eq!(seq.edge_count(), 8);
    }

    #[test]
    fn profile_rejects_zero_out_degree_and_empty_blocks() {
        assert!(profile(&[(3, 2, 0)]).build_sequence().is_err());
        assert!(DegreeProfile::new(vec![]).is_err());
        assert!(profile(&[(0, 2, 2)]).build_sequence().is_err());
    }

    #[test]
    fn profile_json_round_trip() {
        let p = presets::half_10_2(10);
        let back = DegreeProfile::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn validate_accepts_regular_sequence() {
        let seq = presets::regular6(100).build_sequence().unwrap();
        let report = validate(&seq, ValidationMode::TheoryValid);
        assert!(report.ok, "{report}");
    }

    #[test]
    fn validate_flags_out_degree_one_in_theory_mode() {
        let seq = DegreeSequence::from_degrees(vec![2, 2], vec![1, 3]).unwrap();
        let report = validate(&seq, ValidationMode::TheoryValid);
        assert!(!report.ok);
        assert!(report.violations.iter().any(|v| v.contains("min out-degree < 2")));
        // still generable: sums match
        assert!(validate(&seq, ValidationMode::Generable).ok);
    }

    #[test]
    fn validate_flags_mismatched_sums() {
        let seq = DegreeSequence::from_degrees(vec![5, 5], vec![4, 5]).unwrap();
        let report = validate(&seq, ValidationMode::Generable);
        assert!(!report.ok);
        assert!(report.violations.iter().any(|v| v.contains("degree sums differ")));
    }

    #[test]
    fn stats_regular_sequence() {
        let seq = presets::regular6(10_000).build_sequence().unwrap();
        let stats = compute_stats(&seq, 1.0).unwrap();
        assert!((stats.rho - 1.0 / 6.0).abs() < 1e-15);
        assert!((stats.lambda - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(stats.delta_max, 6);
    }

    #[test]
    fn stats_mixed_profiles_match_hand_computation() {
        let green = presets::half_10_5(10_000).build_sequence().unwrap();
        let s = compute_stats(&green, 1.0).unwrap();
        assert!((s.rho - 1.0 / 6.0).abs() < 1e-15);
        assert!((s.lambda - 3.0 / 20.0).abs() < 1e-15);

        let blue = presets::half_10_2(10_000).build_sequence().unwrap();
        let s = compute_stats(&blue, 1.0).unwrap();
        assert!((s.rho - 13.0 / 30.0).abs() < 1e-15);
        assert!((s.lambda - 3.0 / 10.0).abs() < 1e-15);
    }

    #[test]
    fn stats_bounded_by_half_when_min_out_degree_two() {
        for profile in [
            presets::regular6(50),
            presets::half_10_5(50),
            presets::half_10_2(50),
        ] {
            let seq = profile.build_sequence().unwrap();
            let s = compute_stats(&seq, 1.0).unwrap();
            assert!(s.rho > 0.0 && s.rho <= 0.5);
            assert!(s.lambda > 0.0 && s.lambda <= 0.5);
        }
    }

    #[test]
    fn out_regular_sequences_have_rho_equal_lambda() {
        // rho = lambda = 1/c for constant out-degree c, whatever the in-degrees.
        let seq = DegreeSequence::from_degrees(vec![1, 7, 0, 4], vec![3, 3, 3, 3]).unwrap();
        let s = compute_stats(&seq, 1.0).unwrap();
        assert!((s.rho - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.lambda - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stats_reject_edgeless_or_nongenerable_input() {
        let seq = DegreeSequence::from_degrees(vec![5, 5], vec![4, 5]).unwrap();
        assert!(compute_stats(&seq, 1.0).is_err());
    }

    #[test]
    fn zero_in_degrees_are_allowed_when_generable() {
        let seq = DegreeSequence::from_degrees(vec![0, 4], vec![2, 2]).unwrap();
        assert!(validate(&seq, ValidationMode::Generable).ok);
        let s = compute_stats(&seq, 1.0).unwrap();
        assert!((s.rho - 0.5).abs() < 1e-15);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn stats_are_permutation_invariant(
                d_plus in prop::collection::vec(1u32..=8, 2..60),
                spread_seed in 0u64..1_000_000,
                rotation in 1usize..60,
            ) {
                // distribute the matching in-degree total so the sequence
                // is generable, then permute (d-, d+) pairs together
                let n = d_plus.len();
                let m: u32 = d_plus.iter().sum();
                let mut d_minus = vec![0u32; n];
                let mut state = spread_seed;
                for _ in 0..m {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    d_minus[(state >> 33) as usize % n] += 1;
                }
                let seq = DegreeSequence::from_degrees(d_minus, d_plus).unwrap();

                let k = rotation % n;
                let rotate = |v: &[u32]| {
                    let mut out = v[k..].to_vec();
                    out.extend_from_slice(&v[..k]);
                    out
                };
                let reverse = |v: &[u32]| v.iter().rev().copied().collect::<Vec<_>>();
                let a = compute_stats(&seq, 1.0).unwrap();
                for other in [
                    DegreeSequence::from_degrees(reverse(seq.d_minus()), reverse(seq.d_plus()))
                        .unwrap(),
                    DegreeSequence::from_degrees(rotate(seq.d_minus()), rotate(seq.d_plus()))
                        .unwrap(),
                ] {
                    let b = compute_stats(&other, 1.0).unwrap();
                    prop_assert!((a.rho - b.rho).abs() < 1e-14);
                    prop_assert!((a.lambda - b.lambda).abs() < 1e-14);
                }
            }
        }
    }
}
