// negated float comparisons are deliberate: !(x > 0.0) also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments)]

//! Event-driven simulation and analytics for a nonlinear opinion dynamics
//! with competing biases on directed random graphs.
//!
//! Vertices of a directed multigraph hold a binary opinion, red or blue.
//! At rate-1 Poisson times a vertex samples `s` out-neighbors with
//! replacement and perceives each as blue with probability `p` regardless
//! of its color; it turns blue only if every perception is blue. The crate
//! provides:
//!
//! - degree-sequence handling and the uniform directed configuration-model
//!   sampler ([`degree`], [`graph`]);
//! - the marked-Poisson graphical construction shared by the forward
//!   process and its dual ([`marks`]);
//! - the forward opinion dynamics with streaming execution ([`forward`]);
//! - the dual system of coalescing, branching and dying labeled particles
//!   and exact pathwise duality checks ([`cobrad`], [`duality`]);
//! - closed-form phase-transition predictions (critical bias, extinction
//!   fixed point, limiting red density) and the branching-tree
//!   approximation behind them ([`theory`], [`tree`]);
//! - experiment presets, CSV/plot-script emission and reproducibility
//!   manifests ([`cli`]).
//!
//! ```
//! use cobranet::degree::presets;
//! use cobranet::{graph, theory, seeding};
//!
//! let seq = presets::regular6(500).build_sequence()?;
//! let stats = cobranet::degree::compute_stats(&seq, 1.0)?;
//! assert!((stats.rho - 1.0 / 6.0).abs() < 1e-12);
//!
//! let p_c = theory::p_critical(stats.rho)?;
//! assert!((p_c - 0.4772).abs() < 1e-3);
//!
//! let g = graph::sample_dcm(&seq, &mut seeding::stream_rng(7, 0))?;
//! assert_eq!(g.n(), 500);
//! # Ok::<(), cobranet::Error>(())
//! ```

pub mod cli;
pub mod cobrad;
pub mod degree;
pub mod duality;
mod error;
pub mod forward;
pub mod graph;
pub mod marks;
pub mod seeding;
pub mod theory;
pub mod tree;

pub use error::{Error, Result};

/// A Monte-Carlo survival estimate with its binomial standard error.
#[derive(Clone, Copy, Debug)]
pub struct SurvivalEstimate {
    pub survival: f64,
    pub std_error: f64,
    pub survivors: u64,
    pub trials: u64,
}

impl SurvivalEstimate {
    pub fn from_counts(survivors: u64, trials: u64) -> Self {
        assert!(trials > 0, "estimate needs at least one trial");
        let survival = survivors as f64 / trials as f64;
        let std_error = (survival * (1.0 - survival) / trials as f64).sqrt();
        SurvivalEstimate {
            survival,
            std_error,
            survivors,
            trials,
        }
    }
}

// Keep the book chapters compiling: their fenced examples run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/degrees.md")]
    pub struct Degrees;
    #[doc = include_str!("../../../book/src/graphs.md")]
    pub struct Graphs;
    #[doc = include_str!("../../../book/src/dynamics.md")]
    pub struct Dynamics;
    #[doc = include_str!("../../../book/src/dual.md")]
    pub struct Dual;
    #[doc = include_str!("../../../book/src/theory.md")]
    pub struct Theory;
    #[doc = include_str!("../../../book/src/tree.md")]
    pub struct Tree;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
}
