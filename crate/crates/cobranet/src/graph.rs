//! Directed configuration-model multigraphs.
//!
//! The sampler pairs the `m` out-stubs with the `m` in-stubs through a
//! uniformly random bijection and projects the matching onto a multigraph.
//! Self-loops and parallel edges are kept: the predictions address exactly
//! this multigraph model, and erasing edges would change the law.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::degree::DegreeSequence;
use crate::error::{Error, Result};

/// Immutable directed multigraph stored as per-vertex out-adjacency.
///
/// `out_adj[x]` lists the head of every out-edge of `x`, one entry per
/// edge slot, so sampling a uniform slot realizes a uniform neighbor
/// choice with multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    out_adj: Vec<Vec<u32>>,
    edge_count: u64,
}

impl Digraph {
    /// Build a graph directly from adjacency lists (used by tests and by
    /// hand-crafted small instances).
    pub fn from_out_adj(out_adj: Vec<Vec<u32>>) -> Result<Self> {
        let n = out_adj.len();
        if n == 0 {
            return Err(Error::Sequence("graph needs at least one vertex".into()));
        }
        let mut edge_count = 0u64;
        for (x, heads) in out_adj.iter().enumerate() {
            if heads.is_empty() {
                return Err(Error::Sequence(format!("vertex {x} has out-degree 0")));
            }
            for &y in heads {
                if (y as usize) >= n {
                    return Err(Error::VertexOutOfRange { vertex: y, n });
                }
            }
            edge_count += heads.len() as u64;
        }
        Ok(Digraph { out_adj, edge_count })
    }

    pub fn n(&self) -> usize {
        self.out_adj.len()
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    pub fn out_degree(&self, x: u32) -> u32 {
        self.out_adj[x as usize].len() as u32
    }

    /// The out-neighbor multiset of `x` (one entry per edge slot).
    pub fn out_neighbors(&self, x: u32) -> Result<&[u32]> {
        self.out_adj
            .get(x as usize)
            .map(Vec::as_slice)
            .ok_or(Error::VertexOutOfRange {
                vertex: x,
                n: self.n(),
            })
    }

    /// Head of edge slot `slot` of vertex `x`. Callers on the hot path
    /// guarantee the ranges; this is the unchecked-by-contract accessor.
    #[inline]
    pub(crate) fn head(&self, x: u32, slot: u32) -> u32 {
        self.out_adj[x as usize][slot as usize]
    }

    /// Realized in-degree tally (diagnostic; O(m)).
    pub fn realized_in_degrees(&self) -> Vec<u32> {
        let mut tally = vec![0u32; self.n()];
        for heads in &self.out_adj {
            for &y in heads {
                tally[y as usize] += 1;
            }
        }
        tally
    }

    /// Dump the edge list as text, one `tail head` pair per line.
    pub fn dump_edge_list(&self, w: &mut impl Write) -> std::io::Result<()> {
        for (x, heads) in self.out_adj.iter().enumerate() {
            for &y in heads {
                writeln!(w, "{x} {y}")?;
            }
        }
        Ok(())
    }
}

/// Sample a uniform directed configuration-model multigraph.
///
/// The in-stub multiset (vertex `y` repeated `d_y^-` times) is put through
/// a Fisher-Yates shuffle and assigned to the out-slots block by block,
/// which realizes a uniformly random bijection of stubs in O(m).
/// Deterministic given the RNG state.
pub fn sample_dcm(seq: &DegreeSequence, rng: &mut impl Rng) -> Result<Digraph> {
    if seq.in_degree_sum() != seq.out_degree_sum() {
        return Err(Error::Sequence(format!(
            "cannot match stubs: sum d- = {} but sum d+ = {}",
            seq.in_degree_sum(),
            seq.out_degree_sum()
        )));
    }
    let m = seq.edge_count() as usize;
    let mut in_stubs = Vec::with_capacity(m);
    for (y, &dm) in seq.d_minus().iter().enumerate() {
        for _ in 0..dm {
            in_stubs.push(y as u32);
        }
    }
    in_stubs.shuffle(rng);
    let mut out_adj = Vec::with_capacity(seq.n());
    let mut offset = 0usize;
    for &dp in seq.d_plus() {
        let dp = dp as usize;
        out_adj.push(in_stubs[offset..offset + dp].to_vec());
        offset += dp;
    }
    Ok(Digraph {
        out_adj,
        edge_count: m as u64,
    })
}
