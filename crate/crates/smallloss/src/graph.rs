//! Graph utilities for feedback-graph learners.
//!
//! Three operations:
//!
//! * [`observation_mass`] — the probability mass observing an arm, i.e.
//!   `Σ_{j ∈ N_i \ excluded} p_j`, the quantity every freezing rule
//!   thresholds against.
//! * [`greedy_maximal_independent_set`] — deterministic ascending-id greedy,
//!   used online by the independence-number doubling wrapper (a greedy
//!   maximal independent set is always ≤ the true independence number, and
//!   watching it exceed the current guess is the doubling signal).
//! * [`exact_independence_number`] — exhaustive branch-and-bound oracle for
//!   test graphs (≤ 30 nodes). Learners never call this; it exists so tests
//!   can set thresholds from the true α and verify mass bounds exactly.

use crate::types::FeedbackGraph;
use rand::Rng;
use thiserror::Error;

/// Largest graph the exact independence oracle accepts.
pub const EXACT_ALPHA_MAX_NODES: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("arm {arm} out of range for {d} arms")]
    ArmOutOfRange { arm: usize, d: usize },
    #[error("graph has {n} nodes; exact independence number capped at {max}")]
    TooLarge { n: usize, max: usize },
    #[error("mask length {len} does not match {d} arms")]
    MaskLength { len: usize, d: usize },
}

/// Probability mass observing `arm`: `Σ_{j ∈ N_arm, !excluded[j]} probs[j]`,
/// with `N_arm` the closed neighborhood.
pub fn observation_mass(
    g: &FeedbackGraph,
    probs: &[f64],
    arm: usize,
    excluded: &[bool],
) -> Result<f64, GraphError> {
    let d = g.len();
    if arm >= d {
        return Err(GraphError::ArmOutOfRange { arm, d });
    }
    if probs.len() != d {
        return Err(GraphError::MaskLength {
            len: probs.len(),
            d,
        });
    }
    if excluded.len() != d {
        return Err(GraphError::MaskLength {
            len: excluded.len(),
            d,
        });
    }
    let mut mass = if excluded[arm] { 0.0 } else { probs[arm] };
    for &j in g.neighbors(arm) {
        if !excluded[j] {
            mass += probs[j];
        }
    }
    Ok(mass)
}

/// Greedy maximal independent set over a node subset: scan ids ascending,
/// keep a node when none of its already-kept neighbors conflict. Fully
/// deterministic, so repeated calls on identical inputs agree bit-for-bit.
pub fn greedy_maximal_independent_set(g: &FeedbackGraph, nodes: &[usize]) -> Vec<usize> {
    let d = g.len();
    let mut in_subset = vec![false; d];
    for &v in nodes {
        if v < d {
            in_subset[v] = true;
        }
    }
    let mut taken = vec![false; d];
    let mut out = Vec::new();
    let mut sorted: Vec<usize> = nodes.iter().copied().filter(|&v| v < d).collect();
    sorted.sort_unstable();
    sorted.dedup();
    'next: for &v in &sorted {
        for &u in g.neighbors(v) {
            if taken[u] {
                continue 'next;
            }
        }
        taken[v] = true;
        out.push(v);
    }
    out
}

/// Exact independence number by branch and bound over bitmasks.
///
/// Branches on a maximum-degree vertex (`α(G) = max(α(G−v), 1+α(G−N[v]))`)
/// and closes subproblems whose residual maximum degree is ≤ 1 in constant
/// time. Errors with [`GraphError::TooLarge`] above
/// [`EXACT_ALPHA_MAX_NODES`] nodes — this is a test oracle, not a runtime
/// component.
pub fn exact_independence_number(g: &FeedbackGraph) -> Result<usize, GraphError> {
    let n = g.len();
    if n > EXACT_ALPHA_MAX_NODES {
        return Err(GraphError::TooLarge {
            n,
            max: EXACT_ALPHA_MAX_NODES,
        });
    }
    if n == 0 {
        return Ok(0);
    }
    let mut closed = vec![0u32; n];
    for v in 0..n {
        let mut m = 1u32 << v;
        for &u in g.neighbors(v) {
            m |= 1 << u;
        }
        closed[v] = m;
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    Ok(alpha_rec(&closed, full))
}

fn alpha_rec(closed: &[u32], mask: u32) -> usize {
    if mask == 0 {
        return 0;
    }
    // Find the max-degree vertex within the residual graph; if every residual
    // degree is ≤ 1 the graph is a matching plus isolated points and
    // α = (#nodes) − (#edges).
    let mut best_v = usize::MAX;
    let mut best_deg = 0u32;
    let mut total_deg = 0u32;
    let mut m = mask;
    while m != 0 {
        let v = m.trailing_zeros() as usize;
        m &= m - 1;
        let deg = ((closed[v] & mask).count_ones()) - 1;
        total_deg += deg;
        if deg > best_deg || best_v == usize::MAX {
            best_deg = deg;
            best_v = v;
        }
    }
    if best_deg <= 1 {
        return (mask.count_ones() - total_deg / 2) as usize;
    }
    let without = alpha_rec(closed, mask & !(1 << best_v));
    let with = 1 + alpha_rec(closed, mask & !closed[best_v]);
    without.max(with)
}

/// Erdős–Rényi graph `G(n, p)` from the provided generator; used by property
/// suites and tests.
pub fn erdos_renyi<R: Rng>(n: usize, p: f64, rng: &mut R) -> FeedbackGraph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    FeedbackGraph::from_edges(n, &edges).expect("generated edges are in range")
}
