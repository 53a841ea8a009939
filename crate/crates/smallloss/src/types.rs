//! Shared domain types for partial-information online learning.
//!
//! The conventions used across the crate:
//!
//! * Arms are dense ids `0..d-1`; element and strategy ids in the semi-bandit
//!   setting are likewise dense.
//! * A [`Distribution`] has non-negative entries summing to 1 within `1e-9`.
//! * True per-arm (and per-element) losses live in `[0, 1]`. Out-of-range
//!   losses are a hard error at the boundary — never clamped — so a buggy
//!   environment cannot silently corrupt a run.
//! * Estimated (importance-weighted) losses are non-negative and bounded by a
//!   mode-specific magnitude cap carried alongside the values.

use thiserror::Error;

/// Numeric tolerance for distribution invariants (sum-to-one checks).
pub const DIST_TOL: f64 = 1e-9;
/// Tighter tolerance for exact-arithmetic identities such as renormalization
/// idempotence.
pub const EXACT_TOL: f64 = 1e-12;
/// Relative slack allowed when checking loss estimates against their
/// magnitude cap. The cap certificate comes out of a freezing pass that
/// accumulates observation masses in one order; estimators recompute the same
/// masses independently, so the two can disagree by a few ulps of
/// reassociation error. Anything beyond this slack is a real bug.
pub const CAP_SLACK: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Validation failures for the shared value types.
#[derive(Debug, Error, PartialEq)]
pub enum ValueError {
    /// All weights were zero, so no distribution can be formed.
    #[error("cannot normalize: all entries are zero")]
    AllZero,
    /// A weight or probability was negative.
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    /// A value was NaN or infinite.
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    /// Two vectors that must share a length did not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    /// A loss fell outside its admissible range.
    #[error("loss {value} at index {index} outside [0, {max}]")]
    OutOfRange { index: usize, value: f64, max: f64 },
    /// An arm id referred outside `0..d`.
    #[error("arm {arm} out of range for {d} arms")]
    ArmOutOfRange { arm: usize, d: usize },
}

// ---------------------------------------------------------------------------
// Distribution
// ---------------------------------------------------------------------------

/// A probability distribution over dense arm ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Normalize non-negative weights into a distribution.
    ///
    /// Errors with [`ValueError::AllZero`] when every weight is zero and
    /// [`ValueError::NegativeEntry`] on any negative weight. Renormalizing an
    /// existing distribution is idempotent to within `1e-12` per entry.
    pub fn from_weights(weights: &[f64]) -> Result<Self, ValueError> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(ValueError::NonFinite { index: i });
            }
            if w < 0.0 {
                return Err(ValueError::NegativeEntry { index: i, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(ValueError::AllZero);
        }
        Ok(Self {
            probs: weights.iter().map(|&w| w / sum).collect(),
        })
    }

    /// Uniform distribution over `d` arms.
    pub fn uniform(d: usize) -> Self {
        Self {
            probs: vec![1.0 / d as f64; d],
        }
    }

    /// Number of arms.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability of one arm.
    pub fn prob(&self, arm: usize) -> f64 {
        self.probs[arm]
    }

    /// Probabilities as a slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Check the invariants: entries non-negative, sum within [`DIST_TOL`]
    /// of one.
    pub fn validate(&self) -> Result<(), ValueError> {
        for (i, &p) in self.probs.iter().enumerate() {
            if !p.is_finite() {
                return Err(ValueError::NonFinite { index: i });
            }
            if p < 0.0 {
                return Err(ValueError::NegativeEntry { index: i, value: p });
            }
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > DIST_TOL {
            return Err(ValueError::OutOfRange {
                index: usize::MAX,
                value: sum,
                max: 1.0,
            });
        }
        Ok(())
    }

    /// Draw one arm by inverse CDF over ascending ids, consuming a single
    /// uniform variate. Deterministic given the variate; ties toward the
    /// lower id. The final arm absorbs any floating-point slack.
    pub fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }

    /// Expected value of `losses` under this distribution.
    pub fn expected_loss(&self, losses: &[f64]) -> Result<f64, ValueError> {
        if losses.len() != self.probs.len() {
            return Err(ValueError::LengthMismatch {
                left: self.probs.len(),
                right: losses.len(),
            });
        }
        Ok(self
            .probs
            .iter()
            .zip(losses)
            .map(|(p, l)| p * l)
            .sum())
    }
}

// ---------------------------------------------------------------------------
// Loss vectors
// ---------------------------------------------------------------------------

/// True per-arm losses for one round, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector {
    values: Vec<f64>,
}

impl LossVector {
    /// Validate and wrap a loss vector. Out-of-range entries are an error,
    /// never clamped.
    pub fn new(values: Vec<f64>) -> Result<Self, ValueError> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(ValueError::NonFinite { index: i });
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(ValueError::OutOfRange {
                    index: i,
                    value: v,
                    max: 1.0,
                });
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, arm: usize) -> f64 {
        self.values[arm]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Importance-weighted loss estimates for one round, each in `[0, bound]`.
///
/// The bound is the mode-specific magnitude cap (for example `1/γ'` for the
/// dual-threshold reduction); constructing an estimate above it is an error,
/// which is how estimator bugs surface immediately instead of as silently
/// wrong regret numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedLossVector {
    values: Vec<f64>,
    bound: f64,
}

impl EstimatedLossVector {
    pub fn new(values: Vec<f64>, bound: f64) -> Result<Self, ValueError> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(ValueError::NonFinite { index: i });
            }
            if v < 0.0 {
                return Err(ValueError::NegativeEntry { index: i, value: v });
            }
            if v > bound * (1.0 + CAP_SLACK) {
                return Err(ValueError::OutOfRange {
                    index: i,
                    value: v,
                    max: bound,
                });
            }
        }
        Ok(Self { values, bound })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, arm: usize) -> f64 {
        self.values[arm]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Magnitude cap this vector was validated against.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Feedback graph
// ---------------------------------------------------------------------------

/// An undirected feedback graph over arms `0..d`.
///
/// Playing arm `i` reveals the losses of the closed neighborhood
/// `N_i = {i} ∪ {j : (i,j) ∈ E}`; self-observation is implicit and never
/// stored as an edge. The adjacency is symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
}

impl FeedbackGraph {
    /// Graph with no edges: the bandit case, where only the played arm is
    /// observed.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adj: vec![Vec::new(); n],
        }
    }

    /// Build from an undirected edge list. Self-loops are ignored (self
    /// observation is implicit); duplicate edges collapse.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, ValueError> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n {
                return Err(ValueError::ArmOutOfRange { arm: a, d: n });
            }
            if b >= n {
                return Err(ValueError::ArmOutOfRange { arm: b, d: n });
            }
            if a == b {
                continue;
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { n, adj })
    }

    /// Disjoint union of cliques with the given sizes, in id order.
    pub fn clique_union(sizes: &[usize]) -> Self {
        let n: usize = sizes.iter().sum();
        let mut edges = Vec::new();
        let mut base = 0;
        for &s in sizes {
            for a in 0..s {
                for b in (a + 1)..s {
                    edges.push((base + a, base + b));
                }
            }
            base += s;
        }
        Self::from_edges(n, &edges).expect("clique union edges are in range")
    }

    /// Number of arms.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Open neighborhood (excluding `i` itself), sorted ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// Closed neighborhood `N_i`, i.e. `i` plus its neighbors.
    pub fn closed_neighborhood(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.adj[i].len() + 1);
        let mut inserted = false;
        for &j in &self.adj[i] {
            if !inserted && j > i {
                out.push(i);
                inserted = true;
            }
            out.push(j);
        }
        if !inserted {
            out.push(i);
        }
        out
    }

    /// Whether `(a, b)` is an edge (or `a == b`, since neighborhoods are
    /// closed).
    pub fn observes(&self, a: usize, b: usize) -> bool {
        a == b || self.adj[a].binary_search(&b).is_ok()
    }

    /// Total number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }
}

// ---------------------------------------------------------------------------
// Round records
// ---------------------------------------------------------------------------

/// Threshold and rate parameters in force for one round. Which fields are
/// meaningful depends on the learner mode; unused ones are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundParams {
    /// Primary freezing threshold γ.
    pub gamma: f64,
    /// Propagation threshold γ' (γ/3 where applicable).
    pub gamma_prime: f64,
    /// Play-probability threshold β (combined-mode learners).
    pub beta: f64,
    /// Implicit-exploration shift ζ.
    pub zeta: f64,
    /// Engine learning rate η.
    pub eta: f64,
}

/// Everything one learner round produced, for regret accounting, invariant
/// monitors, and CSV output.
///
/// In graph modes `played` is an arm id and `estimated` has one entry per
/// arm; in semi-bandit mode `played` is a strategy id, `estimated` has one
/// entry per element, and `true_loss` is the played strategy's summed element
/// loss (in `[0, m]` rather than `[0, 1]`).
#[derive(Debug, Clone)]
pub struct RoundRecord {
    /// Round index, 1-based, matching environment rounds.
    pub t: u64,
    /// Played arm or strategy id.
    pub played: usize,
    /// Realized loss of the played arm / strategy.
    pub true_loss: f64,
    /// Importance-weighted loss estimates fed to the engine.
    pub estimated: EstimatedLossVector,
    /// Frozen arm ids (graph modes) or element ids (semi-bandit), ascending.
    pub frozen: Vec<usize>,
    /// Probability mass removed by freezing this round.
    pub frozen_mass: f64,
    /// Post-freezing play distribution (zero on frozen arms).
    pub play_dist: Distribution,
    /// Pre-freezing engine distribution.
    pub base_dist: Distribution,
    /// Thresholds and rates in force this round.
    pub params: RoundParams,
    /// Sampled per-element observation frequencies (semi-bandit mode only).
    pub observation_estimates: Option<Vec<f64>>,
    /// Per-round sample count used for those frequencies (semi-bandit only).
    pub samples_per_sweep: Option<usize>,
}

impl RoundRecord {
    /// Validate the cross-field invariants: distributions sum to one,
    /// `frozen_mass ∈ [0, 1]`, and the played loss within `[0, max_loss]`.
    pub fn validate(&self, max_loss: f64) -> Result<(), ValueError> {
        self.play_dist.validate()?;
        self.base_dist.validate()?;
        if !(0.0..=1.0 + DIST_TOL).contains(&self.frozen_mass) {
            return Err(ValueError::OutOfRange {
                index: self.t as usize,
                value: self.frozen_mass,
                max: 1.0,
            });
        }
        if !(0.0..=max_loss).contains(&self.true_loss) {
            return Err(ValueError::OutOfRange {
                index: self.t as usize,
                value: self.true_loss,
                max: max_loss,
            });
        }
        Ok(())
    }
}
