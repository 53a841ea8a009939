//! Loss environments: seeded instance generators with known structure.
//!
//! Every instance is immutable after construction and generates its round-`t`
//! loss vector as a pure function of `(parameters, master_seed, seed_index,
//! t)`, so schedules are bit-reproducible and independent runs can execute in
//! parallel without shared state. Oblivious models ignore the play history;
//! the adaptive adversaries receive the previously played arm.
//!
//! Instance families:
//!
//! * [`make_smallloss_bandit`] — `d` arms, no feedback edges; one designated
//!   arm draws Bernoulli losses with a small mean, the rest with a larger
//!   mean. Tuning the small mean sets the best arm's expected cumulative
//!   loss, which is what the small-loss scaling sweeps vary.
//! * [`make_clique_union`] — disjoint cliques with *identical* losses inside
//!   each clique (modeling many policies that recommend the same underlying
//!   action), so the independence and clique-partition numbers both equal the
//!   number of cliques while the arm count grows freely.
//! * [`make_shifting`] — the identity of the low-mean arm changes at
//!   uniformly drawn breakpoints; used for shifting-comparator experiments.
//! * [`punish_last_instance`] — adaptive adversary putting loss 1 on the arm
//!   played in the previous round and 0 elsewhere.
//! * [`from_loss_table`] — fully scripted schedules loaded from a table.
//! * [`make_layered_paths`] — combinatorial strategies: pick one element per
//!   layer; the strategy's loss is the sum of its elements' losses. Comes
//!   with an exact per-layer min-cost oracle, so strategy spaces too large to
//!   enumerate remain usable.

use crate::engines::MinCostOracle;
use crate::rng::{round_stream, stream, STREAM_ENV, STREAM_INSTANCE};
use crate::types::{FeedbackGraph, LossVector, ValueError};
use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

/// Explicit strategy enumeration refuses above this many strategies; the
/// min-cost oracle has no such cap.
pub const ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("loss means must satisfy 0 <= mu_star < mu_rest <= 1, got ({mu_star}, {mu_rest})")]
    BadLossMeans { mu_star: f64, mu_rest: f64 },
    #[error("counts must be >= 1")]
    EmptyConstruction,
    #[error("switch budget {switches} must be smaller than the horizon {horizon}")]
    SwitchBudget { switches: usize, horizon: u64 },
    #[error("shifting instances with switches need at least 2 arms")]
    TooFewArms,
    #[error("round {t} outside horizon {horizon}")]
    OutOfHorizon { t: u64, horizon: u64 },
    #[error("loss table row {row} has {got} entries, expected {expected}")]
    TableShape { row: usize, got: usize, expected: usize },
    #[error("loss table has {rows} rows, horizon needs {horizon}")]
    TableTooShort { rows: usize, horizon: u64 },
    #[error("{strategies} strategies exceed the enumeration cap {cap}")]
    SizeCap { strategies: u128, cap: usize },
    #[error(transparent)]
    Value(#[from] ValueError),
}

// ---------------------------------------------------------------------------
// Graph-feedback instances
// ---------------------------------------------------------------------------

/// Segment of a shifting schedule: rounds `start..next_start` have `best` as
/// the low-mean arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// First round of the segment (1-based, inclusive).
    pub start: u64,
    /// The low-mean arm during this segment.
    pub best: usize,
}

/// How round losses are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum LossModel {
    /// Independent Bernoulli per arm with fixed means.
    PerArmBernoulli { mu: Vec<f64> },
    /// One Bernoulli draw per clique, shared by all of its arms.
    CliqueBernoulli { clique_of: Vec<usize>, mu: Vec<f64> },
    /// Piecewise-stationary Bernoulli: the `best` arm of the active segment
    /// has mean `mu_star`, every other arm `mu_rest`.
    SegmentBernoulli {
        segments: Vec<Segment>,
        mu_star: f64,
        mu_rest: f64,
    },
    /// Adaptive: loss 1 on the previously played arm, 0 elsewhere.
    PunishLast,
    /// Fully scripted rows (validated at load).
    Table { rows: Vec<Vec<f64>> },
}

/// A graph-feedback (or bandit) loss instance.
#[derive(Debug, Clone)]
pub struct GraphInstance {
    /// Short generator name, used in CSV/summary output.
    pub kind: String,
    pub graph: FeedbackGraph,
    /// Independence number by construction.
    pub true_alpha: usize,
    /// Clique-partition number by construction.
    pub true_kappa: usize,
    /// Intended expected cumulative loss of the designated best arm.
    pub lstar_target: f64,
    pub horizon: u64,
    pub model: LossModel,
    pub master_seed: u64,
    pub seed_index: u64,
}

impl GraphInstance {
    pub fn num_arms(&self) -> usize {
        self.graph.len()
    }

    /// Round-`t` losses (1-based). `prev_play` is the arm played at `t-1`,
    /// used only by adaptive models.
    pub fn losses(&self, t: u64, prev_play: Option<usize>) -> Result<LossVector, EnvError> {
        if t == 0 || t > self.horizon {
            return Err(EnvError::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        let d = self.num_arms();
        let values = match &self.model {
            LossModel::PerArmBernoulli { mu } => {
                let mut rng = round_stream(self.master_seed, self.seed_index, STREAM_ENV, t);
                mu.iter()
                    .map(|&m| bernoulli(&mut rng, m))
                    .collect::<Vec<f64>>()
            }
            LossModel::CliqueBernoulli { clique_of, mu } => {
                let mut rng = round_stream(self.master_seed, self.seed_index, STREAM_ENV, t);
                let draws: Vec<f64> = mu.iter().map(|&m| bernoulli(&mut rng, m)).collect();
                clique_of.iter().map(|&c| draws[c]).collect()
            }
            LossModel::SegmentBernoulli {
                segments,
                mu_star,
                mu_rest,
            } => {
                let best = active_segment(segments, t).best;
                let mut rng = round_stream(self.master_seed, self.seed_index, STREAM_ENV, t);
                (0..d)
                    .map(|i| bernoulli(&mut rng, if i == best { *mu_star } else { *mu_rest }))
                    .collect()
            }
            LossModel::PunishLast => {
                let mut v = vec![0.0; d];
                if let Some(prev) = prev_play {
                    v[prev] = 1.0;
                }
                v
            }
            LossModel::Table { rows } => rows[(t - 1) as usize].clone(),
        };
        Ok(LossVector::new(values)?)
    }

    /// Per-arm round-`t` loss means, when the model is stochastic.
    pub fn means(&self, t: u64) -> Option<Vec<f64>> {
        match &self.model {
            LossModel::PerArmBernoulli { mu } => Some(mu.clone()),
            LossModel::CliqueBernoulli { clique_of, mu } => {
                Some(clique_of.iter().map(|&c| mu[c]).collect())
            }
            LossModel::SegmentBernoulli {
                segments,
                mu_star,
                mu_rest,
            } => {
                let best = active_segment(segments, t).best;
                Some(
                    (0..self.num_arms())
                        .map(|i| if i == best { *mu_star } else { *mu_rest })
                        .collect(),
                )
            }
            LossModel::PunishLast | LossModel::Table { .. } => None,
        }
    }

    /// True when losses depend on the play history.
    pub fn is_adaptive(&self) -> bool {
        matches!(self.model, LossModel::PunishLast)
    }
}

fn bernoulli(rng: &mut impl Rng, mu: f64) -> f64 {
    if rng.gen::<f64>() < mu {
        1.0
    } else {
        0.0
    }
}

fn active_segment(segments: &[Segment], t: u64) -> &Segment {
    // Segments are ascending by start; take the last with start <= t.
    let idx = segments.partition_point(|s| s.start <= t);
    &segments[idx - 1]
}

fn check_means(mu_star: f64, mu_rest: f64) -> Result<(), EnvError> {
    let ok = mu_star.is_finite()
        && mu_rest.is_finite()
        && (0.0..=1.0).contains(&mu_star)
        && (0.0..=1.0).contains(&mu_rest)
        && mu_star < mu_rest;
    if ok {
        Ok(())
    } else {
        Err(EnvError::BadLossMeans { mu_star, mu_rest })
    }
}

/// Bandit instance (no feedback edges): arm 0 has Bernoulli(`mu_star`)
/// losses, all others Bernoulli(`mu_rest`). The expected best-arm cumulative
/// loss is `mu_star * horizon`. `d = 1` degenerates to a single-arm instance.
pub fn make_smallloss_bandit(
    d: usize,
    horizon: u64,
    mu_star: f64,
    mu_rest: f64,
    master_seed: u64,
    seed_index: u64,
) -> Result<GraphInstance, EnvError> {
    if d == 0 || horizon == 0 {
        return Err(EnvError::EmptyConstruction);
    }
    check_means(mu_star, mu_rest)?;
    let mut mu = vec![mu_rest; d];
    mu[0] = mu_star;
    Ok(GraphInstance {
        kind: "smallloss_bandit".into(),
        graph: FeedbackGraph::empty(d),
        true_alpha: d,
        true_kappa: d,
        lstar_target: mu_star * horizon as f64,
        horizon,
        model: LossModel::PerArmBernoulli { mu },
        master_seed,
        seed_index,
    })
}

/// Disjoint cliques of equal size with shared within-clique losses. Clique 0
/// draws Bernoulli(`mu_star`), the rest Bernoulli(`mu_rest`). Both the
/// independence number and the clique-partition number equal `num_cliques`
/// regardless of `clique_size`, which is exactly what the α-vs-d sweeps vary.
pub fn make_clique_union(
    num_cliques: usize,
    clique_size: usize,
    horizon: u64,
    mu_star: f64,
    mu_rest: f64,
    master_seed: u64,
    seed_index: u64,
) -> Result<GraphInstance, EnvError> {
    if num_cliques == 0 || clique_size == 0 || horizon == 0 {
        return Err(EnvError::EmptyConstruction);
    }
    check_means(mu_star, mu_rest)?;
    let sizes = vec![clique_size; num_cliques];
    let graph = FeedbackGraph::clique_union(&sizes);
    let clique_of: Vec<usize> = (0..num_cliques)
        .flat_map(|c| std::iter::repeat(c).take(clique_size))
        .collect();
    let mut mu = vec![mu_rest; num_cliques];
    mu[0] = mu_star;
    Ok(GraphInstance {
        kind: "clique_union".into(),
        graph,
        true_alpha: num_cliques,
        true_kappa: num_cliques,
        lstar_target: mu_star * horizon as f64,
        horizon,
        model: LossModel::CliqueBernoulli { clique_of, mu },
        master_seed,
        seed_index,
    })
}

/// A shifting instance plus its comparator switch budget.
#[derive(Debug, Clone)]
pub struct ShiftingInstance {
    pub instance: GraphInstance,
    /// Number of best-arm changes in the schedule (the natural comparator
    /// switch budget).
    pub switch_budget: usize,
}

/// Piecewise-stationary bandit: `num_switches` breakpoints drawn uniformly
/// without replacement from rounds `2..=horizon`; each segment's low-mean arm
/// is drawn uniformly among arms other than the previous segment's.
pub fn make_shifting(
    d: usize,
    horizon: u64,
    num_switches: usize,
    mu_star: f64,
    mu_rest: f64,
    master_seed: u64,
    seed_index: u64,
) -> Result<ShiftingInstance, EnvError> {
    if d == 0 || horizon == 0 {
        return Err(EnvError::EmptyConstruction);
    }
    check_means(mu_star, mu_rest)?;
    if num_switches as u64 >= horizon {
        return Err(EnvError::SwitchBudget {
            switches: num_switches,
            horizon,
        });
    }
    if num_switches > 0 && d < 2 {
        return Err(EnvError::TooFewArms);
    }
    let mut rng = stream(master_seed, seed_index, STREAM_INSTANCE);
    // Breakpoints: `num_switches` distinct rounds in 2..=horizon, ascending.
    let mut breakpoints: Vec<u64> = sample(&mut rng, (horizon - 1) as usize, num_switches)
        .into_iter()
        .map(|i| i as u64 + 2)
        .collect();
    breakpoints.sort_unstable();
    let mut segments = Vec::with_capacity(num_switches + 1);
    let first_best = rng.gen_range(0..d);
    segments.push(Segment {
        start: 1,
        best: first_best,
    });
    for &bp in &breakpoints {
        let prev = segments.last().unwrap().best;
        // Uniform over the d-1 other arms.
        let mut next = rng.gen_range(0..d - 1);
        if next >= prev {
            next += 1;
        }
        segments.push(Segment {
            start: bp,
            best: next,
        });
    }
    Ok(ShiftingInstance {
        instance: GraphInstance {
            kind: "shifting".into(),
            graph: FeedbackGraph::empty(d),
            true_alpha: d,
            true_kappa: d,
            lstar_target: mu_star * horizon as f64,
            horizon,
            model: LossModel::SegmentBernoulli {
                segments,
                mu_star,
                mu_rest,
            },
            master_seed,
            seed_index,
        },
        switch_budget: num_switches,
    })
}

/// Adaptive adversary: loss 1 on the arm played in the previous round, 0
/// everywhere else (all zeros in round 1). Forces alternation pressure; any
/// deterministic learner suffers cumulative loss close to the horizon on two
/// arms.
pub fn punish_last_instance(d: usize, horizon: u64) -> Result<GraphInstance, EnvError> {
    if d == 0 || horizon == 0 {
        return Err(EnvError::EmptyConstruction);
    }
    Ok(GraphInstance {
        kind: "punish_last".into(),
        graph: FeedbackGraph::empty(d),
        true_alpha: d,
        true_kappa: d,
        lstar_target: f64::NAN,
        horizon,
        model: LossModel::PunishLast,
        master_seed: 0,
        seed_index: 0,
    })
}

/// Fully scripted schedule over an explicit feedback graph. Rows are
/// validated for shape and range at load.
pub fn from_loss_table(
    graph: FeedbackGraph,
    rows: Vec<Vec<f64>>,
    horizon: u64,
) -> Result<GraphInstance, EnvError> {
    let d = graph.len();
    if d == 0 || horizon == 0 {
        return Err(EnvError::EmptyConstruction);
    }
    if (rows.len() as u64) < horizon {
        return Err(EnvError::TableTooShort {
            rows: rows.len(),
            horizon,
        });
    }
    for (row, values) in rows.iter().enumerate() {
        if values.len() != d {
            return Err(EnvError::TableShape {
                row,
                got: values.len(),
                expected: d,
            });
        }
        // Range check once at load; per-round construction re-validates.
        LossVector::new(values.clone())?;
    }
    let (true_alpha, true_kappa) = (d, d); // caller-supplied graphs: no structural claim
    Ok(GraphInstance {
        kind: "script".into(),
        graph,
        true_alpha,
        true_kappa,
        lstar_target: f64::NAN,
        horizon,
        model: LossModel::Table { rows },
        master_seed: 0,
        seed_index: 0,
    })
}

// ---------------------------------------------------------------------------
// Semi-bandit instances
// ---------------------------------------------------------------------------

/// Layered-path strategy space: `layers * width` elements; a strategy picks
/// one element per layer and suffers the sum of their losses (each in
/// `[0, layers]` total). Element `l * width + k` is slot `k` of layer `l`;
/// strategy ids are mixed-radix over slots with layer 0 least significant,
/// so strategy 0 is the all-slot-0 path.
#[derive(Debug, Clone)]
pub struct SemiBanditInstance {
    pub kind: String,
    pub layers: usize,
    pub width: usize,
    /// Per-element Bernoulli loss means.
    pub mu: Vec<f64>,
    pub horizon: u64,
    pub master_seed: u64,
    pub seed_index: u64,
}

impl SemiBanditInstance {
    pub fn num_elements(&self) -> usize {
        self.layers * self.width
    }

    /// Maximum (here: exact) strategy size.
    pub fn strategy_size(&self) -> usize {
        self.layers
    }

    pub fn num_strategies(&self) -> u128 {
        (self.width as u128).pow(self.layers as u32)
    }

    /// Round-`t` element losses (1-based round), one Bernoulli per element in
    /// ascending element order.
    pub fn element_losses(&self, t: u64) -> Result<LossVector, EnvError> {
        if t == 0 || t > self.horizon {
            return Err(EnvError::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        let mut rng = round_stream(self.master_seed, self.seed_index, STREAM_ENV, t);
        let values: Vec<f64> = self.mu.iter().map(|&m| bernoulli(&mut rng, m)).collect();
        Ok(LossVector::new(values)?)
    }

    /// The exact min-cost oracle for this strategy space.
    pub fn oracle(&self) -> LayeredPathOracle {
        LayeredPathOracle {
            layers: self.layers,
            width: self.width,
        }
    }

    /// All strategies as element lists, refusing above [`ENUMERATION_CAP`].
    pub fn explicit_strategies(&self) -> Result<Vec<Vec<usize>>, EnvError> {
        let total = self.num_strategies();
        if total > ENUMERATION_CAP as u128 {
            return Err(EnvError::SizeCap {
                strategies: total,
                cap: ENUMERATION_CAP,
            });
        }
        let oracle = self.oracle();
        Ok((0..total as usize).map(|s| oracle.elements_of(s)).collect())
    }
}

/// Layered-path instance with slot-0 elements at mean `mu_star` and all
/// other elements at `mu_rest`, so the all-slot-0 path is the designated
/// best strategy with expected cumulative loss `layers * mu_star * horizon`.
pub fn make_layered_paths(
    layers: usize,
    width: usize,
    horizon: u64,
    mu_star: f64,
    mu_rest: f64,
    master_seed: u64,
    seed_index: u64,
) -> Result<SemiBanditInstance, EnvError> {
    if layers == 0 || width == 0 || horizon == 0 {
        return Err(EnvError::EmptyConstruction);
    }
    check_means(mu_star, mu_rest)?;
    let mu: Vec<f64> = (0..layers * width)
        .map(|e| if e % width == 0 { mu_star } else { mu_rest })
        .collect();
    Ok(SemiBanditInstance {
        kind: "layered_paths".into(),
        layers,
        width,
        mu,
        horizon,
        master_seed,
        seed_index,
    })
}

/// Exact min-cost oracle over layered paths: per-layer argmin over
/// non-forbidden elements, ties to the lower element id.
#[derive(Debug, Clone, Copy)]
pub struct LayeredPathOracle {
    layers: usize,
    width: usize,
}

impl MinCostOracle for LayeredPathOracle {
    fn num_elements(&self) -> usize {
        self.layers * self.width
    }

    fn num_strategies(&self) -> usize {
        (self.width as u128)
            .pow(self.layers as u32)
            .try_into()
            .expect("strategy count exceeds usize")
    }

    fn strategy_size(&self) -> usize {
        self.layers
    }

    fn elements_into(&self, strategy: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut s = strategy;
        out.extend((0..self.layers).map(|l| {
            let slot = s % self.width;
            s /= self.width;
            l * self.width + slot
        }));
    }

    fn min_cost(&self, scores: &[f64], forbidden: &[bool]) -> Option<usize> {
        debug_assert_eq!(scores.len(), self.num_elements());
        debug_assert_eq!(forbidden.len(), self.num_elements());
        let mut strategy = 0usize;
        let mut radix = 1usize;
        for l in 0..self.layers {
            let mut best_slot = None;
            let mut best_score = f64::INFINITY;
            for k in 0..self.width {
                let e = l * self.width + k;
                if forbidden[e] {
                    continue;
                }
                if scores[e] < best_score {
                    best_score = scores[e];
                    best_slot = Some(k);
                }
            }
            let slot = best_slot?;
            strategy += slot * radix;
            radix *= self.width;
        }
        Some(strategy)
    }
}
