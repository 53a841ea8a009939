//! Partial-information learners built on freezing.
//!
//! Every learner here runs the same loop: ask a full-information engine for
//! a distribution, freeze the part of it that would be too expensive to
//! estimate, play from the renormalized remainder, convert the revealed
//! losses into bounded importance-weighted estimates, and feed those back to
//! the engine. The variants differ in *what* they freeze and what
//! denominator the estimator divides by:
//!
//! * [`blackbox`] — dual-threshold freezing on closed-neighborhood
//!   observation masses; wraps any multiplicative-weights engine and works
//!   on an arbitrary feedback graph with an independence-number guess.
//! * [`green_ix`] — single-threshold freezing on play probabilities with
//!   implicit exploration; pure bandit feedback.
//! * [`green_ix_graph`] — triple-threshold freezing with implicit
//!   exploration for a graph that is fixed across rounds, parameterized by a
//!   clique-cover-size guess κ.
//! * [`semibandit`] — element/strategy freezing on *sampled* observation
//!   frequencies over a perturbed-leader engine, for combinatorial strategy
//!   families accessed through a min-cost oracle.
//! * [`baseline`] — Hedge with uniform mixing and importance sampling; the
//!   comparison learner with worst-case (not small-loss) tuning.
//! * [`doubling`] — the guess-and-double wrapper that turns a fixed-ε
//!   learner into one whose regret tracks the realized best loss.
//!
//! # Feedback discipline
//!
//! Learners never see a full loss vector. Each round they hand the played
//! action to a caller-supplied [`FeedbackFn`] and get back exactly the
//! observable `(index, loss)` pairs: the closed neighborhood of the played
//! arm for graph learners, the played arm alone for bandit learners, the
//! played strategy's elements for the semi-bandit learner. Learners verify
//! the revealed index set against the feedback structure they were
//! configured with and refuse to run on a mismatch, so information leaks are
//! structural errors rather than silent bugs.
//!
//! # Parameterization
//!
//! Constructors take the user-facing accuracy target ε and derive the
//! internal slack ε′ by a fixed per-learner divisor (documented on each
//! constructor), from which all thresholds follow. The doubling wrapper
//! feeds the phase value ε_τ through the same path.

use rand_chacha::ChaCha12Rng;

use crate::engines::EngineError;
use crate::freezing::FreezeError;
use crate::types::{Distribution, FeedbackGraph, RoundRecord, ValueError};

pub mod baseline;
pub mod blackbox;
pub mod doubling;
pub mod green_ix;
pub mod green_ix_graph;
pub mod semibandit;

pub use baseline::{BaselineConfig, BaselineLearner};
pub use blackbox::{BlackboxConfig, BlackboxLearner, EngineKind};
pub use doubling::{doubling_run, DoublingOutcome, PhaseRecord};
pub use green_ix::{GreenIxConfig, GreenIxLearner};
pub use green_ix_graph::{GreenIxGraphConfig, GreenIxGraphLearner};
pub use semibandit::{SemiBanditConfig, SemiBanditLearner};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Failures while stepping a learner.
#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    /// A freezing pass failed (everything frozen, or a sweep cap was hit).
    #[error(transparent)]
    Freeze(#[from] FreezeError),

    /// The full-information engine rejected an update or had no feasible
    /// strategy to draw.
    #[error(transparent)]
    Engine(#[from] EngineError),

    /// A shared value type failed validation.
    #[error(transparent)]
    Value(#[from] ValueError),

    /// The revealed index set disagrees with the feedback graph the learner
    /// was configured with.
    #[error("round {t}: revealed losses disagree with the configured feedback graph")]
    GraphChangedMidRound { t: u64 },

    /// The feedback callback itself failed (environment error, exhausted
    /// horizon, malformed scripted losses, ...).
    #[error("round {t}: feedback failed: {message}")]
    Feedback { t: u64, message: String },

    /// A configuration value is outside its valid range.
    #[error("{name} = {value} is outside its valid range")]
    BadParameter { name: &'static str, value: f64 },
}

// ---------------------------------------------------------------------------
// Feedback plumbing
// ---------------------------------------------------------------------------

/// Losses revealed for one round: `(index, loss)` pairs in ascending index
/// order. Indices are arms for graph-feedback learners and ground elements
/// for the semi-bandit learner.
pub type Observed = Vec<(usize, f64)>;

/// Per-round feedback callback: `(t, played)` to the observable losses.
///
/// `played` is an arm id for graph learners and a strategy id for the
/// semi-bandit learner.
pub type FeedbackFn<'a> = dyn FnMut(u64, usize) -> Result<Observed, LearnerError> + 'a;

/// A learner that can be stepped one round at a time.
///
/// `t` is 1-based. Each step consumes randomness only from the supplied
/// generator, so identical `(state, t, rng)` triples replay identically.
pub trait OnlineLearner {
    /// Play one round: freeze, draw, observe, update.
    fn step(
        &mut self,
        t: u64,
        rng: &mut ChaCha12Rng,
        feedback: &mut FeedbackFn<'_>,
    ) -> Result<RoundRecord, LearnerError>;

    /// Number of distinct actions (arms, or strategies for semi-bandits).
    fn num_actions(&self) -> usize;

    /// Largest possible realized loss in one round (1 for single arms, the
    /// strategy size `m` for semi-bandits).
    fn max_round_loss(&self) -> f64;
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Observation mass `W_i = Σ_{j ∈ N_i} w_j` of arm `i` under `w` (closed
/// neighborhood).
pub(crate) fn neighborhood_mass(g: &FeedbackGraph, w: &Distribution, i: usize) -> f64 {
    let mut total = w.prob(i);
    for &j in g.neighbors(i) {
        total += w.prob(j);
    }
    total
}

/// Ascending ids of set bits in a frozen mask.
pub(crate) fn mask_to_ids(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &f)| f.then_some(i))
        .collect()
}

/// Check that revealed pairs cover exactly `expected` (ascending ids on both
/// sides) and pull out the loss of `played`.
pub(crate) fn check_revealed(
    t: u64,
    played: usize,
    observed: &[(usize, f64)],
    expected: &[usize],
) -> Result<f64, LearnerError> {
    if observed.len() != expected.len()
        || observed
            .iter()
            .zip(expected)
            .any(|(&(i, _), &e)| i != e)
    {
        return Err(LearnerError::GraphChangedMidRound { t });
    }
    let mut played_loss = None;
    for &(i, loss) in observed {
        if !(0.0..=1.0).contains(&loss) {
            return Err(LearnerError::Feedback {
                t,
                message: format!("loss {loss} for index {i} is outside [0, 1]"),
            });
        }
        if i == played {
            played_loss = Some(loss);
        }
    }
    played_loss.ok_or(LearnerError::GraphChangedMidRound { t })
}

/// Validate a user accuracy target ε ∈ (0, 1].
pub(crate) fn check_eps(eps: f64) -> Result<(), LearnerError> {
    if !(eps > 0.0 && eps <= 1.0) || !eps.is_finite() {
        return Err(LearnerError::BadParameter {
            name: "eps",
            value: eps,
        });
    }
    Ok(())
}
