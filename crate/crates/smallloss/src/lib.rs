//! Small-loss online learning under graph and semi-bandit feedback.
//!
//! This crate implements adversarial online learning algorithms whose regret
//! scales with the cumulative loss of the best action (`L*`) rather than the
//! horizon `T`, in settings where only part of the loss vector is observed
//! each round:
//!
//! * **Graph feedback** — playing an arm reveals the losses of its closed
//!   neighborhood in an undirected feedback graph.
//! * **Semi-bandit feedback** — strategies are element sets; playing one
//!   reveals its elements' losses.
//!
//! The central tool is *freezing* ([`freezing`]): arms whose observation
//! probability falls below a threshold are zeroed out for a round, which caps
//! every importance-weighted loss estimate and keeps full-information engines
//! honest. On top sit a black-box reduction that wraps any small-loss
//! full-information algorithm ([`learners::blackbox`]), direct bandit and
//! graph-feedback algorithms with implicit-exploration estimators
//! ([`learners::green_ix`], [`learners::green_ix_graph`]), a semi-bandit
//! reduction ([`learners::semibandit`]), and doubling wrappers that remove
//! the need to know `L*` or the graph's independence number in advance
//! ([`learners::doubling`]).
//!
//! [`environments`] provides adversarial and stochastic loss sequences with
//! known optima, [`evaluation`] the regret/scaling analysis used by the
//! experiment harness, and [`harness`]/[`cli`] the reproducible experiment
//! pipeline behind the `smallloss` binary.

pub mod cli;
pub mod engines;
pub mod environments;
pub mod evaluation;
pub mod freezing;
pub mod graph;
pub mod harness;
pub mod learners;
pub mod rng;
pub mod suites;
pub mod types;
