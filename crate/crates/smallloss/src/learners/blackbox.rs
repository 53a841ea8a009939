//! Dual-threshold freezing reduction over an arbitrary feedback graph.
//!
//! The learner wraps a full-information engine (Hedge, or Hedge with a
//! uniform floor for shifting comparators). Each round:
//!
//! 1. take the engine distribution `p`,
//! 2. freeze arms by the dual-threshold rule with `γ = ε′/(4α̂)` (initial
//!    freeze on closed-neighborhood masses below γ, then propagation at
//!    γ′ = γ/3 until a fixpoint),
//! 3. draw the played arm from the renormalized distribution `w`,
//! 4. set `ℓ̃_i = ℓ_i / W_i` for every *observed, unfrozen* arm `i`, where
//!    `W_i = Σ_{j ∈ N_i} w_j` is `i`'s observation mass, and 0 elsewhere,
//! 5. feed `ℓ̃` back to the engine.
//!
//! The propagation certificate guarantees `W_i ≥ γ′` for every unfrozen arm,
//! so estimates never exceed `3/γ = 12α̂/ε′`; the cap is enforced at
//! construction of every estimate vector.
//!
//! # Independence-number doubling
//!
//! When the guess α̂ is too small the freeze pass gives itself away: either
//! the initially frozen set contains a maximal independent set larger than
//! α̂, or everything freezes at once (which a correct guess makes impossible,
//! since total frozen mass stays below 4α̂γ = ε′ < 1 whenever the initial
//! frozen set has no independent set above α̂). With doubling enabled the
//! learner reacts to either signal by doubling α̂, restarting the engine, and
//! redoing the round's freeze with the new thresholds; the independent-set
//! check fires at most once per round, and every doubling carries evidence
//! of an independent set larger than the old guess, so the total number of
//! doublings is at most `⌈log2 α⌉` for the true independence number α.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::engines::{EngineError, HedgeState, NoisyHedgeState};
use crate::freezing::{dual_threshold_freeze, FreezeError, FreezeResult};
use crate::graph::greedy_maximal_independent_set;
use crate::types::{
    Distribution, EstimatedLossVector, FeedbackGraph, RoundParams, RoundRecord,
};

use super::{
    check_eps, check_revealed, mask_to_ids, neighborhood_mass, FeedbackFn, LearnerError,
    OnlineLearner,
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Which full-information engine backs the reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    /// Plain multiplicative weights.
    Hedge,
    /// Multiplicative weights with a uniform floor of total mass `1/horizon`
    /// (clamped to a small minimum), which keeps the learner competitive
    /// against shifting comparators.
    NoisyHedge { horizon: u64 },
}

/// Configuration for [`BlackboxLearner`].
#[derive(Debug, Clone, Copy)]
pub struct BlackboxConfig {
    /// User accuracy target ε ∈ (0, 1]; the learner runs at ε′ = ε/2.
    pub eps: f64,
    /// Guess α̂ ≥ 1 for the graph's independence number.
    pub alpha_guess: usize,
    /// Engine backing the reduction.
    pub engine: EngineKind,
    /// Multiplier on the default engine learning rate η = ε′·γ′. Keep at 1.0
    /// for the reference tuning; exposed because the default is conservative
    /// at simulation scale.
    pub eta_scale: f64,
    /// React to independence-number-guess violations by doubling α̂.
    pub alpha_doubling: bool,
}

impl BlackboxConfig {
    /// Reference configuration: plain Hedge, default rate, fixed guess.
    pub fn fixed(eps: f64, alpha_guess: usize) -> Self {
        Self {
            eps,
            alpha_guess,
            engine: EngineKind::Hedge,
            eta_scale: 1.0,
            alpha_doubling: false,
        }
    }
}

// ---------------------------------------------------------------------------
// Engine dispatch
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Engine {
    Plain(HedgeState),
    Noisy(NoisyHedgeState),
}

impl Engine {
    fn make(kind: EngineKind, d: usize, eta: f64) -> Self {
        match kind {
            EngineKind::Hedge => Engine::Plain(HedgeState::new(d, eta)),
            EngineKind::NoisyHedge { horizon } => {
                Engine::Noisy(NoisyHedgeState::for_horizon(d, eta, horizon as usize))
            }
        }
    }

    fn distribution(&self) -> Distribution {
        match self {
            Engine::Plain(h) => h.distribution(),
            Engine::Noisy(h) => h.distribution(),
        }
    }

    fn update(&mut self, losses: &[f64]) -> Result<(), EngineError> {
        match self {
            Engine::Plain(h) => h.update(losses),
            Engine::Noisy(h) => h.update(losses),
        }
    }
}

// ---------------------------------------------------------------------------
// Learner
// ---------------------------------------------------------------------------

/// Graph-feedback learner: dual-threshold freezing around any engine.
#[derive(Debug, Clone)]
pub struct BlackboxLearner {
    graph: FeedbackGraph,
    eps_prime: f64,
    eta_scale: f64,
    engine_kind: EngineKind,
    engine: Engine,
    alpha_guess: usize,
    alpha_doublings: usize,
    alpha_doubling_enabled: bool,
}

impl BlackboxLearner {
    /// The internal slack is ε′ = ε / this.
    pub const EPS_PRIME_DIVISOR: f64 = 2.0;

    pub fn new(graph: FeedbackGraph, config: &BlackboxConfig) -> Result<Self, LearnerError> {
        check_eps(config.eps)?;
        if config.alpha_guess == 0 {
            return Err(LearnerError::BadParameter {
                name: "alpha_guess",
                value: 0.0,
            });
        }
        if !(config.eta_scale > 0.0) || !config.eta_scale.is_finite() {
            return Err(LearnerError::BadParameter {
                name: "eta_scale",
                value: config.eta_scale,
            });
        }
        if graph.is_empty() {
            return Err(LearnerError::BadParameter {
                name: "num_arms",
                value: 0.0,
            });
        }
        let mut learner = Self {
            graph,
            eps_prime: config.eps / Self::EPS_PRIME_DIVISOR,
            eta_scale: config.eta_scale,
            engine_kind: config.engine,
            engine: Engine::Plain(HedgeState::new(1, 1.0)), // replaced below
            alpha_guess: config.alpha_guess,
            alpha_doublings: 0,
            alpha_doubling_enabled: config.alpha_doubling,
        };
        learner.rebuild_engine();
        Ok(learner)
    }

    /// Initial freezing threshold γ = ε′/(4α̂) for the current guess.
    pub fn gamma(&self) -> f64 {
        self.eps_prime / (4.0 * self.alpha_guess as f64)
    }

    /// Propagation threshold γ′ = γ/3.
    pub fn gamma_prime(&self) -> f64 {
        self.gamma() / 3.0
    }

    /// Engine learning rate η = eta_scale · ε′ · γ′.
    pub fn eta(&self) -> f64 {
        self.eta_scale * self.eps_prime * self.gamma_prime()
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    /// Current independence-number guess.
    pub fn alpha_guess(&self) -> usize {
        self.alpha_guess
    }

    /// How many times the guess has doubled so far.
    pub fn alpha_doublings(&self) -> usize {
        self.alpha_doublings
    }

    /// Inherit the guess state from an earlier phase of the same run, so a
    /// phase restart does not forget what the graph already taught us.
    pub fn carry_alpha_from(&mut self, prev: &BlackboxLearner) {
        self.alpha_guess = prev.alpha_guess;
        self.alpha_doublings = prev.alpha_doublings;
        self.rebuild_engine();
    }

    fn rebuild_engine(&mut self) {
        self.engine = Engine::make(self.engine_kind, self.graph.len(), self.eta());
    }

    fn double_alpha(&mut self) {
        self.alpha_guess *= 2;
        self.alpha_doublings += 1;
        self.rebuild_engine();
    }

    /// Freeze under the current guess, doubling the guess on violation
    /// signals. Returns the engine distribution the accepted freeze was
    /// computed from, together with the freeze itself.
    fn freeze_with_doubling(&mut self) -> Result<(Distribution, FreezeResult), LearnerError> {
        let d = self.graph.len();
        let mut mis_checked = false;
        loop {
            let p = self.engine.distribution();
            match dual_threshold_freeze(&self.graph, &p, self.gamma()) {
                Ok(freeze) => {
                    if self.alpha_doubling_enabled && !mis_checked {
                        let mis =
                            greedy_maximal_independent_set(&self.graph, &freeze.initial_frozen);
                        if mis.len() > self.alpha_guess {
                            // Hard evidence the guess is low: double once,
                            // redo the freeze, and let the next round re-check.
                            self.double_alpha();
                            mis_checked = true;
                            continue;
                        }
                    }
                    return Ok((p, freeze));
                }
                // A total freeze is impossible once the guess is correct (the
                // frozen mass would be below ε′ < 1), so it is itself a
                // guess-violation signal.
                Err(FreezeError::AllFrozen { .. })
                    if self.alpha_doubling_enabled && self.alpha_guess < 2 * d =>
                {
                    self.double_alpha();
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}

impl OnlineLearner for BlackboxLearner {
    fn step(
        &mut self,
        t: u64,
        rng: &mut ChaCha12Rng,
        feedback: &mut FeedbackFn<'_>,
    ) -> Result<RoundRecord, LearnerError> {
        let d = self.graph.len();
        let (base, freeze) = self.freeze_with_doubling()?;
        let gamma = self.gamma();

        let arm = freeze.play_dist.sample(rng.gen::<f64>());
        let expected = self.graph.closed_neighborhood(arm);
        let observed = feedback(t, arm)?;
        let true_loss = check_revealed(t, arm, &observed, &expected)?;

        let frozen_mask = freeze.frozen_mask(d);
        let cap = 3.0 / gamma;
        let mut est = vec![0.0; d];
        for &(i, loss) in &observed {
            if frozen_mask[i] {
                continue;
            }
            let w_i = neighborhood_mass(&self.graph, &freeze.play_dist, i);
            est[i] = loss / w_i;
        }
        let estimated = EstimatedLossVector::new(est, cap)?;
        self.engine.update(estimated.as_slice())?;

        Ok(RoundRecord {
            t,
            played: arm,
            true_loss,
            estimated,
            frozen: mask_to_ids(&frozen_mask),
            frozen_mass: freeze.frozen_mass,
            play_dist: freeze.play_dist,
            base_dist: base,
            params: RoundParams {
                gamma,
                gamma_prime: self.gamma_prime(),
                beta: 0.0,
                zeta: 0.0,
                eta: self.eta(),
            },
            observation_estimates: None,
            samples_per_sweep: None,
        })
    }

    fn num_actions(&self) -> usize {
        self.graph.len()
    }

    fn max_round_loss(&self) -> f64 {
        1.0
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, STREAM_LEARNER};
    use crate::types::EXACT_TOL;

    fn rng() -> ChaCha12Rng {
        stream(7, 0, STREAM_LEARNER)
    }

    /// Feedback closure over a fixed loss vector and graph.
    fn graph_feedback(
        g: FeedbackGraph,
        losses: Vec<f64>,
    ) -> impl FnMut(u64, usize) -> Result<Vec<(usize, f64)>, LearnerError> {
        move |_t, played| {
            Ok(g.closed_neighborhood(played)
                .into_iter()
                .map(|j| (j, losses[j]))
                .collect())
        }
    }

    #[test]
    fn complete_graph_reduces_to_full_information() {
        // On a clique everything is observed with W_i = 1, so the estimates
        // equal the true losses exactly.
        let g = FeedbackGraph::clique_union(&[4]);
        let config = BlackboxConfig::fixed(0.5, 1);
        let mut learner = BlackboxLearner::new(g.clone(), &config).unwrap();
        let losses = vec![0.3, 0.9, 0.0, 0.5];
        let mut fb = graph_feedback(g, losses.clone());
        let rec = learner.step(1, &mut rng(), &mut fb).unwrap();
        assert!(rec.frozen.is_empty());
        for i in 0..4 {
            assert!((rec.estimated.get(i) - losses[i]).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn bandit_uniform_estimate_is_d_on_played_arm() {
        // Empty graph, uniform start: the played arm's estimate is
        // loss / (1/d) = d, every other arm's is zero.
        let d = 5;
        let g = FeedbackGraph::empty(d);
        let config = BlackboxConfig::fixed(0.4, d); // alpha = d for the empty graph
        let mut learner = BlackboxLearner::new(g.clone(), &config).unwrap();
        let mut fb = graph_feedback(g, vec![1.0; d]);
        let rec = learner.step(1, &mut rng(), &mut fb).unwrap();
        assert!(rec.frozen.is_empty(), "uniform mass 1/d is above γ = ε'/(4d)");
        assert!((rec.estimated.get(rec.played) - d as f64).abs() < EXACT_TOL);
        for i in 0..d {
            if i != rec.played {
                assert_eq!(rec.estimated.get(i), 0.0);
            }
        }
        assert_eq!(rec.true_loss, 1.0);
    }

    #[test]
    fn estimates_respect_the_cap_across_rounds() {
        // Push mass around with adversarial losses on a small graph and
        // check every round's estimates stay below 3/γ (the vector
        // constructor enforces it; this exercises many freeze shapes).
        let g = FeedbackGraph::from_edges(6, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let config = BlackboxConfig {
            eps: 0.6,
            alpha_guess: 3,
            engine: EngineKind::Hedge,
            eta_scale: 40.0, // deliberately hot so probabilities collapse fast
            alpha_doubling: false,
        };
        let mut learner = BlackboxLearner::new(g.clone(), &config).unwrap();
        let mut r = rng();
        for t in 1..=300 {
            let losses: Vec<f64> = (0..6).map(|i| if i == 5 { 0.0 } else { 1.0 }).collect();
            let mut fb = graph_feedback(g.clone(), losses);
            let rec = learner.step(t, &mut r, &mut fb).unwrap();
            assert!(rec.estimated.max_value() <= 3.0 / rec.params.gamma * (1.0 + 1e-9));
            rec.validate(1.0).unwrap();
        }
    }

    #[test]
    fn all_frozen_at_start_doubles_the_guess() {
        // 16-arm bandit with guess 1: γ = ε'/4 = 1/8 while uniform mass is
        // 1/16, so round 1 freezes everything. Doubling to 2 gives γ = 1/16,
        // which the uniform distribution survives (the rule is strict <).
        let d = 16;
        let g = FeedbackGraph::empty(d);
        let config = BlackboxConfig {
            eps: 1.0,
            alpha_guess: 1,
            engine: EngineKind::Hedge,
            eta_scale: 1.0,
            alpha_doubling: true,
        };
        let mut learner = BlackboxLearner::new(g.clone(), &config).unwrap();
        let mut fb = graph_feedback(g, vec![0.5; d]);
        let rec = learner.step(1, &mut rng(), &mut fb).unwrap();
        rec.validate(1.0).unwrap();
        assert_eq!(learner.alpha_guess(), 2);
        assert_eq!(learner.alpha_doublings(), 1);
    }

    #[test]
    fn doubling_count_stays_under_log_alpha() {
        // Empty graph (α = d): drive all mass onto one arm so the others
        // freeze, which repeatedly triggers the independent-set signal. The
        // guess may reach at most 2^⌈log2 d⌉.
        let d = 8;
        let g = FeedbackGraph::empty(d);
        let config = BlackboxConfig {
            eps: 1.0,
            alpha_guess: 1,
            engine: EngineKind::Hedge,
            eta_scale: 30.0,
            alpha_doubling: true,
        };
        let mut learner = BlackboxLearner::new(g.clone(), &config).unwrap();
        let mut r = rng();
        for t in 1..=200 {
            let losses: Vec<f64> = (0..d).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect();
            let mut fb = graph_feedback(g.clone(), losses);
            learner.step(t, &mut r, &mut fb).unwrap();
        }
        let bound = (d as f64).log2().ceil() as usize;
        assert!(
            learner.alpha_doublings() <= bound,
            "doublings {} exceed ⌈log2 α⌉ = {bound}",
            learner.alpha_doublings()
        );
    }

    #[test]
    fn complete_graph_never_doubles() {
        // α = 1 on a clique: any frozen set has a maximal independent set of
        // size at most 1, so a guess of 1 is never contradicted.
        let g = FeedbackGraph::clique_union(&[6]);
        let config = BlackboxConfig {
            eps: 0.8,
            alpha_guess: 1,
            engine: EngineKind::Hedge,
            eta_scale: 20.0,
            alpha_doubling: true,
        };
        let mut learner = BlackboxLearner::new(g.clone(), &config).unwrap();
        let mut r = rng();
        for t in 1..=200 {
            let losses: Vec<f64> = (0..6).map(|i| if i == 2 { 0.0 } else { 1.0 }).collect();
            let mut fb = graph_feedback(g.clone(), losses);
            learner.step(t, &mut r, &mut fb).unwrap();
        }
        assert_eq!(learner.alpha_doublings(), 0);
    }

    #[test]
    fn graph_mismatch_is_detected() {
        let g = FeedbackGraph::empty(3);
        let config = BlackboxConfig::fixed(0.4, 3);
        let mut learner = BlackboxLearner::new(g, &config).unwrap();
        // Feedback claims two arms were observed on an empty graph.
        let mut fb = |_t: u64, played: usize| {
            Ok(vec![(played, 0.5), (2, 0.1)])
        };
        let err = learner.step(1, &mut rng(), &mut fb).unwrap_err();
        assert!(matches!(err, LearnerError::GraphChangedMidRound { t: 1 }));
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = FeedbackGraph::empty(2);
        assert!(BlackboxLearner::new(g.clone(), &BlackboxConfig::fixed(0.0, 1)).is_err());
        assert!(BlackboxLearner::new(g.clone(), &BlackboxConfig::fixed(1.5, 1)).is_err());
        assert!(BlackboxLearner::new(g, &BlackboxConfig::fixed(0.5, 0)).is_err());
    }

    #[test]
    fn noisy_engine_keeps_a_uniform_floor() {
        // With the noisy engine, even an arm with huge cumulative loss keeps
        // probability ≥ noise/d in the base distribution.
        let d = 4;
        let g = FeedbackGraph::clique_union(&[d]);
        let config = BlackboxConfig {
            eps: 0.5,
            alpha_guess: 1,
            engine: EngineKind::NoisyHedge { horizon: 64 },
            eta_scale: 100.0,
            alpha_doubling: false,
        };
        let mut learner = BlackboxLearner::new(g.clone(), &config).unwrap();
        let mut r = rng();
        for t in 1..=50 {
            let losses: Vec<f64> = (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
            let mut fb = graph_feedback(g.clone(), losses);
            let rec = learner.step(t, &mut r, &mut fb).unwrap();
            assert!(rec.base_dist.prob(0) >= (1.0 / 64.0) / d as f64 - 1e-12);
        }
    }
}
