//! Fixed-graph learner: triple-threshold freezing plus implicit exploration.
//!
//! For a feedback graph that stays fixed across rounds and whose arms can be
//! covered by κ cliques, freezing gets three stages (drop play probabilities
//! below `β = ε′/d`, freeze observation masses below `γ = ε′/κ`, propagate at
//! `γ′ = γ/3`), and estimation uses observation masses with an
//! implicit-exploration shift:
//!
//! ```text
//! ℓ̃_i = ℓ_i / (W_i + ζ)   for observed unfrozen i,   ζ = η = ε′/(6κ),
//! ```
//!
//! where `W_i = Σ_{j ∈ N_i} w_j`. The propagation certificate keeps
//! `W_i ≥ γ′` for every unfrozen arm, so estimates never exceed `1/γ′ = 3/γ`,
//! and the ζ shift makes them negatively biased, which is what the
//! high-probability analysis needs. Compared to the engine-agnostic
//! dual-threshold reduction this trades generality (fixed graph, κ known or
//! guessed) for a better small-loss rate in κ instead of α·(large constant).

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::engines::HedgeState;
use crate::freezing::triple_threshold_freeze;
use crate::types::{EstimatedLossVector, FeedbackGraph, RoundParams, RoundRecord};

use super::{
    check_eps, check_revealed, mask_to_ids, neighborhood_mass, FeedbackFn, LearnerError,
    OnlineLearner,
};

/// Configuration for [`GreenIxGraphLearner`].
#[derive(Debug, Clone, Copy)]
pub struct GreenIxGraphConfig {
    /// User accuracy target ε ∈ (0, 1]; the learner runs at ε′ = ε/5.
    pub eps: f64,
    /// Guess κ̂ ≥ 1 for the size of a clique cover of the graph.
    pub kappa_guess: usize,
}

/// Fixed-graph learner with triple-threshold freezing and implicit
/// exploration.
#[derive(Debug, Clone)]
pub struct GreenIxGraphLearner {
    graph: FeedbackGraph,
    eps_prime: f64,
    kappa: usize,
    engine: HedgeState,
}

impl GreenIxGraphLearner {
    /// The internal slack is ε′ = ε / this.
    pub const EPS_PRIME_DIVISOR: f64 = 5.0;

    pub fn new(graph: FeedbackGraph, config: &GreenIxGraphConfig) -> Result<Self, LearnerError> {
        check_eps(config.eps)?;
        if config.kappa_guess == 0 {
            return Err(LearnerError::BadParameter {
                name: "kappa_guess",
                value: 0.0,
            });
        }
        if graph.is_empty() {
            return Err(LearnerError::BadParameter {
                name: "num_arms",
                value: 0.0,
            });
        }
        let eps_prime = config.eps / Self::EPS_PRIME_DIVISOR;
        let eta = eps_prime / (6.0 * config.kappa_guess as f64);
        let d = graph.len();
        Ok(Self {
            graph,
            eps_prime,
            kappa: config.kappa_guess,
            engine: HedgeState::new(d, eta),
        })
    }

    /// Play-probability drop threshold β = ε′/d.
    pub fn beta(&self) -> f64 {
        self.eps_prime / self.graph.len() as f64
    }

    /// Observation-mass threshold γ = ε′/κ̂.
    pub fn gamma(&self) -> f64 {
        self.eps_prime / self.kappa as f64
    }

    /// Propagation threshold γ′ = γ/3.
    pub fn gamma_prime(&self) -> f64 {
        self.gamma() / 3.0
    }

    /// Implicit-exploration shift ζ = ε′/(6κ̂).
    pub fn zeta(&self) -> f64 {
        self.eps_prime / (6.0 * self.kappa as f64)
    }

    /// Engine learning rate η (= ζ).
    pub fn eta(&self) -> f64 {
        self.zeta()
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }
}

impl OnlineLearner for GreenIxGraphLearner {
    fn step(
        &mut self,
        t: u64,
        rng: &mut ChaCha12Rng,
        feedback: &mut FeedbackFn<'_>,
    ) -> Result<RoundRecord, LearnerError> {
        let d = self.graph.len();
        let base = self.engine.distribution();
        let freeze = triple_threshold_freeze(&self.graph, &base, self.beta(), self.gamma())?;

        let arm = freeze.play_dist.sample(rng.gen::<f64>());
        let expected = self.graph.closed_neighborhood(arm);
        let observed = feedback(t, arm)?;
        let true_loss = check_revealed(t, arm, &observed, &expected)?;

        let frozen_mask = freeze.frozen_mask(d);
        let zeta = self.zeta();
        let cap = 1.0 / self.gamma_prime();
        let mut est = vec![0.0; d];
        for &(i, loss) in &observed {
            if frozen_mask[i] {
                continue;
            }
            let w_i = neighborhood_mass(&self.graph, &freeze.play_dist, i);
            est[i] = loss / (w_i + zeta);
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
                gamma: self.gamma(),
                gamma_prime: self.gamma_prime(),
                beta: self.beta(),
                zeta,
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
