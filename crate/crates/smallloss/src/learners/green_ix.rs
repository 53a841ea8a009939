//! Bandit learner: play-probability freezing plus implicit exploration.
//!
//! With bandit feedback the only observation mass an arm has is its own play
//! probability, so freezing collapses to a single threshold: arms with
//! `p_i < γ = ε′/d` are dropped and the rest renormalized. The played arm's
//! loss is estimated with an implicit-exploration denominator,
//!
//! ```text
//! ℓ̃_I = ℓ_I / (w_I + ζ),      ζ = η = ε′ / (2d),
//! ```
//!
//! and every other estimate is zero. The ζ shift biases estimates *downward*
//! (never above the true loss in conditional expectation), which is what
//! makes the high-probability argument go through, and it caps every
//! estimate at `1/ζ = 2d/ε′` outright. Freezing guarantees the played arm
//! also has `w_I ≥ γ`, so the variance of the estimate stays bounded without
//! any uniform exploration term.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::engines::HedgeState;
use crate::freezing::play_prob_freeze;
use crate::types::{EstimatedLossVector, RoundParams, RoundRecord};

use super::{check_eps, check_revealed, mask_to_ids, FeedbackFn, LearnerError, OnlineLearner};

/// Configuration for [`GreenIxLearner`].
#[derive(Debug, Clone, Copy)]
pub struct GreenIxConfig {
    /// User accuracy target ε ∈ (0, 1]; the learner runs at ε′ = ε/2.
    pub eps: f64,
}

/// Bandit learner with play-probability freezing and implicit exploration.
#[derive(Debug, Clone)]
pub struct GreenIxLearner {
    d: usize,
    eps_prime: f64,
    engine: HedgeState,
}

impl GreenIxLearner {
    /// The internal slack is ε′ = ε / this.
    pub const EPS_PRIME_DIVISOR: f64 = 2.0;

    pub fn new(d: usize, config: &GreenIxConfig) -> Result<Self, LearnerError> {
        check_eps(config.eps)?;
        if d == 0 {
            return Err(LearnerError::BadParameter {
                name: "num_arms",
                value: 0.0,
            });
        }
        let eps_prime = config.eps / Self::EPS_PRIME_DIVISOR;
        let eta = eps_prime / (2.0 * d as f64);
        Ok(Self {
            d,
            eps_prime,
            engine: HedgeState::new(d, eta),
        })
    }

    /// Freezing threshold γ = ε′/d.
    pub fn gamma(&self) -> f64 {
        self.eps_prime / self.d as f64
    }

    /// Implicit-exploration shift ζ = ε′/(2d).
    pub fn zeta(&self) -> f64 {
        self.eps_prime / (2.0 * self.d as f64)
    }

    /// Engine learning rate η (= ζ).
    pub fn eta(&self) -> f64 {
        self.zeta()
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    #[cfg(test)]
    pub(crate) fn engine_mut(&mut self) -> &mut HedgeState {
        &mut self.engine
    }
}

impl OnlineLearner for GreenIxLearner {
    fn step(
        &mut self,
        t: u64,
        rng: &mut ChaCha12Rng,
        feedback: &mut FeedbackFn<'_>,
    ) -> Result<RoundRecord, LearnerError> {
        let base = self.engine.distribution();
        let freeze = play_prob_freeze(&base, self.gamma())?;

        let arm = freeze.play_dist.sample(rng.gen::<f64>());
        let observed = feedback(t, arm)?;
        // Bandit feedback: exactly the played arm comes back.
        let true_loss = check_revealed(t, arm, &observed, &[arm])?;

        let zeta = self.zeta();
        let mut est = vec![0.0; self.d];
        est[arm] = true_loss / (freeze.play_dist.prob(arm) + zeta);
        let estimated = EstimatedLossVector::new(est, 1.0 / zeta)?;
        self.engine.update(estimated.as_slice())?;

        let frozen_mask = freeze.frozen_mask(self.d);
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
                gamma_prime: 0.0,
                beta: 0.0,
                zeta,
                eta: self.eta(),
            },
            observation_estimates: None,
            samples_per_sweep: None,
        })
    }

    fn num_actions(&self) -> usize {
        self.d
    }

    fn max_round_loss(&self) -> f64 {
        1.0
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
