//! Comparison baseline: Hedge with uniform mixing and importance sampling.
//!
//! The classical worst-case bandit recipe, with no freezing and no
//! small-loss adaptivity: mix the multiplicative-weights distribution with a
//! uniform exploration floor,
//!
//! ```text
//! p = (1 − π)·q + π/d,      π = min(1/2, √(d·ln d / ((e−1)·T))),
//! ```
//!
//! play from `p`, and feed the engine the importance-sampled estimate
//! `ℓ̃_I = ℓ_I / p_I` (zero elsewhere), with the classical coupled learning
//! rate `η = π/d`. This is the standard exponential-weights bandit tuning:
//! its regret scales with `√(d·T·ln d)` whatever the realized best loss is —
//! exactly the behavior the freezing learners are supposed to beat when the
//! best arm is good.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::engines::HedgeState;
use crate::types::{Distribution, EstimatedLossVector, RoundParams, RoundRecord};

use super::{check_revealed, FeedbackFn, LearnerError, OnlineLearner};

/// Configuration for [`BaselineLearner`].
#[derive(Debug, Clone, Copy)]
pub struct BaselineConfig {
    /// Horizon T the square-root tuning is computed for.
    pub horizon: u64,
}

/// Uniform-mixing importance-sampling bandit learner.
#[derive(Debug, Clone)]
pub struct BaselineLearner {
    d: usize,
    mix: f64,
    engine: HedgeState,
}

impl BaselineLearner {
    pub fn new(d: usize, config: &BaselineConfig) -> Result<Self, LearnerError> {
        if d == 0 {
            return Err(LearnerError::BadParameter {
                name: "num_arms",
                value: 0.0,
            });
        }
        if config.horizon == 0 {
            return Err(LearnerError::BadParameter {
                name: "horizon",
                value: 0.0,
            });
        }
        let df = d as f64;
        let t = config.horizon as f64;
        let ln_d = df.ln().max(1.0);
        let mix = (df * ln_d / ((std::f64::consts::E - 1.0) * t)).sqrt().min(0.5);
        let eta = mix / df;
        Ok(Self {
            d,
            mix,
            engine: HedgeState::new(d, eta),
        })
    }

    /// Uniform exploration mass π.
    pub fn mix(&self) -> f64 {
        self.mix
    }

    /// Engine learning rate.
    pub fn eta(&self) -> f64 {
        self.engine.eta()
    }
}

impl OnlineLearner for BaselineLearner {
    fn step(
        &mut self,
        t: u64,
        rng: &mut ChaCha12Rng,
        feedback: &mut FeedbackFn<'_>,
    ) -> Result<RoundRecord, LearnerError> {
        let base = self.engine.distribution();
        let uniform = 1.0 / self.d as f64;
        let mixed: Vec<f64> = base
            .as_slice()
            .iter()
            .map(|&q| (1.0 - self.mix) * q + self.mix * uniform)
            .collect();
        let play = Distribution::from_weights(&mixed)?;

        let arm = play.sample(rng.gen::<f64>());
        let observed = feedback(t, arm)?;
        let true_loss = check_revealed(t, arm, &observed, &[arm])?;

        // p_I ≥ π/d, so estimates are capped at d/π.
        let cap = self.d as f64 / self.mix;
        let mut est = vec![0.0; self.d];
        est[arm] = true_loss / play.prob(arm);
        let estimated = EstimatedLossVector::new(est, cap)?;
        self.engine.update(estimated.as_slice())?;

        Ok(RoundRecord {
            t,
            played: arm,
            true_loss,
            estimated,
            frozen: Vec::new(),
            frozen_mass: 0.0,
            play_dist: play,
            base_dist: base,
            params: RoundParams {
                gamma: 0.0,
                gamma_prime: 0.0,
                beta: 0.0,
                zeta: 0.0,
                eta: self.engine.eta(),
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
