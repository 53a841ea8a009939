//! Full-information engines.
//!
//! These are the inner no-regret algorithms the partial-information
//! reductions wrap. They only ever see *estimated* loss vectors:
//!
//! * [`HedgeState`] — multiplicative weights, `p_i ∝ exp(−η · cum_i)`,
//!   computed with min-subtraction so overflow cannot occur no matter how
//!   large cumulative estimated losses grow.
//! * [`NoisyHedgeState`] — Hedge mixed with a uniform floor,
//!   `(1−ν)·hedge + ν/d`. The floor keeps every arm's weight from collapsing
//!   so the distribution can recover quickly after the best arm shifts;
//!   that is what gives shifting-comparator guarantees.
//! * [`FplState`] — follow the perturbed leader over combinatorial
//!   strategies: per draw, subtract fresh truncated-exponential
//!   perturbations from cumulative element scores and ask a min-cost oracle
//!   for the best feasible strategy.

use crate::types::Distribution;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("negative loss {value} at index {index}")]
    NegativeLoss { index: usize, value: f64 },
    #[error("non-finite loss at index {index}")]
    NonFinite { index: usize },
    #[error("loss vector length {got}, engine expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no feasible strategy avoids the forbidden elements")]
    NoFeasibleStrategy,
}

fn check_losses(expected: usize, losses: &[f64]) -> Result<(), EngineError> {
    if losses.len() != expected {
        return Err(EngineError::LengthMismatch {
            expected,
            got: losses.len(),
        });
    }
    for (i, &l) in losses.iter().enumerate() {
        if !l.is_finite() {
            return Err(EngineError::NonFinite { index: i });
        }
        if l < 0.0 {
            return Err(EngineError::NegativeLoss { index: i, value: l });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Hedge
// ---------------------------------------------------------------------------

/// Multiplicative-weights state over `d` arms.
#[derive(Debug, Clone)]
pub struct HedgeState {
    eta: f64,
    cum: Vec<f64>,
}

impl HedgeState {
    /// Fresh state: uniform play, zero cumulative loss.
    pub fn new(d: usize, eta: f64) -> Self {
        assert!(d > 0, "engine needs at least one arm");
        assert!(eta > 0.0 && eta.is_finite(), "eta must be positive");
        Self {
            eta,
            cum: vec![0.0; d],
        }
    }

    pub fn len(&self) -> usize {
        self.cum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cum.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Cumulative estimated loss per arm since the last reset.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    /// Current distribution `p_i ∝ exp(−η(cum_i − min_j cum_j))`.
    ///
    /// Subtracting the minimum keeps every exponent in `[−η·range, 0]`, so
    /// the weights stay in `(0, 1]` and normalization is exact; the result is
    /// identical (to rounding) to the unshifted definition.
    pub fn distribution(&self) -> Distribution {
        let min = self.cum.iter().cloned().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = self
            .cum
            .iter()
            .map(|&c| (-self.eta * (c - min)).exp())
            .collect();
        Distribution::from_weights(&weights).expect("hedge weights are positive")
    }

    /// Accumulate one round of non-negative estimated losses.
    pub fn update(&mut self, losses: &[f64]) -> Result<(), EngineError> {
        check_losses(self.cum.len(), losses)?;
        for (c, &l) in self.cum.iter_mut().zip(losses) {
            *c += l;
        }
        Ok(())
    }

    /// Clear cumulative losses (used at phase restarts).
    pub fn reset(&mut self) {
        self.cum.iter_mut().for_each(|c| *c = 0.0);
    }
}

// ---------------------------------------------------------------------------
// Noisy Hedge
// ---------------------------------------------------------------------------

/// Hedge with a uniform exploration floor of total mass `noise`.
#[derive(Debug, Clone)]
pub struct NoisyHedgeState {
    inner: HedgeState,
    noise: f64,
}

/// Default noise floor when no horizon is known: `2^-20`.
pub const DEFAULT_NOISE_FLOOR: f64 = 1.0 / (1u64 << 20) as f64;

impl NoisyHedgeState {
    pub fn new(d: usize, eta: f64, noise: f64) -> Self {
        assert!((0.0..1.0).contains(&noise), "noise must be in [0, 1)");
        Self {
            inner: HedgeState::new(d, eta),
            noise,
        }
    }

    /// Noise floor `1/T` for a known horizon, the usual choice when the
    /// comparator may switch arms.
    pub fn for_horizon(d: usize, eta: f64, horizon: usize) -> Self {
        let noise = if horizon > 0 {
            1.0 / horizon as f64
        } else {
            DEFAULT_NOISE_FLOOR
        };
        Self::new(d, eta, noise)
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn eta(&self) -> f64 {
        self.inner.eta()
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    /// `(1−ν)·hedge + ν·uniform`.
    pub fn distribution(&self) -> Distribution {
        let base = self.inner.distribution();
        let d = base.len();
        let floor = self.noise / d as f64;
        let mixed: Vec<f64> = base
            .as_slice()
            .iter()
            .map(|&p| (1.0 - self.noise) * p + floor)
            .collect();
        Distribution::from_weights(&mixed).expect("mixed weights are positive")
    }

    pub fn update(&mut self, losses: &[f64]) -> Result<(), EngineError> {
        self.inner.update(losses)
    }

    pub fn reset(&mut self) {
        self.inner.reset();
    }
}

// ---------------------------------------------------------------------------
// Follow the perturbed leader
// ---------------------------------------------------------------------------

/// Oracle for minimizing a per-element score sum over a strategy family.
///
/// Implementations must be deterministic: equal scores and forbidden sets
/// yield the same strategy (break ties toward the lower strategy id).
pub trait MinCostOracle {
    /// Number of ground elements.
    fn num_elements(&self) -> usize;
    /// Number of strategies in the family.
    fn num_strategies(&self) -> usize;
    /// Maximum strategy size `m`.
    fn strategy_size(&self) -> usize;
    /// Elements of one strategy, ascending.
    fn elements_of(&self, strategy: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.elements_into(strategy, &mut out);
        out
    }
    /// [`elements_of`](Self::elements_of) appending into a caller-owned
    /// buffer (cleared first), for sampling loops.
    fn elements_into(&self, strategy: usize, out: &mut Vec<usize>);
    /// Strategy minimizing `Σ_{e ∈ f} scores[e]` among strategies containing
    /// no forbidden element, or `None` when no strategy is feasible.
    fn min_cost(&self, scores: &[f64], forbidden: &[bool]) -> Option<usize>;
}

/// A small explicitly-enumerated strategy family; the reference oracle for
/// tests and for instances with few strategies.
#[derive(Debug, Clone)]
pub struct ExplicitStrategies {
    num_elements: usize,
    strategies: Vec<Vec<usize>>,
}

impl ExplicitStrategies {
    pub fn new(num_elements: usize, strategies: Vec<Vec<usize>>) -> Self {
        assert!(!strategies.is_empty(), "need at least one strategy");
        for s in &strategies {
            assert!(s.iter().all(|&e| e < num_elements), "element out of range");
        }
        Self {
            num_elements,
            strategies,
        }
    }
}

impl MinCostOracle for ExplicitStrategies {
    fn num_elements(&self) -> usize {
        self.num_elements
    }

    fn num_strategies(&self) -> usize {
        self.strategies.len()
    }

    fn strategy_size(&self) -> usize {
        self.strategies.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn elements_of(&self, strategy: usize) -> Vec<usize> {
        self.strategies[strategy].clone()
    }

    fn elements_into(&self, strategy: usize, out: &mut Vec<usize>) {
        out.clear();
        out.extend_from_slice(&self.strategies[strategy]);
    }

    fn min_cost(&self, scores: &[f64], forbidden: &[bool]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        'strategies: for (id, els) in self.strategies.iter().enumerate() {
            let mut total = 0.0;
            for &e in els {
                if forbidden[e] {
                    continue 'strategies;
                }
                total += scores[e];
            }
            match best {
                Some((_, b)) if total >= b => {}
                _ => best = Some((id, total)),
            }
        }
        best.map(|(id, _)| id)
    }
}

/// Follow-the-perturbed-leader state over ground elements.
#[derive(Debug, Clone)]
pub struct FplState {
    eta: f64,
    trunc: f64,
    cum: Vec<f64>,
}

/// Truncation level `B = ln(d·T/m)/η` for `d` elements, horizon `T`, and
/// strategy size `m`: high enough that a truncation event is rare over the
/// whole run, low enough to keep perturbed scores within a known range.
pub fn fpl_truncation(num_elements: usize, horizon: usize, m: usize, eta: f64) -> f64 {
    let ratio = (num_elements.max(1) as f64 * horizon.max(1) as f64 / m.max(1) as f64).max(2.0);
    ratio.ln() / eta
}

impl FplState {
    pub fn new(num_elements: usize, eta: f64, trunc: f64) -> Self {
        assert!(num_elements > 0, "need at least one element");
        assert!(eta > 0.0 && eta.is_finite(), "eta must be positive");
        assert!(trunc > 0.0, "truncation level must be positive");
        Self {
            eta,
            trunc,
            cum: vec![0.0; num_elements],
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn trunc(&self) -> f64 {
        self.trunc
    }

    pub fn num_elements(&self) -> usize {
        self.cum.len()
    }

    /// Cumulative estimated element losses since the last reset.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    /// One perturbed-leader draw.
    ///
    /// Fresh i.i.d. truncated exponential perturbations
    /// `Z_e = min(Exp(1)/η, trunc)` are drawn for every element and
    /// *subtracted* from the cumulative scores (optimism), then the oracle
    /// minimizes over strategies avoiding `forbidden`.
    pub fn draw<R: Rng, O: MinCostOracle + ?Sized>(
        &self,
        oracle: &O,
        forbidden: &[bool],
        rng: &mut R,
    ) -> Result<usize, EngineError> {
        let mut scores = vec![0.0; self.cum.len()];
        self.draw_with(oracle, forbidden, rng, &mut scores)
    }

    /// [`draw`](Self::draw) writing perturbed scores into a caller-owned
    /// buffer, for sampling loops that draw many times per round.
    pub fn draw_with<R: Rng, O: MinCostOracle + ?Sized>(
        &self,
        oracle: &O,
        forbidden: &[bool],
        rng: &mut R,
        scores: &mut Vec<f64>,
    ) -> Result<usize, EngineError> {
        debug_assert_eq!(forbidden.len(), self.cum.len());
        scores.clear();
        scores.extend(self.cum.iter().map(|&c| {
            let u: f64 = rng.gen();
            let z = (-(1.0 - u).ln() / self.eta).min(self.trunc);
            c - z
        }));
        oracle
            .min_cost(scores, forbidden)
            .ok_or(EngineError::NoFeasibleStrategy)
    }

    /// Accumulate one round of non-negative estimated element losses.
    pub fn update(&mut self, losses: &[f64]) -> Result<(), EngineError> {
        check_losses(self.cum.len(), losses)?;
        for (c, &l) in self.cum.iter_mut().zip(losses) {
            *c += l;
        }
        Ok(())
    }

    pub fn reset(&mut self) {
        self.cum.iter_mut().for_each(|c| *c = 0.0);
    }
}
