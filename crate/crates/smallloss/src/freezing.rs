//! Freezing rules: zero out arms whose observation probability is too small.
//!
//! Importance-weighted loss estimates blow up exactly when the probability of
//! observing an arm gets tiny. Every learner here protects itself the same
//! way: before each round it *freezes* (refuses to play, and stops estimating)
//! any arm that would be observed with probability below a threshold, then
//! renormalizes the remaining mass. The freezing rules differ by feedback
//! structure:
//!
//! * [`dual_threshold_freeze`] — graph feedback. An initial pass freezes arms
//!   whose whole-neighborhood mass is below `γ`; because freezing removes
//!   mass, a second, lower threshold `γ' = γ/3` is applied repeatedly to the
//!   *surviving* arms (counting only unfrozen mass) until nothing changes.
//!   The gap between `γ` and `γ'` is what makes the recursion terminate with
//!   bounded total frozen mass instead of cascading.
//! * [`play_prob_freeze`] — single-arm feedback. Only the arm's own play
//!   probability matters, so one strict threshold suffices.
//! * [`triple_threshold_freeze`] — graph feedback where the played arm's own
//!   estimate is also importance-weighted per neighborhood. Low-probability
//!   arms are dropped first (`β` on own mass), then the dual-threshold rule
//!   runs on the remainder (`γ` over neighborhoods excluding dropped arms,
//!   `γ/3` propagation).
//! * [`semibandit_freeze`] — combinatorial strategies. Elements and
//!   strategies freeze each other alternately until a fixpoint: an element
//!   freezes when its observation mass over unfrozen strategies drops below
//!   `γ`, and a strategy freezes when it contains a frozen element.
//!
//! All thresholds are strict (`< γ` freezes, `= γ` survives). All returned
//! play distributions are exactly the input with frozen entries zeroed and
//! the rest divided by the surviving mass.

use crate::graph::GraphError;
use crate::types::{Distribution, FeedbackGraph, ValueError, DIST_TOL};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FreezeError {
    /// Every arm (or strategy) froze: the threshold is inconsistent with the
    /// distribution, typically an over-large γ from an under-guessed
    /// independence number.
    #[error("freezing removed all probability mass (threshold {threshold})")]
    AllFrozen { threshold: f64 },
    /// The alternating element/strategy fixpoint failed to settle within the
    /// sweep cap; indicates a logic error rather than a bad input.
    #[error("semi-bandit freezing exceeded {cap} sweeps")]
    SweepCapExceeded { cap: usize },
    #[error("invalid threshold {value}")]
    BadThreshold { value: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Value(#[from] ValueError),
}

// ---------------------------------------------------------------------------
// Result types
// ---------------------------------------------------------------------------

/// Outcome of a graph-mode freeze. The three frozen sets are disjoint and
/// ascending; their union is everything with zero play probability.
#[derive(Debug, Clone, PartialEq)]
pub struct FreezeResult {
    /// Arms frozen on their own play probability (`β` rule; empty unless the
    /// triple-threshold rule ran).
    pub prob_frozen: Vec<usize>,
    /// Arms frozen by the initial neighborhood threshold `γ`.
    pub initial_frozen: Vec<usize>,
    /// Arms frozen during `γ' = γ/3` propagation, in freeze order (level by
    /// level, ascending within a level).
    pub propagation_frozen: Vec<usize>,
    /// Input distribution with frozen arms zeroed and survivors renormalized.
    pub play_dist: Distribution,
    /// Total input probability of frozen arms.
    pub frozen_mass: f64,
    /// Number of propagation sweeps executed (0 when nothing froze beyond the
    /// initial pass).
    pub sweeps: usize,
}

impl FreezeResult {
    /// Frozen indicator over all arms.
    pub fn frozen_mask(&self, d: usize) -> Vec<bool> {
        let mut mask = vec![false; d];
        for &i in self
            .prob_frozen
            .iter()
            .chain(&self.initial_frozen)
            .chain(&self.propagation_frozen)
        {
            mask[i] = true;
        }
        mask
    }

    /// Total number of frozen arms.
    pub fn frozen_count(&self) -> usize {
        self.prob_frozen.len() + self.initial_frozen.len() + self.propagation_frozen.len()
    }
}

/// Outcome of a semi-bandit freeze.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiBanditFreezeResult {
    /// Elements whose observation mass fell below `γ`, ascending.
    pub frozen_elements: Vec<usize>,
    /// Strategies containing a frozen element, ascending.
    pub frozen_strategies: Vec<usize>,
    /// Strategy distribution with frozen strategies zeroed and renormalized.
    pub play_dist: Distribution,
    /// Total input probability of frozen strategies.
    pub frozen_mass: f64,
    /// Final observation mass per element over *unfrozen* strategies, before
    /// renormalization (frozen elements keep their sub-threshold value).
    pub element_observation: Vec<f64>,
    /// Number of alternating sweeps executed.
    pub sweeps: usize,
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn check_threshold(value: f64) -> Result<(), FreezeError> {
    if !(value.is_finite() && value > 0.0 && value < 1.0) {
        return Err(FreezeError::BadThreshold { value });
    }
    Ok(())
}

/// Zero frozen arms and renormalize the rest. `frozen_mass` is returned
/// exactly as summed over frozen entries.
fn renormalize(
    p: &Distribution,
    frozen: &[bool],
    threshold_for_error: f64,
) -> Result<(Distribution, f64), FreezeError> {
    let frozen_mass: f64 = p
        .as_slice()
        .iter()
        .zip(frozen)
        .filter(|(_, &f)| f)
        .map(|(&pi, _)| pi)
        .sum();
    let weights: Vec<f64> = p
        .as_slice()
        .iter()
        .zip(frozen)
        .map(|(&pi, &f)| if f { 0.0 } else { pi })
        .collect();
    let play = Distribution::from_weights(&weights).map_err(|e| match e {
        ValueError::AllZero => FreezeError::AllFrozen {
            threshold: threshold_for_error,
        },
        other => FreezeError::Value(other),
    })?;
    Ok((play, frozen_mass))
}

/// Neighborhood masses including every arm.
fn full_masses(g: &FeedbackGraph, p: &Distribution) -> Vec<f64> {
    let d = g.len();
    let mut mass = vec![0.0; d];
    for i in 0..d {
        let mut m = p.prob(i);
        for &j in g.neighbors(i) {
            m += p.prob(j);
        }
        mass[i] = m;
    }
    mass
}

/// Subtract a newly frozen arm's probability from every closed neighborhood
/// it participates in.
fn remove_arm(g: &FeedbackGraph, p: &Distribution, mass: &mut [f64], arm: usize) {
    mass[arm] -= p.prob(arm);
    for &j in g.neighbors(arm) {
        mass[j] -= p.prob(arm);
    }
}

/// Level-set propagation at threshold `gamma_prime`: repeatedly freeze, as a
/// batch, every unfrozen arm whose unfrozen-neighborhood mass is strictly
/// below the threshold, rebuilding the masses between batches. The final set
/// is order-independent (freezing only lowers other masses, so the rule is a
/// closure operator); batching is just the deterministic schedule.
fn propagate(
    g: &FeedbackGraph,
    p: &Distribution,
    mass: &mut [f64],
    frozen: &mut [bool],
    gamma_prime: f64,
) -> (Vec<usize>, usize) {
    let d = g.len();
    let mut order = Vec::new();
    let mut sweeps = 0;
    loop {
        let level: Vec<usize> = (0..d)
            .filter(|&i| !frozen[i] && mass[i] < gamma_prime)
            .collect();
        if level.is_empty() {
            break;
        }
        sweeps += 1;
        for &i in &level {
            frozen[i] = true;
        }
        for &i in &level {
            remove_arm(g, p, mass, i);
        }
        order.extend(level);
    }
    (order, sweeps)
}

// ---------------------------------------------------------------------------
// Graph-mode freezes
// ---------------------------------------------------------------------------

/// Dual-threshold freeze: initial pass at `gamma` over full neighborhood
/// masses, then `gamma/3` propagation over surviving mass.
pub fn dual_threshold_freeze(
    g: &FeedbackGraph,
    p: &Distribution,
    gamma: f64,
) -> Result<FreezeResult, FreezeError> {
    check_threshold(gamma)?;
    if p.len() != g.len() {
        return Err(ValueError::LengthMismatch {
            left: p.len(),
            right: g.len(),
        }
        .into());
    }
    let d = g.len();
    let gamma_prime = gamma / 3.0;
    let mut mass = full_masses(g, p);
    let mut frozen = vec![false; d];

    let initial: Vec<usize> = (0..d).filter(|&i| mass[i] < gamma).collect();
    for &i in &initial {
        frozen[i] = true;
    }
    for &i in &initial {
        remove_arm(g, p, &mut mass, i);
    }

    let (propagated, sweeps) = propagate(g, p, &mut mass, &mut frozen, gamma_prime);
    let (play_dist, frozen_mass) = renormalize(p, &frozen, gamma)?;
    Ok(FreezeResult {
        prob_frozen: Vec::new(),
        initial_frozen: initial,
        propagation_frozen: propagated,
        play_dist,
        frozen_mass,
        sweeps,
    })
}

/// Single-threshold freeze on own play probability. With `beta < 1/d` the
/// maximum-probability arm always survives, so this cannot freeze everything
/// on a valid distribution.
pub fn play_prob_freeze(p: &Distribution, beta: f64) -> Result<FreezeResult, FreezeError> {
    check_threshold(beta)?;
    let d = p.len();
    let frozen_ids: Vec<usize> = (0..d).filter(|&i| p.prob(i) < beta).collect();
    let mut frozen = vec![false; d];
    for &i in &frozen_ids {
        frozen[i] = true;
    }
    let (play_dist, frozen_mass) = renormalize(p, &frozen, beta)?;
    Ok(FreezeResult {
        prob_frozen: frozen_ids,
        initial_frozen: Vec::new(),
        propagation_frozen: Vec::new(),
        play_dist,
        frozen_mass,
        sweeps: 0,
    })
}

/// Triple-threshold freeze: drop arms with own probability below `beta`,
/// apply the `gamma` rule to neighborhood masses that exclude dropped arms,
/// then propagate at `gamma/3` over surviving mass.
pub fn triple_threshold_freeze(
    g: &FeedbackGraph,
    p: &Distribution,
    beta: f64,
    gamma: f64,
) -> Result<FreezeResult, FreezeError> {
    check_threshold(beta)?;
    check_threshold(gamma)?;
    if p.len() != g.len() {
        return Err(ValueError::LengthMismatch {
            left: p.len(),
            right: g.len(),
        }
        .into());
    }
    let d = g.len();
    let gamma_prime = gamma / 3.0;
    let mut mass = full_masses(g, p);
    let mut frozen = vec![false; d];

    let dropped: Vec<usize> = (0..d).filter(|&i| p.prob(i) < beta).collect();
    for &i in &dropped {
        frozen[i] = true;
    }
    for &i in &dropped {
        remove_arm(g, p, &mut mass, i);
    }

    let initial: Vec<usize> = (0..d).filter(|&i| !frozen[i] && mass[i] < gamma).collect();
    for &i in &initial {
        frozen[i] = true;
    }
    for &i in &initial {
        remove_arm(g, p, &mut mass, i);
    }

    let (propagated, sweeps) = propagate(g, p, &mut mass, &mut frozen, gamma_prime);
    let (play_dist, frozen_mass) = renormalize(p, &frozen, gamma)?;
    Ok(FreezeResult {
        prob_frozen: dropped,
        initial_frozen: initial,
        propagation_frozen: propagated,
        play_dist,
        frozen_mass,
        sweeps,
    })
}

// ---------------------------------------------------------------------------
// Semi-bandit freeze (exact probabilities)
// ---------------------------------------------------------------------------

/// Alternating element/strategy freeze at threshold `gamma`, with exact
/// strategy probabilities.
///
/// `strategies[i]` lists the elements of strategy `i`. Each sweep freezes all
/// elements whose observation mass over unfrozen strategies is strictly below
/// `gamma`, then freezes every strategy containing a frozen element; the loop
/// stops when a sweep freezes nothing new. Since every productive sweep
/// freezes at least one element, `|E|` sweeps suffice; exceeding the cap is
/// reported as an internal error.
pub fn semibandit_freeze(
    strategies: &[Vec<usize>],
    num_elements: usize,
    p: &Distribution,
    gamma: f64,
) -> Result<SemiBanditFreezeResult, FreezeError> {
    check_threshold(gamma)?;
    if p.len() != strategies.len() {
        return Err(ValueError::LengthMismatch {
            left: p.len(),
            right: strategies.len(),
        }
        .into());
    }
    let cap = num_elements + 1;
    let mut elem_frozen = vec![false; num_elements];
    let mut strat_frozen = vec![false; strategies.len()];
    let mut observation = vec![0.0; num_elements];
    let mut sweeps = 0;
    loop {
        if sweeps > cap {
            return Err(FreezeError::SweepCapExceeded { cap });
        }
        sweeps += 1;
        observation.iter_mut().for_each(|o| *o = 0.0);
        for (s, els) in strategies.iter().enumerate() {
            if strat_frozen[s] {
                continue;
            }
            for &e in els {
                observation[e] += p.prob(s);
            }
        }
        let newly: Vec<usize> = (0..num_elements)
            .filter(|&e| !elem_frozen[e] && observation[e] < gamma)
            .collect();
        if newly.is_empty() {
            break;
        }
        for &e in &newly {
            elem_frozen[e] = true;
        }
        for (s, els) in strategies.iter().enumerate() {
            if !strat_frozen[s] && els.iter().any(|&e| elem_frozen[e]) {
                strat_frozen[s] = true;
            }
        }
    }
    let (play_dist, frozen_mass) = renormalize(p, &strat_frozen, gamma)?;
    Ok(SemiBanditFreezeResult {
        frozen_elements: (0..num_elements).filter(|&e| elem_frozen[e]).collect(),
        frozen_strategies: (0..strategies.len()).filter(|&s| strat_frozen[s]).collect(),
        play_dist,
        frozen_mass,
        element_observation: observation,
        sweeps,
    })
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

/// Termination certificate for a graph-mode freeze: every unfrozen arm keeps
/// observation mass ≥ `gamma_prime` over unfrozen arms, the play distribution
/// is the renormalized restriction of `p`, and the frozen mass adds up.
/// Returns a description of the first violation, if any.
pub fn verify_graph_freeze(
    g: &FeedbackGraph,
    p: &Distribution,
    result: &FreezeResult,
    gamma_prime: f64,
) -> Result<(), String> {
    let d = g.len();
    let mask = result.frozen_mask(d);
    let mut frozen_mass = 0.0;
    for i in 0..d {
        if mask[i] {
            frozen_mass += p.prob(i);
        }
    }
    if (frozen_mass - result.frozen_mass).abs() > DIST_TOL {
        return Err(format!(
            "frozen mass mismatch: recomputed {frozen_mass}, recorded {}",
            result.frozen_mass
        ));
    }
    if frozen_mass >= 1.0 {
        return Err("frozen mass swallowed the whole distribution".into());
    }
    let surviving = 1.0 - frozen_mass;
    for i in 0..d {
        let w = result.play_dist.prob(i);
        if mask[i] {
            if w != 0.0 {
                return Err(format!("frozen arm {i} keeps play probability {w}"));
            }
            continue;
        }
        let expected = p.prob(i) / surviving;
        if (w - expected).abs() > DIST_TOL {
            return Err(format!(
                "arm {i}: play probability {w} differs from renormalized {expected}"
            ));
        }
        let mut mass = p.prob(i);
        for &j in g.neighbors(i) {
            if !mask[j] {
                mass += p.prob(j);
            }
        }
        if mass < gamma_prime {
            return Err(format!(
                "arm {i}: unfrozen observation mass {mass} below certificate threshold {gamma_prime}"
            ));
        }
    }
    if result.sweeps > d {
        return Err(format!(
            "propagation took {} sweeps on {d} arms",
            result.sweeps
        ));
    }
    Ok(())
}

/// Termination certificate for a semi-bandit freeze: every unfrozen element
/// keeps observation mass ≥ `gamma` over unfrozen strategies, and frozen
/// strategies are exactly those containing frozen elements.
pub fn verify_semibandit_freeze(
    strategies: &[Vec<usize>],
    p: &Distribution,
    result: &SemiBanditFreezeResult,
    gamma: f64,
) -> Result<(), String> {
    let num_elements = result.element_observation.len();
    let mut elem_frozen = vec![false; num_elements];
    for &e in &result.frozen_elements {
        elem_frozen[e] = true;
    }
    let mut strat_frozen = vec![false; strategies.len()];
    for &s in &result.frozen_strategies {
        strat_frozen[s] = true;
    }
    for (s, els) in strategies.iter().enumerate() {
        let contains_frozen = els.iter().any(|&e| elem_frozen[e]);
        if contains_frozen != strat_frozen[s] {
            return Err(format!(
                "strategy {s}: frozen flag {} inconsistent with elements",
                strat_frozen[s]
            ));
        }
    }
    let mut observation = vec![0.0; num_elements];
    for (s, els) in strategies.iter().enumerate() {
        if strat_frozen[s] {
            continue;
        }
        for &e in els {
            observation[e] += p.prob(s);
        }
    }
    for e in 0..num_elements {
        if !elem_frozen[e] && observation[e] < gamma {
            return Err(format!(
                "element {e}: observation mass {} below {gamma}",
                observation[e]
            ));
        }
        if (observation[e] - result.element_observation[e]).abs() > DIST_TOL {
            return Err(format!(
                "element {e}: recorded observation {} differs from recomputed {}",
                result.element_observation[e], observation[e]
            ));
        }
    }
    let mut frozen_mass = 0.0;
    for (s, &f) in strat_frozen.iter().enumerate() {
        if f {
            frozen_mass += p.prob(s);
        }
    }
    if (frozen_mass - result.frozen_mass).abs() > DIST_TOL {
        return Err(format!(
            "frozen strategy mass mismatch: {frozen_mass} vs {}",
            result.frozen_mass
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi, exact_independence_number};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn path(n: usize) -> FeedbackGraph {
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        FeedbackGraph::from_edges(n, &edges).unwrap()
    }

    fn dist(p: &[f64]) -> Distribution {
        Distribution::from_weights(p).unwrap()
    }

    #[test]
    fn dual_threshold_initial_only() {
        // Path 0-1-2-3, p = (0.01, 0.02, 0.47, 0.50), γ = 0.1:
        // neighborhood masses (0.03, 0.50, 0.99, 0.97) -> only arm 0 freezes;
        // survivors all keep mass ≥ γ' = 1/30, so no propagation.
        let g = path(4);
        let p = dist(&[0.01, 0.02, 0.47, 0.5]);
        let r = dual_threshold_freeze(&g, &p, 0.1).unwrap();
        assert_eq!(r.initial_frozen, vec![0]);
        assert!(r.propagation_frozen.is_empty());
        assert!((r.frozen_mass - 0.01).abs() < 1e-12);
        assert!((r.play_dist.prob(0) - 0.0).abs() < 1e-12);
        assert!((r.play_dist.prob(1) - 0.02 / 0.99).abs() < 1e-12);
        assert!((r.play_dist.prob(3) - 0.50 / 0.99).abs() < 1e-12);
        verify_graph_freeze(&g, &p, &r, 0.1 / 3.0).unwrap();
    }

    #[test]
    fn dual_threshold_propagates_once() {
        // Path 0-1-2-3, p = (0.09, 0.02, 0.01, 0.88), γ = 0.12:
        // full masses (0.11, 0.12, 0.91, 0.89). Arm 0 freezes initially;
        // arm 1 survives the strict initial test (0.12 is not < 0.12) but its
        // surviving mass 0.03 falls below γ' = 0.04 and it freezes in the
        // first propagation sweep. Arms 2, 3 keep mass 0.89.
        let g = path(4);
        let p = dist(&[0.09, 0.02, 0.01, 0.88]);
        let r = dual_threshold_freeze(&g, &p, 0.12).unwrap();
        assert_eq!(r.initial_frozen, vec![0]);
        assert_eq!(r.propagation_frozen, vec![1]);
        assert_eq!(r.sweeps, 1);
        assert!((r.frozen_mass - 0.11).abs() < 1e-12);
        assert!((r.play_dist.prob(2) - 0.01 / 0.89).abs() < 1e-12);
        verify_graph_freeze(&g, &p, &r, 0.04).unwrap();
    }

    #[test]
    fn dual_threshold_boundary_is_strict() {
        // Exactly-at-threshold masses survive: bandit graph, uniform over 4,
        // γ = 0.25 -> every arm's mass equals γ, nothing freezes.
        let g = FeedbackGraph::empty(4);
        let p = Distribution::uniform(4);
        let r = dual_threshold_freeze(&g, &p, 0.25).unwrap();
        assert_eq!(r.frozen_count(), 0);
        assert_eq!(r.frozen_mass, 0.0);
    }

    #[test]
    fn dual_threshold_all_frozen_is_an_error() {
        let g = FeedbackGraph::empty(3);
        let p = Distribution::uniform(3);
        // γ far above every arm's own mass freezes everything.
        assert!(matches!(
            dual_threshold_freeze(&g, &p, 0.9),
            Err(FreezeError::AllFrozen { .. })
        ));
    }

    #[test]
    fn play_prob_freeze_single_threshold() {
        let p = dist(&[0.05, 0.15, 0.80]);
        let r = play_prob_freeze(&p, 0.1).unwrap();
        assert_eq!(r.prob_frozen, vec![0]);
        assert!((r.frozen_mass - 0.05).abs() < 1e-12);
        assert!((r.play_dist.prob(1) - 0.15 / 0.95).abs() < 1e-12);
        assert!((r.play_dist.prob(2) - 0.80 / 0.95).abs() < 1e-12);
    }

    #[test]
    fn triple_threshold_excludes_dropped_arms_from_masses() {
        // Path 0-1-2-3, p = (0.04, 0.06, 0.10, 0.80), β = 0.05, γ = 0.2.
        // Arm 0 drops on own probability. Arm 1's γ-mass then counts only
        // {1, 2}: 0.16 < 0.2 -> initial freeze. Arm 2 survives the γ test
        // (mass over {2, 3} = 0.90) and propagation leaves it alone.
        let g = path(4);
        let p = dist(&[0.04, 0.06, 0.10, 0.80]);
        let r = triple_threshold_freeze(&g, &p, 0.05, 0.2).unwrap();
        assert_eq!(r.prob_frozen, vec![0]);
        assert_eq!(r.initial_frozen, vec![1]);
        assert!(r.propagation_frozen.is_empty());
        assert!((r.frozen_mass - 0.10).abs() < 1e-12);
        verify_graph_freeze(&g, &p, &r, 0.2 / 3.0).unwrap();
    }

    #[test]
    fn semibandit_no_freeze_keeps_observation() {
        // Two disjoint 2-element strategies, mass (0.5, 0.5), γ = 0.1:
        // every element observed with mass 0.5, nothing freezes.
        let strategies = vec![vec![0, 1], vec![2, 3]];
        let p = dist(&[0.5, 0.5]);
        let r = semibandit_freeze(&strategies, 4, &p, 0.1).unwrap();
        assert!(r.frozen_elements.is_empty());
        assert!(r.frozen_strategies.is_empty());
        assert_eq!(r.frozen_mass, 0.0);
        for e in 0..4 {
            assert!((r.element_observation[e] - 0.5).abs() < 1e-12);
        }
        verify_semibandit_freeze(&strategies, &p, &r, 0.1).unwrap();
    }

    #[test]
    fn semibandit_cascade_freezes_shared_elements() {
        // Strategies {0,1}, {1,2}, {3}: p = (0.05, 0.05, 0.90), γ = 0.15.
        // Element 0 has mass 0.05 < γ and element 2 has 0.05 < γ; both
        // freeze, taking strategies 0 and 1 with them; element 1 loses all
        // support and freezes in the second sweep. Strategy 2 survives.
        let strategies = vec![vec![0, 1], vec![1, 2], vec![3]];
        let p = dist(&[0.05, 0.05, 0.90]);
        let r = semibandit_freeze(&strategies, 4, &p, 0.15).unwrap();
        assert_eq!(r.frozen_elements, vec![0, 1, 2]);
        assert_eq!(r.frozen_strategies, vec![0, 1]);
        assert!((r.frozen_mass - 0.10).abs() < 1e-12);
        assert!((r.play_dist.prob(2) - 1.0).abs() < 1e-12);
        verify_semibandit_freeze(&strategies, &p, &r, 0.15).unwrap();
    }

    #[test]
    fn semibandit_all_frozen_is_an_error() {
        let strategies = vec![vec![0], vec![1]];
        let p = dist(&[0.5, 0.5]);
        assert!(matches!(
            semibandit_freeze(&strategies, 2, &p, 0.75),
            Err(FreezeError::AllFrozen { .. })
        ));
    }

    // -- Fixed-point equivalence against a sequential brute force ----------

    /// Freeze one arm at a time in an arbitrary order: from the initial γ
    /// pass, repeatedly pick any unfrozen arm with surviving mass < γ' and
    /// freeze it alone. The closure is order-independent, so every order must
    /// land on the implementation's batch answer.
    fn bruteforce_dual(
        g: &FeedbackGraph,
        p: &Distribution,
        gamma: f64,
        order_rng: &mut impl Rng,
    ) -> Vec<bool> {
        let d = g.len();
        let gamma_prime = gamma / 3.0;
        let mut frozen = vec![false; d];
        let full = full_masses(g, p);
        for i in 0..d {
            if full[i] < gamma {
                frozen[i] = true;
            }
        }
        loop {
            let mut candidates: Vec<usize> = (0..d)
                .filter(|&i| {
                    if frozen[i] {
                        return false;
                    }
                    let mut m = p.prob(i);
                    for &j in g.neighbors(i) {
                        if !frozen[j] {
                            m += p.prob(j);
                        }
                    }
                    m < gamma_prime
                })
                .collect();
            if candidates.is_empty() {
                return frozen;
            }
            let pick = candidates.remove(order_rng.gen_range(0..candidates.len()));
            frozen[pick] = true;
        }
    }

    #[test]
    fn dual_threshold_matches_sequential_fixpoint() {
        let mut rng = ChaCha12Rng::seed_from_u64(0xF1F0);
        for trial in 0..100 {
            let n = 4 + trial % 9;
            let g = erdos_renyi(n, 0.35, &mut rng);
            let weights: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powi(3) + 1e-6).collect();
            let p = Distribution::from_weights(&weights).unwrap();
            let gamma = 0.05 + rng.gen::<f64>() * 0.3;
            match dual_threshold_freeze(&g, &p, gamma) {
                Ok(r) => {
                    let batch = r.frozen_mask(n);
                    for _ in 0..100 {
                        let seq = bruteforce_dual(&g, &p, gamma, &mut rng);
                        assert_eq!(batch, seq, "trial {trial} diverged");
                    }
                    verify_graph_freeze(&g, &p, &r, gamma / 3.0).unwrap();
                }
                Err(FreezeError::AllFrozen { .. }) => {
                    // Brute force must agree that everything freezes.
                    let seq = bruteforce_dual(&g, &p, gamma, &mut rng);
                    assert!(seq.iter().all(|&f| f), "trial {trial}: spurious AllFrozen");
                }
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
    }

    // -- Mass bounds --------------------------------------------------------

    #[test]
    fn frozen_mass_bounds_hold_with_exact_alpha() {
        // With γ = ε'/(4α): initial mass ≤ αγ, propagation ≤ 3× initial,
        // total ≤ 4αγ = ε'.
        let mut rng = ChaCha12Rng::seed_from_u64(0x5EED);
        for trial in 0..500 {
            let n = 4 + trial % 14;
            let g = erdos_renyi(n, 0.15 + 0.05 * (trial % 8) as f64, &mut rng);
            let alpha = exact_independence_number(&g).unwrap() as f64;
            let eps_prime = [0.1, 0.3, 0.5][trial % 3];
            let gamma = eps_prime / (4.0 * alpha);
            let weights: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
            let p = Distribution::from_weights(&weights).unwrap();
            let r = match dual_threshold_freeze(&g, &p, gamma) {
                Ok(r) => r,
                Err(e) => panic!("trial {trial}: freeze failed: {e}"),
            };
            let initial_mass: f64 = r.initial_frozen.iter().map(|&i| p.prob(i)).sum();
            let prop_mass: f64 = r.propagation_frozen.iter().map(|&i| p.prob(i)).sum();
            assert!(
                initial_mass <= alpha * gamma + 1e-12,
                "trial {trial}: initial mass {initial_mass} > αγ"
            );
            assert!(
                prop_mass <= 3.0 * initial_mass + 1e-12,
                "trial {trial}: propagation mass {prop_mass} > 3× initial {initial_mass}"
            );
            assert!(
                r.frozen_mass <= eps_prime + 1e-12,
                "trial {trial}: total frozen mass {} > ε' = {eps_prime}",
                r.frozen_mass
            );
        }
    }

    #[test]
    fn semibandit_frozen_mass_bound() {
        // With γ = ε'/|E|, total frozen strategy mass stays ≤ ε'.
        let mut rng = ChaCha12Rng::seed_from_u64(0xE1E);
        for trial in 0..500 {
            let num_elements = 4 + trial % 6;
            let num_strategies = 3 + trial % 5;
            let strategies: Vec<Vec<usize>> = (0..num_strategies)
                .map(|_| {
                    let size = 1 + rng.gen_range(0..3);
                    let mut els: Vec<usize> =
                        (0..size).map(|_| rng.gen_range(0..num_elements)).collect();
                    els.sort_unstable();
                    els.dedup();
                    els
                })
                .collect();
            let weights: Vec<f64> = (0..num_strategies)
                .map(|_| -rng.gen::<f64>().max(1e-12).ln())
                .collect();
            let p = Distribution::from_weights(&weights).unwrap();
            let eps_prime = [0.1, 0.3, 0.5][trial % 3];
            let gamma = eps_prime / num_elements as f64;
            match semibandit_freeze(&strategies, num_elements, &p, gamma) {
                Ok(r) => {
                    assert!(
                        r.frozen_mass <= eps_prime + 1e-12,
                        "trial {trial}: frozen mass {} > ε' {eps_prime}",
                        r.frozen_mass
                    );
                    verify_semibandit_freeze(&strategies, &p, &r, gamma).unwrap();
                }
                Err(FreezeError::AllFrozen { .. }) => {
                    panic!("trial {trial}: mass bound precludes freezing everything")
                }
                Err(e) => panic!("trial {trial}: {e}"),
            }
        }
    }

    #[test]
    fn triple_threshold_mass_bound_on_clique_unions() {
        // β = ε'/d, γ = ε'/κ on a κ-clique union: dropped mass ≤ dβ = ε',
        // γ-mass ≤ 4αγ ≤ 4ε', total ≤ 5ε'.
        let mut rng = ChaCha12Rng::seed_from_u64(0xC11);
        for trial in 0..300 {
            let kappa = 2 + trial % 4;
            let size = 2 + trial % 3;
            let sizes = vec![size; kappa];
            let g = FeedbackGraph::clique_union(&sizes);
            let d = g.len();
            let weights: Vec<f64> = (0..d).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
            let p = Distribution::from_weights(&weights).unwrap();
            let eps_prime = [0.1, 0.3, 0.5][trial % 3];
            let beta = eps_prime / d as f64;
            let gamma = eps_prime / kappa as f64;
            match triple_threshold_freeze(&g, &p, beta, gamma) {
                Ok(r) => {
                    assert!(
                        r.frozen_mass <= 5.0 * eps_prime + 1e-12,
                        "trial {trial}: frozen mass {} > 5ε'",
                        r.frozen_mass
                    );
                    verify_graph_freeze(&g, &p, &r, gamma / 3.0).unwrap();
                }
                Err(FreezeError::AllFrozen { .. }) => {
                    panic!("trial {trial}: unexpected AllFrozen at ε' = {eps_prime}")
                }
                Err(e) => panic!("trial {trial}: {e}"),
            }
        }
    }
}
