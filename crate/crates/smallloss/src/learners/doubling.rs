//! Guess-and-double wrapper over fixed-ε learners.
//!
//! A fixed-ε learner pays roughly `ε·L* + Ψ/ε^q` against a comparator with
//! realized loss `L*`. Since `L*` is unknown upfront, the wrapper runs
//! phases τ = 0, 1, 2, … with ε_τ = 2^{−τ}, restarting a fresh inner learner
//! each phase, and advances as soon as the phase's realized loss `L̂_τ`
//! trips the balance condition
//!
//! ```text
//! ε_τ · L̂_τ > Ψ / ε_τ^q.
//! ```
//!
//! The condition is checked after every round; the round that trips it still
//! belongs to the phase it ran in. Each phase's budget doubles in the
//! `ε·L̂` term while ε halves, so the number of phases on any trace is at
//! most `log2(L̂ + 1) + 1` for total realized loss `L̂`, and summing the
//! per-phase bounds gives regret scaling like `√(Ψ·L*)` for q = 1 (and the
//! matching rate for larger q) without knowing `L*`.
//!
//! The wrapper is agnostic about the inner learner: a factory builds the
//! phase-τ learner from ε_τ and gets a reference to the previous phase's
//! learner so cross-phase state can survive restarts (the graph reduction
//! carries its independence-number guess across phases this way, via
//! [`BlackboxLearner::carry_alpha_from`](super::blackbox::BlackboxLearner::carry_alpha_from)).
//! Ψ may depend on that carried state — it is re-read every round through a
//! closure — but must never shrink mid-run, or the transition bookkeeping
//! below loses its meaning.

use crate::types::RoundRecord;

use super::LearnerError;

/// One completed (or final partial) phase of a doubling run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    /// Phase index τ, starting at 0.
    pub tau: usize,
    /// Phase accuracy ε_τ = 2^{−τ}.
    pub eps_tau: f64,
    /// Threshold scale Ψ in force when the phase closed.
    pub psi: f64,
    /// Balance exponent q.
    pub q: f64,
    /// First round of the phase (1-based, inclusive).
    pub start_t: u64,
    /// Last round of the phase (inclusive).
    pub end_t: u64,
    /// Realized phase loss including the final round.
    pub loss_final: f64,
    /// Realized phase loss excluding the final round — at a true transition
    /// this still satisfies the condition's negation, which is what makes
    /// the boundary exact.
    pub loss_before_last: f64,
    /// Whether the phase closed by tripping the condition (false only for
    /// the last phase, which the horizon closes).
    pub advanced: bool,
}

impl PhaseRecord {
    /// The balance threshold Ψ/ε_τ^q this phase compared against.
    pub fn threshold(&self) -> f64 {
        self.psi / self.eps_tau.powf(self.q)
    }
}

/// Everything a doubling run produced besides the streamed records.
#[derive(Debug, Clone)]
pub struct DoublingOutcome {
    /// Phases in order; never empty for a positive horizon.
    pub phases: Vec<PhaseRecord>,
    /// Total realized loss across all phases.
    pub total_loss: f64,
}

impl DoublingOutcome {
    /// Upper bound that the phase count must respect: log2(L̂ + 1) + 1.
    pub fn phase_count_bound(&self) -> f64 {
        (self.total_loss + 1.0).log2() + 1.0
    }
}

/// Run `horizon` rounds of guess-and-double.
///
/// * `factory(eps_tau, prev)` builds the learner for a new phase; `prev` is
///   the previous phase's learner (`None` for phase 0).
/// * `psi_of(&learner)` reports the current threshold scale; it may grow
///   (e.g. when a carried guess doubles) but must never shrink.
/// * `step_fn(&mut learner, t)` plays round `t` and returns its record; the
///   caller owns the feedback wiring and randomness.
/// * `on_record(&record, tau)` observes every record as it is produced, so
///   callers can stream CSV rows and invariant checks without the wrapper
///   retaining the trace.
pub fn doubling_run<L>(
    horizon: u64,
    q: f64,
    mut factory: impl FnMut(f64, Option<&L>) -> Result<L, LearnerError>,
    mut psi_of: impl FnMut(&L) -> f64,
    mut step_fn: impl FnMut(&mut L, u64) -> Result<RoundRecord, LearnerError>,
    mut on_record: impl FnMut(&RoundRecord, usize),
) -> Result<DoublingOutcome, LearnerError> {
    if q < 1.0 {
        return Err(LearnerError::BadParameter { name: "q", value: q });
    }
    let mut phases = Vec::new();
    let mut tau = 0usize;
    let mut eps_tau = 1.0f64;
    let mut learner = factory(eps_tau, None)?;
    let mut start_t = 1u64;
    let mut phase_loss = 0.0f64;
    let mut total_loss = 0.0f64;

    for t in 1..=horizon {
        let record = step_fn(&mut learner, t)?;
        let loss_before = phase_loss;
        phase_loss += record.true_loss;
        total_loss += record.true_loss;
        on_record(&record, tau);

        let psi = psi_of(&learner);
        let tripped = eps_tau * phase_loss > psi / eps_tau.powf(q);
        if tripped && t < horizon {
            phases.push(PhaseRecord {
                tau,
                eps_tau,
                psi,
                q,
                start_t,
                end_t: t,
                loss_final: phase_loss,
                loss_before_last: loss_before,
                advanced: true,
            });
            tau += 1;
            eps_tau = 0.5f64.powi(tau as i32);
            let next = factory(eps_tau, Some(&learner))?;
            learner = next;
            start_t = t + 1;
            phase_loss = 0.0;
        }
    }

    // Close the final (horizon-terminated) phase.
    if horizon >= start_t {
        let psi = psi_of(&learner);
        phases.push(PhaseRecord {
            tau,
            eps_tau,
            psi,
            q,
            start_t,
            end_t: horizon,
            loss_final: phase_loss,
            loss_before_last: phase_loss, // not meaningful without a transition
            advanced: false,
        });
    }

    Ok(DoublingOutcome { phases, total_loss })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{
        Distribution, EstimatedLossVector, RoundParams, RoundRecord,
    };

    /// Synthetic learner: a scripted loss sequence, no real decisions.
    struct Scripted {
        eps: f64,
        losses: Vec<f64>,
    }

    fn record(t: u64, loss: f64) -> RoundRecord {
        RoundRecord {
            t,
            played: 0,
            true_loss: loss,
            estimated: EstimatedLossVector::new(vec![loss], 10.0).unwrap(),
            frozen: Vec::new(),
            frozen_mass: 0.0,
            play_dist: Distribution::uniform(1),
            base_dist: Distribution::uniform(1),
            params: RoundParams::default(),
            observation_estimates: None,
            samples_per_sweep: None,
        }
    }

    fn run_scripted(
        losses: Vec<f64>,
        psi: f64,
        q: f64,
    ) -> (DoublingOutcome, Vec<usize>) {
        let horizon = losses.len() as u64;
        let mut taus = Vec::new();
        let outcome = doubling_run(
            horizon,
            q,
            |eps, _prev: Option<&Scripted>| {
                Ok(Scripted {
                    eps,
                    losses: losses.clone(),
                })
            },
            |_| psi,
            |l, t| {
                assert!(l.eps > 0.0);
                Ok(record(t, l.losses[(t - 1) as usize]))
            },
            |_rec, tau| taus.push(tau),
        )
        .unwrap();
        (outcome, taus)
    }

    #[test]
    fn phase_zero_ends_first_round_loss_exceeds_psi() {
        // Ψ = 10, q = 2, unit losses: phase 0 runs until L̂ > 10, i.e. ends
        // at t = 11. Phase 1 (ε = 1/2) needs 0.5·L̂ > 10/0.25 = 40, i.e. 81
        // further rounds.
        let (outcome, taus) = run_scripted(vec![1.0; 200], 10.0, 2.0);
        assert_eq!(outcome.phases[0].end_t, 11);
        assert!(outcome.phases[0].advanced);
        assert_eq!(outcome.phases[1].start_t, 12);
        assert_eq!(outcome.phases[1].end_t, 12 + 81 - 1);
        assert_eq!(taus[10], 0);
        assert_eq!(taus[11], 1);
    }

    #[test]
    fn zero_losses_never_advance() {
        let (outcome, taus) = run_scripted(vec![0.0; 500], 5.0, 1.0);
        assert_eq!(outcome.phases.len(), 1);
        assert_eq!(outcome.phases[0].tau, 0);
        assert!(!outcome.phases[0].advanced);
        assert!(taus.iter().all(|&tau| tau == 0));
    }

    #[test]
    fn transitions_satisfy_the_condition_exactly() {
        // Irregular losses: every advanced phase must have tripped the
        // condition on its last round and not on the one before.
        let losses: Vec<f64> = (0..400)
            .map(|i| ((i * 7919) % 100) as f64 / 100.0)
            .collect();
        let (outcome, _) = run_scripted(losses, 3.0, 1.0);
        assert!(outcome.phases.len() > 1, "sequence should advance at least once");
        for phase in &outcome.phases {
            if !phase.advanced {
                continue;
            }
            let threshold = phase.threshold();
            assert!(phase.eps_tau * phase.loss_final > threshold);
            assert!(phase.eps_tau * phase.loss_before_last <= threshold);
        }
    }

    #[test]
    fn phase_count_respects_the_log_bound() {
        for (psi, q) in [(1.0, 1.0), (3.0, 2.0), (0.5, 1.0)] {
            let losses: Vec<f64> = (0..1000)
                .map(|i| ((i * 31) % 97) as f64 / 97.0)
                .collect();
            let (outcome, _) = run_scripted(losses, psi, q);
            assert!(
                (outcome.phases.len() as f64) <= outcome.phase_count_bound(),
                "{} phases exceed the log bound {}",
                outcome.phases.len(),
                outcome.phase_count_bound()
            );
        }
    }

    #[test]
    fn factory_receives_previous_phase_learner() {
        let mut carried = Vec::new();
        let outcome = doubling_run(
            100,
            1.0,
            |eps, prev: Option<&Scripted>| {
                carried.push(prev.map(|p| p.eps));
                Ok(Scripted {
                    eps,
                    losses: vec![1.0; 100],
                })
            },
            |_| 2.0,
            |l, t| Ok(record(t, l.losses[(t - 1) as usize])),
            |_, _| {},
        )
        .unwrap();
        assert!(outcome.phases.len() >= 2);
        assert_eq!(carried[0], None);
        assert_eq!(carried[1], Some(1.0));
        if carried.len() > 2 {
            assert_eq!(carried[2], Some(0.5));
        }
    }

    #[test]
    fn eps_tau_halves_each_phase() {
        let (outcome, _) = run_scripted(vec![1.0; 300], 1.0, 1.0);
        for (i, phase) in outcome.phases.iter().enumerate() {
            assert_eq!(phase.tau, i);
            assert!((phase.eps_tau - 0.5f64.powi(i as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_sub_one_exponent() {
        let result = doubling_run(
            10,
            0.5,
            |eps, _: Option<&Scripted>| {
                Ok(Scripted {
                    eps,
                    losses: vec![0.0; 10],
                })
            },
            |_| 1.0,
            |l, t| Ok(record(t, l.losses[(t - 1) as usize])),
            |_, _| {},
        );
        assert!(matches!(
            result,
            Err(LearnerError::BadParameter { name: "q", .. })
        ));
    }
}
