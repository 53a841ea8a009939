//! Regret accounting, comparator oracles, concentration checking, and
//! scaling-exponent fits.
//!
//! The learners are judged on three regret notions: *actual* regret against
//! the best fixed arm in hindsight, *pseudo*-regret against the best
//! per-arm mean on stochastic instances, and *approximate* regret
//! `(1-ε)·learner_loss − comparator_loss`, the multiplicative relaxation the
//! small-loss machinery optimizes. For piecewise benchmarks,
//! [`best_shifting_sequence`] computes the optimal comparator with a bounded
//! number of arm switches by dynamic programming.
//!
//! [`concentration_check`] Monte-Carlo-tests the two-sided martingale bound
//! the high-probability analysis relies on: for any adapted sequence
//! `x_t ∈ [0,1]`,
//!
//! ```text
//! Σ x_t − (1+ε)·Σ E[x_t | past]  ≤  (1+ε)·ln(1/δ)/ε     w.p. ≥ 1−δ
//! (1−ε)·Σ E[x_t | past] − Σ x_t  ≤  (1+ε)·ln(1/δ)/ε     w.p. ≥ 1−δ
//! ```
//!
//! [`fit_scaling_exponent`] performs the log-log least-squares fits the
//! scaling sweeps report (regret against measured best-arm loss or against
//! arm count).

use crate::rng::{stream, STREAM_SUITE};
use crate::types::LossVector;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("trace has {played} rounds but the schedule has {schedule}")]
    LengthMismatch { played: usize, schedule: usize },
    #[error("scaling fits need at least 3 points, got {got}")]
    TooFewPoints { got: usize },
    #[error("scaling fits need positive coordinates, point {index} is ({x}, {y})")]
    NonPositive { index: usize, x: f64, y: f64 },
    #[error("switch budget {switches} must be smaller than the horizon {horizon}")]
    SwitchBudget { switches: usize, horizon: usize },
    #[error("empty loss schedule")]
    EmptySchedule,
}

// ---------------------------------------------------------------------------
// Regret summaries
// ---------------------------------------------------------------------------

/// Regret accounting for one run at a fixed approximation level `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub learner_loss: f64,
    /// Cumulative loss of the hindsight-best fixed arm (ties to the lowest
    /// arm id).
    pub best_fixed_loss: f64,
    /// `learner_loss - best_fixed_loss`.
    pub regret: f64,
    /// `(1-eps)·learner_loss - best_fixed_loss`.
    pub apx_regret: f64,
    /// The approximation level `apx_regret` was evaluated at.
    pub eps: f64,
    /// Measured small-loss scale: equals `best_fixed_loss`.
    pub lstar: f64,
    /// Cumulative learner loss after each round.
    pub per_round: Vec<f64>,
}

/// Hindsight regret of a played-arm trace against a full loss schedule.
pub fn actual_regret(
    played: &[usize],
    schedule: &[LossVector],
    eps: f64,
) -> Result<RegretSummary, EvalError> {
    if played.len() != schedule.len() {
        return Err(EvalError::LengthMismatch {
            played: played.len(),
            schedule: schedule.len(),
        });
    }
    if schedule.is_empty() {
        return Err(EvalError::EmptySchedule);
    }
    let d = schedule[0].len();
    let mut arm_cum = vec![0.0_f64; d];
    let mut learner_loss = 0.0;
    let mut per_round = Vec::with_capacity(played.len());
    for (&arm, losses) in played.iter().zip(schedule) {
        learner_loss += losses.get(arm);
        per_round.push(learner_loss);
        for (c, &l) in arm_cum.iter_mut().zip(losses.as_slice()) {
            *c += l;
        }
    }
    let best_fixed_loss = arm_cum.iter().copied().fold(f64::INFINITY, f64::min);
    let regret = learner_loss - best_fixed_loss;
    Ok(RegretSummary {
        learner_loss,
        best_fixed_loss,
        regret,
        apx_regret: (1.0 - eps) * learner_loss - best_fixed_loss,
        eps,
        lstar: best_fixed_loss,
        per_round,
    })
}

/// Pseudo-regret of a trace on a stationary stochastic instance with known
/// per-arm means: expected learner loss minus the best single-arm expected
/// loss.
pub fn pseudo_regret(played: &[usize], means: &[f64]) -> f64 {
    let best = means.iter().copied().fold(f64::INFINITY, f64::min);
    played.iter().map(|&arm| means[arm] - best).sum()
}

// ---------------------------------------------------------------------------
// Shifting comparator
// ---------------------------------------------------------------------------

/// Minimum-total-loss comparator sequence with at most `switches` arm
/// changes, and its total loss.
///
/// Dynamic program over (round, switch budget, arm): staying keeps the
/// budget, switching pays one unit and may come from the best arm of the
/// smaller budget (allowing a switch onto the same arm never changes the
/// minimum, since staying is available at the same budget). Ties prefer
/// staying, then the lowest arm id, making the sequence deterministic.
pub fn best_shifting_sequence(
    schedule: &[LossVector],
    switches: usize,
) -> Result<(Vec<usize>, f64), EvalError> {
    let t_max = schedule.len();
    if t_max == 0 {
        return Err(EvalError::EmptySchedule);
    }
    if switches >= t_max {
        return Err(EvalError::SwitchBudget {
            switches,
            horizon: t_max,
        });
    }
    let d = schedule[0].len();
    let levels = switches + 1;
    // cost[k][i]: best total with at most k switches, currently on arm i.
    let mut cost = vec![vec![0.0_f64; d]; levels];
    for k in 0..levels {
        for i in 0..d {
            cost[k][i] = schedule[0].get(i);
        }
    }
    // switched[t][k][i]: round-t transition used the switch branch.
    // best_prev[t][k]: argmin arm of budget k-1 after round t-1 (lowest id).
    let mut switched = vec![false; t_max * levels * d];
    let mut best_prev = vec![0usize; t_max * levels];
    for (t, losses) in schedule.iter().enumerate().skip(1) {
        let mut next = vec![vec![0.0_f64; d]; levels];
        // Position k holds the argmin of budget level k after round t-1.
        let arg_mins: Vec<usize> = cost
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0usize, f64::INFINITY), |(bi, bv), (i, &v)| {
                        if v < bv {
                            (i, v)
                        } else {
                            (bi, bv)
                        }
                    })
                    .0
            })
            .collect();
        for k in 0..levels {
            for i in 0..d {
                let stay = cost[k][i];
                let (switch, from) = if k > 0 {
                    (cost[k - 1][arg_mins[k - 1]], arg_mins[k - 1])
                } else {
                    (f64::INFINITY, 0)
                };
                let idx = (t * levels + k) * d + i;
                if switch < stay {
                    switched[idx] = true;
                    best_prev[t * levels + k] = from;
                    next[k][i] = losses.get(i) + switch;
                } else {
                    next[k][i] = losses.get(i) + stay;
                }
            }
        }
        cost = next;
    }
    let last = &cost[levels - 1];
    let (mut arm, total) = last
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |(bi, bv), (i, &v)| {
            if v < bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let mut k = levels - 1;
    let mut sequence = vec![0usize; t_max];
    sequence[t_max - 1] = arm;
    for t in (1..t_max).rev() {
        let idx = (t * levels + k) * d + arm;
        if switched[idx] {
            arm = best_prev[t * levels + k];
            k -= 1;
        }
        sequence[t - 1] = arm;
    }
    Ok((sequence, total))
}

// ---------------------------------------------------------------------------
// Concentration checking
// ---------------------------------------------------------------------------

/// An adapted sequence generator: each call yields the next value
/// `x_t ∈ [0,1]` together with its conditional mean given the history.
/// `reset` starts a fresh sequence.
pub trait ConditionalSampler: Send + Sync + Clone {
    fn reset(&mut self);
    fn draw(&mut self, rng: &mut ChaCha12Rng) -> (f64, f64);
}

/// Deterministic sequence: `x_t` always equals its conditional mean.
#[derive(Debug, Clone)]
pub struct DeterministicSampler {
    pub means: Vec<f64>,
    at: usize,
}

impl DeterministicSampler {
    pub fn new(means: Vec<f64>) -> Self {
        Self { means, at: 0 }
    }
}

impl ConditionalSampler for DeterministicSampler {
    fn reset(&mut self) {
        self.at = 0;
    }

    fn draw(&mut self, _rng: &mut ChaCha12Rng) -> (f64, f64) {
        let m = self.means[self.at % self.means.len()];
        self.at += 1;
        (m, m)
    }
}

/// Independent Bernoulli(`p`) draws.
#[derive(Debug, Clone)]
pub struct IidBernoulliSampler {
    pub p: f64,
}

impl ConditionalSampler for IidBernoulliSampler {
    fn reset(&mut self) {}

    fn draw(&mut self, rng: &mut ChaCha12Rng) -> (f64, f64) {
        let x = if rng.gen::<f64>() < self.p { 1.0 } else { 0.0 };
        (x, self.p)
    }
}

/// History-dependent Bernoulli: the conditional mean swings with the running
/// count of past ones, exercising the martingale (rather than i.i.d.) form
/// of the bound. Means stay in `[lo, hi] ⊂ (0,1)`.
#[derive(Debug, Clone)]
pub struct HistoryDependentSampler {
    pub lo: f64,
    pub hi: f64,
    ones: u64,
    rounds: u64,
}

impl HistoryDependentSampler {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(0.0 < lo && lo <= hi && hi < 1.0);
        Self {
            lo,
            hi,
            ones: 0,
            rounds: 0,
        }
    }
}

impl ConditionalSampler for HistoryDependentSampler {
    fn reset(&mut self) {
        self.ones = 0;
        self.rounds = 0;
    }

    fn draw(&mut self, rng: &mut ChaCha12Rng) -> (f64, f64) {
        // Mean rises with the fraction of past ones: positively reinforcing,
        // the adversarial direction for concentration.
        let frac = if self.rounds == 0 {
            0.5
        } else {
            self.ones as f64 / self.rounds as f64
        };
        let m = self.lo + (self.hi - self.lo) * frac;
        let x = if rng.gen::<f64>() < m { 1.0 } else { 0.0 };
        self.rounds += 1;
        self.ones += x as u64;
        (x, m)
    }
}

/// Empirical failure rates (upper direction, lower direction) of the
/// two-sided concentration bound over independent length-`t_max` sequences.
pub fn concentration_check<S: ConditionalSampler>(
    sampler: &S,
    t_max: usize,
    eps: f64,
    delta: f64,
    trials: usize,
    master_seed: u64,
) -> (f64, f64) {
    let bound = (1.0 + eps) * (1.0 / delta).ln() / eps;
    let (upper, lower) = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(master_seed, trial as u64, STREAM_SUITE);
            let mut s = sampler.clone();
            s.reset();
            let mut sum_x = 0.0;
            let mut sum_mean = 0.0;
            for _ in 0..t_max {
                let (x, m) = s.draw(&mut rng);
                debug_assert!((0.0..=1.0).contains(&x));
                sum_x += x;
                sum_mean += m;
            }
            let up = (sum_x - (1.0 + eps) * sum_mean > bound) as u64;
            let low = ((1.0 - eps) * sum_mean - sum_x > bound) as u64;
            (up, low)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    (upper as f64 / trials as f64, lower as f64 / trials as f64)
}

// ---------------------------------------------------------------------------
// Scaling fits
// ---------------------------------------------------------------------------

/// Result of a log-log least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Slope in log-log space: the fitted power-law exponent.
    pub exponent: f64,
    /// Intercept in log-log space (natural log of the coefficient).
    pub intercept: f64,
    pub r_squared: f64,
    /// Points dropped as additive-floor contaminated before the final fit.
    pub dropped: usize,
    /// False when `r_squared < 0.9`: report the fit but don't trust it.
    pub reliable: bool,
    pub warnings: Vec<String>,
}

fn least_squares_loglog(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(x, y) in points {
        sx += x.ln();
        sy += y.ln();
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        let dx = x.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (y.ln() - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(x, y) in points {
        let pred = intercept + slope * x.ln();
        ss_res += (y.ln() - pred).powi(2);
        ss_tot += (y.ln() - my).powi(2);
    }
    let r_squared = if ss_tot <= f64::EPSILON {
        if ss_res <= f64::EPSILON {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    (slope, intercept, r_squared)
}

/// Log-log least-squares fit of `y` against `x` over positive points.
///
/// Regret bounds carry additive terms that dominate when the swept quantity
/// is tiny, contaminating a pure power-law fit. After a first fit, points
/// with `y` below twice the fitted coefficient (the fit's value at `x = 1`,
/// the additive floor proxy) are dropped with a warning and the fit is
/// redone, provided at least 3 points survive.
pub fn fit_scaling_exponent(points: &[(f64, f64)]) -> Result<FitReport, EvalError> {
    if points.len() < 3 {
        return Err(EvalError::TooFewPoints { got: points.len() });
    }
    for (index, &(x, y)) in points.iter().enumerate() {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(EvalError::NonPositive { index, x, y });
        }
    }
    let (slope, intercept, r_squared) = least_squares_loglog(points);
    let floor = 2.0 * intercept.exp();
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, y)| y >= floor).collect();
    let mut warnings = Vec::new();
    let (slope, intercept, r_squared, dropped) =
        if kept.len() < points.len() && kept.len() >= 3 {
            warnings.push(format!(
                "dropped {} point(s) below the additive floor {floor:.4}",
                points.len() - kept.len()
            ));
            let (s, i, r) = least_squares_loglog(&kept);
            (s, i, r, points.len() - kept.len())
        } else {
            if kept.len() < points.len() {
                warnings.push(format!(
                    "{} point(s) sit below the additive floor {floor:.4} but too few would remain; fit kept as-is",
                    points.len() - kept.len()
                ));
            }
            (slope, intercept, r_squared, 0)
        };
    let reliable = r_squared >= 0.9;
    if !reliable {
        warnings.push(format!("low r² = {r_squared:.4}: fit unreliable"));
    }
    Ok(FitReport {
        exponent: slope,
        intercept,
        r_squared,
        dropped,
        reliable,
        warnings,
    })
}
