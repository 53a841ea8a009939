//! Randomized invariant suites behind the CLI `check` command.
//!
//! Each suite hammers one layer of the library with randomized inputs and
//! re-derives the claimed property independently — by enumeration, brute
//! force, or a closed form computed from scratch — rather than trusting the
//! code under test. A healthy library yields zero violations on every suite;
//! the concentration suite alone builds its statistical tolerance into the
//! per-cell budget, so its zero means "within three standard errors of the
//! nominal failure rate".
//!
//! All suites derive per-trial generators counter-style from `(seed, trial)`,
//! so reports are reproducible for a fixed `(suite, trials, seed)` triple.

use rand::Rng;
use serde::Serialize;

use crate::evaluation::{
    best_shifting_sequence, concentration_check, HistoryDependentSampler, IidBernoulliSampler,
};
use crate::freezing::{
    dual_threshold_freeze, semibandit_freeze, triple_threshold_freeze, verify_graph_freeze,
    verify_semibandit_freeze, FreezeError,
};
use crate::graph::{
    erdos_renyi, exact_independence_number, greedy_maximal_independent_set, observation_mass,
};
use crate::harness::HarnessError;
use crate::rng::{stream, STREAM_SUITE};
use crate::types::{Distribution, FeedbackGraph, LossVector};

/// Suites `check` can run.
pub const SUITES: [&str; 5] = [
    "freezing",
    "estimators",
    "concentration",
    "shifting-dp",
    "graph-tools",
];

/// At most this many violation notes are kept verbatim.
const MAX_NOTES: usize = 8;

/// Outcome of one suite run; serialized by the CLI.
#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: u64,
    /// Property failures observed; 0 is the pass condition for every suite.
    pub violations: u64,
    /// First few failure descriptions plus summary statistics.
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str, trials: u64) -> Self {
        SuiteReport {
            suite: suite.into(),
            trials,
            violations: 0,
            notes: Vec::new(),
        }
    }

    fn violation(&mut self, message: String) {
        self.violations += 1;
        if self.notes.len() < MAX_NOTES {
            self.notes.push(message);
        }
    }

    fn note(&mut self, message: String) {
        self.notes.push(message);
    }
}

/// Run one named suite for `trials` randomized iterations.
pub fn run_suite(suite: &str, trials: u64, seed: u64) -> Result<SuiteReport, HarnessError> {
    match suite {
        "freezing" => Ok(freezing_suite(trials, seed)),
        "estimators" => Ok(estimators_suite(trials, seed)),
        "concentration" => Ok(concentration_suite(trials, seed)),
        "shifting-dp" => Ok(shifting_dp_suite(trials, seed)),
        "graph-tools" => Ok(graph_tools_suite(trials, seed)),
        other => Err(HarnessError::Config(format!(
            "unknown suite {other}; expected one of {SUITES:?}"
        ))),
    }
}

fn trial_rng(seed: u64, trial: u64) -> rand_chacha::ChaCha12Rng {
    stream(seed, trial, STREAM_SUITE)
}

/// Uniform draw from the probability simplex (normalized unit exponentials).
fn random_simplex<R: Rng>(rng: &mut R, d: usize) -> Distribution {
    let weights: Vec<f64> = (0..d)
        .map(|_| (-(1.0 - rng.gen::<f64>()).ln()).max(1e-12))
        .collect();
    Distribution::from_weights(&weights).expect("positive weights form a distribution")
}

// ---------------------------------------------------------------------------
// freezing
// ---------------------------------------------------------------------------

/// Random graphs and distributions through every freezing rule, re-checked
/// by the independent certificate verifiers plus the definitional
/// threshold conditions recomputed from scratch.
fn freezing_suite(trials: u64, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("freezing", trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let d = rng.gen_range(2..=12);
        let g = erdos_renyi(d, rng.gen::<f64>(), &mut rng);
        let p = random_simplex(&mut rng, d);
        let gamma = rng.gen::<f64>() * 0.4 + 1e-6;
        let gamma_prime = gamma / 3.0;

        match dual_threshold_freeze(&g, &p, gamma) {
            Ok(result) => {
                if let Err(e) = verify_graph_freeze(&g, &p, &result, gamma_prime) {
                    report.violation(format!("trial {trial}: dual certificate: {e}"));
                }
                // Initial freezes must be exactly the arms whose full
                // closed-neighborhood mass sat strictly below gamma.
                let mask = result.frozen_mask(d);
                let none = vec![false; d];
                for i in 0..d {
                    let full = observation_mass(&g, p.as_slice(), i, &none)
                        .expect("valid arm and lengths by construction");
                    let initially = result.initial_frozen.contains(&i);
                    if initially != (full < gamma) {
                        report.violation(format!(
                            "trial {trial}: arm {i} initial-freeze flag {initially} \
                             contradicts full mass {full} vs gamma {gamma}"
                        ));
                        break;
                    }
                    // Every frozen arm's own probability sits below the
                    // threshold that froze it.
                    let cap = if initially { gamma } else { gamma_prime };
                    if mask[i] && p.prob(i) >= cap {
                        report.violation(format!(
                            "trial {trial}: frozen arm {i} keeps probability {} >= {cap}",
                            p.prob(i)
                        ));
                        break;
                    }
                }
            }
            // Freezing everything is legitimate for an aggressive threshold,
            // but the maximum-probability arm survives whenever
            // gamma <= 1/d, so total freezes below that are real failures.
            Err(FreezeError::AllFrozen { .. }) if gamma > 1.0 / d as f64 => {}
            Err(e) => report.violation(format!("trial {trial}: dual freeze failed: {e}")),
        }

        // Triple-threshold variant: drop at beta first, same certificate.
        let beta = gamma * rng.gen::<f64>();
        if beta > 0.0 {
            match triple_threshold_freeze(&g, &p, beta, gamma) {
                Ok(result) => {
                    if let Err(e) = verify_graph_freeze(&g, &p, &result, gamma_prime) {
                        report.violation(format!("trial {trial}: triple certificate: {e}"));
                    }
                    for &i in &result.prob_frozen {
                        if p.prob(i) >= beta {
                            report.violation(format!(
                                "trial {trial}: dropped arm {i} had probability {} >= beta {beta}",
                                p.prob(i)
                            ));
                            break;
                        }
                    }
                }
                Err(FreezeError::AllFrozen { .. }) if gamma > 1.0 / d as f64 => {}
                Err(e) => report.violation(format!("trial {trial}: triple freeze failed: {e}")),
            }
        }

        // Semi-bandit variant on a random strategy family.
        let num_elements = rng.gen_range(2..=6);
        let num_strategies = rng.gen_range(2..=8);
        let strategies: Vec<Vec<usize>> = (0..num_strategies)
            .map(|_| {
                let size = rng.gen_range(1..=num_elements.min(3));
                let mut els: Vec<usize> =
                    (0..size).map(|_| rng.gen_range(0..num_elements)).collect();
                els.sort_unstable();
                els.dedup();
                els
            })
            .collect();
        let sp = random_simplex(&mut rng, num_strategies);
        let sb_gamma = rng.gen::<f64>() * 0.3 + 1e-6;
        match semibandit_freeze(&strategies, num_elements, &sp, sb_gamma) {
            Ok(result) => {
                if let Err(e) = verify_semibandit_freeze(&strategies, &sp, &result, sb_gamma) {
                    report.violation(format!("trial {trial}: semibandit certificate: {e}"));
                }
            }
            // The maximum-probability strategy keeps all its elements above
            // gamma <= 1/|strategies|, so only larger thresholds may freeze
            // everything.
            Err(FreezeError::AllFrozen { .. }) if sb_gamma > 1.0 / num_strategies as f64 => {}
            Err(e) => report.violation(format!("trial {trial}: semibandit freeze failed: {e}")),
        }
    }
    report
}

// ---------------------------------------------------------------------------
// estimators
// ---------------------------------------------------------------------------

/// Exact (conditional) expectation identities of the importance-weighted
/// estimators, evaluated by enumerating every possible play.
fn estimators_suite(trials: u64, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("estimators", trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let d = rng.gen_range(2..=10);
        let g = erdos_renyi(d, rng.gen::<f64>(), &mut rng);
        let p = random_simplex(&mut rng, d);
        let losses: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let gamma = rng.gen::<f64>() * 0.3 + 1e-6;

        // Graph estimator after a freeze: an unfrozen arm i is observed
        // exactly when the play lands in its closed neighborhood, and its
        // estimate divides by that neighborhood's play mass, so summing
        // w_j * loss_i / W_i over observing plays j must return loss_i.
        let result = match dual_threshold_freeze(&g, &p, gamma) {
            Ok(r) => r,
            Err(FreezeError::AllFrozen { .. }) if gamma > 1.0 / d as f64 => continue,
            Err(e) => {
                report.violation(format!("trial {trial}: freeze failed: {e}"));
                continue;
            }
        };
        let mask = result.frozen_mask(d);
        let w = &result.play_dist;
        let none = vec![false; d];
        for i in 0..d {
            if mask[i] {
                continue;
            }
            let w_i = observation_mass(&g, w.as_slice(), i, &none)
                .expect("valid arm and lengths by construction");
            let mut expectation = 0.0;
            for j in 0..d {
                if g.observes(j, i) {
                    expectation += w.prob(j) * losses[i] / w_i;
                }
            }
            if (expectation - losses[i]).abs() > 1e-9 {
                report.violation(format!(
                    "trial {trial}: arm {i} graph estimate has expectation {expectation}, \
                     true loss {}",
                    losses[i]
                ));
                break;
            }
        }

        // Bandit implicit-exploration estimator: only the played arm is
        // observed and the estimate divides by w_i + zeta, so the exact
        // expectation is w_i/(w_i + zeta) * loss_i — never above the truth
        // and within zeta/(w_i + zeta) of it.
        let zeta = rng.gen::<f64>() * 0.2 + 1e-9;
        for i in 0..d {
            let w_i = p.prob(i);
            let enumerated = w_i * (losses[i] / (w_i + zeta));
            let closed_form = w_i / (w_i + zeta) * losses[i];
            if (enumerated - closed_form).abs() > 1e-12 {
                report.violation(format!(
                    "trial {trial}: arm {i} shifted estimate expectation {enumerated} \
                     differs from closed form {closed_form}"
                ));
                break;
            }
            if enumerated > losses[i] + 1e-12 {
                report.violation(format!(
                    "trial {trial}: arm {i} shifted estimate overestimates: \
                     {enumerated} > {}",
                    losses[i]
                ));
                break;
            }
            let bias = losses[i] - enumerated;
            let bias_bound = losses[i] * zeta / (w_i + zeta) + 1e-12;
            if bias > bias_bound {
                report.violation(format!(
                    "trial {trial}: arm {i} downward bias {bias} exceeds bound {bias_bound}"
                ));
                break;
            }
        }
    }
    report
}

// ---------------------------------------------------------------------------
// concentration
// ---------------------------------------------------------------------------

/// Empirical failure rates of the adapted concentration bound, one cell per
/// (sampler, direction). Each cell's budget is the nominal rate plus three
/// binomial standard errors; a cell over budget is one violation.
fn concentration_suite(trials: u64, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("concentration", trials);
    let (eps, delta) = (0.5, 0.05);
    let t_max = 200;
    let budget = delta + 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt();

    let check_cell = |name: &str, direction: &str, rate: f64, report: &mut SuiteReport| {
        report.note(format!(
            "{name} {direction}: failure rate {rate:.5} (budget {budget:.5})"
        ));
        if rate > budget {
            report.violation(format!(
                "{name} {direction}: failure rate {rate:.5} exceeds budget {budget:.5}"
            ));
        }
    };

    let iid = IidBernoulliSampler { p: 0.3 };
    let (up, low) = concentration_check(&iid, t_max, eps, delta, trials as usize, seed);
    check_cell("iid", "upper", up, &mut report);
    check_cell("iid", "lower", low, &mut report);

    let history = HistoryDependentSampler::new(0.2, 0.8);
    // Offset the stream so the two samplers never share trial randomness.
    let (up, low) =
        concentration_check(&history, t_max, eps, delta, trials as usize, seed ^ (1 << 32));
    check_cell("history", "upper", up, &mut report);
    check_cell("history", "lower", low, &mut report);

    report
}

// ---------------------------------------------------------------------------
// shifting-dp
// ---------------------------------------------------------------------------

/// Exhaustive check of the shifting comparator: enumerate every arm sequence
/// within the switch budget and compare its best total to the dynamic
/// program's.
fn brute_force_shifting(schedule: &[LossVector], switches: usize) -> f64 {
    let t_max = schedule.len();
    let d = schedule[0].len();
    let mut best = f64::INFINITY;
    // Sequences encoded in base d; switch count checked per sequence.
    let total: u64 = (d as u64).pow(t_max as u32);
    for code in 0..total {
        let mut c = code;
        let mut prev = usize::MAX;
        let mut used = 0usize;
        let mut loss = 0.0;
        for losses in schedule {
            let arm = (c % d as u64) as usize;
            c /= d as u64;
            if prev != usize::MAX && arm != prev {
                used += 1;
                if used > switches {
                    break;
                }
            }
            prev = arm;
            loss += losses.get(arm);
        }
        if used <= switches && loss < best {
            best = loss;
        }
    }
    best
}

fn shifting_dp_suite(trials: u64, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("shifting-dp", trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let d = rng.gen_range(2..=3);
        let t_max = rng.gen_range(2..=8);
        let schedule: Vec<LossVector> = (0..t_max)
            .map(|_| {
                LossVector::new((0..d).map(|_| rng.gen::<f64>()).collect())
                    .expect("uniform draws are valid losses")
            })
            .collect();
        let switches = rng.gen_range(0..t_max.min(4));

        let (sequence, dp_total) = match best_shifting_sequence(&schedule, switches) {
            Ok(r) => r,
            Err(e) => {
                report.violation(format!("trial {trial}: comparator failed: {e}"));
                continue;
            }
        };
        // The returned sequence must realize its claimed total within budget.
        let realized: f64 = sequence
            .iter()
            .zip(&schedule)
            .map(|(&arm, losses)| losses.get(arm))
            .sum();
        let used = sequence.windows(2).filter(|w| w[0] != w[1]).count();
        if used > switches {
            report.violation(format!(
                "trial {trial}: sequence uses {used} switches, budget {switches}"
            ));
        }
        if (realized - dp_total).abs() > 1e-9 {
            report.violation(format!(
                "trial {trial}: sequence realizes {realized}, reported {dp_total}"
            ));
        }
        let brute = brute_force_shifting(&schedule, switches);
        if (dp_total - brute).abs() > 1e-9 {
            report.violation(format!(
                "trial {trial}: dynamic program total {dp_total} differs from \
                 brute force {brute} (T={t_max}, d={d}, K={switches})"
            ));
        }
    }
    report
}

// ---------------------------------------------------------------------------
// graph-tools
// ---------------------------------------------------------------------------

/// Bitmask brute force for the independence number on small graphs.
fn brute_force_alpha(g: &FeedbackGraph) -> usize {
    let n = g.len();
    let masks: Vec<u32> = (0..n)
        .map(|i| g.neighbors(i).iter().fold(0u32, |m, &j| m | (1 << j)))
        .collect();
    let mut best = 0;
    for subset in 0u32..(1 << n) {
        if masks
            .iter()
            .enumerate()
            .all(|(i, &m)| subset & (1 << i) == 0 || subset & m == 0)
        {
            best = best.max(subset.count_ones() as usize);
        }
    }
    best
}

fn graph_tools_suite(trials: u64, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("graph-tools", trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let n = rng.gen_range(1..=12);
        let g = erdos_renyi(n, rng.gen::<f64>(), &mut rng);

        // Greedy maximal independent set on a random node subset: pairwise
        // non-adjacent, contained in the subset, and maximal within it.
        let nodes: Vec<usize> = (0..n).filter(|_| rng.gen::<bool>()).collect();
        let mis = greedy_maximal_independent_set(&g, &nodes);
        for (a, &i) in mis.iter().enumerate() {
            if !nodes.contains(&i) {
                report.violation(format!("trial {trial}: set node {i} outside the input"));
            }
            for &j in &mis[a + 1..] {
                if g.observes(i, j) && i != j {
                    report.violation(format!("trial {trial}: set nodes {i},{j} adjacent"));
                }
            }
        }
        for &i in &nodes {
            let dominated = mis
                .iter()
                .any(|&j| j == i || g.observes(i, j));
            if !dominated {
                report.violation(format!(
                    "trial {trial}: node {i} could extend the maximal set"
                ));
            }
        }

        // Exact independence number against bitmask enumeration, and the
        // greedy set can never beat it.
        match exact_independence_number(&g) {
            Ok(alpha) => {
                let brute = brute_force_alpha(&g);
                if alpha != brute {
                    report.violation(format!(
                        "trial {trial}: independence number {alpha} differs from \
                         brute force {brute} (n={n})"
                    ));
                }
                let full_mis = greedy_maximal_independent_set(&g, &(0..n).collect::<Vec<_>>());
                if full_mis.len() > alpha {
                    report.violation(format!(
                        "trial {trial}: greedy set size {} exceeds independence number {alpha}",
                        full_mis.len()
                    ));
                }
            }
            Err(e) => report.violation(format!("trial {trial}: exact alpha failed: {e}")),
        }

        // Observation mass against a direct loop.
        let p = random_simplex(&mut rng, n);
        let i = rng.gen_range(0..n);
        let mass = observation_mass(&g, p.as_slice(), i, &vec![false; n])
            .expect("valid arm and lengths by construction");
        let direct: f64 = (0..n)
            .filter(|&j| j == i || g.observes(i, j))
            .map(|j| p.prob(j))
            .sum();
        if (mass - direct).abs() > 1e-12 {
            report.violation(format!(
                "trial {trial}: observation mass {mass} differs from direct sum {direct}"
            ));
        }

        // Disjoint cliques have independence number = number of cliques.
        let sizes: Vec<usize> = (0..rng.gen_range(1..=4))
            .map(|_| rng.gen_range(1..=4))
            .collect();
        let cliques = FeedbackGraph::clique_union(&sizes);
        match exact_independence_number(&cliques) {
            Ok(alpha) => {
                if alpha != sizes.len() {
                    report.violation(format!(
                        "trial {trial}: clique union of {} parts has independence \
                         number {alpha}",
                        sizes.len()
                    ));
                }
            }
            Err(e) => report.violation(format!("trial {trial}: clique alpha failed: {e}")),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_a_short_run() {
        for suite in SUITES {
            let trials = if suite == "concentration" { 400 } else { 60 };
            let report = run_suite(suite, trials, 1).unwrap();
            assert_eq!(
                report.violations, 0,
                "suite {suite} reported violations: {:?}",
                report.notes
            );
            assert_eq!(report.suite, suite);
            assert_eq!(report.trials, trials);
        }
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        assert!(matches!(
            run_suite("bogus", 1, 0),
            Err(HarnessError::Config(_))
        ));
    }

    #[test]
    fn reports_are_reproducible() {
        let a = run_suite("freezing", 40, 9).unwrap();
        let b = run_suite("freezing", 40, 9).unwrap();
        assert_eq!(a.violations, b.violations);
        assert_eq!(a.notes, b.notes);
    }

    #[test]
    fn brute_force_shifting_agrees_on_a_known_case() {
        // Two arms, alternating losses: with one switch the best is to ride
        // arm 0 then move to arm 1 (or vice versa), total 1.
        let schedule: Vec<LossVector> = vec![
            LossVector::new(vec![0.0, 1.0]).unwrap(),
            LossVector::new(vec![0.0, 1.0]).unwrap(),
            LossVector::new(vec![1.0, 0.0]).unwrap(),
            LossVector::new(vec![1.0, 0.0]).unwrap(),
        ];
        assert_eq!(brute_force_shifting(&schedule, 1), 0.0);
        assert_eq!(brute_force_shifting(&schedule, 0), 2.0);
    }
}
