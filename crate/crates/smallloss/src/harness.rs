//! Experiment harness: config schema, seeded runs, invariant monitors, and
//! CSV/JSON emission.
//!
//! A run is described by an [`ExperimentConfig`] (JSON on disk). Each
//! configured seed index becomes one independent run: environment draws,
//! learner draws, and instance construction each read their own
//! counter-derived stream keyed by `(master_seed, seed_index, stream)`, so
//! runs are reproducible bit-for-bit and safe to execute in parallel.
//!
//! Every round of every run flows through a [`MonitorState`] that re-checks
//! the properties the algorithms are supposed to guarantee from the emitted
//! [`RoundRecord`] alone:
//!
//! * the surviving-mass certificate of each freezing rule (every unfrozen
//!   arm keeps observation mass at least the propagation threshold; every
//!   unfrozen semi-bandit element keeps sampled probability at least γ),
//! * estimate caps and their per-mode magnitude formulas,
//! * frozen-mass and play-distribution consistency against the base
//!   distribution,
//! * the multiplicative-weights gap bound on cumulative estimates (bandit
//!   implicit-exploration mode),
//! * the independence-number bound on the summed observation ratio
//!   (graph implicit-exploration mode, small graphs),
//! * phase-boundary exactness and the phase-count bound of doubling runs.
//!
//! Violations are counted into the run summary (an experiment that produced
//! any is reported as failed by the CLI); with assertions on, the run aborts
//! on the first one. [`FaultInjection`] deliberately corrupts the monitor's
//! certificate threshold so the failure path itself stays tested.
//!
//! Output is one CSV per seed (fixed `run_id,seed,algo,instance,phase,t,arm,
//! loss,cum_loss,best_fixed_cum_loss,frozen_mass` schema; every round for
//! horizons up to `10^5`, else 1024 evenly spaced checkpoints plus phase
//! boundaries) and one `summary.json` per experiment. Sweeps rerun the
//! experiment across parameter values and fit a log-log scaling exponent to
//! the (scale, regret) pairs.

use std::cell::{Cell, RefCell};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engines::MinCostOracle;
use crate::environments::{
    from_loss_table, make_clique_union, make_layered_paths, make_shifting, make_smallloss_bandit,
    punish_last_instance, EnvError, GraphInstance, SemiBanditInstance,
};
use crate::evaluation::fit_scaling_exponent;
use crate::graph::{exact_independence_number, EXACT_ALPHA_MAX_NODES};
use crate::learners::{
    doubling_run, BaselineConfig, BaselineLearner, BlackboxConfig, BlackboxLearner, EngineKind,
    GreenIxConfig, GreenIxGraphConfig, GreenIxGraphLearner, GreenIxLearner, LearnerError,
    Observed, OnlineLearner, PhaseRecord, SemiBanditConfig, SemiBanditLearner,
};
use crate::rng::{stream, STREAM_LEARNER};
use crate::types::{FeedbackGraph, LossVector, RoundRecord, CAP_SLACK};

/// Fixed CSV header (stable external contract).
pub const CSV_HEADER: &str =
    "run_id,seed,algo,instance,phase,t,arm,loss,cum_loss,best_fixed_cum_loss,frozen_mass";

/// Horizons up to this emit a CSV row every round; longer runs subsample.
pub const CSV_FULL_LIMIT: u64 = 100_000;

/// Number of evenly spaced CSV checkpoints for subsampled runs.
pub const CSV_CHECKPOINTS: u64 = 1024;

/// At most this many violation messages are kept verbatim per run (the
/// count is always exact).
const MAX_VIOLATION_MESSAGES: usize = 16;

/// Relative slack on monitor threshold comparisons, covering float
/// reassociation between a learner's arithmetic and the monitor's.
const MONITOR_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Harness failures, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid or inconsistent configuration (exit code 1).
    #[error("config error: {0}")]
    Config(String),
    /// An invariant monitor fired with assertions on (exit code 2).
    #[error("invariant violation: {0}")]
    Invariant(String),
    /// Everything else: I/O, learner, or environment failure (exit code 3).
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Runtime(format!("i/o failure: {e}"))
    }
}

impl From<LearnerError> for HarnessError {
    fn from(e: LearnerError) -> Self {
        HarnessError::Runtime(format!("learner failure: {e}"))
    }
}

impl From<EnvError> for HarnessError {
    fn from(e: EnvError) -> Self {
        HarnessError::Config(format!("instance construction: {e}"))
    }
}

// ---------------------------------------------------------------------------
// Configuration schema
// ---------------------------------------------------------------------------

fn default_eta_scale() -> f64 {
    1.0
}

fn default_psi_scale() -> f64 {
    1.0
}

/// Top-level experiment description, deserialized from a JSON file.
///
/// `eps` and `delta` carry no defaults on purpose: a silently defaulted
/// slack parameter hides a mis-parameterized run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional run-id prefix; defaults to `<algo>-<instance>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub algorithm: AlgorithmConfig,
    pub instance: InstanceConfig,
    /// Horizon: rounds per run.
    #[serde(rename = "T")]
    pub horizon: u64,
    /// Seed indices; one independent run per entry.
    pub seeds: Vec<u64>,
    /// Master seed combined with each seed index to derive all streams.
    #[serde(default)]
    pub master_seed: u64,
    /// Doubling wrapper over the slack parameter; absent = fixed-`eps` run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doubling: Option<DoublingConfig>,
    /// Abort a run on its first invariant violation (the CLI `--assert`
    /// flag turns this on too).
    #[serde(default)]
    pub assertions: bool,
    /// Output directory; the CLI `--out` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// Deliberate monitor corruption for failure-path tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_injection: Option<FaultInjection>,
}

/// Algorithm selector plus its parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    /// Freezing reduction around a small-loss full-information engine.
    Blackbox {
        eps: f64,
        delta: f64,
        /// Independence-number guess used for the freezing threshold.
        alpha_guess: usize,
        #[serde(default)]
        engine: EngineChoice,
        /// Multiplier on the engine learning rate (default 1).
        #[serde(default = "default_eta_scale")]
        eta_scale: f64,
        /// Double `alpha_guess` when an observed independent set among the
        /// initially frozen arms exceeds it.
        #[serde(default)]
        alpha_doubling: bool,
    },
    /// Bandit implicit-exploration learner.
    GreenIx { eps: f64, delta: f64 },
    /// Graph implicit-exploration learner with clique-cover thresholds.
    GreenIxGraph {
        eps: f64,
        delta: f64,
        kappa_guess: usize,
    },
    /// Sampled-probability semi-bandit reduction over layered paths.
    Semibandit {
        eps: f64,
        delta: f64,
        /// Add the implicit-exploration shift to sampled probabilities.
        #[serde(default)]
        ix: bool,
    },
    /// Uniform-mixing importance-sampling comparison baseline.
    Baseline,
}

impl AlgorithmConfig {
    /// Short algorithm name used in CSV rows and summaries.
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmConfig::Blackbox { .. } => "blackbox",
            AlgorithmConfig::GreenIx { .. } => "green_ix",
            AlgorithmConfig::GreenIxGraph { .. } => "green_ix_graph",
            AlgorithmConfig::Semibandit { .. } => "semibandit",
            AlgorithmConfig::Baseline => "baseline",
        }
    }

    fn eps(&self) -> Option<f64> {
        match *self {
            AlgorithmConfig::Blackbox { eps, .. }
            | AlgorithmConfig::GreenIx { eps, .. }
            | AlgorithmConfig::GreenIxGraph { eps, .. }
            | AlgorithmConfig::Semibandit { eps, .. } => Some(eps),
            AlgorithmConfig::Baseline => None,
        }
    }

    fn delta(&self) -> Option<f64> {
        match *self {
            AlgorithmConfig::Blackbox { delta, .. }
            | AlgorithmConfig::GreenIx { delta, .. }
            | AlgorithmConfig::GreenIxGraph { delta, .. }
            | AlgorithmConfig::Semibandit { delta, .. } => Some(delta),
            AlgorithmConfig::Baseline => None,
        }
    }
}

/// Full-information engine behind the blackbox reduction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    #[default]
    Hedge,
    /// Hedge with a vanishing uniform floor; keeps per-phase play
    /// probabilities bounded away from zero for shifting comparators.
    NoisyHedge,
}

/// Environment descriptor; `mu_*` are per-round Bernoulli means.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// Bandit (edgeless) instance with one designated low-mean arm.
    SmalllossBandit { d: usize, mu_star: f64, mu_rest: f64 },
    /// Disjoint equal-size cliques with shared within-clique losses.
    CliqueUnion {
        num_cliques: usize,
        clique_size: usize,
        mu_star: f64,
        mu_rest: f64,
    },
    /// Piecewise-stationary bandit whose best arm switches.
    Shifting {
        d: usize,
        num_switches: usize,
        mu_star: f64,
        mu_rest: f64,
    },
    /// Adaptive adversary: loss 1 on the previously played arm.
    PunishLast { d: usize },
    /// Scripted loss table loaded from a JSON file.
    Script { path: String },
    /// Semi-bandit layered-path strategies.
    LayeredPaths {
        layers: usize,
        width: usize,
        mu_star: f64,
        mu_rest: f64,
    },
}

impl InstanceConfig {
    /// Short instance name used in CSV rows and summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            InstanceConfig::SmalllossBandit { .. } => "smallloss_bandit",
            InstanceConfig::CliqueUnion { .. } => "clique_union",
            InstanceConfig::Shifting { .. } => "shifting",
            InstanceConfig::PunishLast { .. } => "punish_last",
            InstanceConfig::Script { .. } => "script",
            InstanceConfig::LayeredPaths { .. } => "layered_paths",
        }
    }
}

/// Doubling wrapper parameters. The slack schedule itself is fixed
/// (`eps_tau = 2^-tau`); only the advance threshold is tunable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublingConfig {
    /// Scale factor on the phase-advance threshold Ψ.
    #[serde(default = "default_psi_scale")]
    pub psi_scale: f64,
    /// Override for the threshold exponent `q`; defaults to 2 for the
    /// blackbox reduction and 1 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

/// Deliberate corruption knobs for exercising the failure path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaultInjection {
    /// Multiply the monitor's freeze-certificate threshold: healthy runs
    /// then report violations, which must surface as a nonzero exit.
    InflateCertificateThreshold { factor: f64 },
}

/// Scripted loss table file: `d` arms, optional feedback edges, one row of
/// `d` losses per round.
#[derive(Debug, Deserialize)]
struct ScriptFile {
    d: usize,
    #[serde(default)]
    edges: Vec<(usize, usize)>,
    rows: Vec<Vec<f64>>,
}

impl ExperimentConfig {
    /// Validate ranges and cross-field consistency, probing instance
    /// construction once so malformed environments fail before any run.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.horizon == 0 {
            return Err(HarnessError::Config("T must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds must be non-empty".into()));
        }
        if let Some(eps) = self.algorithm.eps() {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(HarnessError::Config(format!(
                    "eps must lie in (0,1), got {eps}"
                )));
            }
        }
        if let Some(delta) = self.algorithm.delta() {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(HarnessError::Config(format!(
                    "delta must lie in (0,1), got {delta}"
                )));
            }
        }
        match self.algorithm {
            AlgorithmConfig::Blackbox {
                alpha_guess,
                eta_scale,
                ..
            } => {
                if alpha_guess == 0 {
                    return Err(HarnessError::Config("alpha_guess must be at least 1".into()));
                }
                if !(eta_scale > 0.0) || !eta_scale.is_finite() {
                    return Err(HarnessError::Config(format!(
                        "eta_scale must be positive, got {eta_scale}"
                    )));
                }
            }
            AlgorithmConfig::GreenIxGraph { kappa_guess, .. } => {
                if kappa_guess == 0 {
                    return Err(HarnessError::Config("kappa_guess must be at least 1".into()));
                }
            }
            _ => {}
        }
        if let Some(doubling) = &self.doubling {
            if !(doubling.psi_scale > 0.0) || !doubling.psi_scale.is_finite() {
                return Err(HarnessError::Config(format!(
                    "psi_scale must be positive, got {}",
                    doubling.psi_scale
                )));
            }
            if let Some(q) = doubling.q {
                if !(q >= 1.0) || !q.is_finite() {
                    return Err(HarnessError::Config(format!(
                        "doubling exponent q must be at least 1, got {q}"
                    )));
                }
            }
            if matches!(
                self.algorithm,
                AlgorithmConfig::Baseline | AlgorithmConfig::Semibandit { .. }
            ) {
                return Err(HarnessError::Config(format!(
                    "doubling is not supported for the {} algorithm",
                    self.algorithm.name()
                )));
            }
        }
        if let Some(FaultInjection::InflateCertificateThreshold { factor }) = self.fault_injection
        {
            if !(factor > 0.0) || !factor.is_finite() {
                return Err(HarnessError::Config(format!(
                    "fault factor must be positive, got {factor}"
                )));
            }
        }

        let semibandit_algo = matches!(self.algorithm, AlgorithmConfig::Semibandit { .. });
        let semibandit_inst = matches!(self.instance, InstanceConfig::LayeredPaths { .. });
        if semibandit_algo != semibandit_inst {
            return Err(HarnessError::Config(format!(
                "algorithm {} and instance {} mix set-valued and single-arm play",
                self.algorithm.name(),
                self.instance.kind()
            )));
        }

        // Probe-build the first seed's instance so malformed parameters are
        // config errors instead of mid-run failures.
        let probe_seed = self.seeds[0];
        if semibandit_algo {
            build_semibandit_instance(self, probe_seed)?;
        } else {
            let inst = build_graph_instance(self, probe_seed)?;
            let bandit_only = matches!(
                self.algorithm,
                AlgorithmConfig::GreenIx { .. } | AlgorithmConfig::Baseline
            );
            if bandit_only && inst.graph.edge_count() > 0 {
                return Err(HarnessError::Config(format!(
                    "algorithm {} expects bandit feedback but instance {} has edges",
                    self.algorithm.name(),
                    self.instance.kind()
                )));
            }
        }
        Ok(())
    }

    fn fault_factor(&self) -> f64 {
        match self.fault_injection {
            Some(FaultInjection::InflateCertificateThreshold { factor }) => factor,
            None => 1.0,
        }
    }

    fn run_id(&self, seed: u64) -> String {
        let base = self
            .name
            .clone()
            .unwrap_or_else(|| format!("{}-{}", self.algorithm.name(), self.instance.kind()));
        format!("{base}-s{seed}")
    }
}

/// Build the graph-feedback instance one seed index runs against.
pub fn build_graph_instance(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<GraphInstance, HarnessError> {
    match &cfg.instance {
        InstanceConfig::SmalllossBandit { d, mu_star, mu_rest } => Ok(make_smallloss_bandit(
            *d,
            cfg.horizon,
            *mu_star,
            *mu_rest,
            cfg.master_seed,
            seed,
        )?),
        InstanceConfig::CliqueUnion {
            num_cliques,
            clique_size,
            mu_star,
            mu_rest,
        } => Ok(make_clique_union(
            *num_cliques,
            *clique_size,
            cfg.horizon,
            *mu_star,
            *mu_rest,
            cfg.master_seed,
            seed,
        )?),
        InstanceConfig::Shifting {
            d,
            num_switches,
            mu_star,
            mu_rest,
        } => Ok(make_shifting(
            *d,
            cfg.horizon,
            *num_switches,
            *mu_star,
            *mu_rest,
            cfg.master_seed,
            seed,
        )?
        .instance),
        InstanceConfig::PunishLast { d } => Ok(punish_last_instance(*d, cfg.horizon)?),
        InstanceConfig::Script { path } => load_script(path, cfg.horizon),
        InstanceConfig::LayeredPaths { .. } => Err(HarnessError::Config(
            "layered_paths instances require the semibandit algorithm".into(),
        )),
    }
}

/// Build the semi-bandit instance one seed index runs against.
pub fn build_semibandit_instance(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<SemiBanditInstance, HarnessError> {
    match &cfg.instance {
        InstanceConfig::LayeredPaths {
            layers,
            width,
            mu_star,
            mu_rest,
        } => Ok(make_layered_paths(
            *layers,
            *width,
            cfg.horizon,
            *mu_star,
            *mu_rest,
            cfg.master_seed,
            seed,
        )?),
        other => Err(HarnessError::Config(format!(
            "semibandit runs require a layered_paths instance, got {}",
            other.kind()
        ))),
    }
}

fn load_script(path: &str, horizon: u64) -> Result<GraphInstance, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("script file {path}: {e}")))?;
    let file: ScriptFile = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("script file {path}: {e}")))?;
    let graph = FeedbackGraph::from_edges(file.d, &file.edges)
        .map_err(|e| HarnessError::Config(format!("script file {path}: {e}")))?;
    Ok(from_loss_table(graph, file.rows, horizon)?)
}

// ---------------------------------------------------------------------------
// Summary
// ---------------------------------------------------------------------------

/// Per-experiment aggregate, serialized as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub algo: String,
    pub instance: String,
    #[serde(rename = "T")]
    pub t: u64,
    /// Seed indices that ran (echoes the config).
    pub seeds: Vec<u64>,
    pub mean_regret: f64,
    pub std_regret: f64,
    /// Mean hindsight best-comparator cumulative loss.
    pub mean_lstar: f64,
    /// Log-log scaling fit over sweep values; sweeps only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_exponent: Option<f64>,
    /// Per-seed phase boundaries: the last round of each doubling phase
    /// (`[T]` for fixed-slack runs).
    pub phases: Vec<Vec<u64>>,
    /// Total invariant violations across all seeds (0 for a healthy run).
    pub violations: u64,
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregate per-seed outcomes into a summary.
pub fn summarize(
    cfg: &ExperimentConfig,
    outcomes: &[SeedOutcome],
    fitted_exponent: Option<f64>,
) -> Summary {
    let regrets: Vec<f64> = outcomes.iter().map(|o| o.regret).collect();
    let lstars: Vec<f64> = outcomes.iter().map(|o| o.best_fixed_loss).collect();
    let (mean_regret, std_regret) = mean_and_std(&regrets);
    let (mean_lstar, _) = mean_and_std(&lstars);
    Summary {
        algo: cfg.algorithm.name().into(),
        instance: cfg.instance.kind().into(),
        t: cfg.horizon,
        seeds: cfg.seeds.clone(),
        mean_regret,
        std_regret,
        mean_lstar,
        fitted_exponent,
        phases: outcomes.iter().map(|o| o.phase_boundaries()).collect(),
        violations: outcomes.iter().map(|o| o.violations).sum(),
    }
}

// ---------------------------------------------------------------------------
// CSV row buffer
// ---------------------------------------------------------------------------

/// Collects CSV rows with the pinned subsampling rule: every round when the
/// horizon is at most [`CSV_FULL_LIMIT`], otherwise [`CSV_CHECKPOINTS`]
/// evenly spaced rounds plus the last round of every doubling phase.
struct RowBuffer {
    emit_all: bool,
    horizon: u64,
    rows: Vec<String>,
    /// Previous round's row and whether it was already emitted; flushed
    /// retroactively when a phase boundary lands on it.
    pending: Option<(String, bool)>,
    prev_tau: usize,
}

impl RowBuffer {
    fn new(horizon: u64) -> Self {
        RowBuffer {
            emit_all: horizon <= CSV_FULL_LIMIT,
            horizon,
            rows: Vec::new(),
            pending: None,
            prev_tau: 0,
        }
    }

    /// True when `t` crosses one of the evenly spaced checkpoint marks.
    fn is_checkpoint(&self, t: u64) -> bool {
        if self.emit_all {
            return true;
        }
        (t * CSV_CHECKPOINTS) / self.horizon > ((t - 1) * CSV_CHECKPOINTS) / self.horizon
    }

    fn offer(&mut self, tau: usize, t: u64, row: String) {
        if let Some((prev_row, emitted)) = self.pending.take() {
            if !emitted && tau != self.prev_tau {
                // The previous round closed a phase: emit it retroactively.
                self.rows.push(prev_row);
            }
        }
        let emit = self.is_checkpoint(t);
        if emit {
            self.rows.push(row.clone());
        }
        self.pending = Some((row, emit));
        self.prev_tau = tau;
    }

    fn finish(self) -> Vec<String> {
        // The final round is always a checkpoint (`t = horizon` crosses the
        // last mark), so nothing pending can be lost here.
        self.rows
    }
}

// ---------------------------------------------------------------------------
// Invariant monitors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MonitorAlgo {
    Blackbox,
    GreenIx,
    GreenIxGraph,
    Semibandit,
    Baseline,
}

/// Streaming re-checker for the guarantees every round is supposed to
/// satisfy, driven purely by emitted [`RoundRecord`]s.
pub struct MonitorState {
    algo: MonitorAlgo,
    graph: FeedbackGraph,
    fault_factor: f64,
    /// Exact independence number for the observation-ratio bound (graph
    /// implicit-exploration mode on small graphs only).
    alpha_exact: Option<f64>,
    /// Independently recomputed per-sweep sample count (semi-bandit).
    expected_samples: Option<usize>,
    max_round_loss: f64,
    horizon: u64,
    /// Cumulative estimates for the engine gap bound (bandit mode).
    cum_est: Vec<f64>,
    cur_tau: usize,
    /// Total violations observed.
    pub violations: u64,
    /// First few violation messages, for reports.
    pub messages: Vec<String>,
}

impl MonitorState {
    fn for_graph_run(cfg: &ExperimentConfig, inst: &GraphInstance) -> Self {
        let algo = match cfg.algorithm {
            AlgorithmConfig::Blackbox { .. } => MonitorAlgo::Blackbox,
            AlgorithmConfig::GreenIx { .. } => MonitorAlgo::GreenIx,
            AlgorithmConfig::GreenIxGraph { .. } => MonitorAlgo::GreenIxGraph,
            AlgorithmConfig::Baseline => MonitorAlgo::Baseline,
            AlgorithmConfig::Semibandit { .. } => MonitorAlgo::Semibandit,
        };
        // The observation-ratio bound needs the true independence number;
        // compute it exactly where feasible, otherwise skip that check.
        let alpha_exact = if algo == MonitorAlgo::GreenIxGraph
            && inst.graph.len() <= EXACT_ALPHA_MAX_NODES
        {
            exact_independence_number(&inst.graph)
                .ok()
                .map(|a| a as f64)
        } else {
            None
        };
        MonitorState {
            algo,
            graph: inst.graph.clone(),
            fault_factor: cfg.fault_factor(),
            alpha_exact,
            expected_samples: None,
            max_round_loss: 1.0,
            horizon: cfg.horizon,
            cum_est: Vec::new(),
            cur_tau: 0,
            violations: 0,
            messages: Vec::new(),
        }
    }

    fn for_semibandit_run(cfg: &ExperimentConfig, num_elements: usize, m: usize) -> Self {
        // Recompute the per-sweep sample count from first principles so the
        // learner's arithmetic is cross-checked, not echoed.
        let expected_samples = cfg.algorithm.eps().zip(cfg.algorithm.delta()).map(
            |(eps, delta)| {
                let eps_prime = eps / 6.0;
                let e = num_elements as f64;
                let gamma = eps_prime / e;
                let ln_term = (e * cfg.horizon as f64 / delta).ln();
                ((1.0 + 2.0 * eps_prime) * m as f64 * ln_term / (eps_prime * gamma)).ceil()
                    as usize
            },
        );
        MonitorState {
            algo: MonitorAlgo::Semibandit,
            graph: FeedbackGraph::empty(0),
            fault_factor: cfg.fault_factor(),
            alpha_exact: None,
            expected_samples,
            max_round_loss: m as f64,
            horizon: cfg.horizon,
            cum_est: Vec::new(),
            cur_tau: 0,
            violations: 0,
            messages: Vec::new(),
        }
    }

    fn violation(&mut self, t: u64, message: String) {
        self.violations += 1;
        if self.messages.len() < MAX_VIOLATION_MESSAGES {
            self.messages.push(format!("t={t}: {message}"));
        }
    }

    /// Check one round's record; `tau` is the doubling phase it ran in.
    pub fn observe(&mut self, rec: &RoundRecord, tau: usize) {
        let t = rec.t;
        if let Err(e) = rec.validate(self.max_round_loss) {
            self.violation(t, format!("record validation failed: {e}"));
        }

        // Estimate cap: the bound must match the mode's formula and the
        // entries must respect it.
        let expected_bound = match self.algo {
            MonitorAlgo::Blackbox => Some(3.0 / rec.params.gamma),
            MonitorAlgo::GreenIx => Some(1.0 / rec.params.zeta),
            MonitorAlgo::GreenIxGraph => Some(1.0 / rec.params.gamma_prime),
            MonitorAlgo::Semibandit => Some(1.0 / rec.params.gamma),
            MonitorAlgo::Baseline => None,
        };
        if let Some(bound) = expected_bound {
            if !bound.is_finite() || bound <= 0.0 {
                self.violation(t, format!("degenerate estimate cap {bound}"));
            } else if (rec.estimated.bound() - bound).abs() > bound * MONITOR_TOL {
                self.violation(
                    t,
                    format!(
                        "estimate cap {} differs from the mode formula {bound}",
                        rec.estimated.bound()
                    ),
                );
            }
        }
        if rec.estimated.max_value() > rec.estimated.bound() * (1.0 + CAP_SLACK) {
            self.violation(
                t,
                format!(
                    "estimate {} exceeds cap {}",
                    rec.estimated.max_value(),
                    rec.estimated.bound()
                ),
            );
        }

        // Frozen ids live in the arm domain for the graph modes and in the
        // element domain for the semi-bandit mode (whose distributions range
        // over strategies instead).
        let d = match self.algo {
            MonitorAlgo::Semibandit => rec
                .observation_estimates
                .as_ref()
                .map_or(rec.base_dist.len(), Vec::len),
            _ => rec.base_dist.len(),
        };
        let mut frozen_mask = vec![false; d];
        for &i in &rec.frozen {
            if i < d {
                frozen_mask[i] = true;
            } else {
                self.violation(t, format!("frozen id {i} out of range {d}"));
            }
        }

        match self.algo {
            MonitorAlgo::Blackbox | MonitorAlgo::GreenIxGraph => {
                self.check_graph_certificate(rec, &frozen_mask);
                self.check_dist_consistency(rec, &frozen_mask);
            }
            MonitorAlgo::GreenIx => {
                let threshold = rec.params.gamma * self.fault_factor;
                for i in 0..d {
                    if !frozen_mask[i]
                        && rec.base_dist.prob(i) < threshold * (1.0 - MONITOR_TOL)
                    {
                        self.violation(
                            t,
                            format!(
                                "unfrozen arm {i} has play probability {} below {threshold}",
                                rec.base_dist.prob(i)
                            ),
                        );
                        break;
                    }
                }
                self.check_dist_consistency(rec, &frozen_mask);
                self.check_gap_bound(rec, tau);
            }
            MonitorAlgo::Semibandit => self.check_semibandit_certificate(rec, &frozen_mask),
            MonitorAlgo::Baseline => {}
        }

        if self.algo == MonitorAlgo::GreenIxGraph {
            self.check_observation_ratio(rec, &frozen_mask);
        }
    }

    /// Surviving-mass certificate: every unfrozen arm keeps at least the
    /// propagation threshold of unfrozen neighborhood mass.
    fn check_graph_certificate(&mut self, rec: &RoundRecord, frozen: &[bool]) {
        let t = rec.t;
        let threshold = rec.params.gamma_prime * self.fault_factor;
        for i in 0..frozen.len() {
            if frozen[i] {
                continue;
            }
            let mut mass = rec.base_dist.prob(i);
            for &j in self.graph.neighbors(i) {
                if !frozen[j] {
                    mass += rec.base_dist.prob(j);
                }
            }
            if mass < threshold * (1.0 - MONITOR_TOL) {
                self.violation(
                    t,
                    format!(
                        "unfrozen arm {i} keeps observation mass {mass} below {threshold}"
                    ),
                );
                return;
            }
        }
    }

    /// Sampled-probability certificate: unfrozen elements sit at or above
    /// the freezing threshold, frozen ones strictly below, and the per-sweep
    /// sample count matches its formula.
    fn check_semibandit_certificate(&mut self, rec: &RoundRecord, frozen: &[bool]) {
        let t = rec.t;
        let gamma = rec.params.gamma;
        let Some(obs) = rec.observation_estimates.as_ref() else {
            self.violation(t, "missing observation estimates".into());
            return;
        };
        if obs.len() != frozen.len() {
            self.violation(
                t,
                format!(
                    "observation estimates cover {} of {} elements",
                    obs.len(),
                    frozen.len()
                ),
            );
            return;
        }
        let threshold = gamma * self.fault_factor;
        for (e, (&p, &is_frozen)) in obs.iter().zip(frozen).enumerate() {
            if !is_frozen && p < threshold * (1.0 - MONITOR_TOL) {
                self.violation(
                    t,
                    format!("unfrozen element {e} has sampled probability {p} below {threshold}"),
                );
                break;
            }
            if is_frozen && p >= gamma * (1.0 + MONITOR_TOL) {
                self.violation(
                    t,
                    format!("frozen element {e} has sampled probability {p} at or above {gamma}"),
                );
                break;
            }
        }
        if let Some(expected) = self.expected_samples {
            if rec.samples_per_sweep != Some(expected) {
                self.violation(
                    t,
                    format!(
                        "per-sweep sample count {:?} differs from the formula value {expected}",
                        rec.samples_per_sweep
                    ),
                );
            }
        }
    }

    /// Frozen mass and the play distribution must both be exactly the base
    /// distribution restricted to unfrozen arms (then renormalized).
    fn check_dist_consistency(&mut self, rec: &RoundRecord, frozen: &[bool]) {
        let t = rec.t;
        let direct: f64 = rec.frozen.iter().map(|&i| rec.base_dist.prob(i)).sum();
        if (direct - rec.frozen_mass).abs() > 1e-9 + direct * MONITOR_TOL {
            self.violation(
                t,
                format!(
                    "frozen mass {} differs from the frozen arms' base mass {direct}",
                    rec.frozen_mass
                ),
            );
        }
        let survivor = 1.0 - rec.frozen_mass;
        for (i, &is_frozen) in frozen.iter().enumerate() {
            let (play, base) = (rec.play_dist.prob(i), rec.base_dist.prob(i));
            let fine = if is_frozen {
                play == 0.0
            } else {
                (play * survivor - base).abs() <= 1e-9
            };
            if !fine {
                self.violation(
                    t,
                    format!("play probability {play} of arm {i} is not renormalized base {base}"),
                );
                return;
            }
        }
    }

    /// Engine gap bound: within one phase, cumulative estimates of any two
    /// arms differ by at most `1/gamma + ln(1/gamma)/eta`.
    fn check_gap_bound(&mut self, rec: &RoundRecord, tau: usize) {
        let d = rec.estimated.len();
        if self.cum_est.len() != d || tau != self.cur_tau {
            self.cum_est = vec![0.0; d];
            self.cur_tau = tau;
        }
        for (c, &e) in self.cum_est.iter_mut().zip(rec.estimated.as_slice()) {
            *c += e;
        }
        let (gamma, eta) = (rec.params.gamma, rec.params.eta);
        if gamma <= 0.0 || eta <= 0.0 {
            return; // degenerate parameters already flagged by the cap check
        }
        let bound = 1.0 / gamma + (1.0 / gamma).ln() / eta;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &c in &self.cum_est {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        if hi - lo > bound * (1.0 + MONITOR_TOL) {
            self.violation(
                rec.t,
                format!("cumulative estimate gap {} exceeds the engine bound {bound}", hi - lo),
            );
        }
    }

    /// Observation-ratio bound: the played distribution's summed ratio
    /// `w_i / W_i` over its support never exceeds the independence number.
    fn check_observation_ratio(&mut self, rec: &RoundRecord, frozen: &[bool]) {
        let Some(alpha) = self.alpha_exact else {
            return;
        };
        let w = &rec.play_dist;
        let mut ratio = 0.0;
        for i in 0..frozen.len() {
            let wi = w.prob(i);
            if wi <= 0.0 {
                continue;
            }
            let mut mass = wi;
            for &j in self.graph.neighbors(i) {
                mass += w.prob(j);
            }
            ratio += wi / mass;
        }
        if ratio > alpha + 1e-6 {
            self.violation(
                rec.t,
                format!("observation ratio {ratio} exceeds the independence number {alpha}"),
            );
        }
    }

    /// End-of-run checks: phase boundaries advanced exactly when the rule
    /// tripped, the phase count respects its log bound, and guess doublings
    /// stayed within their budget.
    pub fn finalize(
        &mut self,
        phases: &[PhaseRecord],
        total_loss: f64,
        alpha_doublings: usize,
        alpha_doubling_cap: Option<usize>,
    ) {
        for phase in phases {
            if !phase.advanced {
                continue;
            }
            let threshold = phase.threshold();
            if phase.eps_tau * phase.loss_final <= threshold {
                self.violation(
                    phase.end_t,
                    format!(
                        "phase {} advanced without tripping its threshold {threshold}",
                        phase.tau
                    ),
                );
            }
            if phase.eps_tau * phase.loss_before_last > threshold * (1.0 + MONITOR_TOL) {
                self.violation(
                    phase.end_t,
                    format!(
                        "phase {} overshot: the rule had tripped before its last round",
                        phase.tau
                    ),
                );
            }
        }
        if !phases.is_empty() {
            let bound = (total_loss + 1.0).log2() + 1.0;
            if phases.len() as f64 > bound {
                self.violation(
                    self.horizon,
                    format!("{} phases exceed the log bound {bound}", phases.len()),
                );
            }
        }
        if let Some(cap) = alpha_doubling_cap {
            if alpha_doublings > cap {
                self.violation(
                    self.horizon,
                    format!("{alpha_doublings} guess doublings exceed the budget {cap}"),
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Per-seed runs
// ---------------------------------------------------------------------------

/// Everything one seed's run produced.
#[derive(Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub run_id: String,
    /// Complete per-seed CSV (header included).
    pub csv: String,
    /// Cumulative learner loss.
    pub learner_loss: f64,
    /// Hindsight best fixed comparator's cumulative loss (best arm, or best
    /// strategy in semi-bandit runs).
    pub best_fixed_loss: f64,
    /// `learner_loss - best_fixed_loss`.
    pub regret: f64,
    /// Doubling phases (empty for fixed-slack runs).
    pub phases: Vec<PhaseRecord>,
    /// Guess doublings performed (blackbox with alpha_doubling only).
    pub alpha_doublings: usize,
    pub violations: u64,
    pub violation_messages: Vec<String>,
    /// Played arm (or strategy) per round, for post-hoc evaluation.
    pub played: Vec<u64>,
}

impl SeedOutcome {
    /// Last round of each phase; `[horizon]` equivalent for fixed runs is
    /// produced by the caller who knows the horizon.
    fn phase_boundaries(&self) -> Vec<u64> {
        if self.phases.is_empty() {
            vec![self.played.len() as u64]
        } else {
            self.phases.iter().map(|p| p.end_t).collect()
        }
    }
}

/// Graph-mode learner dispatch, so fixed and doubling runs share one type.
enum GraphAlgo {
    Blackbox(Box<BlackboxLearner>),
    GreenIx(GreenIxLearner),
    GreenIxGraph(GreenIxGraphLearner),
    Baseline(BaselineLearner),
}

impl OnlineLearner for GraphAlgo {
    fn step(
        &mut self,
        t: u64,
        rng: &mut rand_chacha::ChaCha12Rng,
        feedback: &mut crate::learners::FeedbackFn<'_>,
    ) -> Result<RoundRecord, LearnerError> {
        match self {
            GraphAlgo::Blackbox(l) => l.step(t, rng, feedback),
            GraphAlgo::GreenIx(l) => l.step(t, rng, feedback),
            GraphAlgo::GreenIxGraph(l) => l.step(t, rng, feedback),
            GraphAlgo::Baseline(l) => l.step(t, rng, feedback),
        }
    }

    fn num_actions(&self) -> usize {
        match self {
            GraphAlgo::Blackbox(l) => l.num_actions(),
            GraphAlgo::GreenIx(l) => l.num_actions(),
            GraphAlgo::GreenIxGraph(l) => l.num_actions(),
            GraphAlgo::Baseline(l) => l.num_actions(),
        }
    }

    fn max_round_loss(&self) -> f64 {
        match self {
            GraphAlgo::Blackbox(l) => l.max_round_loss(),
            GraphAlgo::GreenIx(l) => l.max_round_loss(),
            GraphAlgo::GreenIxGraph(l) => l.max_round_loss(),
            GraphAlgo::Baseline(l) => l.max_round_loss(),
        }
    }
}

fn make_graph_learner(
    algo: &AlgorithmConfig,
    graph: &FeedbackGraph,
    eps: f64,
    horizon: u64,
    prev: Option<&GraphAlgo>,
) -> Result<GraphAlgo, LearnerError> {
    let d = graph.len();
    Ok(match algo {
        AlgorithmConfig::Blackbox {
            alpha_guess,
            engine,
            eta_scale,
            alpha_doubling,
            ..
        } => {
            let config = BlackboxConfig {
                eps,
                alpha_guess: *alpha_guess,
                engine: match engine {
                    EngineChoice::Hedge => EngineKind::Hedge,
                    EngineChoice::NoisyHedge => EngineKind::NoisyHedge { horizon },
                },
                eta_scale: *eta_scale,
                alpha_doubling: *alpha_doubling,
            };
            let mut learner = BlackboxLearner::new(graph.clone(), &config)?;
            if let Some(GraphAlgo::Blackbox(previous)) = prev {
                learner.carry_alpha_from(previous);
            }
            GraphAlgo::Blackbox(Box::new(learner))
        }
        AlgorithmConfig::GreenIx { .. } => {
            GraphAlgo::GreenIx(GreenIxLearner::new(d, &GreenIxConfig { eps })?)
        }
        AlgorithmConfig::GreenIxGraph { kappa_guess, .. } => {
            GraphAlgo::GreenIxGraph(GreenIxGraphLearner::new(
                graph.clone(),
                &GreenIxGraphConfig {
                    eps,
                    kappa_guess: *kappa_guess,
                },
            )?)
        }
        AlgorithmConfig::Baseline => {
            GraphAlgo::Baseline(BaselineLearner::new(d, &BaselineConfig { horizon })?)
        }
        AlgorithmConfig::Semibandit { .. } => {
            return Err(LearnerError::BadParameter {
                name: "algorithm",
                value: f64::NAN,
            })
        }
    })
}

/// Phase-advance threshold Ψ for the wrapped algorithm. The blackbox value
/// grows with the current guess, which is safe for the advance rule: the
/// threshold only ever rises within a phase.
fn phase_psi(learner: &GraphAlgo, d: usize, delta: f64, psi_scale: f64, kappa: f64) -> f64 {
    let df = d as f64;
    match learner {
        GraphAlgo::Blackbox(b) => {
            psi_scale * 48.0 * b.alpha_guess() as f64 * (df.ln() + (df / delta).ln())
        }
        GraphAlgo::GreenIx(_) => psi_scale * df * (df / delta).ln(),
        GraphAlgo::GreenIxGraph(_) => psi_scale * kappa * (df / delta).ln(),
        GraphAlgo::Baseline(_) => f64::INFINITY,
    }
}

/// Shared per-round bookkeeping for one seed's run.
struct Scratch {
    prev_play: Option<usize>,
    last_losses: Option<LossVector>,
    /// Per-arm (or per-element) cumulative true losses.
    cum_units: Vec<f64>,
    cum_loss: f64,
    best_fixed: f64,
    buffer: RowBuffer,
    monitor: MonitorState,
    played: Vec<u64>,
    abort: bool,
}

/// CSV row identity shared by all of a run's rows.
struct RowMeta {
    run_id: String,
    seed: u64,
    algo: &'static str,
    instance: String,
}

impl RowMeta {
    fn row(
        &self,
        tau: usize,
        t: u64,
        arm: usize,
        loss: f64,
        cum_loss: f64,
        best_fixed: f64,
        frozen_mass: f64,
    ) -> String {
        // Adding 0.0 turns a negative zero (an artifact of computing masses
        // as 1 - survivor) into a plain 0 in the output.
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.run_id,
            self.seed,
            self.algo,
            self.instance,
            tau,
            t,
            arm,
            loss + 0.0,
            cum_loss + 0.0,
            best_fixed + 0.0,
            frozen_mass + 0.0
        )
    }
}

fn doubling_params(cfg: &ExperimentConfig) -> Option<(f64, f64)> {
    cfg.doubling.as_ref().map(|doubling| {
        let default_q = match cfg.algorithm {
            AlgorithmConfig::Blackbox { .. } => 2.0,
            _ => 1.0,
        };
        (doubling.q.unwrap_or(default_q), doubling.psi_scale)
    })
}

/// Budget on guess doublings: with doubling on, the guess can exceed the
/// true independence number by at most one doubling step from its start.
fn alpha_doubling_cap(cfg: &ExperimentConfig, true_alpha: usize) -> Option<usize> {
    match cfg.algorithm {
        AlgorithmConfig::Blackbox {
            alpha_doubling: true,
            alpha_guess,
            ..
        } => {
            let ratio = true_alpha as f64 / alpha_guess as f64;
            Some(if ratio <= 1.0 {
                0
            } else {
                ratio.log2().ceil() as usize
            })
        }
        _ => None,
    }
}

fn run_graph_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    fail_fast: bool,
) -> Result<SeedOutcome, HarnessError> {
    let inst = build_graph_instance(cfg, seed)?;
    let d = inst.num_arms();
    let graph = inst.graph.clone();
    let meta = RowMeta {
        run_id: cfg.run_id(seed),
        seed,
        algo: cfg.algorithm.name(),
        instance: inst.kind.clone(),
    };
    let mut learner_rng = stream(cfg.master_seed, seed, STREAM_LEARNER);
    let scratch = RefCell::new(Scratch {
        prev_play: None,
        last_losses: None,
        cum_units: vec![0.0; d],
        cum_loss: 0.0,
        best_fixed: 0.0,
        buffer: RowBuffer::new(cfg.horizon),
        monitor: MonitorState::for_graph_run(cfg, &inst),
        played: Vec::with_capacity(cfg.horizon as usize),
        abort: false,
    });
    // Tracks the wrapped learner's current guess-doubling count; the value
    // survives the learner being consumed by the doubling driver.
    let doublings_seen = Cell::new(0usize);

    let mut step = |learner: &mut GraphAlgo, t: u64| -> Result<RoundRecord, LearnerError> {
        if scratch.borrow().abort {
            return Err(LearnerError::Feedback {
                t,
                message: "aborted after invariant violation".into(),
            });
        }
        let mut feedback = |tt: u64, played: usize| -> Result<Observed, LearnerError> {
            let mut s = scratch.borrow_mut();
            let losses = inst
                .losses(tt, s.prev_play)
                .map_err(|e| LearnerError::Feedback {
                    t: tt,
                    message: e.to_string(),
                })?;
            let revealed = graph
                .closed_neighborhood(played)
                .into_iter()
                .map(|j| (j, losses.get(j)))
                .collect();
            s.prev_play = Some(played);
            s.last_losses = Some(losses);
            Ok(revealed)
        };
        let record = learner.step(t, &mut learner_rng, &mut feedback)?;
        if let GraphAlgo::Blackbox(b) = learner {
            doublings_seen.set(b.alpha_doublings());
        }
        Ok(record)
    };

    let mut on_record = |rec: &RoundRecord, tau: usize| {
        let mut s = scratch.borrow_mut();
        let s = &mut *s;
        match s.last_losses.take() {
            Some(losses) => {
                for (c, &l) in s.cum_units.iter_mut().zip(losses.as_slice()) {
                    *c += l;
                }
            }
            None => s
                .monitor
                .violation(rec.t, "learner finished a round without feedback".into()),
        }
        s.cum_loss += rec.true_loss;
        s.best_fixed = s.cum_units.iter().copied().fold(f64::INFINITY, f64::min);
        s.monitor.observe(rec, tau);
        if fail_fast && s.monitor.violations > 0 {
            s.abort = true;
        }
        s.played.push(rec.played as u64);
        let row = meta.row(
            tau,
            rec.t,
            rec.played,
            rec.true_loss,
            s.cum_loss,
            s.best_fixed,
            rec.frozen_mass,
        );
        s.buffer.offer(tau, rec.t, row);
    };

    let phases = if let Some((q, psi_scale)) = doubling_params(cfg) {
        let delta = cfg.algorithm.delta().unwrap_or(0.05);
        let kappa = match cfg.algorithm {
            AlgorithmConfig::GreenIxGraph { kappa_guess, .. } => kappa_guess as f64,
            _ => d as f64,
        };
        let outcome = doubling_run(
            cfg.horizon,
            q,
            |eps_tau, prev| make_graph_learner(&cfg.algorithm, &graph, eps_tau, cfg.horizon, prev),
            |l| phase_psi(l, d, delta, psi_scale, kappa),
            &mut step,
            &mut on_record,
        );
        match outcome {
            Ok(out) => out.phases,
            Err(e) => return Err(seed_failure(&scratch.into_inner(), e)),
        }
    } else {
        let eps = cfg.algorithm.eps().unwrap_or(1.0);
        let mut learner = make_graph_learner(&cfg.algorithm, &graph, eps, cfg.horizon, None)?;
        for t in 1..=cfg.horizon {
            match step(&mut learner, t) {
                Ok(rec) => on_record(&rec, 0),
                Err(e) => return Err(seed_failure(&scratch.into_inner(), e)),
            }
        }
        if let GraphAlgo::Blackbox(b) = &learner {
            doublings_seen.set(b.alpha_doublings());
        }
        Vec::new()
    };

    let mut s = scratch.into_inner();
    let alpha_doublings = doublings_seen.get();
    s.monitor.finalize(
        &phases,
        s.cum_loss,
        alpha_doublings,
        alpha_doubling_cap(cfg, inst.true_alpha),
    );
    if fail_fast && s.monitor.violations > 0 {
        return Err(HarnessError::Invariant(s.monitor.messages.join("; ")));
    }
    Ok(finish_seed(cfg, seed, s, phases, alpha_doublings))
}

fn run_semibandit_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    fail_fast: bool,
) -> Result<SeedOutcome, HarnessError> {
    let inst = build_semibandit_instance(cfg, seed)?;
    let oracle = inst.oracle();
    let num_elements = oracle.num_elements();
    let meta = RowMeta {
        run_id: cfg.run_id(seed),
        seed,
        algo: cfg.algorithm.name(),
        instance: inst.kind.clone(),
    };
    let AlgorithmConfig::Semibandit { eps, delta, ix } = cfg.algorithm else {
        return Err(HarnessError::Config(
            "semibandit runner requires the semibandit algorithm".into(),
        ));
    };
    let mut learner = SemiBanditLearner::new(
        oracle,
        &SemiBanditConfig {
            eps,
            delta,
            horizon: cfg.horizon,
            ix,
        },
    )?;
    let mut learner_rng = stream(cfg.master_seed, seed, STREAM_LEARNER);
    let no_forbidden = vec![false; num_elements];
    let scratch = RefCell::new(Scratch {
        prev_play: None,
        last_losses: None,
        cum_units: vec![0.0; num_elements],
        cum_loss: 0.0,
        best_fixed: 0.0,
        buffer: RowBuffer::new(cfg.horizon),
        monitor: MonitorState::for_semibandit_run(cfg, num_elements, oracle.strategy_size()),
        played: Vec::with_capacity(cfg.horizon as usize),
        abort: false,
    });

    for t in 1..=cfg.horizon {
        if scratch.borrow().abort {
            break;
        }
        let mut feedback = |tt: u64, strategy: usize| -> Result<Observed, LearnerError> {
            let mut s = scratch.borrow_mut();
            let losses = inst
                .element_losses(tt)
                .map_err(|e| LearnerError::Feedback {
                    t: tt,
                    message: e.to_string(),
                })?;
            let revealed = oracle
                .elements_of(strategy)
                .into_iter()
                .map(|e| (e, losses.get(e)))
                .collect();
            s.prev_play = Some(strategy);
            s.last_losses = Some(losses);
            Ok(revealed)
        };
        let rec = match learner.step(t, &mut learner_rng, &mut feedback) {
            Ok(rec) => rec,
            Err(e) => return Err(seed_failure(&scratch.into_inner(), e)),
        };
        let mut s = scratch.borrow_mut();
        let s = &mut *s;
        match s.last_losses.take() {
            Some(losses) => {
                for (c, &l) in s.cum_units.iter_mut().zip(losses.as_slice()) {
                    *c += l;
                }
            }
            None => s
                .monitor
                .violation(rec.t, "learner finished a round without feedback".into()),
        }
        s.cum_loss += rec.true_loss;
        s.best_fixed = match oracle.min_cost(&s.cum_units, &no_forbidden) {
            Some(best) => oracle
                .elements_of(best)
                .into_iter()
                .map(|e| s.cum_units[e])
                .sum(),
            None => f64::INFINITY,
        };
        s.monitor.observe(&rec, 0);
        if fail_fast && s.monitor.violations > 0 {
            s.abort = true;
        }
        s.played.push(rec.played as u64);
        let row = meta.row(
            0,
            rec.t,
            rec.played,
            rec.true_loss,
            s.cum_loss,
            s.best_fixed,
            rec.frozen_mass,
        );
        s.buffer.offer(0, rec.t, row);
    }

    let mut s = scratch.into_inner();
    s.monitor.finalize(&[], s.cum_loss, 0, None);
    if fail_fast && s.monitor.violations > 0 {
        return Err(HarnessError::Invariant(s.monitor.messages.join("; ")));
    }
    Ok(finish_seed(cfg, seed, s, Vec::new(), 0))
}

/// Package one violation-aborted or failed run into the error to surface:
/// an abort triggered by the monitor beats the synthetic step error.
fn seed_failure(scratch: &Scratch, err: LearnerError) -> HarnessError {
    if scratch.abort {
        HarnessError::Invariant(scratch.monitor.messages.join("; "))
    } else {
        err.into()
    }
}

fn finish_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    scratch: Scratch,
    phases: Vec<PhaseRecord>,
    alpha_doublings: usize,
) -> SeedOutcome {
    let mut csv = String::with_capacity(scratch.buffer.rows.len() * 64 + CSV_HEADER.len() + 1);
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    let rows = scratch.buffer.finish();
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    let regret = scratch.cum_loss - scratch.best_fixed;
    SeedOutcome {
        seed,
        run_id: cfg.run_id(seed),
        csv,
        learner_loss: scratch.cum_loss,
        best_fixed_loss: scratch.best_fixed,
        regret,
        phases,
        alpha_doublings,
        violations: scratch.monitor.violations,
        violation_messages: scratch.monitor.messages,
        played: scratch.played,
    }
}

// ---------------------------------------------------------------------------
// Experiment orchestration
// ---------------------------------------------------------------------------

/// Run every configured seed (in parallel on the current thread pool) and
/// return the per-seed outcomes in config order.
pub fn run_seeds(cfg: &ExperimentConfig, fail_fast: bool) -> Result<Vec<SeedOutcome>, HarnessError> {
    cfg.validate()?;
    let semibandit = matches!(cfg.algorithm, AlgorithmConfig::Semibandit { .. });
    let results: Vec<Result<SeedOutcome, HarnessError>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            if semibandit {
                run_semibandit_seed(cfg, seed, fail_fast)
            } else {
                run_graph_seed(cfg, seed, fail_fast)
            }
        })
        .collect();
    results.into_iter().collect()
}

/// Run an experiment and write one CSV per seed plus `summary.json` into
/// `out_dir`. `parallel` caps worker threads (`None` = current pool);
/// `assert_flag` ORs with the config's `assertions` switch.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    parallel: Option<usize>,
    assert_flag: bool,
) -> Result<Summary, HarnessError> {
    let outcomes = run_pooled(cfg, parallel, assert_flag)?;
    let summary = summarize(cfg, &outcomes, None);
    write_outputs(&outcomes, &summary, out_dir)?;
    Ok(summary)
}

fn run_pooled(
    cfg: &ExperimentConfig,
    parallel: Option<usize>,
    assert_flag: bool,
) -> Result<Vec<SeedOutcome>, HarnessError> {
    let fail_fast = cfg.assertions || assert_flag;
    match parallel {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HarnessError::Runtime(format!("thread pool: {e}")))?;
            pool.install(|| run_seeds(cfg, fail_fast))
        }
        None => run_seeds(cfg, fail_fast),
    }
}

fn write_outputs(
    outcomes: &[SeedOutcome],
    summary: &Summary,
    out_dir: &Path,
) -> Result<(), HarnessError> {
    fs::create_dir_all(out_dir)?;
    for outcome in outcomes {
        fs::write(out_dir.join(format!("{}.csv", outcome.run_id)), &outcome.csv)?;
    }
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| HarnessError::Runtime(format!("summary serialization: {e}")))?;
    fs::write(out_dir.join("summary.json"), json + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Parameters a sweep may vary.
pub const SWEEP_PARAMS: [&str; 5] = ["mu_star", "d", "num_cliques", "T", "K"];

fn as_count(param: &str, value: f64) -> Result<usize, HarnessError> {
    if value < 1.0 || value.fract() != 0.0 || !value.is_finite() {
        return Err(HarnessError::Config(format!(
            "sweep value {value} for {param} must be a positive integer"
        )));
    }
    Ok(value as usize)
}

/// Clone the config with one swept parameter replaced.
pub fn apply_param(
    cfg: &ExperimentConfig,
    param: &str,
    value: f64,
) -> Result<ExperimentConfig, HarnessError> {
    let mut out = cfg.clone();
    let unsupported = |param: &str| {
        Err(HarnessError::Config(format!(
            "instance {} does not support sweeping {param}",
            cfg.instance.kind()
        )))
    };
    match param {
        "mu_star" => match &mut out.instance {
            InstanceConfig::SmalllossBandit { mu_star, .. }
            | InstanceConfig::CliqueUnion { mu_star, .. }
            | InstanceConfig::Shifting { mu_star, .. }
            | InstanceConfig::LayeredPaths { mu_star, .. } => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(HarnessError::Config(format!(
                        "mu_star must lie in [0,1], got {value}"
                    )));
                }
                *mu_star = value;
            }
            _ => return unsupported(param),
        },
        "d" => {
            let count = as_count(param, value)?;
            match &mut out.instance {
                InstanceConfig::SmalllossBandit { d, .. }
                | InstanceConfig::Shifting { d, .. }
                | InstanceConfig::PunishLast { d } => *d = count,
                InstanceConfig::CliqueUnion {
                    num_cliques,
                    clique_size,
                    ..
                } => {
                    // Growing d at fixed clique count keeps alpha constant,
                    // which is the point of the d sweep.
                    if count % *num_cliques != 0 {
                        return Err(HarnessError::Config(format!(
                            "d = {count} is not divisible by num_cliques = {num_cliques}"
                        )));
                    }
                    *clique_size = count / *num_cliques;
                }
                _ => return unsupported(param),
            }
        }
        "num_cliques" => match &mut out.instance {
            InstanceConfig::CliqueUnion { num_cliques, .. } => {
                *num_cliques = as_count(param, value)?;
            }
            _ => return unsupported(param),
        },
        "T" => out.horizon = as_count(param, value)? as u64,
        "K" => match &mut out.instance {
            InstanceConfig::Shifting { num_switches, .. } => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(HarnessError::Config(format!(
                        "K must be a non-negative integer, got {value}"
                    )));
                }
                *num_switches = value as usize;
            }
            _ => return unsupported(param),
        },
        other => {
            return Err(HarnessError::Config(format!(
                "unknown sweep parameter {other}; expected one of {SWEEP_PARAMS:?}"
            )))
        }
    }
    Ok(out)
}

/// One sweep value's aggregate, kept for the final fit.
#[derive(Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: Summary,
}

/// Run the experiment across `values` of `param`, write per-value outputs
/// into subdirectories, fit the scaling exponent, and write the top-level
/// sweep summary. The fit regresses regret against the swept scale: the
/// measured mean comparator loss for `mu_star`/`T` sweeps, the raw value
/// otherwise.
pub fn sweep_experiment(
    cfg: &ExperimentConfig,
    param: &str,
    values: &[f64],
    out_dir: &Path,
    parallel: Option<usize>,
    assert_flag: bool,
) -> Result<Summary, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Config("sweep values must be non-empty".into()));
    }
    let mut points = Vec::with_capacity(values.len());
    let mut all_outcomes: Vec<SeedOutcome> = Vec::new();
    for &value in values {
        let sub = apply_param(cfg, param, value)?;
        let outcomes = run_pooled(&sub, parallel, assert_flag)?;
        let summary = summarize(&sub, &outcomes, None);
        let sub_dir = out_dir.join(format!("{param}-{value}"));
        write_outputs(&outcomes, &summary, &sub_dir)?;
        points.push(SweepPoint { value, summary });
        all_outcomes.extend(outcomes);
    }

    let fit_points: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let x = match param {
                "mu_star" | "T" => p.summary.mean_lstar,
                _ => p.value,
            };
            (x, p.summary.mean_regret)
        })
        .collect();
    // A fit can legitimately fail (non-positive regrets on easy configs);
    // the summary then carries a null exponent rather than aborting.
    let exponent = match fit_scaling_exponent(&fit_points) {
        Ok(report) => report.exponent,
        Err(e) => {
            eprintln!("warning: scaling fit failed: {e}");
            f64::NAN
        }
    };

    let mut summary = summarize(cfg, &all_outcomes, Some(exponent));
    // Per-value seed lists repeat; report the configured seeds once.
    summary.seeds = cfg.seeds.clone();
    fs::create_dir_all(out_dir)?;
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| HarnessError::Runtime(format!("summary serialization: {e}")))?;
    fs::write(out_dir.join("summary.json"), json + "\n")?;
    Ok(summary)
}

/// Rebuild the full loss schedule a run faced from its played trace.
/// Environments derive round losses counter-style, so this is exact, and
/// feeding the played arms back reproduces adaptive rows too.
pub fn regenerate_schedule(
    inst: &GraphInstance,
    played: &[u64],
) -> Result<Vec<LossVector>, HarnessError> {
    let mut prev: Option<usize> = None;
    let mut schedule = Vec::with_capacity(played.len());
    for (i, &arm) in played.iter().enumerate() {
        let t = i as u64 + 1;
        let losses = inst
            .losses(t, prev)
            .map_err(|e| HarnessError::Runtime(format!("schedule regeneration: {e}")))?;
        prev = Some(arm as usize);
        schedule.push(losses);
    }
    Ok(schedule)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn green_ix_config(t: u64, seeds: Vec<u64>) -> ExperimentConfig {
        ExperimentConfig {
            name: None,
            algorithm: AlgorithmConfig::GreenIx {
                eps: 0.5,
                delta: 0.05,
            },
            instance: InstanceConfig::SmalllossBandit {
                d: 4,
                mu_star: 0.05,
                mu_rest: 0.5,
            },
            horizon: t,
            seeds,
            master_seed: 7,
            doubling: None,
            assertions: false,
            output_dir: None,
            fault_injection: None,
        }
    }

    #[test]
    fn config_parses_from_json() {
        let text = r#"{
            "algorithm": {"name": "blackbox", "eps": 0.25, "delta": 0.05,
                          "alpha_guess": 5, "engine": "noisy_hedge"},
            "instance": {"kind": "clique_union", "num_cliques": 5,
                         "clique_size": 4, "mu_star": 0.01, "mu_rest": 0.5},
            "T": 64,
            "seeds": [0, 1],
            "doubling": {"psi_scale": 0.5}
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.algorithm.name(), "blackbox");
        assert_eq!(cfg.instance.kind(), "clique_union");
        assert_eq!(cfg.horizon, 64);
    }

    #[test]
    fn config_rejects_missing_eps() {
        let text = r#"{
            "algorithm": {"name": "green_ix", "delta": 0.05},
            "instance": {"kind": "smallloss_bandit", "d": 3, "mu_star": 0.1, "mu_rest": 0.5},
            "T": 10,
            "seeds": [0]
        }"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }

    #[test]
    fn config_rejects_out_of_range_eps_and_mismatched_instance() {
        let mut cfg = green_ix_config(10, vec![0]);
        cfg.algorithm = AlgorithmConfig::GreenIx {
            eps: 1.0,
            delta: 0.05,
        };
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));

        let mut cfg = green_ix_config(10, vec![0]);
        cfg.instance = InstanceConfig::CliqueUnion {
            num_cliques: 2,
            clique_size: 2,
            mu_star: 0.1,
            mu_rest: 0.5,
        };
        // Bandit-only algorithm on a graph with edges.
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));

        let mut cfg = green_ix_config(10, vec![0]);
        cfg.instance = InstanceConfig::LayeredPaths {
            layers: 2,
            width: 2,
            mu_star: 0.1,
            mu_rest: 0.5,
        };
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn row_buffer_emits_all_rows_for_short_runs() {
        let mut buffer = RowBuffer::new(100);
        for t in 1..=100 {
            buffer.offer(0, t, format!("row{t}"));
        }
        assert_eq!(buffer.finish().len(), 100);
    }

    #[test]
    fn row_buffer_subsamples_long_runs_and_keeps_phase_boundaries() {
        let horizon = 200_000u64;
        let mut buffer = RowBuffer::new(horizon);
        // Phase switches at t = 1000 (not a checkpoint: checkpoints fall
        // every ~195 rounds offset at multiples of horizon/1024).
        let phase_end = 1000u64;
        assert!(!RowBuffer::new(horizon).is_checkpoint(phase_end));
        for t in 1..=horizon {
            let tau = usize::from(t > phase_end);
            buffer.offer(tau, t, format!("{t}"));
        }
        let rows = buffer.finish();
        assert_eq!(rows.len(), CSV_CHECKPOINTS as usize + 1);
        assert!(rows.iter().any(|r| r == "1000"));
        // Rows stay strictly increasing in t.
        let ts: Vec<u64> = rows.iter().map(|r| r.parse().unwrap()).collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*ts.last().unwrap(), horizon);
    }

    #[test]
    fn tiny_experiment_writes_outputs_and_stays_clean() {
        let cfg = green_ix_config(60, vec![0, 1]);
        let dir = tempdir().unwrap();
        let summary = run_experiment(&cfg, dir.path(), None, true).unwrap();
        assert_eq!(summary.violations, 0);
        assert_eq!(summary.phases, vec![vec![60], vec![60]]);
        assert!(summary.fitted_exponent.is_none());

        let csv = fs::read_to_string(dir.path().join("green_ix-smallloss_bandit-s0.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.count(), 60);

        let json = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in [
            "algo",
            "instance",
            "T",
            "seeds",
            "mean_regret",
            "std_regret",
            "mean_lstar",
            "phases",
            "violations",
        ] {
            assert!(value.get(key).is_some(), "summary key {key} missing");
        }
        assert!(value.get("fitted_exponent").is_none());
    }

    #[test]
    fn reruns_are_byte_identical_and_parallel_invariant() {
        let cfg = green_ix_config(50, vec![0, 1, 2]);
        let (d1, d2, d3) = (tempdir().unwrap(), tempdir().unwrap(), tempdir().unwrap());
        run_experiment(&cfg, d1.path(), None, false).unwrap();
        run_experiment(&cfg, d2.path(), None, false).unwrap();
        run_experiment(&cfg, d3.path(), Some(3), false).unwrap();
        for seed in 0..3 {
            let name = format!("green_ix-smallloss_bandit-s{seed}.csv");
            let a = fs::read(d1.path().join(&name)).unwrap();
            let b = fs::read(d2.path().join(&name)).unwrap();
            let c = fs::read(d3.path().join(&name)).unwrap();
            assert_eq!(a, b, "rerun differs for seed {seed}");
            assert_eq!(a, c, "parallel run differs for seed {seed}");
        }
        let a = fs::read(d1.path().join("summary.json")).unwrap();
        let c = fs::read(d3.path().join("summary.json")).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn fault_injection_reports_violations_and_fails_fast() {
        let mut cfg = green_ix_config(40, vec![0]);
        cfg.fault_injection = Some(FaultInjection::InflateCertificateThreshold { factor: 50.0 });
        let dir = tempdir().unwrap();
        let summary = run_experiment(&cfg, dir.path(), None, false).unwrap();
        assert!(summary.violations > 0, "inflated threshold must fire");

        let err = run_experiment(&cfg, dir.path(), None, true);
        assert!(matches!(err, Err(HarnessError::Invariant(_))));
    }

    #[test]
    fn blackbox_doubling_records_phases() {
        let cfg = ExperimentConfig {
            name: None,
            algorithm: AlgorithmConfig::Blackbox {
                eps: 0.5,
                delta: 0.1,
                alpha_guess: 2,
                engine: EngineChoice::Hedge,
                eta_scale: 1.0,
                alpha_doubling: false,
            },
            instance: InstanceConfig::CliqueUnion {
                num_cliques: 2,
                clique_size: 2,
                mu_star: 0.2,
                mu_rest: 0.8,
            },
            horizon: 3000,
            seeds: vec![0],
            master_seed: 3,
            doubling: Some(DoublingConfig {
                psi_scale: 0.02,
                q: None,
            }),
            assertions: true,
            output_dir: None,
            fault_injection: None,
        };
        let outcomes = run_seeds(&cfg, true).unwrap();
        let outcome = &outcomes[0];
        assert!(outcome.violations == 0);
        assert!(
            outcome.phases.len() >= 2,
            "tiny psi must force at least one advance, got {}",
            outcome.phases.len()
        );
        assert_eq!(outcome.phases.last().unwrap().end_t, 3000);
        let summary = summarize(&cfg, &outcomes, None);
        assert_eq!(summary.phases[0].len(), outcome.phases.len());
    }

    #[test]
    fn semibandit_run_produces_strategy_rows() {
        let cfg = ExperimentConfig {
            name: Some("paths".into()),
            algorithm: AlgorithmConfig::Semibandit {
                eps: 0.9,
                delta: 0.1,
                ix: false,
            },
            instance: InstanceConfig::LayeredPaths {
                layers: 2,
                width: 2,
                mu_star: 0.1,
                mu_rest: 0.6,
            },
            horizon: 30,
            seeds: vec![0],
            master_seed: 11,
            doubling: None,
            assertions: true,
            output_dir: None,
            fault_injection: None,
        };
        let outcomes = run_seeds(&cfg, true).unwrap();
        let outcome = &outcomes[0];
        assert_eq!(outcome.violations, 0);
        assert_eq!(outcome.played.len(), 30);
        assert!(outcome.best_fixed_loss <= outcome.learner_loss + 1e-9);
        assert!(outcome.csv.starts_with(CSV_HEADER));
        // max strategy loss is layers = 2 per round
        assert!(outcome.learner_loss <= 60.0);
    }

    #[test]
    fn sweep_runs_values_and_fits_an_exponent() {
        let mut cfg = green_ix_config(400, vec![0, 1, 2]);
        cfg.algorithm = AlgorithmConfig::GreenIx {
            eps: 0.3,
            delta: 0.05,
        };
        let dir = tempdir().unwrap();
        let summary = sweep_experiment(
            &cfg,
            "mu_star",
            &[0.02, 0.1, 0.3],
            dir.path(),
            None,
            false,
        )
        .unwrap();
        assert!(summary.fitted_exponent.is_some());
        for value in ["0.02", "0.1", "0.3"] {
            assert!(
                dir.path().join(format!("mu_star-{value}")).join("summary.json").exists(),
                "per-value summary for {value} missing"
            );
        }
        let top = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let json: serde_json::Value = serde_json::from_str(&top).unwrap();
        assert!(json.get("fitted_exponent").is_some());
    }

    #[test]
    fn apply_param_respects_instance_shapes() {
        let cfg = green_ix_config(10, vec![0]);
        assert!(apply_param(&cfg, "mu_star", 0.2).is_ok());
        assert!(apply_param(&cfg, "d", 6.0).is_ok());
        assert!(apply_param(&cfg, "K", 2.0).is_err()); // not a shifting instance
        assert!(apply_param(&cfg, "num_cliques", 2.0).is_err());
        assert!(apply_param(&cfg, "bogus", 1.0).is_err());
        assert!(apply_param(&cfg, "T", 0.5).is_err());

        let mut clique = cfg.clone();
        clique.instance = InstanceConfig::CliqueUnion {
            num_cliques: 5,
            clique_size: 4,
            mu_star: 0.1,
            mu_rest: 0.5,
        };
        let grown = apply_param(&clique, "d", 40.0).unwrap();
        match grown.instance {
            InstanceConfig::CliqueUnion { clique_size, .. } => assert_eq!(clique_size, 8),
            _ => unreachable!(),
        }
        assert!(apply_param(&clique, "d", 42.0).is_err()); // not divisible
    }

    #[test]
    fn regenerated_schedule_matches_recorded_losses() {
        let cfg = green_ix_config(25, vec![4]);
        let outcomes = run_seeds(&cfg, true).unwrap();
        let outcome = &outcomes[0];
        let inst = build_graph_instance(&cfg, 4).unwrap();
        let schedule = regenerate_schedule(&inst, &outcome.played).unwrap();
        let replayed: f64 = outcome
            .played
            .iter()
            .zip(&schedule)
            .map(|(&arm, losses)| losses.get(arm as usize))
            .sum();
        assert!((replayed - outcome.learner_loss).abs() < 1e-9);
    }

    #[test]
    fn punish_last_rows_reflect_adaptive_losses() {
        let mut cfg = green_ix_config(40, vec![0]);
        cfg.instance = InstanceConfig::PunishLast { d: 2 };
        cfg.algorithm = AlgorithmConfig::GreenIx {
            eps: 0.5,
            delta: 0.05,
        };
        let outcomes = run_seeds(&cfg, true).unwrap();
        let outcome = &outcomes[0];
        assert_eq!(outcome.violations, 0);
        // Round 1 is all-zeros; afterwards loss 1 hits exactly the previous
        // play, so the learner's loss equals the number of repeats.
        let repeats = outcome
            .played
            .windows(2)
            .filter(|w| w[0] == w[1])
            .count() as f64;
        assert!((outcome.learner_loss - repeats).abs() < 1e-9);
    }
}
