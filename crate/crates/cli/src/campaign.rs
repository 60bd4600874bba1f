//! Seeded multi-trial campaigns: trial i runs with seed base+i, trials run
//! on a bounded worker pool, and aggregation order is fixed by trial index
//! so the worker count never changes any output byte.

use crate::params::{resolve_params, solve, Alg, SolveOverrides};
use rainbow_nibble::constructions::{random_instance, RandomKind};
use rainbow_nibble::graph::EdgeColoredGraph;
use rainbow_nibble::report::{Outcome, RunReport};
use rainbow_nibble::trajectory::{compare, DeviationSummary};
use serde::Serialize;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid campaign config: {reason}")]
    ConfigInvalid { reason: String },
    #[error("could not write {path}: {source}")]
    WriteFailed { path: String, source: std::io::Error },
}

/// Where each trial's instance comes from.
#[derive(Debug, Clone)]
pub enum InstanceSource {
    /// One shared graph for every trial.
    Shared(EdgeColoredGraph),
    /// A fresh generated instance per trial, seeded with the trial seed.
    PerTrial(RandomKind),
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub alg: Alg,
    pub source: InstanceSource,
    pub overrides: SolveOverrides,
    pub trials: usize,
    pub base_seed: u64,
    pub workers: usize,
    /// Per-trial reports land here as `trial-<index>.json` when set.
    pub out_dir: Option<PathBuf>,
}

/// Outcome tallies plus the deviation statistics of every trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct CampaignSummary {
    pub algorithm: String,
    pub trials: usize,
    pub base_seed: u64,
    pub full: usize,
    pub partial: usize,
    pub failure: usize,
    pub success_rate: f64,
    pub validity_rate: f64,
    pub mean_matched: f64,
    /// Mean over all (trial, iteration) samples of observed/scheduled
    /// class-size (or A-degree) ratio, and the worst absolute deviation.
    pub mean_size_ratio: Option<f64>,
    pub max_size_deviation: Option<f64>,
    pub deviation_samples: usize,
    pub outcomes: Vec<String>,
}

#[derive(Debug)]
pub struct CampaignOutput {
    pub summary: CampaignSummary,
    pub reports: Vec<RunReport>,
}

/// The absolute scale turning a record's normalized `s_ideal` into the
/// scheduled floor s̃_t for this family.
fn size_scale(alg: Alg, report: &RunReport) -> f64 {
    let c = &report.config;
    let q = c["q"].as_f64().unwrap_or(1.0);
    match alg {
        Alg::Thm1 | Alg::Thm3 => (1.0 + c["eps"].as_f64().unwrap_or(0.0)) * q,
        Alg::Thmq => q,
    }
}

fn degree_scale(alg: Alg, report: &RunReport) -> f64 {
    let c = &report.config;
    let q = c["q"].as_f64().unwrap_or(1.0);
    match alg {
        Alg::Thm1 | Alg::Thm3 => q,
        // Degrees are calibrated against 2(1+eps)q on both sides.
        Alg::Thmq => 2.0 * (1.0 + c["eps"].as_f64().unwrap_or(0.0)) * q,
    }
}

fn run_trial(cfg: &CampaignConfig, index: usize) -> RunReport {
    let seed = cfg.base_seed.wrapping_add(index as u64);
    let graph = match &cfg.source {
        InstanceSource::Shared(g) => g.clone(),
        InstanceSource::PerTrial(kind) => match random_instance(*kind, seed) {
            Ok(g) => g,
            Err(e) => {
                // The campaign never aborts on one trial: synthesize a
                // failure report carrying the generator error.
                return failure_report(cfg, seed, format!("instance generation failed: {e}"));
            }
        },
    };
    match resolve_params(cfg.alg, &graph, &cfg.overrides) {
        Ok(params) => solve(&graph, &params, seed),
        Err(e) => failure_report(cfg, seed, format!("parameter resolution failed: {e}")),
    }
}

fn failure_report(cfg: &CampaignConfig, seed: u64, message: String) -> RunReport {
    let mut diagnostics = rainbow_nibble::report::Diagnostics::default();
    diagnostics.flag(message);
    RunReport {
        algorithm: format!("{}-unresolved", cfg.alg.as_tag()),
        seed,
        target: 0,
        matching: rainbow_nibble::graph::RainbowMatching::new(),
        matched_count: 0,
        outcome: Outcome::Failure,
        valid: false,
        iterations_run: 0,
        diagnostics,
        trajectory: Vec::new(),
        config: serde_json::json!({}),
        wall_time_ms: 0,
    }
}

/// Writes `contents` to `dir/name` atomically (temp file + rename).
fn write_atomic(dir: &PathBuf, name: &str, contents: &str) -> Result<(), CampaignError> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let goal = dir.join(name);
    let fail = |source| CampaignError::WriteFailed { path: goal.display().to_string(), source };
    std::fs::write(&tmp, contents).map_err(fail)?;
    std::fs::rename(&tmp, &goal).map_err(fail)?;
    Ok(())
}

/// Runs the campaign on up to `cfg.workers` threads. Trial reports are
/// returned (and written) in trial order no matter how threads interleave.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignOutput, CampaignError> {
    if cfg.trials == 0 {
        return Err(CampaignError::ConfigInvalid { reason: "trials must be positive".into() });
    }
    if cfg.workers == 0 {
        return Err(CampaignError::ConfigInvalid { reason: "workers must be positive".into() });
    }
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir).map_err(|source| CampaignError::WriteFailed {
            path: dir.display().to_string(),
            source,
        })?;
    }

    let slots: Mutex<Vec<Option<RunReport>>> = Mutex::new((0..cfg.trials).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let threads = cfg.workers.min(cfg.trials);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cfg.trials {
                    break;
                }
                let report = run_trial(cfg, i);
                slots.lock().expect("no panics hold this lock")[i] = Some(report);
            });
        }
    });
    let reports: Vec<RunReport> = slots
        .into_inner()
        .expect("worker threads joined")
        .into_iter()
        .map(|r| r.expect("every trial index was claimed"))
        .collect();

    if let Some(dir) = &cfg.out_dir {
        for (i, report) in reports.iter().enumerate() {
            let body = serde_json::to_string_pretty(report).expect("reports serialize");
            write_atomic(dir, &format!("trial-{i:03}.json"), &body)?;
        }
    }

    let mut full = 0;
    let mut partial = 0;
    let mut failure = 0;
    let mut valid = 0;
    let mut matched_sum = 0usize;
    let mut ratio_sum = 0.0f64;
    let mut ratio_count = 0usize;
    let mut max_dev = 0.0f64;
    let mut outcomes = Vec::with_capacity(cfg.trials);
    for report in &reports {
        match report.outcome {
            Outcome::Full => full += 1,
            Outcome::Partial => partial += 1,
            Outcome::Failure => failure += 1,
        }
        if report.valid {
            valid += 1;
        }
        matched_sum += report.matched_count;
        outcomes.push(
            serde_json::to_value(report.outcome).expect("outcome serializes")
                .as_str()
                .expect("outcome is a string")
                .to_string(),
        );
        if !report.trajectory.is_empty() {
            let dev: DeviationSummary = compare(
                &report.trajectory,
                size_scale(cfg.alg, report),
                degree_scale(cfg.alg, report),
            );
            ratio_sum += dev.ratios.iter().map(|&(_, r)| r).sum::<f64>();
            ratio_count += dev.ratios.len();
            max_dev = max_dev.max(dev.max_abs_deviation);
        }
    }
    let summary = CampaignSummary {
        algorithm: cfg.alg.as_tag().to_string(),
        trials: cfg.trials,
        base_seed: cfg.base_seed,
        full,
        partial,
        failure,
        success_rate: full as f64 / cfg.trials as f64,
        validity_rate: valid as f64 / cfg.trials as f64,
        mean_matched: matched_sum as f64 / cfg.trials as f64,
        mean_size_ratio: (ratio_count > 0).then(|| ratio_sum / ratio_count as f64),
        max_size_deviation: (ratio_count > 0).then_some(max_dev),
        deviation_samples: ratio_count,
        outcomes,
    };
    if let Some(dir) = &cfg.out_dir {
        let body = serde_json::to_string_pretty(&summary).expect("summary serializes");
        write_atomic(dir, "summary.json", &body)?;
    }
    Ok(CampaignOutput { summary, reports })
}
