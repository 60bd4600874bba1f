//! Run reports: what a solver did, how far it got, and every per-round
//! number an analyst needs to compare a run against the idealized curves.
//!
//! Reports serialize to JSON. Wall-clock time is deliberately **not**
//! serialized — reports must be byte-identical across replays and worker
//! counts; timing goes to stderr instead.

use crate::graph::RainbowMatching;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Reached the target (every color / all of side A / ≥ q colors) with a
    /// verified matching.
    Full,
    /// Ran to completion but finished below target.
    Partial,
    /// Aborted by an internal error (details in `diagnostics.flags`).
    Failure,
}

/// Counters and soft-check flags accumulated over a run. All zero/empty by
/// default; solvers only touch the fields that apply to them.
#[derive(Serialize, Deserialize, Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Residual deletion probabilities clamped into [0, 1].
    pub residual_clamps: u64,
    /// Round re-draws consumed by the retry policy.
    pub retries_used: u64,
    /// Rounds accepted with invariant violations (best-of-retries fallback).
    pub degraded_rounds: u64,
    /// Batch draws discarded for conflicting with an earlier draw.
    pub discarded_draws: u64,
    /// Soft upper bound the discard total is compared against, when defined.
    pub discard_bound: Option<f64>,
    pub discard_bound_exceeded: bool,
    /// Pair resamplings spent by the completion phase.
    pub completion_resamples: u64,
    /// Human-readable warnings: out-of-range parameters, audit failures, …
    pub flags: Vec<String>,
}

impl Diagnostics {
    pub fn flag(&mut self, message: impl Into<String>) {
        self.flags.push(message.into());
    }
}

/// One row of a run trajectory: the scheduled (ideal) quantities for round
/// `t` next to the measured state, where a measurement exists. Desk-only
/// evaluations leave the empirical fields `None`.
#[derive(Serialize, Deserialize, Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub t: usize,
    /// Scaled time `t * delta`.
    pub x: f64,
    pub s_ideal: f64,
    pub g_ideal: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_alive_vertices: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_alive_colors: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_matched: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_min_class: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_max_class: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_max_color_degree: Option<u64>,
    /// Maximum alive degree (outside side A, when a side A exists).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_max_degree: Option<u64>,
    /// Minimum alive degree over side-A vertices (bipartite runs only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_min_deg_a: Option<u64>,
    /// Maximum alive degree over side-A vertices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_max_deg_a: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_discards: Option<u64>,
    /// Largest per-class fraction of class vertices lying in side A.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emp_max_a_fraction: Option<f64>,
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,x,s_ideal,g_ideal,alpha,beta,a_t,b_t,theta_t,\
emp_alive_vertices,emp_alive_colors,emp_matched,emp_min_class,emp_max_class,\
emp_max_color_degree,emp_max_degree,emp_min_deg_a,emp_max_deg_a,emp_discards,\
emp_max_a_fraction";

fn cell_f(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cell_u(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrajectoryRecord {
    /// One CSV row matching [`TRAJECTORY_CSV_HEADER`]; absent observations
    /// become empty cells.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.x,
            self.s_ideal,
            self.g_ideal,
            self.alpha,
            self.beta,
            cell_f(self.a_t),
            cell_f(self.b_t),
            cell_f(self.theta_t),
            cell_u(self.emp_alive_vertices),
            cell_u(self.emp_alive_colors),
            cell_u(self.emp_matched),
            cell_u(self.emp_min_class),
            cell_u(self.emp_max_class),
            cell_u(self.emp_max_color_degree),
            cell_u(self.emp_max_degree),
            cell_u(self.emp_min_deg_a),
            cell_u(self.emp_max_deg_a),
            cell_u(self.emp_discards),
            cell_f(self.emp_max_a_fraction),
        )
    }
}

pub fn trajectory_to_csv(records: &[TrajectoryRecord]) -> String {
    let mut out = String::from(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

/// Everything one solver invocation produced.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct RunReport {
    pub algorithm: String,
    pub seed: u64,
    /// Matching size the run was asked for.
    pub target: usize,
    pub matching: RainbowMatching,
    pub matched_count: usize,
    pub outcome: Outcome,
    /// Result of re-verifying the output against the input instance.
    pub valid: bool,
    pub iterations_run: usize,
    pub diagnostics: Diagnostics,
    pub trajectory: Vec<TrajectoryRecord>,
    /// Echo of the resolved configuration, for replay.
    #[serde(default)]
    pub config: serde_json::Value,
    /// Measured, not replayed: excluded from serialization on purpose.
    #[serde(skip)]
    pub wall_time_ms: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_time_never_reaches_the_wire() {
        let report = RunReport {
            algorithm: "thm1".into(),
            seed: 1,
            target: 5,
            matching: RainbowMatching::new(),
            matched_count: 5,
            outcome: Outcome::Full,
            valid: true,
            iterations_run: 3,
            diagnostics: Diagnostics::default(),
            trajectory: vec![],
            config: serde_json::Value::Null,
            wall_time_ms: 12345,
        };
        let json = serde_json::to_string(&report).unwrap();
        assert!(!json.contains("wall_time"), "timing leaked into {json}");
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.wall_time_ms, 0);
        assert_eq!(back.matched_count, 5);
    }

    #[test]
    fn csv_rows_use_empty_cells_for_missing_observations() {
        let rec = TrajectoryRecord {
            t: 2,
            x: 0.02,
            s_ideal: 0.9,
            g_ideal: 0.95,
            alpha: 0.0,
            beta: 0.0,
            a_t: Some(0.01),
            emp_matched: Some(7),
            ..Default::default()
        };
        let csv = trajectory_to_csv(&[rec]);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        let row = lines.next().unwrap();
        assert_eq!(header.split(',').count(), row.split(',').count());
        assert_eq!(row, "2,0.02,0.9,0.95,0,0,0.01,,,,,7,,,,,,,,");
    }
}
