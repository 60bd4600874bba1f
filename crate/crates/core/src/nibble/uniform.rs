//! Color-activation nibble. Each round activates a small fraction of the
//! surviving color classes, draws one uniform edge per activated class,
//! keeps the pairwise-disjoint draws, then equalizes: every vertex's total
//! per-round deletion probability is topped up to a common `a_t`, and
//! every surviving class is truncated to a common size `s_{t+1}`. The
//! schedule keeps the graph so regular that after the last round an
//! independent-transversal search can match every remaining color.

use crate::completion::{complete_rainbow_matching, CompletionError};
use crate::graph::{ColorId, EdgeColoredGraph, EdgeId, RainbowMatching, VertexId};
use crate::report::{Diagnostics, Outcome, RunReport, TrajectoryRecord};
use crate::rng::{Purpose, SeedSplitter};
use crate::trajectory::{capped, uniform_error_sequences, CurveKind, ErrorSchedule};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UniformError {
    #[error("activation denominator 1-(t-1)delta nonpositive at t={t}")]
    DenominatorNonpositive { t: usize, delta: f64 },
    #[error("color {color} has {size} edges, below the round target {target}")]
    ClassBelowTarget { color: ColorId, size: usize, target: usize },
    #[error("vertex {vertex} has degree {degree}, above the round cap {cap}")]
    DegreeAboveCap { vertex: VertexId, degree: usize, cap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformParams {
    /// Number of colors the guarantee is calibrated to.
    pub q: usize,
    /// Maximum color degree of the input.
    pub delta_max: usize,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    /// Retry attempts per round (at least one attempt always runs).
    pub retries: usize,
    /// Whether (eps, delta, eta) landed in the usable range; callers must
    /// override the fields when false.
    pub valid: bool,
}

impl UniformParams {
    pub fn gamma(&self) -> f64 {
        1.0 / (1.0 + self.eps)
    }

    pub fn curve(&self) -> CurveKind {
        CurveKind::Uniform { gamma: self.gamma() }
    }

    /// Number of nibble rounds.
    pub fn horizon(&self) -> usize {
        if self.eta <= 0.0 || self.delta <= 0.0 {
            0
        } else {
            // Tolerance so ratios like 0.6/0.05 floor to their exact value.
            (self.eta / self.delta + 1e-9).floor() as usize
        }
    }
}

/// The asymptotic parameter choices (natural logs). At practical `q`
/// these land far outside their intended ranges, so the result carries a
/// `valid` flag instead of failing: desk-scale callers override the
/// fields and keep the flag's warning.
pub fn default_params(q: usize, delta_max: usize) -> UniformParams {
    assert!(q >= 2, "need q >= 2");
    assert!(delta_max >= 1, "need a positive max color degree");
    let qf = q as f64;
    let ratio = (delta_max * delta_max) as f64 / qf;
    let lnq = qf.ln();
    let eps = ratio.powf(1.0 / 6.0) * lnq * lnq;
    let eta = 1.0 - ratio.powf(1.0 / 6.0) * lnq;
    let delta = 2.0 * ratio.powf(1.0 / 3.0);
    let valid = eps < 1.0 && eta > 0.0 && delta < 1.0;
    UniformParams { q, delta_max, eps, delta, eta, retries: 20, valid }
}

/// Per-round activation probability θ_t = δ/(1-(t-1)δ), `t` counted from 1.
pub fn activation_prob(t: usize, delta: f64) -> Result<f64, UniformError> {
    let denom = 1.0 - (t as f64 - 1.0) * delta;
    if denom <= 0.0 {
        return Err(UniformError::DenominatorNonpositive { t, delta });
    }
    Ok(delta / denom)
}

/// Common per-round vertex deletion probability
/// a_t = γ δ g(tδ)(1+β_t) / (s(tδ)(1-α_t)).
pub fn deletion_prob_a(t: usize, params: &UniformParams, alpha_t: f64, beta_t: f64) -> f64 {
    let x = t as f64 * params.delta;
    let kind = params.curve();
    params.gamma() * params.delta * kind.g(x) * (1.0 + beta_t) / (kind.s(x) * (1.0 - alpha_t))
}

/// Residual probability `p_v` solving p'_v + (1-p'_v) p_v = a_t, clamped
/// into [0, 1]. Returns the probability and whether clamping fired (at
/// desk scale p'_v > a_t happens; the excess is simply accepted).
pub fn step_residual_prob(p_prime_v: f64, a_t: f64) -> (f64, bool) {
    if p_prime_v >= 1.0 {
        return (0.0, true);
    }
    let raw = (a_t - p_prime_v) / (1.0 - p_prime_v);
    if raw < 0.0 {
        (0.0, true)
    } else if raw > 1.0 {
        (1.0, true)
    } else {
        (raw, false)
    }
}

#[derive(Debug, Clone)]
pub struct UniformState {
    pub graph: EdgeColoredGraph,
    pub t: usize,
    /// Exact common class size at this boundary.
    pub s_t: usize,
    pub partial: RainbowMatching,
    pub trajectory: Vec<TrajectoryRecord>,
    pub diagnostics: Diagnostics,
    schedule: ErrorSchedule,
    splitter: SeedSplitter,
}

impl UniformState {
    fn eff_alpha(&self, t: usize) -> f64 {
        capped(self.schedule.alpha[t])
    }

    fn eff_beta(&self, t: usize) -> f64 {
        capped(self.schedule.beta[t])
    }

    fn size_target(&self, params: &UniformParams, t: usize) -> usize {
        let x = t as f64 * params.delta;
        ((1.0 - self.eff_alpha(t)) * params.curve().s(x) * (1.0 + params.eps) * params.q as f64)
            .ceil() as usize
    }

    fn degree_cap(&self, params: &UniformParams, t: usize) -> f64 {
        let x = t as f64 * params.delta;
        (1.0 + self.eff_beta(t)) * (1.0 - x) * params.curve().g(x) * params.q as f64
    }

    fn record(&mut self, params: &UniformParams, a_t: Option<f64>, theta: Option<f64>) {
        let t = self.t;
        let x = t as f64 * params.delta;
        let stats = self.graph.snapshot_stats();
        self.trajectory.push(TrajectoryRecord {
            t,
            x,
            s_ideal: params.curve().s(x),
            g_ideal: params.curve().g(x),
            alpha: self.eff_alpha(t),
            beta: self.eff_beta(t),
            a_t,
            theta_t: theta,
            emp_alive_vertices: Some(stats.alive_vertices as u64),
            emp_alive_colors: Some(stats.alive_colors as u64),
            emp_matched: Some(self.partial.len() as u64),
            emp_min_class: Some(stats.min_class_size as u64),
            emp_max_class: Some(stats.max_class_size as u64),
            emp_max_color_degree: Some(stats.max_color_degree as u64),
            emp_max_degree: Some(stats.max_degree as u64),
            ..Default::default()
        });
    }

    /// Clones the graph, truncates every class to the exact starting size,
    /// and records hypothesis warnings. `t = 0` boundary afterwards.
    pub fn initialize(g: &EdgeColoredGraph, params: &UniformParams, seed: u64) -> Self {
        let horizon = params.horizon();
        // The envelope recursion is only defined while tδ < 1; past that
        // (degenerate schedules with ηδ at the boundary) the last defined
        // value is frozen. Capping makes the frozen tail inconsequential.
        let defined = if params.delta > 0.0 {
            horizon.min(((1.0 - 1e-9) / params.delta).floor() as usize)
        } else {
            horizon
        };
        let mut schedule = uniform_error_sequences(
            params.q as f64,
            params.delta_max as f64,
            params.eps,
            params.delta,
            defined,
        );
        for _ in defined..horizon {
            schedule.y.push(*schedule.y.last().expect("schedule has a zeroth entry"));
            schedule.z.push(*schedule.z.last().expect("schedule has a zeroth entry"));
            schedule.alpha.push(*schedule.alpha.last().expect("schedule has a zeroth entry"));
            schedule.beta.push(*schedule.beta.last().expect("schedule has a zeroth entry"));
        }
        let mut state = UniformState {
            graph: g.clone(),
            t: 0,
            s_t: 0,
            partial: RainbowMatching::new(),
            trajectory: Vec::new(),
            diagnostics: Diagnostics::default(),
            schedule,
            splitter: SeedSplitter::new(seed),
        };
        if !params.valid {
            state.diagnostics.flag("parameters outside the calibrated range");
        }
        let stats = state.graph.snapshot_stats();
        if stats.max_color_degree > params.delta_max {
            state.diagnostics.flag(format!(
                "max color degree {} exceeds declared {}",
                stats.max_color_degree, params.delta_max
            ));
        }
        if stats.max_degree as f64 > params.q as f64 {
            state.diagnostics.flag(format!(
                "max degree {} exceeds the calibration degree {}",
                stats.max_degree, params.q
            ));
        }
        let target = state.size_target(params, 0);
        state.s_t = target;
        truncate_classes(&mut state.graph, target, &mut |color, size| {
            state.diagnostics.flag(format!(
                "color {color} enters with {size} edges, below the starting size {target}"
            ));
        });
        state.record(params, None, None);
        state
    }
}

/// Truncates every alive class with more than `target` edges down to
/// exactly `target`, deleting lowest edge ids first. Classes already below
/// target are reported through `below`.
fn truncate_classes(
    g: &mut EdgeColoredGraph,
    target: usize,
    below: &mut dyn FnMut(ColorId, usize),
) {
    for c in 0..g.num_colors() {
        if !g.is_color_alive(c) {
            continue;
        }
        let size = g.class_size(c);
        if size < target {
            below(c, size);
            continue;
        }
        let mut ids: Vec<EdgeId> = g.class_edges(c).to_vec();
        ids.sort_unstable();
        for &e in ids.iter().take(size - target) {
            g.delete_edge(e).expect("listed edge is alive");
        }
    }
}

struct PassOutcome {
    state: UniformState,
    violations: Vec<UniformError>,
}

/// One full pass of the round, on a clone, with attempt-salted streams.
fn attempt_pass(
    state: &UniformState,
    params: &UniformParams,
    attempt: u64,
) -> Result<PassOutcome, UniformError> {
    let mut next = state.clone();
    let t = state.t;
    let round = (t + 1) as u64;
    let theta = activation_prob(t + 1, params.delta)?;
    let a_t = deletion_prob_a(t, params, state.eff_alpha(t), state.eff_beta(t));
    let g = &mut next.graph;

    // Survival probabilities of the selection step are evaluated against
    // the pre-round graph, for every alive vertex, before anything mutates.
    let s_t = state.s_t as f64;
    let mut p_prime = vec![0.0f64; g.num_vertices()];
    for v in 0..g.num_vertices() {
        if !g.is_vertex_alive(v) {
            continue;
        }
        let mut log_miss = 0.0f64;
        let mut certain = false;
        for &(_, count) in g.color_counts(v) {
            let x = count as f64 * theta / s_t;
            if x >= 1.0 {
                certain = true;
                break;
            }
            log_miss += (-x).ln_1p();
        }
        p_prime[v] = if certain { 1.0 } else { -log_miss.exp_m1() };
    }

    // Step 1: activate classes. Step 2: one uniform edge per activation.
    let mut rng_act = state.splitter.stream(Purpose::Activate, round, attempt);
    let mut rng_draw = state.splitter.stream(Purpose::Draw, round, attempt);
    let mut selected: Vec<(EdgeId, ColorId)> = Vec::new();
    for c in 0..g.num_colors() {
        if g.is_color_alive(c) && rng_act.gen_bool(theta) {
            let class = g.class_edges(c);
            // An emptied class can still activate; it just has nothing to
            // offer. Truncation will report it below target.
            if !class.is_empty() {
                selected.push((class[rng_draw.gen_range(0..class.len())], c));
            }
        }
    }

    // Step 3: delete every endpoint of the selection.
    let mut endpoint_uses = vec![0u32; g.num_vertices()];
    for &(e, _) in &selected {
        let edge = g.edge(e);
        endpoint_uses[edge.u] += 1;
        endpoint_uses[edge.v] += 1;
    }
    for &(e, _) in &selected {
        let (u, v) = {
            let edge = g.edge(e);
            (edge.u, edge.v)
        };
        for w in [u, v] {
            if g.is_vertex_alive(w) {
                g.delete_vertex(w).expect("alive vertex");
            }
        }
    }

    // Step 4: residual vertex deletions equalizing to a_t.
    let mut rng_resid = state.splitter.stream(Purpose::VertexResidual, round, attempt);
    for v in 0..g.num_vertices() {
        if !g.is_vertex_alive(v) {
            continue;
        }
        let (p, clamped) = step_residual_prob(p_prime[v], a_t);
        if clamped {
            next.diagnostics.residual_clamps += 1;
        }
        if rng_resid.gen_bool(p) {
            g.delete_vertex(v).expect("alive vertex");
        }
    }

    // Step 5: keep the pairwise-disjoint draws. Step 6: retire their colors.
    for &(e, c) in &selected {
        let edge = g.edge(e);
        if endpoint_uses[edge.u] == 1 && endpoint_uses[edge.v] == 1 {
            next.partial.push(e, c);
            g.delete_color_class(c).expect("selection color is alive");
        }
    }

    // Step 7: truncate surviving classes to the next common size.
    let target = state.size_target(params, t + 1);
    let mut violations: Vec<UniformError> = Vec::new();
    truncate_classes(g, target, &mut |color, size| {
        violations.push(UniformError::ClassBelowTarget { color, size, target });
    });
    let cap = state.degree_cap(params, t + 1);
    for v in 0..g.num_vertices() {
        if g.is_vertex_alive(v) && g.degree(v) as f64 > cap {
            violations.push(UniformError::DegreeAboveCap { vertex: v, degree: g.degree(v), cap });
        }
    }

    next.t = t + 1;
    next.s_t = target;
    next.record(params, Some(a_t), Some(theta));
    Ok(PassOutcome { state: next, violations })
}

/// One round, single attempt. On violations the round is still applied
/// (the caller decides what to do with a flawed sample) and the first
/// violation is returned as the error.
pub fn iterate(state: &mut UniformState, params: &UniformParams) -> Result<(), UniformError> {
    assert!(state.t < params.horizon(), "round horizon exhausted");
    let outcome = attempt_pass(state, params, 0)?;
    *state = outcome.state;
    match outcome.violations.into_iter().next() {
        None => Ok(()),
        Some(first) => Err(first),
    }
}

/// One round under the retry policy: fresh randomness per attempt, accept
/// the first violation-free sample; if every attempt is flawed, accept
/// the attempt with the fewest violations (lowest attempt index on ties)
/// and mark the round degraded.
pub fn iterate_with_retry(
    state: &mut UniformState,
    params: &UniformParams,
) -> Result<(), UniformError> {
    assert!(state.t < params.horizon(), "round horizon exhausted");
    let attempts = params.retries.max(1);
    let mut best: Option<PassOutcome> = None;
    for attempt in 0..attempts {
        let outcome = attempt_pass(state, params, attempt as u64)?;
        if attempt > 0 {
            state.diagnostics.retries_used += 1;
        }
        if outcome.violations.is_empty() {
            best = Some(outcome);
            break;
        }
        if best
            .as_ref()
            .map_or(true, |b| outcome.violations.len() < b.violations.len())
        {
            best = Some(outcome);
        }
    }
    let accepted = best.expect("at least one attempt ran");
    let retries_used = state.diagnostics.retries_used;
    *state = accepted.state;
    state.diagnostics.retries_used = retries_used;
    if !accepted.violations.is_empty() {
        state.diagnostics.degraded_rounds += 1;
        state.diagnostics.flag(format!(
            "round {} accepted with {} violations (first: {})",
            state.t,
            accepted.violations.len(),
            accepted.violations[0]
        ));
    }
    Ok(())
}

/// Full run: initial truncation, `⌊η/δ⌋` rounds, then completion over
/// every remaining color. The returned report's matching is verified
/// against the input graph.
pub fn run(g: &EdgeColoredGraph, params: &UniformParams, seed: u64) -> RunReport {
    let start = std::time::Instant::now();
    let mut state = UniformState::initialize(g, params, seed);
    let horizon = params.horizon();
    let mut failure = None;
    for _ in 0..horizon {
        if let Err(e) = iterate_with_retry(&mut state, params) {
            failure = Some(e.to_string());
            break;
        }
    }
    let mut partial = state.partial.clone();
    if failure.is_none() {
        let remaining: Vec<ColorId> =
            (0..state.graph.num_colors()).filter(|&c| state.graph.is_color_alive(c)).collect();
        if !remaining.is_empty() {
            match complete_rainbow_matching(&state.graph, &remaining, seed, None) {
                Ok(out) => {
                    state.diagnostics.completion_resamples = out.resamples;
                    for w in out.warnings {
                        state.diagnostics.flag(format!("completion: {w}"));
                    }
                    for &(e, c) in &out.matching.entries {
                        partial.push(e, c);
                    }
                }
                Err(err @ CompletionError::CompletionFailed { resamples, .. }) => {
                    state.diagnostics.completion_resamples = resamples;
                    failure = Some(err.to_string());
                }
                Err(err) => failure = Some(err.to_string()),
            }
        }
    }
    if let Some(message) = failure {
        state.diagnostics.flag(message);
    }
    let valid = g
        .verify_rainbow_matching(&partial)
        .map(|v| v.is_empty())
        .unwrap_or(false);
    let target = g.num_colors();
    let outcome = if !valid {
        Outcome::Failure
    } else if partial.len() == target {
        Outcome::Full
    } else {
        Outcome::Partial
    };
    RunReport {
        algorithm: "uniform-nibble".into(),
        seed,
        target,
        matched_count: partial.len(),
        matching: partial,
        outcome,
        valid,
        iterations_run: state.t,
        diagnostics: state.diagnostics,
        trajectory: state.trajectory,
        config: serde_json::json!({
            "q": params.q,
            "delta_max": params.delta_max,
            "eps": params.eps,
            "delta": params.delta,
            "eta": params.eta,
            "retries": params.retries,
        }),
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{cyclic_latin_coloring, random_instance, RandomKind};
    use crate::graph::build_graph;

    fn desk_params(q: usize, delta_max: usize) -> UniformParams {
        UniformParams {
            q,
            delta_max,
            eps: 0.5,
            delta: 0.05,
            eta: 0.6,
            retries: 20,
            valid: false,
        }
    }

    #[test]
    fn asymptotic_defaults_match_their_formulas() {
        let p = default_params(1_000_000, 1);
        assert!((p.delta - 0.02).abs() < 1e-12);
        assert!(!p.valid, "eps = (ln q)^2 / q^(1/3) scale is >> 1 here");

        let p = default_params(100, 1);
        assert!((p.eps - 9.845).abs() < 0.01);
        assert!(!p.valid);
    }

    #[test]
    fn activation_probability_frozen_points() {
        assert_eq!(activation_prob(1, 0.3).unwrap(), 0.3);
        assert!((activation_prob(3, 0.1).unwrap() - 0.125).abs() < 1e-15);
        assert!(matches!(
            activation_prob(3, 0.5),
            Err(UniformError::DenominatorNonpositive { .. })
        ));
    }

    #[test]
    fn deletion_probability_frozen_points() {
        let p = UniformParams {
            q: 1000,
            delta_max: 1,
            eps: 0.25,
            delta: 0.01,
            eta: 0.9,
            retries: 1,
            valid: true,
        };
        assert!((p.gamma() - 0.8).abs() < 1e-15);
        assert!((deletion_prob_a(0, &p, 0.0, 0.0) - 0.008).abs() < 1e-15);
        let a10 = deletion_prob_a(10, &p, 0.0, 0.0);
        assert!((a10 - 0.008 / 0.92).abs() < 1e-15);
        // With alpha = beta = 0 the curve quotient collapses to γδ/(1-γtδ).
        for t in 0..30 {
            let expect = p.gamma() * p.delta / (1.0 - p.gamma() * t as f64 * p.delta);
            assert!((deletion_prob_a(t, &p, 0.0, 0.0) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn residual_probability_tops_up_and_clamps() {
        assert_eq!(step_residual_prob(0.0, 0.3), (0.3, false));
        assert_eq!(step_residual_prob(0.3, 0.3), (0.0, false));
        let (p, clamped) = step_residual_prob(0.5, 0.6);
        assert!((p - 0.2).abs() < 1e-15 && !clamped);
        assert_eq!(step_residual_prob(0.5, 0.4), (0.0, true));
        assert_eq!(step_residual_prob(0.5, 1.4), (1.0, true));
        assert_eq!(step_residual_prob(1.0, 0.4), (0.0, true));
    }

    #[test]
    fn certain_activation_matches_disjoint_classes_in_one_round() {
        // 3 colors, 2 disjoint edges each, all 6 edges pairwise disjoint.
        let mut edges = Vec::new();
        for c in 0..3usize {
            edges.push((4 * c, 4 * c + 1, c));
            edges.push((4 * c + 2, 4 * c + 3, c));
        }
        let g = build_graph(12, 3, &edges).unwrap();
        let params = UniformParams {
            q: 1,
            delta_max: 1,
            eps: 1.0,
            delta: 1.0,
            eta: 1.0,
            retries: 1,
            valid: false,
        };
        let mut state = UniformState::initialize(&g, &params, 9);
        assert_eq!(state.s_t, 2);
        iterate(&mut state, &params).unwrap();
        assert_eq!(state.partial.len(), 3, "theta = 1 activates everything");
        for c in 0..3 {
            assert!(!state.graph.is_color_alive(c));
        }
    }

    #[test]
    fn conflicting_draws_are_both_dropped() {
        let g = build_graph(3, 2, &[(0, 1, 0), (1, 2, 1)]).unwrap();
        let params = UniformParams {
            q: 1,
            delta_max: 1,
            eps: 0.5,
            delta: 1.0,
            eta: 1.0,
            retries: 1,
            valid: false,
        };
        let mut state = UniformState::initialize(&g, &params, 4);
        assert_eq!(state.s_t, 2, "ceil((1+eps)q) = 2; the singleton classes are flagged");
        // Both classes activate (theta = 1) and their only edges share
        // vertex 1, so neither enters the matching and both classes are
        // wiped out by the endpoint deletions.
        let err = iterate(&mut state, &params).unwrap_err();
        assert!(matches!(err, UniformError::ClassBelowTarget { .. }));
        assert!(state.partial.is_empty());
    }

    #[test]
    fn desk_scale_run_matches_every_color() {
        let g = random_instance(
            RandomKind::Uniform { n: 180, q: 40, eps: 0.5, delta_max: 1 },
            21,
        )
        .unwrap();
        let report = run(&g, &desk_params(40, 1), 5);
        assert_eq!(report.outcome, Outcome::Full, "flags: {:?}", report.diagnostics.flags);
        assert!(report.valid);
        assert_eq!(report.matched_count, g.num_colors());
        assert_eq!(report.trajectory.len(), 13, "t = 0 plus 12 rounds");
        assert_eq!(report.iterations_run, 12);
        // Deletion never creates color-degree violations.
        let stats = g.snapshot_stats();
        assert!(stats.max_color_degree <= 1);
    }

    #[test]
    fn runs_replay_byte_identically() {
        let g = random_instance(
            RandomKind::Uniform { n: 180, q: 40, eps: 0.5, delta_max: 1 },
            22,
        )
        .unwrap();
        let a = run(&g, &desk_params(40, 1), 77);
        let b = run(&g, &desk_params(40, 1), 77);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = run(&g, &desk_params(40, 1), 78);
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn overloaded_instance_degrades_but_reports() {
        // K_{11,11} with 11 classes of 11 edges and degree 11 violates the
        // q = 10 degree cap immediately; every retry fails, the run keeps
        // going degraded.
        let g = cyclic_latin_coloring(11);
        let mut params = desk_params(10, 1);
        params.retries = 2;
        let report = run(&g, &params, 3);
        assert!(report.diagnostics.degraded_rounds > 0);
        assert!(!report.diagnostics.flags.is_empty());
        assert!(report.valid, "whatever was matched must still verify");
    }
}
