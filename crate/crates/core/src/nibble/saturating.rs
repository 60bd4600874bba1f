//! Sample-with-replacement nibble on a bipartite graph, saturating the
//! marked side A. Each round draws a fixed-size batch of surviving edges
//! with replacement, keeps the prefix-conflict-free draws, then equalizes
//! the round's deletion pressure: surviving B-vertices and surviving
//! colors are each topped up to a common removal probability `a_t`, and
//! every surviving A-vertex's edge set is truncated to a common degree
//! `s_{t+1}`. A greedy pass matches whatever of A survives the rounds.

use crate::completion::{greedy_complete, CompletionError, GreedyTarget, GreedyTargets};
use crate::graph::{ColorId, EdgeColoredGraph, EdgeId, RainbowMatching, VertexId};
use crate::report::{Diagnostics, Outcome, RunReport, TrajectoryRecord};
use crate::rng::{Purpose, SeedSplitter};
use crate::trajectory::{capped, saturating_error_alpha, CurveKind};
use super::{batch_hit_prob, uniform::step_residual_prob};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SaturatingError {
    #[error("no part-A marking on the input graph")]
    PartAMissing,
    #[error("edge {edge} does not have exactly one endpoint in part A")]
    NotBipartite { edge: EdgeId },
    #[error("A-vertex {vertex} has degree {degree}, below the round target {target}")]
    DegreeBelowTarget { vertex: VertexId, degree: usize, target: usize },
    #[error("A-vertex {vertex} died without a matching edge")]
    ADeadUnmatched { vertex: VertexId },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturatingParams {
    /// Side-A size the guarantee is calibrated to.
    pub q: usize,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    /// Whether eps and delta landed in the calibrated range.
    pub valid: bool,
}

impl SaturatingParams {
    pub fn gamma(&self) -> f64 {
        1.0 / (1.0 + self.eps)
    }

    pub fn curve(&self) -> CurveKind {
        CurveKind::Saturating { gamma: self.gamma() }
    }

    pub fn horizon(&self) -> usize {
        if self.eta <= 0.0 || self.delta <= 0.0 {
            0
        } else {
            // Tolerance so ratios like 0.6/0.05 floor to their exact value.
            (self.eta / self.delta + 1e-9).floor() as usize
        }
    }

    /// Batch size ⌈δq⌉ drawn per round.
    pub fn batch(&self) -> usize {
        (self.delta * self.q as f64).ceil() as usize
    }
}

/// η = 1-ε³ and δ = 1/ln q. The calibrated range wants ε < 1/10; larger
/// values run fine at desk scale and only drop the `valid` flag.
pub fn default_params(q: usize, eps: f64) -> SaturatingParams {
    assert!(q >= 2, "need q >= 2");
    let delta = 1.0 / (q as f64).ln();
    let eta = 1.0 - eps * eps * eps;
    let valid = eps > 0.0 && eps < 0.1 && delta > 0.0 && delta < 1.0;
    SaturatingParams { q, eps, delta, eta, valid }
}

/// Common removal probability a_t = γ δ g(tδ)(1+α_t) / (s(tδ)(1-α_t)),
/// applied to both the B-side vertices and the surviving colors.
pub fn deletion_prob_a(t: usize, params: &SaturatingParams, alpha_t: f64) -> f64 {
    let x = t as f64 * params.delta;
    let kind = params.curve();
    params.gamma() * params.delta * kind.g(x) * (1.0 + alpha_t) / (kind.s(x) * (1.0 - alpha_t))
}

#[derive(Debug, Clone)]
pub struct SaturatingState {
    pub graph: EdgeColoredGraph,
    pub t: usize,
    /// Exact common A-degree at this boundary.
    pub s_t: usize,
    pub partial: RainbowMatching,
    pub trajectory: Vec<TrajectoryRecord>,
    pub diagnostics: Diagnostics,
    /// Total step-2 discards so far.
    pub discards: u64,
    matched_a: Vec<bool>,
    splitter: SeedSplitter,
}

impl SaturatingState {
    fn eff_alpha(&self, params: &SaturatingParams, t: usize) -> f64 {
        capped(saturating_error_alpha(t, params.delta, params.gamma(), params.eta))
    }

    fn size_target(&self, params: &SaturatingParams, t: usize) -> usize {
        let x = t as f64 * params.delta;
        ((1.0 - self.eff_alpha(params, t))
            * params.curve().s(x)
            * (1.0 + params.eps)
            * params.q as f64)
            .ceil() as usize
    }

    fn a_degree_range(&self) -> Option<(usize, usize)> {
        let mut range: Option<(usize, usize)> = None;
        for v in self.graph.part_a_vertices() {
            if self.graph.is_vertex_alive(v) {
                let d = self.graph.degree(v);
                range = Some(match range {
                    None => (d, d),
                    Some((lo, hi)) => (lo.min(d), hi.max(d)),
                });
            }
        }
        range
    }

    fn record(&mut self, params: &SaturatingParams, a_t: Option<f64>, round_discards: Option<u64>) {
        let t = self.t;
        let x = t as f64 * params.delta;
        let stats = self.graph.snapshot_stats();
        let deg_a = self.a_degree_range();
        self.trajectory.push(TrajectoryRecord {
            t,
            x,
            s_ideal: params.curve().s(x),
            g_ideal: params.curve().g(x),
            alpha: self.eff_alpha(params, t),
            beta: 0.0,
            a_t,
            emp_alive_vertices: Some(stats.alive_vertices as u64),
            emp_alive_colors: Some(stats.alive_colors as u64),
            emp_matched: Some(self.partial.len() as u64),
            emp_min_class: Some(stats.min_class_size as u64),
            emp_max_class: Some(stats.max_class_size as u64),
            emp_max_color_degree: Some(stats.max_color_degree as u64),
            emp_max_degree: Some(stats.max_degree as u64),
            emp_min_deg_a: deg_a.map(|(lo, _)| lo as u64),
            emp_max_deg_a: deg_a.map(|(_, hi)| hi as u64),
            emp_discards: round_discards,
            ..Default::default()
        })
    }

    /// Clones the graph, validates the bipartition over the marked part,
    /// truncates every A-vertex to the exact starting degree (highest
    /// edge ids deleted first), and records warnings.
    pub fn initialize(
        g: &EdgeColoredGraph,
        params: &SaturatingParams,
        seed: u64,
    ) -> Result<Self, SaturatingError> {
        if !g.has_part_a() {
            return Err(SaturatingError::PartAMissing);
        }
        for (id, e) in g.edges().iter().enumerate() {
            if g.is_edge_alive(id) && g.in_part_a(e.u) == g.in_part_a(e.v) {
                return Err(SaturatingError::NotBipartite { edge: id });
            }
        }
        let mut state = SaturatingState {
            graph: g.clone(),
            t: 0,
            s_t: 0,
            partial: RainbowMatching::new(),
            trajectory: Vec::new(),
            diagnostics: Diagnostics::default(),
            discards: 0,
            matched_a: vec![false; g.num_vertices()],
            splitter: SeedSplitter::new(seed),
        };
        if !params.valid {
            state.diagnostics.flag("parameters outside the calibrated range");
        }
        let target = state.size_target(params, 0);
        state.s_t = target;
        let mut short = 0usize;
        for a in state.graph.part_a_vertices() {
            let deg = state.graph.degree(a);
            if deg < target {
                short += 1;
                continue;
            }
            let mut ids: Vec<EdgeId> = state.graph.incident_edges(a).to_vec();
            ids.sort_unstable_by(|x, y| y.cmp(x));
            for &e in ids.iter().take(deg - target) {
                state.graph.delete_edge(e).expect("listed edge is alive");
            }
        }
        if short > 0 {
            state.diagnostics.flag(format!(
                "{short} A-vertices enter below the starting degree {target}"
            ));
        }
        state.record(params, None, None);
        Ok(state)
    }
}

/// One round, applied in place. Missed degree targets are flagged and the
/// round continues degraded; the only hard error is an A-vertex dying
/// unmatched, which the construction rules out.
pub fn iterate(
    state: &mut SaturatingState,
    params: &SaturatingParams,
) -> Result<(), SaturatingError> {
    assert!(state.t < params.horizon(), "round horizon exhausted");
    let t = state.t;
    let round = (t + 1) as u64;
    let m = params.batch();
    let a_t = deletion_prob_a(t, params, state.eff_alpha(params, t));

    // Pre-round quantities: all hit probabilities are evaluated against
    // the graph as it stands before any of this round's deletions.
    let total_edges = state.graph.alive_edge_count();
    let pre_degree: Vec<usize> = (0..state.graph.num_vertices())
        .map(|v| if state.graph.is_vertex_alive(v) { state.graph.degree(v) } else { 0 })
        .collect();
    let pre_class: Vec<usize> = (0..state.graph.num_colors())
        .map(|c| if state.graph.is_color_alive(c) { state.graph.class_size(c) } else { 0 })
        .collect();

    // Step 1: batch of uniform draws, with replacement, order kept.
    let mut rng_draw = state.splitter.stream(Purpose::Draw, round, 0);
    let pool: Vec<EdgeId> = state.graph.alive_edges().to_vec();
    assert!(!pool.is_empty(), "rounds only run while edges survive");
    let selected: Vec<EdgeId> =
        (0..m).map(|_| pool[rng_draw.gen_range(0..pool.len())]).collect();

    // Step 2: keep each draw iff NO earlier draw (kept or not; a repeated
    // draw counts) touches one of its endpoints or shares its color.
    let mut seen_vertex = vec![false; state.graph.num_vertices()];
    let mut seen_color = vec![false; state.graph.num_colors()];
    let mut added: Vec<(EdgeId, ColorId, VertexId, VertexId)> = Vec::new();
    let mut round_discards = 0u64;
    for &e in &selected {
        let edge = state.graph.edge(e);
        let (a_end, b_end) =
            if state.graph.in_part_a(edge.u) { (edge.u, edge.v) } else { (edge.v, edge.u) };
        if seen_vertex[edge.u] || seen_vertex[edge.v] || seen_color[edge.color] {
            round_discards += 1;
        } else {
            added.push((e, edge.color, a_end, b_end));
        }
        seen_vertex[edge.u] = true;
        seen_vertex[edge.v] = true;
        seen_color[edge.color] = true;
    }
    state.discards += round_discards;

    // Step 3: A-endpoints of the added edges; B-endpoints of every draw.
    for &(e, c, a_end, _) in &added {
        state.partial.push(e, c);
        state.matched_a[a_end] = true;
        state.graph.delete_vertex(a_end).expect("added draws are vertex-disjoint");
    }
    for &e in &selected {
        let edge = state.graph.edge(e);
        let b_end = if state.graph.in_part_a(edge.u) { edge.v } else { edge.u };
        if state.graph.is_vertex_alive(b_end) {
            state.graph.delete_vertex(b_end).expect("alive vertex");
        }
    }

    // Step 4: residual B-vertex deletions equalizing to a_t.
    let mut rng_resid = state.splitter.stream(Purpose::VertexResidual, round, 0);
    for v in 0..state.graph.num_vertices() {
        if !state.graph.is_vertex_alive(v) || state.graph.in_part_a(v) {
            continue;
        }
        let p_prime = batch_hit_prob(pre_degree[v], total_edges, m);
        let (p, clamped) = step_residual_prob(p_prime, a_t);
        if clamped {
            state.diagnostics.residual_clamps += 1;
        }
        if rng_resid.gen_bool(p) {
            state.graph.delete_vertex(v).expect("alive vertex");
        }
    }

    // Step 5: the color of every draw dies, discarded draws included.
    for &e in &selected {
        let c = state.graph.edge(e).color;
        if state.graph.is_color_alive(c) {
            state.graph.delete_color_class(c).expect("alive color");
        }
    }

    // Step 6: residual color deletions equalizing to a_t.
    let mut rng_color = state.splitter.stream(Purpose::ColorResidual, round, 0);
    for c in 0..state.graph.num_colors() {
        if !state.graph.is_color_alive(c) {
            continue;
        }
        let p_prime = batch_hit_prob(pre_class[c], total_edges, m);
        let (p, clamped) = step_residual_prob(p_prime, a_t);
        if clamped {
            state.diagnostics.residual_clamps += 1;
        }
        if rng_color.gen_bool(p) {
            state.graph.delete_color_class(c).expect("alive color");
        }
    }

    // Step 7: truncate every surviving A-vertex to the next common degree,
    // lowest edge ids deleted first.
    let target = state.size_target(params, t + 1);
    let mut below = 0usize;
    for a in state.graph.part_a_vertices() {
        if !state.graph.is_vertex_alive(a) {
            continue;
        }
        let deg = state.graph.degree(a);
        if deg < target {
            below += 1;
            continue;
        }
        let mut ids: Vec<EdgeId> = state.graph.incident_edges(a).to_vec();
        ids.sort_unstable();
        for &e in ids.iter().take(deg - target) {
            state.graph.delete_edge(e).expect("listed edge is alive");
        }
    }
    if below > 0 {
        state.diagnostics.degraded_rounds += 1;
        state.diagnostics.flag(format!(
            "round {}: {below} A-vertices below the degree target {target}",
            t + 1
        ));
    }

    for a in state.graph.part_a_vertices() {
        if !state.graph.is_vertex_alive(a) && !state.matched_a[a] {
            return Err(SaturatingError::ADeadUnmatched { vertex: a });
        }
    }

    // Expected conflicts per round stay near 3δ²q/(1-tδ); double that is
    // treated as a soft anomaly at calibration scale.
    if params.q >= 500 {
        let x = t as f64 * params.delta;
        let limit = 2.0 * 3.0 * params.delta * params.delta * params.q as f64 / (1.0 - x);
        if round_discards as f64 > limit {
            state.diagnostics.flag(format!(
                "round {}: {round_discards} discards exceed the soft limit {limit:.2}",
                t + 1
            ));
        }
    }

    state.t = t + 1;
    state.s_t = target;
    state.record(params, Some(a_t), Some(round_discards));
    Ok(())
}

/// Full run: initial truncation, `⌊η/δ⌋` rounds, then a greedy pass over
/// every surviving A-vertex. Success means all of A is saturated.
pub fn run(g: &EdgeColoredGraph, params: &SaturatingParams, seed: u64) -> RunReport {
    let start = std::time::Instant::now();
    let config = serde_json::json!({
        "q": params.q,
        "eps": params.eps,
        "delta": params.delta,
        "eta": params.eta,
    });
    let mut state = match SaturatingState::initialize(g, params, seed) {
        Ok(state) => state,
        Err(err) => {
            let mut diagnostics = Diagnostics::default();
            diagnostics.flag(err.to_string());
            return RunReport {
                algorithm: "saturating-nibble".into(),
                seed,
                target: 0,
                matching: RainbowMatching::new(),
                matched_count: 0,
                outcome: Outcome::Failure,
                valid: false,
                iterations_run: 0,
                diagnostics,
                trajectory: Vec::new(),
                config,
                wall_time_ms: start.elapsed().as_millis() as u64,
            };
        }
    };
    let part_a = state.graph.part_a_vertices();
    let target_count = part_a.len();
    let horizon = params.horizon();
    let mut aborted = false;
    for _ in 0..horizon {
        if state.graph.alive_edge_count() == 0 {
            state.diagnostics.flag("no alive edges left; stopping rounds early");
            break;
        }
        if let Err(e) = iterate(&mut state, params) {
            state.diagnostics.flag(e.to_string());
            aborted = true;
            break;
        }
    }
    if horizon > 0 {
        let bound = 3.0 * params.delta * params.q as f64 * (1.0 / (1.0 - params.eta)).ln();
        state.diagnostics.discard_bound = Some(bound);
        state.diagnostics.discard_bound_exceeded = state.discards as f64 > bound;
        state.diagnostics.discarded_draws = state.discards;
    }
    let mut partial = state.partial.clone();
    if !aborted {
        let mut targets: Vec<VertexId> = part_a
            .iter()
            .copied()
            .filter(|&a| state.graph.is_vertex_alive(a))
            .collect();
        loop {
            match greedy_complete(&state.graph, &partial, &GreedyTargets::Vertices(targets.clone()))
            {
                Ok(extended) => {
                    partial = extended;
                    break;
                }
                Err(CompletionError::GreedyStuck { target }) => {
                    state.diagnostics.flag(format!("greedy finish stuck on {target:?}"));
                    match target {
                        GreedyTarget::Vertex(v) => targets.retain(|&a| a != v),
                        GreedyTarget::Color(_) => break,
                    }
                    if targets.is_empty() {
                        break;
                    }
                }
                Err(other) => {
                    state.diagnostics.flag(other.to_string());
                    break;
                }
            }
        }
    }
    let valid = g
        .verify_rainbow_matching(&partial)
        .map(|v| v.is_empty())
        .unwrap_or(false);
    let mut covered = vec![false; g.num_vertices()];
    for &(e, _) in &partial.entries {
        let edge = g.edge(e);
        covered[edge.u] = true;
        covered[edge.v] = true;
    }
    let saturated = part_a.iter().all(|&a| covered[a]);
    let outcome = if !valid || aborted {
        Outcome::Failure
    } else if saturated {
        Outcome::Full
    } else {
        Outcome::Partial
    };
    RunReport {
        algorithm: "saturating-nibble".into(),
        seed,
        target: target_count,
        matched_count: partial.len(),
        matching: partial,
        outcome,
        valid,
        iterations_run: state.t,
        diagnostics: state.diagnostics,
        trajectory: state.trajectory,
        config,
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{random_instance, RandomKind};
    use crate::graph::build_graph;

    fn slab(q: usize, eps: f64) -> EdgeColoredGraph {
        // Rows 0..q against all columns of an (1+eps)q-cyclic square:
        // colors (i+j) mod w, every class has exactly q edges, every row
        // has degree exactly w.
        let w = ((1.0 + eps) * q as f64).ceil() as usize;
        let mut edges = Vec::new();
        for i in 0..q {
            for j in 0..w {
                edges.push((i, q + j, (i + j) % w));
            }
        }
        let mut g = build_graph(q + w, w, &edges).unwrap();
        let rows: Vec<usize> = (0..q).collect();
        g.set_part_a(&rows);
        g
    }

    #[test]
    fn defaults_follow_the_formulas() {
        let p = default_params(1000, 0.05);
        assert!((p.delta - 1.0 / 1000f64.ln()).abs() < 1e-15);
        assert!((p.eta - (1.0 - 0.000125)).abs() < 1e-15);
        assert!(p.valid);
        assert!(!default_params(500, 0.3).valid, "eps above the calibrated range");
    }

    #[test]
    fn single_edge_round_matches_and_deletes() {
        let mut g = build_graph(2, 1, &[(0, 1, 0)]).unwrap();
        g.set_part_a(&[0]);
        let params = SaturatingParams { q: 1, eps: 0.5, delta: 0.5, eta: 1.0, valid: false };
        assert_eq!(params.batch(), 1);
        let mut state = SaturatingState::initialize(&g, &params, 7).unwrap();
        iterate(&mut state, &params).unwrap();
        assert_eq!(state.partial.entries, vec![(0, 0)]);
        assert!(!state.graph.is_vertex_alive(0));
        assert!(!state.graph.is_vertex_alive(1));
        assert!(!state.graph.is_color_alive(0));
        assert_eq!(state.discards, 0);
    }

    #[test]
    fn repeated_draw_is_discarded() {
        // Batch of 2 from a single-edge pool: the second draw repeats the
        // first and conflicts with itself.
        let mut g = build_graph(2, 1, &[(0, 1, 0)]).unwrap();
        g.set_part_a(&[0]);
        let params = SaturatingParams { q: 2, eps: 0.5, delta: 0.9, eta: 0.95, valid: false };
        assert_eq!(params.batch(), 2);
        let mut state = SaturatingState::initialize(&g, &params, 3).unwrap();
        iterate(&mut state, &params).unwrap();
        assert_eq!(state.partial.len(), 1);
        assert_eq!(state.discards, 1);
    }

    #[test]
    fn initial_truncation_drops_highest_edge_ids() {
        let mut g =
            build_graph(4, 3, &[(0, 1, 0), (0, 2, 1), (0, 3, 2)]).unwrap();
        g.set_part_a(&[0]);
        // Target degree ceil(1.5) = 2: edge 2 goes, edges 0 and 1 stay.
        let params = SaturatingParams { q: 1, eps: 0.5, delta: 0.5, eta: 0.4, valid: false };
        let state = SaturatingState::initialize(&g, &params, 1).unwrap();
        assert!(state.graph.is_edge_alive(0));
        assert!(state.graph.is_edge_alive(1));
        assert!(!state.graph.is_edge_alive(2));
    }

    #[test]
    fn rejects_malformed_bipartitions() {
        let g = build_graph(2, 1, &[(0, 1, 0)]).unwrap();
        let params = default_params(2, 0.05);
        assert_eq!(
            SaturatingState::initialize(&g, &params, 0).unwrap_err(),
            SaturatingError::PartAMissing
        );
        let mut g2 = build_graph(3, 2, &[(0, 1, 0), (1, 2, 1)]).unwrap();
        g2.set_part_a(&[0, 1]);
        assert_eq!(
            SaturatingState::initialize(&g2, &params, 0).unwrap_err(),
            SaturatingError::NotBipartite { edge: 0 }
        );
    }

    #[test]
    fn cyclic_slab_saturates() {
        let g = slab(300, 0.4);
        let report = run(&g, &default_params(300, 0.4), 1);
        assert_eq!(report.outcome, Outcome::Full, "flags: {:?}", report.diagnostics.flags);
        assert!(report.valid);
        assert_eq!(report.matched_count, 300);
        assert_eq!(report.target, 300);
    }

    #[test]
    fn generated_instance_saturates_and_replays() {
        let g = random_instance(RandomKind::Saturating { n: 260, q: 60, eps: 0.3 }, 14).unwrap();
        let params = default_params(60, 0.3);
        let a = run(&g, &params, 41);
        assert_eq!(a.outcome, Outcome::Full, "flags: {:?}", a.diagnostics.flags);
        assert!(a.valid);
        // Every matching edge covers exactly one A-vertex; colors distinct.
        let mut seen_a = std::collections::HashSet::new();
        for &(e, _) in &a.matching.entries {
            let edge = g.edge(e);
            let a_end = if g.in_part_a(edge.u) { edge.u } else { edge.v };
            assert!(seen_a.insert(a_end));
        }
        let b = run(&g, &params, 41);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn trajectory_tracks_exact_a_degrees() {
        let g = random_instance(RandomKind::Saturating { n: 260, q: 60, eps: 0.3 }, 15).unwrap();
        let params = default_params(60, 0.3);
        let report = run(&g, &params, 11);
        // At every recorded boundary all surviving A-degrees sit exactly at
        // the common target unless the round was flagged degraded.
        if report.diagnostics.degraded_rounds == 0 {
            for rec in &report.trajectory {
                if let (Some(lo), Some(hi)) = (rec.emp_min_deg_a, rec.emp_max_deg_a) {
                    assert_eq!(lo, hi, "t={}", rec.t);
                }
            }
        }
    }
}
