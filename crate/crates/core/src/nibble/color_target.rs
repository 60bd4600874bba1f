//! Nibble aimed at a rainbow matching of exactly q colors on graphs whose
//! classes may be shared between a heavy vertex set A and the rest.
//! Preprocessing either confirms the heavy set is small enough to carry
//! through the rounds, or solves directly: a fallback solver finds a
//! small rainbow matching off the heavy vertices, and the saturating
//! nibble matches the heavy set itself. The main rounds draw a batch of
//! edges with replacement, clear all their endpoints, equalize deletion
//! pressure (heavy vertices at rate `a_t`, the rest at `b_t`), keep the
//! prefix-conflict-free draws, and truncate classes back to a common
//! size, spending A-incident edges first so no class becomes too heavy.

use crate::graph::{ColorId, EdgeColoredGraph, EdgeId, RainbowMatching, VertexId, build_graph};
use crate::report::{Diagnostics, Outcome, RunReport, TrajectoryRecord};
use crate::rng::{Purpose, SeedSplitter};
use crate::trajectory::{capped, color_target_error_sequences, ColorTargetShape, CurveKind, ErrorSchedule};
use super::{batch_hit_prob, saturating, uniform};
use uniform::step_residual_prob;
use rand::Rng;
use std::cmp::Reverse;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ColorTargetError {
    #[error("reduction failed: {reason}")]
    ReductionFailed { reason: String },
    #[error("augmentation stuck at {matched} of {target}")]
    AugmentStuck { matched: usize, target: usize },
    #[error("color {color} has {size} edges, below the round target {target}")]
    ClassBelowTarget { color: ColorId, size: usize, target: usize },
    #[error("color {color} has A-fraction {fraction:.4}, above the bound {bound:.4}")]
    AFractionViolated { color: ColorId, fraction: f64, bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorTargetParams {
    /// Number of matching edges asked for.
    pub q: usize,
    pub eps: f64,
    pub delta: f64,
    /// Retry attempts per round (at least one attempt always runs).
    pub retries: usize,
    /// Whether eps and delta landed in the calibrated range.
    pub valid: bool,
}

impl ColorTargetParams {
    pub fn shape(&self) -> ColorTargetShape {
        ColorTargetShape::new(self.eps)
    }

    pub fn theta(&self) -> f64 {
        self.eps / 2.0
    }

    pub fn curve(&self) -> CurveKind {
        CurveKind::ColorTarget { eps: self.eps }
    }

    pub fn eta(&self) -> f64 {
        self.shape().eta
    }

    pub fn horizon(&self) -> usize {
        let eta = self.eta();
        if eta <= 0.0 || self.delta <= 0.0 {
            0
        } else {
            // Tolerance so ratios like 0.6/0.05 floor to their exact value.
            (eta / self.delta + 1e-9).floor() as usize
        }
    }

    /// Batch size ⌈2δ(1+ε)q⌉ drawn per round.
    pub fn batch(&self) -> usize {
        (2.0 * self.delta * (1.0 + self.eps) * self.q as f64).ceil() as usize
    }

    /// Classes may hold at most this fraction of their vertices in A.
    pub fn a_fraction_bound(&self) -> f64 {
        (1.0 - self.theta()) / 2.0
    }
}

/// δ = 1/ln q; everything else follows from ε through the shape
/// constants. The calibrated range wants ε < 1/10.
pub fn default_params(q: usize, eps: f64) -> ColorTargetParams {
    assert!(q >= 2, "need q >= 2");
    let delta = 1.0 / (q as f64).ln();
    let valid = eps > 0.0 && eps < 0.1 && delta > 0.0 && delta < 1.0;
    ColorTargetParams { q, eps, delta, retries: 1, valid }
}

/// (a_t, b_t): common deletion probabilities for A-vertices and the rest,
/// a_t = 2(1+ε)δ g(tδ)(1+β_t)/(s(tδ)(1-α_t)) and b_t the same with
/// (1+θ); their ratio is γ for every t.
pub fn deletion_probs(
    t: usize,
    params: &ColorTargetParams,
    alpha_t: f64,
    beta_t: f64,
) -> (f64, f64) {
    let x = t as f64 * params.delta;
    let kind = params.curve();
    let base = params.delta * kind.g(x) * (1.0 + beta_t) / (kind.s(x) * (1.0 - alpha_t));
    (2.0 * (1.0 + params.eps) * base, 2.0 * (1.0 + params.theta()) * base)
}

// ---------------------------------------------------------------------
// Fallback solver: greedy augmentation with the three-doubled-colors
// exchange, and the two-case degree-split procedure.
// ---------------------------------------------------------------------

/// Rainbow matching of size exactly `q` by direct extension plus the
/// exchange step: when no untouched color has a free edge, find a
/// matching edge hosting three untouched colors with two otherwise-free
/// edges each, and trade it for a disjoint pair among those six.
fn greedy_augment(g: &EdgeColoredGraph, q: usize) -> Result<RainbowMatching, ColorTargetError> {
    let mut m = RainbowMatching::new();
    let mut used_vertex = vec![false; g.num_vertices()];
    let mut used_color = vec![false; g.num_colors()];
    while m.len() < q {
        let mut extended = false;
        'direct: for c in 0..g.num_colors() {
            if used_color[c] || !g.is_color_alive(c) {
                continue;
            }
            let mut ids = g.class_edges(c).to_vec();
            ids.sort_unstable();
            for e in ids {
                let edge = g.edge(e);
                if !used_vertex[edge.u] && !used_vertex[edge.v] {
                    m.push(e, c);
                    used_vertex[edge.u] = true;
                    used_vertex[edge.v] = true;
                    used_color[c] = true;
                    extended = true;
                    break 'direct;
                }
            }
        }
        if extended {
            continue;
        }
        // Exchange, trying hosts in ascending edge-id order.
        let mut entry_order: Vec<usize> = (0..m.len()).collect();
        entry_order.sort_by_key(|&i| m.entries[i].0);
        let mut swap: Option<(usize, (EdgeId, ColorId), (EdgeId, ColorId))> = None;
        'hosts: for &mi in &entry_order {
            let (host_edge, _) = m.entries[mi];
            let host = g.edge(host_edge);
            // Candidate edges: alive, touch the host, untouched color, and
            // otherwise disjoint from the matching.
            let mut cand: Vec<EdgeId> = g
                .incident_edges(host.u)
                .iter()
                .chain(g.incident_edges(host.v).iter())
                .copied()
                .filter(|&e| e != host_edge)
                .collect();
            cand.sort_unstable();
            cand.dedup();
            let mut doubled: std::collections::BTreeMap<ColorId, Vec<EdgeId>> =
                std::collections::BTreeMap::new();
            for e in cand {
                let edge = g.edge(e);
                if used_color[edge.color] {
                    continue;
                }
                let dirty = [edge.u, edge.v]
                    .iter()
                    .any(|&w| used_vertex[w] && w != host.u && w != host.v);
                if !dirty {
                    doubled.entry(edge.color).or_default().push(e);
                }
            }
            let six: Vec<(EdgeId, ColorId)> = doubled
                .iter()
                .filter(|(_, edges)| edges.len() >= 2)
                .take(3)
                .flat_map(|(&c, edges)| edges.iter().take(2).map(move |&e| (e, c)))
                .collect();
            if six.len() < 6 {
                continue;
            }
            for i in 0..6 {
                for j in (i + 1)..6 {
                    let (e1, c1) = six[i];
                    let (e2, c2) = six[j];
                    if c1 == c2 || g.edge(e1).shares_vertex(&g.edge(e2)) {
                        continue;
                    }
                    swap = Some((mi, (e1, c1), (e2, c2)));
                    break 'hosts;
                }
            }
        }
        match swap {
            Some((mi, (e1, c1), (e2, c2))) => {
                let (old_e, old_c) = m.entries.remove(mi);
                let old = g.edge(old_e);
                used_vertex[old.u] = false;
                used_vertex[old.v] = false;
                used_color[old_c] = false;
                for (e, c) in [(e1, c1), (e2, c2)] {
                    let edge = g.edge(e);
                    m.push(e, c);
                    used_vertex[edge.u] = true;
                    used_vertex[edge.v] = true;
                    used_color[c] = true;
                }
            }
            None => {
                return Err(ColorTargetError::AugmentStuck { matched: m.len(), target: q })
            }
        }
    }
    Ok(m)
}

/// Re-adds previously removed vertices, in the given order, each via its
/// lowest-id free edge, stopping at `q` entries.
fn greedy_readd(g: &EdgeColoredGraph, m: &mut RainbowMatching, order: &[VertexId], q: usize) {
    let mut used_vertex = vec![false; g.num_vertices()];
    let mut used_color = vec![false; g.num_colors()];
    for &(e, c) in &m.entries {
        let edge = g.edge(e);
        used_vertex[edge.u] = true;
        used_vertex[edge.v] = true;
        used_color[c] = true;
    }
    for &v in order {
        if m.len() >= q {
            break;
        }
        if used_vertex[v] {
            continue;
        }
        let mut ids = g.incident_edges(v).to_vec();
        ids.sort_unstable();
        for e in ids {
            let edge = g.edge(e);
            let other = edge.other(v);
            if !used_vertex[other] && !used_color[edge.color] {
                m.push(e, edge.color);
                used_vertex[v] = true;
                used_vertex[other] = true;
                used_color[edge.color] = true;
                break;
            }
        }
    }
}

/// Remove the top `k` degree-order vertices, merge the surviving colors
/// into ascending-id quadruples (properness caps the merged color degree
/// at 4), and hand the residue to the color-activation engine.
fn merged_engine_case(
    g: &EdgeColoredGraph,
    q: usize,
    k: usize,
    order: &[VertexId],
    seed: u64,
) -> Result<RainbowMatching, ColorTargetError> {
    let removed: Vec<VertexId> = order[..k.min(order.len())].to_vec();
    let mut residue = g.clone();
    for &v in &removed {
        residue.delete_vertex(v).expect("degree-ordered vertex is alive");
    }
    let alive_colors: Vec<ColorId> = (0..residue.num_colors())
        .filter(|&c| residue.is_color_alive(c) && residue.class_size(c) > 0)
        .collect();
    if alive_colors.is_empty() {
        return Err(ColorTargetError::ReductionFailed {
            reason: "no colors survive the degree strip".into(),
        });
    }
    let mut merged_of = vec![usize::MAX; residue.num_colors()];
    for (i, &c) in alive_colors.iter().enumerate() {
        merged_of[c] = i / 4;
    }
    let merged_count = alive_colors.len().div_ceil(4);
    let mut edge_map: Vec<EdgeId> = Vec::new();
    let mut merged_edges: Vec<(usize, usize, usize)> = Vec::new();
    for id in 0..residue.num_edges() {
        if residue.is_edge_alive(id) {
            let e = residue.edge(id);
            merged_edges.push((e.u, e.v, merged_of[e.color]));
            edge_map.push(id);
        }
    }
    let merged = build_graph(residue.num_vertices(), merged_count, &merged_edges)
        .map_err(|e| ColorTargetError::ReductionFailed { reason: format!("merge rebuild: {e}") })?;
    let engine = uniform::UniformParams {
        q: 3 * (q - k),
        delta_max: 4,
        eps: 1.0 / 3.0,
        delta: 0.05,
        eta: 0.6,
        retries: 20,
        valid: false,
    };
    let report = uniform::run(&merged, &engine, seed);
    if !report.valid {
        return Err(ColorTargetError::ReductionFailed {
            reason: "merged-color engine produced an invalid matching".into(),
        });
    }
    let mut m = RainbowMatching::new();
    for &(ne, _) in &report.matching.entries {
        let oe = edge_map[ne];
        m.push(oe, g.edge(oe).color);
    }
    greedy_readd(g, &mut m, &removed, q);
    if m.len() < q {
        return Err(ColorTargetError::AugmentStuck { matched: m.len(), target: q });
    }
    m.entries.truncate(q);
    Ok(m)
}

/// The two-case procedure for instances with at least 4q colors: split on
/// the first degree-order index k with d_k ≤ 3(q-k).
fn two_case(g: &EdgeColoredGraph, q: usize, seed: u64) -> Result<RainbowMatching, ColorTargetError> {
    let mut order: Vec<VertexId> =
        (0..g.num_vertices()).filter(|&v| g.is_vertex_alive(v)).collect();
    order.sort_by_key(|&v| (Reverse(g.degree(v)), v));
    let k = order.iter().enumerate().find_map(|(idx, &v)| {
        let i = (idx + 1) as i64;
        (g.degree(v) as i64 <= 3 * (q as i64 - i)).then_some(idx + 1)
    });
    let r = (q as f64).sqrt().ceil() as usize;
    match k {
        Some(k) if k + r <= q => merged_engine_case(g, q, k, &order, seed),
        _ => {
            // High degrees persist: strip to a sqrt-scale core, solve it
            // greedily, and re-add the stripped vertices in degree-rank
            // order.
            let strip = q.saturating_sub(r).min(order.len());
            let removed: Vec<VertexId> = order[..strip].to_vec();
            let mut residue = g.clone();
            for &v in &removed {
                residue.delete_vertex(v).expect("degree-ordered vertex is alive");
            }
            let mut m = greedy_augment(&residue, r.min(q))?;
            greedy_readd(g, &mut m, &removed, q);
            if m.len() < q {
                return Err(ColorTargetError::AugmentStuck { matched: m.len(), target: q });
            }
            m.entries.truncate(q);
            Ok(m)
        }
    }
}

/// Rainbow matching of size exactly `q` on a properly colored graph with
/// enough colors: ≥ 2q² colors use pure greedy augmentation, ≥ 4q the
/// two-case procedure; below that, greedy augmentation runs best-effort.
pub fn weaker_bound_solver(
    g: &EdgeColoredGraph,
    q: usize,
    seed: u64,
) -> Result<RainbowMatching, ColorTargetError> {
    if q == 0 {
        return Ok(RainbowMatching::new());
    }
    let colors_present = (0..g.num_colors())
        .filter(|&c| g.is_color_alive(c) && g.class_size(c) > 0)
        .count();
    if colors_present >= 2 * q * q {
        greedy_augment(g, q)
    } else if colors_present >= 4 * q {
        two_case(g, q, seed)
    } else {
        greedy_augment(g, q)
    }
}

// ---------------------------------------------------------------------
// Preprocessing: heavy-vertex census and the direct reduction.
// ---------------------------------------------------------------------

#[derive(Debug)]
pub enum Preprocessed {
    /// Heavy set small enough: run the main rounds with this A.
    Passthrough { heavy: Vec<VertexId> },
    /// Too many heavy vertices: the reduction already built a matching of
    /// size exactly q.
    Direct { matching: RainbowMatching, notes: Vec<String> },
}

/// Census of vertices with degree above 2(1+θ)q. When more than (1-θ)q
/// of them exist, solve directly: a ⌈θq⌉ rainbow matching away from the
/// top (1-θ)q heavy vertices, then a saturating run matching each of
/// those heavy vertices into the rest.
pub fn preprocess(
    g: &EdgeColoredGraph,
    q: usize,
    eps: f64,
    seed: u64,
) -> Result<Preprocessed, ColorTargetError> {
    let theta = eps / 2.0;
    let threshold = 2.0 * (1.0 + theta) * q as f64;
    let heavy: Vec<VertexId> = (0..g.num_vertices())
        .filter(|&v| g.is_vertex_alive(v) && g.degree(v) as f64 > threshold)
        .collect();
    let a_cap = ((1.0 - theta) * q as f64).floor() as usize;
    if heavy.len() <= a_cap {
        return Ok(Preprocessed::Passthrough { heavy });
    }
    if a_cap == 0 {
        return Err(ColorTargetError::ReductionFailed {
            reason: format!("{} heavy vertices but the heavy budget is empty at q={q}", heavy.len()),
        });
    }
    let mut notes =
        vec![format!("{} heavy vertices exceed the budget {a_cap}; solving by reduction", heavy.len())];
    let mut order: Vec<VertexId> =
        (0..g.num_vertices()).filter(|&v| g.is_vertex_alive(v)).collect();
    order.sort_by_key(|&v| (Reverse(g.degree(v)), v));
    let mut a_set: Vec<VertexId> = order[..a_cap].to_vec();
    a_set.sort_unstable();
    let mut in_a = vec![false; g.num_vertices()];
    for &v in &a_set {
        in_a[v] = true;
    }

    // Stage 1: a ⌈θq⌉ rainbow matching on the graph without A.
    let mut stage1 = g.clone();
    for &v in &a_set {
        stage1.delete_vertex(v).expect("heavy vertex is alive");
    }
    let t_target = (theta * q as f64).ceil() as usize;
    let small = weaker_bound_solver(&stage1, t_target, seed)
        .map_err(|e| ColorTargetError::ReductionFailed { reason: format!("first stage: {e}") })?;
    notes.push(format!("first stage matched {} colors off the heavy set", small.len()));

    // Stage 2: saturate A in the bipartite remainder, avoiding stage 1's
    // vertices and colors.
    let mut work = g.clone();
    for &(e, c) in &small.entries {
        let edge = work.edge(e);
        for w in [edge.u, edge.v] {
            if work.is_vertex_alive(w) {
                work.delete_vertex(w).expect("alive vertex");
            }
        }
        if work.is_color_alive(c) {
            work.delete_color_class(c).expect("alive color");
        }
    }
    for id in 0..work.num_edges() {
        if work.is_edge_alive(id) {
            let e = work.edge(id);
            if in_a[e.u] == in_a[e.v] {
                work.delete_edge(id).expect("alive edge");
            }
        }
    }
    work.set_part_a(&a_set);
    let q2 = a_set.len();
    let min_deg = a_set.iter().map(|&a| work.degree(a)).min().unwrap_or(0);
    let eps2 = min_deg as f64 / q2 as f64 - 1.0;
    let delta2 = if q2 >= 3 { 1.0 / (q2 as f64).ln() } else { 0.5 };
    let eta2 = if eps2 > 0.0 { 1.0 - eps2.powi(3) } else { 0.0 };
    let sat_params = saturating::SaturatingParams {
        q: q2,
        eps: eps2.max(0.0),
        delta: delta2,
        eta: eta2.clamp(0.0, 1.0 - 1e-9),
        valid: false,
    };
    let sat_seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let sat = saturating::run(&work, &sat_params, sat_seed);
    if sat.outcome != Outcome::Full {
        return Err(ColorTargetError::ReductionFailed {
            reason: format!(
                "second stage saturated {} of {} heavy vertices (flags: {:?})",
                sat.matched_count, q2, sat.diagnostics.flags
            ),
        });
    }
    notes.push(format!("second stage saturated all {q2} heavy vertices"));
    let mut combined = small;
    for &(e, c) in &sat.matching.entries {
        combined.push(e, c);
    }
    Ok(Preprocessed::Direct { matching: combined, notes })
}

// ---------------------------------------------------------------------
// The main rounds.
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ColorTargetState {
    /// Clone of the input with the heavy set marked as part A.
    pub graph: EdgeColoredGraph,
    pub t: usize,
    /// Exact common class size at this boundary.
    pub s_t: usize,
    pub partial: RainbowMatching,
    pub trajectory: Vec<TrajectoryRecord>,
    pub diagnostics: Diagnostics,
    /// Total step-4 discards so far.
    pub discards: u64,
    schedule: ErrorSchedule,
    splitter: SeedSplitter,
}

/// Deletes `excess` edges from class `c`: A-incident edges first
/// (ascending id), then the rest ascending.
fn truncate_class_a_first(g: &mut EdgeColoredGraph, c: ColorId, excess: usize) {
    let mut a_inc: Vec<EdgeId> = Vec::new();
    let mut rest: Vec<EdgeId> = Vec::new();
    for &e in g.class_edges(c) {
        let edge = g.edge(e);
        if g.in_part_a(edge.u) || g.in_part_a(edge.v) {
            a_inc.push(e);
        } else {
            rest.push(e);
        }
    }
    a_inc.sort_unstable();
    rest.sort_unstable();
    for e in a_inc.into_iter().chain(rest).take(excess) {
        g.delete_edge(e).expect("listed edge is alive");
    }
}

/// Fraction of class `c`'s covered vertices lying in part A (None for an
/// empty class).
fn class_a_fraction(g: &EdgeColoredGraph, c: ColorId) -> Option<f64> {
    let mut verts: Vec<VertexId> = g
        .class_edges(c)
        .iter()
        .flat_map(|&e| {
            let edge = g.edge(e);
            [edge.u, edge.v]
        })
        .collect();
    verts.sort_unstable();
    verts.dedup();
    if verts.is_empty() {
        return None;
    }
    let in_a = verts.iter().filter(|&&v| g.in_part_a(v)).count();
    Some(in_a as f64 / verts.len() as f64)
}

impl ColorTargetState {
    fn eff_alpha(&self, t: usize) -> f64 {
        capped(self.schedule.alpha[t])
    }

    fn eff_beta(&self, t: usize) -> f64 {
        capped(self.schedule.beta[t])
    }

    fn size_target(&self, params: &ColorTargetParams, t: usize) -> usize {
        let x = t as f64 * params.delta;
        ((1.0 - self.eff_alpha(t)) * params.curve().s(x) * params.q as f64).ceil() as usize
    }

    fn audit_fractions(&self, params: &ColorTargetParams) -> (Option<f64>, Vec<ColorTargetError>) {
        let bound = params.a_fraction_bound();
        let mut max_fraction: Option<f64> = None;
        let mut violations = Vec::new();
        for c in 0..self.graph.num_colors() {
            if !self.graph.is_color_alive(c) {
                continue;
            }
            if let Some(f) = class_a_fraction(&self.graph, c) {
                if max_fraction.map_or(true, |m| f > m) {
                    max_fraction = Some(f);
                }
                if f > bound + 1e-12 {
                    violations.push(ColorTargetError::AFractionViolated {
                        color: c,
                        fraction: f,
                        bound,
                    });
                }
            }
        }
        (max_fraction, violations)
    }

    fn record(
        &mut self,
        params: &ColorTargetParams,
        a_t: Option<f64>,
        b_t: Option<f64>,
        round_discards: Option<u64>,
        max_fraction: Option<f64>,
    ) {
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
            b_t,
            emp_alive_vertices: Some(stats.alive_vertices as u64),
            emp_alive_colors: Some(stats.alive_colors as u64),
            emp_matched: Some(self.partial.len() as u64),
            emp_min_class: Some(stats.min_class_size as u64),
            emp_max_class: Some(stats.max_class_size as u64),
            emp_max_color_degree: Some(stats.max_color_degree as u64),
            emp_max_degree: Some(stats.max_degree as u64),
            emp_discards: round_discards,
            emp_max_a_fraction: max_fraction,
            ..Default::default()
        });
    }

    /// Clones the graph, marks the heavy set as part A, truncates every
    /// class to exactly q edges (A-incident first), audits the per-class
    /// A-fractions, and records the starting boundary.
    pub fn initialize(
        g: &EdgeColoredGraph,
        heavy: &[VertexId],
        params: &ColorTargetParams,
        seed: u64,
    ) -> Self {
        let horizon = params.horizon();
        let schedule =
            color_target_error_sequences(params.q as f64, params.eps, params.delta, horizon);
        let mut state = ColorTargetState {
            graph: g.clone(),
            t: 0,
            s_t: 0,
            partial: RainbowMatching::new(),
            trajectory: Vec::new(),
            diagnostics: Diagnostics::default(),
            discards: 0,
            schedule,
            splitter: SeedSplitter::new(seed),
        };
        if !params.valid {
            state.diagnostics.flag("parameters outside the calibrated range");
        }
        state.graph.set_part_a(heavy);
        let target = state.size_target(params, 0);
        state.s_t = target;
        let mut short = 0usize;
        for c in 0..state.graph.num_colors() {
            if !state.graph.is_color_alive(c) {
                continue;
            }
            let size = state.graph.class_size(c);
            if size < target {
                short += 1;
            } else {
                truncate_class_a_first(&mut state.graph, c, size - target);
            }
        }
        if short > 0 {
            state.diagnostics.flag(format!(
                "{short} classes enter below the starting size {target}"
            ));
        }
        let (max_fraction, violations) = state.audit_fractions(params);
        for v in &violations {
            state.diagnostics.flag(format!("at start: {v}"));
        }
        state.record(params, None, None, None, max_fraction);
        state
    }
}

struct PassOutcome {
    state: ColorTargetState,
    violations: Vec<ColorTargetError>,
}

fn attempt_pass(
    state: &ColorTargetState,
    params: &ColorTargetParams,
    attempt: u64,
) -> PassOutcome {
    let mut next = state.clone();
    let t = state.t;
    let round = (t + 1) as u64;
    let m = params.batch();
    let (a_t, b_t) =
        deletion_probs(t, params, state.eff_alpha(t), state.eff_beta(t));
    let g = &mut next.graph;

    let total_edges = g.alive_edge_count();
    let pre_degree: Vec<usize> = (0..g.num_vertices())
        .map(|v| if g.is_vertex_alive(v) { g.degree(v) } else { 0 })
        .collect();

    // Step 1: batch of uniform draws with replacement, order kept.
    let mut rng_draw = state.splitter.stream(Purpose::Draw, round, attempt);
    let pool: Vec<EdgeId> = g.alive_edges().to_vec();
    assert!(!pool.is_empty(), "rounds only run while edges survive");
    let selected: Vec<EdgeId> =
        (0..m).map(|_| pool[rng_draw.gen_range(0..pool.len())]).collect();

    // Step 2: every endpoint of every draw dies.
    for &e in &selected {
        let edge = g.edge(e);
        for w in [edge.u, edge.v] {
            if g.is_vertex_alive(w) {
                g.delete_vertex(w).expect("alive vertex");
            }
        }
    }

    // Step 3: residual deletions — A-vertices equalized to a_t, the rest
    // to b_t.
    let mut rng_resid = state.splitter.stream(Purpose::VertexResidual, round, attempt);
    for v in 0..g.num_vertices() {
        if !g.is_vertex_alive(v) {
            continue;
        }
        let p_prime = batch_hit_prob(pre_degree[v], total_edges, m);
        let total = if g.in_part_a(v) { a_t } else { b_t };
        let (p, clamped) = step_residual_prob(p_prime, total);
        if clamped {
            next.diagnostics.residual_clamps += 1;
        }
        if rng_resid.gen_bool(p) {
            g.delete_vertex(v).expect("alive vertex");
        }
    }

    // Step 4: keep each draw iff no earlier draw (kept or not) touches
    // its endpoints or color.
    let mut seen_vertex = vec![false; g.num_vertices()];
    let mut seen_color = vec![false; g.num_colors()];
    let mut added: Vec<(EdgeId, ColorId)> = Vec::new();
    let mut round_discards = 0u64;
    for &e in &selected {
        let edge = g.edge(e);
        if seen_vertex[edge.u] || seen_vertex[edge.v] || seen_color[edge.color] {
            round_discards += 1;
        } else {
            added.push((e, edge.color));
        }
        seen_vertex[edge.u] = true;
        seen_vertex[edge.v] = true;
        seen_color[edge.color] = true;
    }
    next.discards += round_discards;

    // Step 5: the added edges enter the matching and retire their colors.
    for &(e, c) in &added {
        next.partial.push(e, c);
        g.delete_color_class(c).expect("added colors are alive");
    }

    // Step 6: truncate classes to the next common size, A-incident edges
    // first, then re-audit the per-class A-fractions.
    let target = state.size_target(params, t + 1);
    let mut violations: Vec<ColorTargetError> = Vec::new();
    for c in 0..g.num_colors() {
        if !g.is_color_alive(c) {
            continue;
        }
        let size = g.class_size(c);
        if size < target {
            violations.push(ColorTargetError::ClassBelowTarget { color: c, size, target });
        } else {
            truncate_class_a_first(g, c, size - target);
        }
    }
    let (max_fraction, fraction_violations) = next.audit_fractions(params);
    violations.extend(fraction_violations);

    // Soft degree caps: d_t for A, d'_t for the rest.
    let x_next = (t + 1) as f64 * params.delta;
    let shared = 2.0
        * (1.0 + next.eff_beta(t + 1))
        * (1.0 - x_next)
        * params.curve().g(x_next)
        * params.q as f64;
    let cap_a = shared * (1.0 + params.eps);
    let cap_rest = shared * (1.0 + params.theta());
    let mut over = 0usize;
    for v in 0..next.graph.num_vertices() {
        if !next.graph.is_vertex_alive(v) {
            continue;
        }
        let cap = if next.graph.in_part_a(v) { cap_a } else { cap_rest };
        if next.graph.degree(v) as f64 > cap {
            over += 1;
        }
    }
    if over > 0 {
        next.diagnostics.flag(format!(
            "round {}: {over} vertices above their degree caps",
            t + 1
        ));
    }

    next.t = t + 1;
    next.s_t = target;
    next.record(params, Some(a_t), Some(b_t), Some(round_discards), max_fraction);
    PassOutcome { state: next, violations }
}

/// One round, single attempt, applied in place; the first violation (if
/// any) is returned as the error after the state has advanced.
pub fn iterate(
    state: &mut ColorTargetState,
    params: &ColorTargetParams,
) -> Result<(), ColorTargetError> {
    assert!(state.t < params.horizon(), "round horizon exhausted");
    let outcome = attempt_pass(state, params, 0);
    *state = outcome.state;
    match outcome.violations.into_iter().next() {
        None => Ok(()),
        Some(first) => Err(first),
    }
}

/// One round under the retry policy: accept the first violation-free
/// attempt, else the fewest-violations attempt, marking the round
/// degraded.
pub fn iterate_with_retry(state: &mut ColorTargetState, params: &ColorTargetParams) {
    assert!(state.t < params.horizon(), "round horizon exhausted");
    let attempts = params.retries.max(1);
    let mut best: Option<PassOutcome> = None;
    for attempt in 0..attempts {
        let outcome = attempt_pass(state, params, attempt as u64);
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
}

/// Full pipeline: hypothesis warnings, preprocessing (which may solve
/// directly), then rounds until the horizon or the target is reached,
/// trimming the matching to exactly q entries on success.
pub fn run(g: &EdgeColoredGraph, params: &ColorTargetParams, seed: u64) -> RunReport {
    let start = std::time::Instant::now();
    let shape = params.shape();
    let mut config = serde_json::json!({
        "q": params.q,
        "eps": params.eps,
        "delta": params.delta,
        "retries": params.retries,
        "theta": shape.theta,
        "eta": shape.eta,
    });
    let mut warnings: Vec<String> = Vec::new();
    let expected_colors = (2.0 * (1.0 + params.eps) * params.q as f64).ceil() as usize;
    if g.num_colors() != expected_colors {
        warnings.push(format!(
            "instance has {} colors; the guarantee is calibrated to {expected_colors}",
            g.num_colors()
        ));
    }
    let small_classes = (0..g.num_colors())
        .filter(|&c| g.is_color_alive(c) && g.class_size(c) < params.q)
        .count();
    if small_classes > 0 {
        warnings.push(format!("{small_classes} classes have fewer than q={} edges", params.q));
    }
    if g.snapshot_stats().max_color_degree > 1 {
        warnings.push("coloring is not proper".into());
    }

    let report_base = |matching: RainbowMatching,
                       outcome: Outcome,
                       valid: bool,
                       iterations: usize,
                       diagnostics: Diagnostics,
                       trajectory: Vec<TrajectoryRecord>,
                       config: serde_json::Value| RunReport {
        algorithm: "color-target-nibble".into(),
        seed,
        target: params.q,
        matched_count: matching.len(),
        matching,
        outcome,
        valid,
        iterations_run: iterations,
        diagnostics,
        trajectory,
        config,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };

    match preprocess(g, params.q, params.eps, seed) {
        Err(e) => {
            let mut diagnostics = Diagnostics::default();
            for w in warnings {
                diagnostics.flag(w);
            }
            diagnostics.flag(e.to_string());
            config["path"] = "direct-reduction".into();
            report_base(
                RainbowMatching::new(),
                Outcome::Failure,
                false,
                0,
                diagnostics,
                Vec::new(),
                config,
            )
        }
        Ok(Preprocessed::Direct { mut matching, notes }) => {
            config["path"] = "direct-reduction".into();
            let mut diagnostics = Diagnostics::default();
            for w in warnings.into_iter().chain(notes) {
                diagnostics.flag(w);
            }
            matching.entries.truncate(params.q);
            let valid = g
                .verify_rainbow_matching(&matching)
                .map(|v| v.is_empty())
                .unwrap_or(false);
            let outcome = if valid && matching.len() == params.q {
                Outcome::Full
            } else if valid {
                Outcome::Partial
            } else {
                Outcome::Failure
            };
            report_base(matching, outcome, valid, 0, diagnostics, Vec::new(), config)
        }
        Ok(Preprocessed::Passthrough { heavy }) => {
            config["path"] = "nibble".into();
            let mut state = ColorTargetState::initialize(g, &heavy, params, seed);
            for w in warnings {
                state.diagnostics.flag(w);
            }
            let horizon = params.horizon();
            while state.t < horizon && state.partial.len() < params.q {
                if state.graph.alive_edge_count() == 0 {
                    state.diagnostics.flag("no alive edges left; stopping rounds early");
                    break;
                }
                iterate_with_retry(&mut state, params);
            }
            if horizon > 0 {
                let inner = 1.0 - shape.base_slope() * shape.eta;
                if inner > 0.0 {
                    let bound =
                        8.0 * params.delta * params.q as f64 * (1.0 / inner).ln();
                    state.diagnostics.discard_bound = Some(bound);
                    state.diagnostics.discard_bound_exceeded = state.discards as f64 > bound;
                }
                state.diagnostics.discarded_draws = state.discards;
            }
            let mut matching = state.partial.clone();
            let reached = matching.len() >= params.q;
            if reached {
                matching.entries.truncate(params.q);
            } else {
                state.diagnostics.flag(format!(
                    "target missed: matched {} of {}",
                    matching.len(),
                    params.q
                ));
            }
            let valid = g
                .verify_rainbow_matching(&matching)
                .map(|v| v.is_empty())
                .unwrap_or(false);
            let outcome = if !valid {
                Outcome::Failure
            } else if reached {
                Outcome::Full
            } else {
                Outcome::Partial
            };
            report_base(
                matching,
                outcome,
                valid,
                state.t,
                state.diagnostics,
                state.trajectory,
                config,
            )
        }
    }
}
