//! Endgame subroutines: once a nibble has thinned the graph, the leftover
//! colors are matched by an independent-transversal search (one part per
//! color, conflict = shared endpoint, resample conflicting pairs until
//! independent) or, where the structure allows, by plain greedy selection.

use crate::graph::{ColorId, EdgeColoredGraph, EdgeId, RainbowMatching, VertexId};
use crate::rng::{Purpose, SeedSplitter};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CompletionError {
    #[error("color {color} has no alive edges")]
    EmptyColor { color: ColorId },
    #[error("resampling budget exhausted after {resamples} steps with {conflicts} conflicting pairs left")]
    BudgetExceeded { resamples: u64, conflicts: usize, last: Vec<EdgeId> },
    #[error("completion failed after {resamples} resamples with {conflicts} conflicting pairs left")]
    CompletionFailed { resamples: u64, conflicts: usize },
    #[error("no available edge for target {target:?}")]
    GreedyStuck { target: GreedyTarget },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyTarget {
    Vertex(VertexId),
    Color(ColorId),
}

/// One part per color, populated by that color's alive edges. The
/// conflict relation (two edges sharing an endpoint) is evaluated through
/// the underlying graph rather than materialized.
pub struct PartitionedConflictInstance<'g> {
    graph: &'g EdgeColoredGraph,
    pub colors: Vec<ColorId>,
    pub parts: Vec<Vec<EdgeId>>,
}

impl<'g> PartitionedConflictInstance<'g> {
    pub fn conflicts(&self, e: EdgeId, f: EdgeId) -> bool {
        self.graph.edge(e).shares_vertex(self.graph.edge(f))
    }

    /// Number of edges in *other* parts conflicting with `parts[i][j]`.
    pub fn conflict_degree(&self, i: usize, j: usize) -> usize {
        let e = self.parts[i][j];
        self.parts
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, part)| part.iter().filter(|&&f| self.conflicts(e, f)).count())
            .sum()
    }
}

/// Builds the conflict instance over `colors` (deduplicated, ascending).
pub fn build_conflict_instance<'g>(
    g: &'g EdgeColoredGraph,
    colors: &[ColorId],
) -> Result<PartitionedConflictInstance<'g>, CompletionError> {
    let mut colors: Vec<ColorId> = colors.to_vec();
    colors.sort_unstable();
    colors.dedup();
    let mut parts = Vec::with_capacity(colors.len());
    for &c in &colors {
        if !g.is_color_alive(c) || g.class_size(c) == 0 {
            return Err(CompletionError::EmptyColor { color: c });
        }
        let mut part: Vec<EdgeId> = g.class_edges(c).to_vec();
        part.sort_unstable();
        parts.push(part);
    }
    Ok(PartitionedConflictInstance { graph: g, colors, parts })
}

#[derive(Debug, Clone)]
pub struct TransversalOutcome {
    /// The chosen edge of each part, in part order.
    pub choice: Vec<EdgeId>,
    pub resamples: u64,
}

/// Default resampling budget: 1000 steps per part.
pub fn default_resample_budget(parts: usize) -> u64 {
    1000 * parts as u64
}

/// Searches for an independent transversal: start from a uniform random
/// choice, then repeatedly resample both sides of the first conflicting
/// pair (parts scanned in index order). Each pair resampling counts one
/// step against the budget.
pub fn independent_transversal(
    inst: &PartitionedConflictInstance<'_>,
    seed: u64,
    resample_budget: Option<u64>,
) -> Result<TransversalOutcome, CompletionError> {
    assert!(!inst.parts.is_empty(), "instance must have at least one part");
    let budget = resample_budget.unwrap_or_else(|| default_resample_budget(inst.parts.len()));
    let mut rng = SeedSplitter::new(seed).stream(Purpose::Complete, 0, 0);
    let mut choice: Vec<EdgeId> = inst
        .parts
        .iter()
        .map(|part| part[rng.gen_range(0..part.len())])
        .collect();
    let first_conflict = |choice: &[EdgeId]| -> Option<(usize, usize)> {
        for i in 0..choice.len() {
            for j in i + 1..choice.len() {
                if inst.conflicts(choice[i], choice[j]) {
                    return Some((i, j));
                }
            }
        }
        None
    };
    let mut resamples = 0u64;
    while let Some((i, j)) = first_conflict(&choice) {
        if resamples >= budget {
            let conflicts = (0..choice.len())
                .flat_map(|a| (a + 1..choice.len()).map(move |b| (a, b)))
                .filter(|&(a, b)| inst.conflicts(choice[a], choice[b]))
                .count();
            return Err(CompletionError::BudgetExceeded { resamples, conflicts, last: choice });
        }
        choice[i] = inst.parts[i][rng.gen_range(0..inst.parts[i].len())];
        choice[j] = inst.parts[j][rng.gen_range(0..inst.parts[j].len())];
        resamples += 1;
    }
    Ok(TransversalOutcome { choice, resamples })
}

pub struct CompletionOutcome {
    pub matching: RainbowMatching,
    pub resamples: u64,
    pub warnings: Vec<String>,
}

/// Finds a rainbow matching using *every* color in `colors`, by reduction
/// to an independent transversal. The sufficient condition — every class
/// at least `4e` times the relevant max degree — is checked and reported
/// as a warning (not a failure: thin desk-scale residues often complete
/// anyway).
pub fn complete_rainbow_matching(
    g: &EdgeColoredGraph,
    colors: &[ColorId],
    seed: u64,
    resample_budget: Option<u64>,
) -> Result<CompletionOutcome, CompletionError> {
    let inst = build_conflict_instance(g, colors)?;
    let mut warnings = Vec::new();
    let mut degree = vec![0usize; g.num_vertices()];
    for part in &inst.parts {
        for &e in part {
            let edge = g.edge(e);
            degree[edge.u] += 1;
            degree[edge.v] += 1;
        }
    }
    let maxdeg = degree.iter().copied().max().unwrap_or(0);
    let threshold = 4.0 * std::f64::consts::E * maxdeg as f64;
    for (i, part) in inst.parts.iter().enumerate() {
        if (part.len() as f64) < threshold {
            warnings.push(format!(
                "color {} class size {} below sufficient bound {threshold:.1}",
                inst.colors[i],
                part.len()
            ));
        }
    }
    match independent_transversal(&inst, seed, resample_budget) {
        Ok(out) => {
            let mut matching = RainbowMatching::new();
            for (i, &e) in out.choice.iter().enumerate() {
                matching.push(e, inst.colors[i]);
            }
            Ok(CompletionOutcome { matching, resamples: out.resamples, warnings })
        }
        Err(CompletionError::BudgetExceeded { resamples, conflicts, .. }) => {
            Err(CompletionError::CompletionFailed { resamples, conflicts })
        }
        Err(other) => Err(other),
    }
}

/// What greedy completion should cover.
#[derive(Debug, Clone)]
pub enum GreedyTargets {
    Vertices(Vec<VertexId>),
    Colors(Vec<ColorId>),
}

/// Extends `partial` so every target is covered, choosing for each target
/// (processed in ascending alive-degree order, ties by id) its lowest-id
/// usable edge. Targets already covered by `partial` are skipped. The
/// graph is not mutated; availability means alive, endpoints unused,
/// color unused.
pub fn greedy_complete(
    g: &EdgeColoredGraph,
    partial: &RainbowMatching,
    targets: &GreedyTargets,
) -> Result<RainbowMatching, CompletionError> {
    let mut used_vertex = vec![false; g.num_vertices()];
    let mut used_color = vec![false; g.num_colors()];
    let mut result = partial.clone();
    for &(e, c) in &partial.entries {
        let edge = g.edge(e);
        used_vertex[edge.u] = true;
        used_vertex[edge.v] = true;
        used_color[c] = true;
    }
    match targets {
        GreedyTargets::Vertices(vs) => {
            let mut order: Vec<VertexId> = vs.clone();
            order.sort_unstable_by_key(|&v| (g.degree(v), v));
            for v in order {
                if used_vertex[v] {
                    continue;
                }
                let mut candidates: Vec<EdgeId> = g
                    .incident_edges(v)
                    .iter()
                    .copied()
                    .filter(|&e| {
                        let edge = g.edge(e);
                        !used_vertex[edge.other(v)] && !used_color[edge.color]
                    })
                    .collect();
                candidates.sort_unstable();
                let Some(&e) = candidates.first() else {
                    return Err(CompletionError::GreedyStuck { target: GreedyTarget::Vertex(v) });
                };
                let edge = g.edge(e);
                used_vertex[edge.u] = true;
                used_vertex[edge.v] = true;
                used_color[edge.color] = true;
                result.push(e, edge.color);
            }
        }
        GreedyTargets::Colors(cs) => {
            let mut order: Vec<ColorId> = cs.clone();
            order.sort_unstable_by_key(|&c| (g.class_size(c), c));
            for c in order {
                if used_color[c] {
                    continue;
                }
                let mut candidates: Vec<EdgeId> = g
                    .class_edges(c)
                    .iter()
                    .copied()
                    .filter(|&e| {
                        let edge = g.edge(e);
                        !used_vertex[edge.u] && !used_vertex[edge.v]
                    })
                    .collect();
                candidates.sort_unstable();
                let Some(&e) = candidates.first() else {
                    return Err(CompletionError::GreedyStuck { target: GreedyTarget::Color(c) });
                };
                let edge = g.edge(e);
                used_vertex[edge.u] = true;
                used_vertex[edge.v] = true;
                used_color[c] = true;
                result.push(e, c);
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::cyclic_latin_coloring;
    use crate::graph::build_graph;

    #[test]
    fn conflict_instances_mirror_incidence() {
        let g = build_graph(4, 2, &[(0, 1, 0), (2, 3, 1)]).unwrap();
        let inst = build_conflict_instance(&g, &[0, 1]).unwrap();
        assert_eq!(inst.parts, vec![vec![0], vec![1]]);
        assert!(!inst.conflicts(0, 1));

        let path = build_graph(3, 2, &[(0, 1, 0), (1, 2, 1)]).unwrap();
        let inst = build_conflict_instance(&path, &[0, 1]).unwrap();
        assert!(inst.conflicts(0, 1));

        let latin = cyclic_latin_coloring(3);
        let inst = build_conflict_instance(&latin, &[0, 1, 2]).unwrap();
        assert_eq!(inst.parts.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 3, 3]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(inst.conflict_degree(i, j), 4);
            }
        }
    }

    #[test]
    fn empty_classes_are_rejected() {
        let mut g = build_graph(4, 2, &[(0, 1, 0), (2, 3, 1)]).unwrap();
        g.delete_color_class(1).unwrap();
        assert!(matches!(
            build_conflict_instance(&g, &[0, 1]),
            Err(CompletionError::EmptyColor { color: 1 })
        ));
    }

    #[test]
    fn singleton_instances_resolve_without_resampling() {
        let g = build_graph(4, 2, &[(0, 1, 0), (2, 3, 1)]).unwrap();
        let inst = build_conflict_instance(&g, &[0, 1]).unwrap();
        let out = independent_transversal(&inst, 5, None).unwrap();
        assert_eq!(out.choice, vec![0, 1]);
        assert_eq!(out.resamples, 0);
    }

    #[test]
    fn impossible_instances_exhaust_the_budget() {
        let path = build_graph(3, 2, &[(0, 1, 0), (1, 2, 1)]).unwrap();
        let inst = build_conflict_instance(&path, &[0, 1]).unwrap();
        match independent_transversal(&inst, 5, Some(50)).unwrap_err() {
            CompletionError::BudgetExceeded { resamples, conflicts, last } => {
                assert_eq!(resamples, 50);
                assert_eq!(conflicts, 1);
                assert_eq!(last.len(), 2);
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn rich_random_instances_complete_within_budget() {
        // Class sizes comfortably above 2e times the conflict degree.
        use crate::constructions::{random_instance, RandomKind};
        for seed in 0..5 {
            let g = random_instance(
                RandomKind::Uniform { n: 80, q: 16, eps: 0.5, delta_max: 1 },
                100 + seed,
            )
            .unwrap();
            let colors: Vec<_> = (0..g.num_colors()).collect();
            let out = complete_rainbow_matching(&g, &colors, seed, None).unwrap();
            assert_eq!(out.matching.len(), g.num_colors());
            let report = g.verify_rainbow_matching(&out.matching).unwrap();
            assert!(report.is_empty(), "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn completion_micro_cases_and_warnings() {
        let single = build_graph(2, 1, &[(0, 1, 0)]).unwrap();
        let out = complete_rainbow_matching(&single, &[0], 1, None).unwrap();
        assert_eq!(out.matching.entries, vec![(0, 0)]);
        assert!(!out.warnings.is_empty(), "size 1 < 4e * maxdeg must warn");

        let three = build_graph(6, 3, &[(0, 1, 0), (2, 3, 1), (4, 5, 2)]).unwrap();
        let out = complete_rainbow_matching(&three, &[0, 1, 2], 2, None).unwrap();
        assert_eq!(out.matching.len(), 3);
        assert!(three.verify_rainbow_matching(&out.matching).unwrap().is_empty());
    }

    #[test]
    fn infeasible_completion_reports_failure() {
        let path = build_graph(3, 2, &[(0, 1, 0), (1, 2, 1)]).unwrap();
        assert!(matches!(
            complete_rainbow_matching(&path, &[0, 1], 3, Some(10)),
            Err(CompletionError::CompletionFailed { .. })
        ));
    }

    #[test]
    fn greedy_saturates_vertices_and_colors() {
        let g = build_graph(5, 3, &[(0, 1, 0), (0, 2, 1), (3, 4, 2)]).unwrap();
        let m = greedy_complete(&g, &RainbowMatching::new(), &GreedyTargets::Vertices(vec![0]))
            .unwrap();
        assert_eq!(m.entries, vec![(0, 0)], "lowest edge id wins");

        let m = greedy_complete(
            &g,
            &RainbowMatching::new(),
            &GreedyTargets::Colors(vec![0, 2]),
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert!(g.verify_rainbow_matching(&m).unwrap().is_empty());
    }

    #[test]
    fn greedy_reports_the_blocked_target() {
        let g = build_graph(4, 1, &[(0, 1, 0), (2, 3, 0)]).unwrap();
        let mut partial = RainbowMatching::new();
        partial.push(0, 0);
        // Vertex 2's only edge has the already-used color 0.
        match greedy_complete(&g, &partial, &GreedyTargets::Vertices(vec![2])).unwrap_err() {
            CompletionError::GreedyStuck { target } => {
                assert_eq!(target, GreedyTarget::Vertex(2));
            }
            other => panic!("unexpected: {other}"),
        }
        // A target already covered by the partial matching is a no-op.
        let same = greedy_complete(&g, &partial, &GreedyTargets::Vertices(vec![0])).unwrap();
        assert_eq!(same.entries, partial.entries);
    }

    #[test]
    fn greedy_processes_low_degree_targets_first() {
        // Vertex 3 (degree 1) must grab color 0 before vertex 0 (degree 2)
        // locks it; processing by id would strand vertex 3.
        let g = build_graph(6, 2, &[(0, 1, 0), (0, 2, 1), (3, 4, 0)]).unwrap();
        let m = greedy_complete(
            &g,
            &RainbowMatching::new(),
            &GreedyTargets::Vertices(vec![0, 3]),
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.entries.contains(&(2, 0)), "vertex 3 takes its only edge");
        assert!(m.entries.contains(&(1, 1)), "vertex 0 falls back to color 1");
    }
}
