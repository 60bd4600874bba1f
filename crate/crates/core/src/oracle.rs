//! Exact maximum rainbow matching by branch-and-bound.
//!
//! The search branches on one color at a time: the lowest-id alive color
//! that still has a usable edge either contributes exactly one of those
//! edges or is skipped for good. The pruning bound is the trivial one —
//! current size plus the number of undecided colors that still have a
//! usable edge — which is cheap and already collapses the small instances
//! this oracle exists for. A node budget turns the oracle into an anytime
//! lower bound: when it runs out, the best matching found so far is
//! returned with `exact == false`.

use crate::graph::{ColorId, EdgeColoredGraph, EdgeId, RainbowMatching, VertexId};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub matching: RainbowMatching,
    /// Whether the search space was exhausted (or the result is otherwise
    /// provably optimal for this instance).
    pub exact: bool,
    pub nodes_explored: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Existence {
    Yes,
    No,
    /// Budget ran out before either a witness or a refutation was found.
    Unknown,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("not a latin square: {reason}")]
    NotLatin { reason: String },
}

struct Search<'g> {
    g: &'g EdgeColoredGraph,
    used_vertex: Vec<bool>,
    /// Color decided: either matched or explicitly skipped on this path.
    decided_color: Vec<bool>,
    current: Vec<(EdgeId, ColorId)>,
    best: Vec<(EdgeId, ColorId)>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
    /// Stop early once a matching of this size exists.
    stop_at: usize,
}

impl<'g> Search<'g> {
    fn usable_edges(&self, c: ColorId) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = self
            .g
            .class_edges(c)
            .iter()
            .copied()
            .filter(|&e| {
                let edge = self.g.edge(e);
                !self.used_vertex[edge.u] && !self.used_vertex[edge.v]
            })
            .collect();
        out.sort_unstable();
        out
    }

    fn open_colors_with_edges(&self) -> Vec<ColorId> {
        (0..self.g.num_colors())
            .filter(|&c| {
                self.g.is_color_alive(c)
                    && !self.decided_color[c]
                    && self.g.class_edges(c).iter().any(|&e| {
                        let edge = self.g.edge(e);
                        !self.used_vertex[edge.u] && !self.used_vertex[edge.v]
                    })
            })
            .collect()
    }

    fn recurse(&mut self) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        if self.current.len() > self.best.len() {
            self.best = self.current.clone();
        }
        if self.best.len() >= self.stop_at {
            return;
        }
        let open = self.open_colors_with_edges();
        if self.current.len() + open.len() <= self.best.len() {
            return; // cannot beat the incumbent from here
        }
        let Some(&c) = open.first() else { return };
        self.decided_color[c] = true;
        for e in self.usable_edges(c) {
            let edge = self.g.edge(e);
            self.used_vertex[edge.u] = true;
            self.used_vertex[edge.v] = true;
            self.current.push((e, c));
            self.recurse();
            self.current.pop();
            self.used_vertex[edge.u] = false;
            self.used_vertex[edge.v] = false;
            if self.exhausted || self.best.len() >= self.stop_at {
                self.decided_color[c] = false;
                return;
            }
        }
        // Skip branch: this color contributes nothing anywhere below.
        self.recurse();
        self.decided_color[c] = false;
    }
}

fn run_search(g: &EdgeColoredGraph, budget: u64, stop_at: usize) -> OracleResult {
    let mut s = Search {
        g,
        used_vertex: vec![false; g.num_vertices()],
        decided_color: vec![false; g.num_colors()],
        current: Vec::new(),
        best: Vec::new(),
        nodes: 0,
        budget,
        exhausted: false,
        stop_at,
    };
    s.recurse();
    let mut matching = RainbowMatching::new();
    for &(e, c) in &s.best {
        matching.push(e, c);
    }
    let early_stop = s.best.len() >= s.stop_at;
    OracleResult {
        matching,
        // An early stop at the requested size is still a definitive answer
        // for the caller who asked for it; otherwise exactness means the
        // whole tree fit in the budget.
        exact: early_stop || !s.exhausted,
        nodes_explored: s.nodes,
    }
}

/// Maximum rainbow matching among the *alive* part of `g`.
pub fn max_rainbow_matching(g: &EdgeColoredGraph, node_budget: u64) -> OracleResult {
    run_search(g, node_budget, usize::MAX)
}

/// Decides whether a rainbow matching of size `k` exists, within budget.
pub fn exists_rainbow_matching(g: &EdgeColoredGraph, k: usize, node_budget: u64) -> Existence {
    if k == 0 {
        return Existence::Yes;
    }
    let res = run_search(g, node_budget, k);
    if res.matching.len() >= k {
        Existence::Yes
    } else if res.exact {
        Existence::No
    } else {
        Existence::Unknown
    }
}

/// Maximum matching size of the alive subgraph with colors ignored,
/// computed by rerunning the rainbow search on a copy where every edge is
/// its own color class. Returns `(size, exact)`.
pub fn max_matching_size_ignoring_colors(g: &EdgeColoredGraph, node_budget: u64) -> (usize, bool) {
    let mut alive: Vec<EdgeId> = g.alive_edges().to_vec();
    alive.sort_unstable();
    let edges: Vec<(VertexId, VertexId, ColorId)> = alive
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let edge = g.edge(e);
            (edge.u, edge.v, i)
        })
        .collect();
    let copy = crate::graph::build_graph(g.num_vertices(), edges.len().max(1), &edges)
        .expect("recoloring a simple graph keeps it simple");
    let res = max_rainbow_matching(&copy, node_budget);
    (res.matching.len(), res.exact)
}

/// Longest partial transversal of an `n x n` latin square: cells no two of
/// which share a row, column, or symbol. Solved as a maximum rainbow
/// matching of the complete bipartite rows-by-columns graph colored by
/// symbol.
pub fn max_partial_transversal(
    n: usize,
    square: &[Vec<usize>],
    node_budget: u64,
) -> Result<OracleResult, OracleError> {
    if square.len() != n {
        return Err(OracleError::NotLatin {
            reason: format!("expected {n} rows, got {}", square.len()),
        });
    }
    for (i, row) in square.iter().enumerate() {
        if row.len() != n {
            return Err(OracleError::NotLatin {
                reason: format!("row {i} has {} entries, expected {n}", row.len()),
            });
        }
        for (j, &s) in row.iter().enumerate() {
            if s >= n {
                return Err(OracleError::NotLatin {
                    reason: format!("entry ({i},{j}) = {s} out of range"),
                });
            }
        }
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        for j in 0..n {
            let s = square[i][j];
            if seen[s] {
                return Err(OracleError::NotLatin {
                    reason: format!("symbol {s} repeats in row {i}"),
                });
            }
            seen[s] = true;
        }
    }
    for j in 0..n {
        let mut seen = vec![false; n];
        for i in 0..n {
            let s = square[i][j];
            if seen[s] {
                return Err(OracleError::NotLatin {
                    reason: format!("symbol {s} repeats in column {j}"),
                });
            }
            seen[s] = true;
        }
    }
    // Rows are vertices 0..n, columns n..2n, cell (i, j) is an edge of
    // color square[i][j].
    let mut edges: Vec<(VertexId, VertexId, ColorId)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            edges.push((i, n + j, square[i][j]));
        }
    }
    let g = crate::graph::build_graph(2 * n, n, &edges)
        .expect("complete bipartite rows-by-columns graph is simple");
    Ok(max_rainbow_matching(&g, node_budget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Ground truth by brute force: every subset of alive edges.
    fn enumerate_max(g: &EdgeColoredGraph) -> usize {
        let alive: Vec<EdgeId> = g.alive_edges().to_vec();
        assert!(alive.len() <= 20, "enumeration oracle is exponential");
        let mut best = 0usize;
        for mask in 0u32..(1 << alive.len()) {
            let chosen: Vec<EdgeId> = alive
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let mut ok = true;
            'pairs: for (i, &a) in chosen.iter().enumerate() {
                for &b in &chosen[i + 1..] {
                    let (ea, eb) = (g.edge(a), g.edge(b));
                    if ea.shares_vertex(eb) || ea.color == eb.color {
                        ok = false;
                        break 'pairs;
                    }
                }
            }
            if ok {
                best = best.max(chosen.len());
            }
        }
        best
    }

    fn random_small(rng: &mut StdRng) -> EdgeColoredGraph {
        loop {
            let n = rng.gen_range(2..=8);
            let k = rng.gen_range(1..=5);
            let target_edges = rng.gen_range(0..=10);
            let mut used = std::collections::HashSet::new();
            let mut edges = Vec::new();
            for _ in 0..3 * target_edges + 5 {
                if edges.len() == target_edges {
                    break;
                }
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                if u == v {
                    continue;
                }
                let key = (u.min(v), u.max(v));
                if used.insert(key) {
                    edges.push((u, v, rng.gen_range(0..k)));
                }
            }
            if let Ok(g) = build_graph(n, k, &edges) {
                return g;
            }
        }
    }

    #[test]
    fn agrees_with_subset_enumeration_on_random_instances() {
        let mut rng = StdRng::seed_from_u64(0xbeef);
        for trial in 0..300 {
            let g = random_small(&mut rng);
            let truth = enumerate_max(&g);
            let res = max_rainbow_matching(&g, u64::MAX);
            assert!(res.exact);
            assert_eq!(res.matching.len(), truth, "trial {trial} disagreed");
            let report = g.verify_rainbow_matching(&res.matching).unwrap();
            assert!(report.is_empty(), "oracle output invalid: {report:?}");
        }
    }

    #[test]
    fn respects_deletions() {
        // Triangle with distinct colors: max 1 (edges pairwise share vertices).
        let mut g = build_graph(3, 3, &[(0, 1, 0), (1, 2, 1), (0, 2, 2)]).unwrap();
        assert_eq!(max_rainbow_matching(&g, u64::MAX).matching.len(), 1);
        g.delete_vertex(2).unwrap();
        let res = max_rainbow_matching(&g, u64::MAX);
        assert_eq!(res.matching.len(), 1);
        assert_eq!(res.matching.entries, vec![(0, 0)]);
        g.delete_color_class(0).unwrap();
        assert_eq!(max_rainbow_matching(&g, u64::MAX).matching.len(), 0);
    }

    #[test]
    fn budget_exhaustion_reports_inexact_lower_bound() {
        // Two disjoint edges with distinct colors; a 1-node budget cannot
        // finish the tree but must still return a valid partial answer.
        let g = build_graph(4, 2, &[(0, 1, 0), (2, 3, 1)]).unwrap();
        let res = max_rainbow_matching(&g, 1);
        assert!(!res.exact);
        assert!(res.matching.len() <= 2);
        let full = max_rainbow_matching(&g, u64::MAX);
        assert!(full.exact);
        assert_eq!(full.matching.len(), 2);
    }

    #[test]
    fn existence_is_three_valued() {
        let g = build_graph(4, 2, &[(0, 1, 0), (2, 3, 1)]).unwrap();
        assert_eq!(exists_rainbow_matching(&g, 0, u64::MAX), Existence::Yes);
        assert_eq!(exists_rainbow_matching(&g, 2, u64::MAX), Existence::Yes);
        assert_eq!(exists_rainbow_matching(&g, 3, u64::MAX), Existence::No);
        assert_eq!(exists_rainbow_matching(&g, 3, 1), Existence::Unknown);
    }

    #[test]
    fn transversal_of_cyclic_squares() {
        // Cyclic squares: full transversal for odd n, n-1 for even n.
        for n in 2..=5usize {
            let square: Vec<Vec<usize>> =
                (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
            let res = max_partial_transversal(n, &square, u64::MAX).unwrap();
            assert!(res.exact);
            let expect = if n % 2 == 1 { n } else { n - 1 };
            assert_eq!(res.matching.len(), expect, "n = {n}");
        }
    }

    #[test]
    fn rejects_non_latin_input() {
        let bad = vec![vec![0, 1], vec![0, 1]];
        assert!(matches!(
            max_partial_transversal(2, &bad, u64::MAX),
            Err(OracleError::NotLatin { .. })
        ));
        let ragged = vec![vec![0, 1], vec![1]];
        assert!(matches!(
            max_partial_transversal(2, &ragged, u64::MAX),
            Err(OracleError::NotLatin { .. })
        ));
        let oor = vec![vec![0, 2], vec![1, 0]];
        assert!(matches!(
            max_partial_transversal(2, &oor, u64::MAX),
            Err(OracleError::NotLatin { .. })
        ));
    }
}
