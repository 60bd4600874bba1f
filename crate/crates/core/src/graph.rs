//! Mutable edge-colored graph with O(1) deletions and O(1) uniform sampling.
//!
//! Vertices, edges, and colors carry dense ids assigned at build time and
//! never reused. Deletion flips an alive flag and swap-removes the edge from
//! the affected alive lists, so picking a uniformly random alive edge —
//! globally or within one color class — is an array index. The original
//! edge list is immutable, which lets [`EdgeColoredGraph::verify_rainbow_matching`]
//! check any claimed matching against the graph as built, not as mutated.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

pub type VertexId = usize;
pub type EdgeId = usize;
pub type ColorId = usize;

/// An edge as originally built: endpoints and color never change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub color: ColorId,
}

impl Edge {
    /// The endpoint that is not `w`.
    ///
    /// # Panics
    /// Panics if `w` is not an endpoint.
    pub fn other(&self, w: VertexId) -> VertexId {
        if w == self.u {
            self.v
        } else {
            assert!(w == self.v, "vertex {w} is not an endpoint of this edge");
            self.u
        }
    }

    pub fn touches(&self, w: VertexId) -> bool {
        self.u == w || self.v == w
    }

    pub fn shares_vertex(&self, other: &Edge) -> bool {
        self.touches(other.u) || self.touches(other.v)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {index} is a loop at vertex {vertex}")]
    LoopEdge { index: usize, vertex: VertexId },
    #[error("edges {first} and {second} are parallel ({u}-{v})")]
    ParallelEdge {
        first: usize,
        second: usize,
        u: VertexId,
        v: VertexId,
    },
    #[error("edge {index} references vertex {vertex} but the graph has {num_vertices} vertices")]
    VertexOutOfRange {
        index: usize,
        vertex: VertexId,
        num_vertices: usize,
    },
    #[error("edge {index} references color {color} but the graph has {num_colors} colors")]
    ColorOutOfRange {
        index: usize,
        color: ColorId,
        num_colors: usize,
    },
    #[error("{kind} {id} is already dead")]
    AlreadyDead { kind: &'static str, id: usize },
    #[error("matching references unknown edge id {edge}")]
    UnknownEdge { edge: EdgeId },
}

/// A rainbow matching candidate: edge ids paired with the color each edge is
/// claimed under. Validity is established by `verify_rainbow_matching`, not
/// by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RainbowMatching {
    pub entries: Vec<(EdgeId, ColorId)>,
}

impl RainbowMatching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, edge: EdgeId, color: ColorId) {
        self.entries.push((edge, color));
    }

    pub fn colors(&self) -> impl Iterator<Item = ColorId> + '_ {
        self.entries.iter().map(|&(_, c)| c)
    }
}

/// One way a claimed rainbow matching fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchingViolation {
    RepeatedEdge { edge: EdgeId },
    SharedVertex { first: EdgeId, second: EdgeId, vertex: VertexId },
    RepeatedColor { first: EdgeId, second: EdgeId, color: ColorId },
    ColorMismatch { edge: EdgeId, claimed: ColorId, actual: ColorId },
}

impl std::fmt::Display for MatchingViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatchingViolation::RepeatedEdge { edge } => {
                write!(f, "edge {edge} appears more than once")
            }
            MatchingViolation::SharedVertex { first, second, vertex } => {
                write!(f, "edges {first} and {second} share vertex {vertex}")
            }
            MatchingViolation::RepeatedColor { first, second, color } => {
                write!(f, "edges {first} and {second} repeat color {color}")
            }
            MatchingViolation::ColorMismatch { edge, claimed, actual } => {
                write!(f, "edge {edge} claims color {claimed} but has color {actual}")
            }
        }
    }
}

/// Aggregate statistics of the alive subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub alive_vertices: usize,
    pub alive_edges: usize,
    pub alive_colors: usize,
    /// Minimum class size over alive colors; 0 when no color is alive.
    pub min_class_size: usize,
    pub max_class_size: usize,
    pub max_degree: usize,
    /// Maximum of d_C(v) over alive vertices and colors: the most alive
    /// edges of a single color at a single vertex. 1 means properly colored.
    pub max_color_degree: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeColoredGraph {
    num_vertices: usize,
    num_colors: usize,
    edges: Vec<Edge>,
    vertex_alive: Vec<bool>,
    edge_alive: Vec<bool>,
    color_alive: Vec<bool>,
    /// Bipartite side marking; empty unless `set_part_a` was called.
    part_a: Vec<bool>,
    /// Alive edges incident to each vertex (unordered; swap-removal).
    incident: Vec<Vec<EdgeId>>,
    /// Alive edges of each color (unordered; swap-removal).
    by_color: Vec<Vec<EdgeId>>,
    /// All alive edges (unordered; swap-removal).
    alive_pool: Vec<EdgeId>,
    /// edge -> position in incident[u], incident[v], by_color, alive_pool.
    pos_u: Vec<usize>,
    pos_v: Vec<usize>,
    pos_color: Vec<usize>,
    pos_pool: Vec<usize>,
    /// Per vertex: (color, alive count) pairs with count > 0, unordered.
    color_count: Vec<Vec<(ColorId, u32)>>,
    alive_vertex_count: usize,
    alive_color_count: usize,
}

/// Validates and indexes an edge list. Only simple graphs are accepted:
/// loops and parallel edges are build errors, whatever their colors.
pub fn build_graph(
    num_vertices: usize,
    num_colors: usize,
    edge_list: &[(VertexId, VertexId, ColorId)],
) -> Result<EdgeColoredGraph, GraphError> {
    let mut seen: HashSet<(VertexId, VertexId)> = HashSet::with_capacity(edge_list.len());
    let mut first_of: std::collections::HashMap<(VertexId, VertexId), usize> =
        std::collections::HashMap::new();
    let mut edges = Vec::with_capacity(edge_list.len());
    for (index, &(u, v, color)) in edge_list.iter().enumerate() {
        if u >= num_vertices {
            return Err(GraphError::VertexOutOfRange { index, vertex: u, num_vertices });
        }
        if v >= num_vertices {
            return Err(GraphError::VertexOutOfRange { index, vertex: v, num_vertices });
        }
        if u == v {
            return Err(GraphError::LoopEdge { index, vertex: u });
        }
        if color >= num_colors {
            return Err(GraphError::ColorOutOfRange { index, color, num_colors });
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(GraphError::ParallelEdge {
                first: first_of[&key],
                second: index,
                u: key.0,
                v: key.1,
            });
        }
        first_of.insert(key, index);
        edges.push(Edge { u, v, color });
    }

    let mut g = EdgeColoredGraph {
        num_vertices,
        num_colors,
        edges,
        vertex_alive: vec![true; num_vertices],
        edge_alive: vec![true; edge_list.len()],
        color_alive: vec![true; num_colors],
        part_a: Vec::new(),
        incident: vec![Vec::new(); num_vertices],
        by_color: vec![Vec::new(); num_colors],
        alive_pool: Vec::with_capacity(edge_list.len()),
        pos_u: vec![0; edge_list.len()],
        pos_v: vec![0; edge_list.len()],
        pos_color: vec![0; edge_list.len()],
        pos_pool: vec![0; edge_list.len()],
        color_count: vec![Vec::new(); num_vertices],
        alive_vertex_count: num_vertices,
        alive_color_count: num_colors,
    };
    for id in 0..g.edges.len() {
        let Edge { u, v, color } = g.edges[id];
        g.pos_u[id] = g.incident[u].len();
        g.incident[u].push(id);
        g.pos_v[id] = g.incident[v].len();
        g.incident[v].push(id);
        g.pos_color[id] = g.by_color[color].len();
        g.by_color[color].push(id);
        g.pos_pool[id] = g.alive_pool.len();
        g.alive_pool.push(id);
        bump_color_count(&mut g.color_count[u], color, 1);
        bump_color_count(&mut g.color_count[v], color, 1);
    }
    Ok(g)
}

fn bump_color_count(counts: &mut Vec<(ColorId, u32)>, color: ColorId, delta: i32) {
    for i in 0..counts.len() {
        if counts[i].0 == color {
            let next = counts[i].1 as i64 + delta as i64;
            assert!(next >= 0, "color count underflow");
            if next == 0 {
                counts.swap_remove(i);
            } else {
                counts[i].1 = next as u32;
            }
            return;
        }
    }
    assert!(delta > 0, "decrementing absent color count");
    counts.push((color, delta as u32));
}

impl EdgeColoredGraph {
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// The immutable build-time edge list; dead edges included.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn is_vertex_alive(&self, v: VertexId) -> bool {
        self.vertex_alive[v]
    }

    pub fn is_edge_alive(&self, e: EdgeId) -> bool {
        self.edge_alive[e]
    }

    pub fn is_color_alive(&self, c: ColorId) -> bool {
        self.color_alive[c]
    }

    pub fn alive_vertex_count(&self) -> usize {
        self.alive_vertex_count
    }

    pub fn alive_edge_count(&self) -> usize {
        self.alive_pool.len()
    }

    pub fn alive_color_count(&self) -> usize {
        self.alive_color_count
    }

    /// Alive degree of an alive vertex (0 for a dead one).
    pub fn degree(&self, v: VertexId) -> usize {
        self.incident[v].len()
    }

    pub fn class_size(&self, c: ColorId) -> usize {
        self.by_color[c].len()
    }

    /// Alive edges incident to `v`, unordered.
    pub fn incident_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.incident[v]
    }

    /// Alive edges of color `c`, unordered.
    pub fn class_edges(&self, c: ColorId) -> &[EdgeId] {
        &self.by_color[c]
    }

    /// All alive edges, unordered. Index uniformly for a uniform edge draw.
    pub fn alive_edges(&self) -> &[EdgeId] {
        &self.alive_pool
    }

    /// Number of alive edges of color `c` at vertex `v` — the color degree
    /// d_C(v).
    pub fn color_degree(&self, v: VertexId, c: ColorId) -> usize {
        self.color_count[v]
            .iter()
            .find(|&&(cc, _)| cc == c)
            .map_or(0, |&(_, n)| n as usize)
    }

    /// (color, count) pairs with count > 0 at `v`, unordered.
    pub fn color_counts(&self, v: VertexId) -> &[(ColorId, u32)] {
        &self.color_count[v]
    }

    // ----- bipartite side marking -------------------------------------

    /// Marks `vertices` as side A. Replaces any previous marking.
    pub fn set_part_a(&mut self, vertices: &[VertexId]) {
        self.part_a = vec![false; self.num_vertices];
        for &v in vertices {
            assert!(v < self.num_vertices, "part-A vertex {v} out of range");
            self.part_a[v] = true;
        }
    }

    pub fn has_part_a(&self) -> bool {
        !self.part_a.is_empty()
    }

    pub fn in_part_a(&self, v: VertexId) -> bool {
        !self.part_a.is_empty() && self.part_a[v]
    }

    /// All vertices marked A (alive or dead), ascending.
    pub fn part_a_vertices(&self) -> Vec<VertexId> {
        (0..self.num_vertices).filter(|&v| self.in_part_a(v)).collect()
    }

    // ----- deletion ---------------------------------------------------

    /// Kills one edge. The edge must be alive; deleting a dead edge is an
    /// error, never a silent no-op.
    pub fn delete_edge(&mut self, e: EdgeId) -> Result<(), GraphError> {
        if e >= self.edges.len() {
            return Err(GraphError::UnknownEdge { edge: e });
        }
        if !self.edge_alive[e] {
            return Err(GraphError::AlreadyDead { kind: "edge", id: e });
        }
        self.detach_edge(e);
        Ok(())
    }

    /// Kills a vertex and every alive edge at it.
    pub fn delete_vertex(&mut self, v: VertexId) -> Result<(), GraphError> {
        if !self.vertex_alive[v] {
            return Err(GraphError::AlreadyDead { kind: "vertex", id: v });
        }
        self.vertex_alive[v] = false;
        self.alive_vertex_count -= 1;
        while let Some(&e) = self.incident[v].last() {
            self.detach_edge(e);
        }
        Ok(())
    }

    /// Kills a color and every alive edge of it.
    pub fn delete_color_class(&mut self, c: ColorId) -> Result<(), GraphError> {
        if !self.color_alive[c] {
            return Err(GraphError::AlreadyDead { kind: "color", id: c });
        }
        self.color_alive[c] = false;
        self.alive_color_count -= 1;
        while let Some(&e) = self.by_color[c].last() {
            self.detach_edge(e);
        }
        Ok(())
    }

    /// Removes an alive edge from all four alive lists and the color counts.
    fn detach_edge(&mut self, e: EdgeId) {
        debug_assert!(self.edge_alive[e]);
        self.edge_alive[e] = false;
        let Edge { u, v, color } = self.edges[e];

        let p = self.pos_u[e];
        self.incident[u].swap_remove(p);
        if p < self.incident[u].len() {
            let moved = self.incident[u][p];
            if self.edges[moved].u == u {
                self.pos_u[moved] = p;
            } else {
                self.pos_v[moved] = p;
            }
        }

        let p = self.pos_v[e];
        self.incident[v].swap_remove(p);
        if p < self.incident[v].len() {
            let moved = self.incident[v][p];
            if self.edges[moved].u == v {
                self.pos_u[moved] = p;
            } else {
                self.pos_v[moved] = p;
            }
        }

        let p = self.pos_color[e];
        self.by_color[color].swap_remove(p);
        if p < self.by_color[color].len() {
            let moved = self.by_color[color][p];
            self.pos_color[moved] = p;
        }

        let p = self.pos_pool[e];
        self.alive_pool.swap_remove(p);
        if p < self.alive_pool.len() {
            let moved = self.alive_pool[p];
            self.pos_pool[moved] = p;
        }

        bump_color_count(&mut self.color_count[u], color, -1);
        bump_color_count(&mut self.color_count[v], color, -1);
    }

    // ----- verification and statistics --------------------------------

    /// Checks a claimed rainbow matching against the graph **as built**:
    /// dead edges are fine, the promise is about the original instance.
    /// Returns the complete violation list (empty = valid). Unknown edge
    /// ids are an error, not a violation.
    pub fn verify_rainbow_matching(
        &self,
        m: &RainbowMatching,
    ) -> Result<Vec<MatchingViolation>, GraphError> {
        for &(e, _) in &m.entries {
            if e >= self.edges.len() {
                return Err(GraphError::UnknownEdge { edge: e });
            }
        }
        let mut violations = Vec::new();
        let mut seen_edge: std::collections::HashMap<EdgeId, usize> = Default::default();
        let mut vertex_owner: std::collections::HashMap<VertexId, EdgeId> = Default::default();
        let mut color_owner: std::collections::HashMap<ColorId, EdgeId> = Default::default();
        for &(e, claimed) in &m.entries {
            if seen_edge.insert(e, 1).is_some() {
                violations.push(MatchingViolation::RepeatedEdge { edge: e });
                continue;
            }
            let edge = &self.edges[e];
            if edge.color != claimed {
                violations.push(MatchingViolation::ColorMismatch {
                    edge: e,
                    claimed,
                    actual: edge.color,
                });
            }
            for w in [edge.u, edge.v] {
                match vertex_owner.entry(w) {
                    std::collections::hash_map::Entry::Occupied(o) => {
                        violations.push(MatchingViolation::SharedVertex {
                            first: *o.get(),
                            second: e,
                            vertex: w,
                        });
                    }
                    std::collections::hash_map::Entry::Vacant(slot) => {
                        slot.insert(e);
                    }
                }
            }
            match color_owner.entry(edge.color) {
                std::collections::hash_map::Entry::Occupied(o) => {
                    violations.push(MatchingViolation::RepeatedColor {
                        first: *o.get(),
                        second: e,
                        color: edge.color,
                    });
                }
                std::collections::hash_map::Entry::Vacant(slot) => {
                    slot.insert(e);
                }
            }
        }
        violations.sort_by_key(violation_sort_key);
        Ok(violations)
    }

    pub fn snapshot_stats(&self) -> SnapshotStats {
        let mut min_class = usize::MAX;
        let mut max_class = 0usize;
        let mut any_color = false;
        for c in 0..self.num_colors {
            if self.color_alive[c] {
                any_color = true;
                min_class = min_class.min(self.by_color[c].len());
                max_class = max_class.max(self.by_color[c].len());
            }
        }
        if !any_color {
            min_class = 0;
        }
        let mut max_degree = 0usize;
        let mut max_color_degree = 0usize;
        for v in 0..self.num_vertices {
            if self.vertex_alive[v] {
                max_degree = max_degree.max(self.incident[v].len());
                for &(_, n) in &self.color_count[v] {
                    max_color_degree = max_color_degree.max(n as usize);
                }
            }
        }
        SnapshotStats {
            alive_vertices: self.alive_vertex_count,
            alive_edges: self.alive_pool.len(),
            alive_colors: self.alive_color_count,
            min_class_size: min_class,
            max_class_size: max_class,
            max_degree,
            max_color_degree,
        }
    }

    /// Recomputes every derived index from the alive flags and compares.
    /// Test support for deletion-order properties; not used by solvers.
    #[doc(hidden)]
    pub fn check_index_consistency(&self) -> bool {
        let mut incident = vec![Vec::new(); self.num_vertices];
        let mut by_color = vec![Vec::new(); self.num_colors];
        let mut pool = Vec::new();
        for (id, e) in self.edges.iter().enumerate() {
            if self.edge_alive[id] {
                incident[e.u].push(id);
                incident[e.v].push(id);
                by_color[e.color].push(id);
                pool.push(id);
            }
        }
        let sorted = |mut v: Vec<EdgeId>| {
            v.sort_unstable();
            v
        };
        for v in 0..self.num_vertices {
            if sorted(self.incident[v].clone()) != sorted(incident[v].clone()) {
                return false;
            }
            for &(c, n) in &self.color_count[v] {
                let real = incident[v].iter().filter(|&&e| self.edges[e].color == c).count();
                if real != n as usize || n == 0 {
                    return false;
                }
            }
            let distinct: HashSet<ColorId> =
                incident[v].iter().map(|&e| self.edges[e].color).collect();
            if distinct.len() != self.color_count[v].len() {
                return false;
            }
        }
        for c in 0..self.num_colors {
            if sorted(self.by_color[c].clone()) != sorted(by_color[c].clone()) {
                return false;
            }
        }
        if sorted(self.alive_pool.clone()) != sorted(pool) {
            return false;
        }
        for (id, alive) in self.edge_alive.iter().enumerate() {
            if *alive {
                let e = &self.edges[id];
                if self.incident[e.u][self.pos_u[id]] != id
                    || self.incident[e.v][self.pos_v[id]] != id
                    || self.by_color[e.color][self.pos_color[id]] != id
                    || self.alive_pool[self.pos_pool[id]] != id
                {
                    return false;
                }
            }
        }
        true
    }
}

fn violation_sort_key(v: &MatchingViolation) -> (usize, usize, usize) {
    match *v {
        MatchingViolation::RepeatedEdge { edge } => (0, edge, 0),
        MatchingViolation::SharedVertex { first, second, .. } => (1, first, second),
        MatchingViolation::RepeatedColor { first, second, .. } => (2, first, second),
        MatchingViolation::ColorMismatch { edge, claimed, .. } => (3, edge, claimed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle() -> EdgeColoredGraph {
        build_graph(3, 3, &[(0, 1, 0), (1, 2, 1), (0, 2, 2)]).unwrap()
    }

    #[test]
    fn build_rejects_loops() {
        let err = build_graph(3, 1, &[(1, 1, 0)]).unwrap_err();
        assert_eq!(err, GraphError::LoopEdge { index: 0, vertex: 1 });
    }

    #[test]
    fn build_rejects_parallel_edges_regardless_of_color() {
        let err = build_graph(3, 2, &[(0, 1, 0), (1, 0, 1)]).unwrap_err();
        assert_eq!(
            err,
            GraphError::ParallelEdge { first: 0, second: 1, u: 0, v: 1 }
        );
    }

    #[test]
    fn build_rejects_out_of_range_ids() {
        let err = build_graph(2, 1, &[(0, 5, 0)]).unwrap_err();
        assert!(matches!(err, GraphError::VertexOutOfRange { vertex: 5, .. }));
        let err = build_graph(2, 1, &[(0, 1, 3)]).unwrap_err();
        assert!(matches!(err, GraphError::ColorOutOfRange { color: 3, .. }));
    }

    #[test]
    fn second_deletion_is_an_error() {
        let mut g = triangle();
        g.delete_edge(0).unwrap();
        assert_eq!(
            g.delete_edge(0).unwrap_err(),
            GraphError::AlreadyDead { kind: "edge", id: 0 }
        );
        g.delete_vertex(2).unwrap();
        assert_eq!(
            g.delete_vertex(2).unwrap_err(),
            GraphError::AlreadyDead { kind: "vertex", id: 2 }
        );
        g.delete_color_class(0).unwrap();
        assert_eq!(
            g.delete_color_class(0).unwrap_err(),
            GraphError::AlreadyDead { kind: "color", id: 0 }
        );
    }

    #[test]
    fn vertex_deletion_kills_incident_edges() {
        let mut g = triangle();
        g.delete_vertex(1).unwrap();
        assert!(!g.is_edge_alive(0) && !g.is_edge_alive(1));
        assert!(g.is_edge_alive(2));
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.alive_edge_count(), 1);
        assert!(g.check_index_consistency());
    }

    #[test]
    fn color_deletion_kills_class() {
        let mut g = triangle();
        g.delete_color_class(1).unwrap();
        assert!(!g.is_edge_alive(1));
        assert!(!g.is_color_alive(1));
        assert_eq!(g.alive_color_count(), 2);
        assert_eq!(g.class_size(1), 0);
    }

    #[test]
    fn empty_matching_is_valid() {
        let g = triangle();
        assert!(g.verify_rainbow_matching(&RainbowMatching::new()).unwrap().is_empty());
    }

    #[test]
    fn verify_accepts_dead_edges() {
        // The promise is about the graph as built.
        let mut g = triangle();
        g.delete_vertex(2).unwrap();
        let mut m = RainbowMatching::new();
        m.push(0, 0);
        assert!(g.verify_rainbow_matching(&m).unwrap().is_empty());
    }

    #[test]
    fn verify_reports_shared_vertex_and_repeated_color() {
        let g = build_graph(4, 2, &[(0, 1, 0), (1, 2, 1), (2, 3, 0)]).unwrap();
        let mut m = RainbowMatching::new();
        m.push(0, 0);
        m.push(1, 1);
        let viol = g.verify_rainbow_matching(&m).unwrap();
        assert_eq!(
            viol,
            vec![MatchingViolation::SharedVertex { first: 0, second: 1, vertex: 1 }]
        );
        let mut m = RainbowMatching::new();
        m.push(0, 0);
        m.push(2, 0);
        let viol = g.verify_rainbow_matching(&m).unwrap();
        assert_eq!(
            viol,
            vec![MatchingViolation::RepeatedColor { first: 0, second: 2, color: 0 }]
        );
    }

    #[test]
    fn verify_rejects_unknown_edges_and_flags_color_mismatch() {
        let g = triangle();
        let mut m = RainbowMatching::new();
        m.push(7, 0);
        assert_eq!(
            g.verify_rainbow_matching(&m).unwrap_err(),
            GraphError::UnknownEdge { edge: 7 }
        );
        let mut m = RainbowMatching::new();
        m.push(0, 2);
        let viol = g.verify_rainbow_matching(&m).unwrap();
        assert_eq!(
            viol,
            vec![MatchingViolation::ColorMismatch { edge: 0, claimed: 2, actual: 0 }]
        );
    }

    #[test]
    fn snapshot_of_small_graph() {
        let g = build_graph(4, 2, &[(0, 1, 0), (2, 3, 0), (0, 2, 1)]).unwrap();
        let s = g.snapshot_stats();
        assert_eq!(s.alive_vertices, 4);
        assert_eq!(s.alive_edges, 3);
        assert_eq!(s.alive_colors, 2);
        assert_eq!(s.min_class_size, 1);
        assert_eq!(s.max_class_size, 2);
        assert_eq!(s.max_degree, 2);
        assert_eq!(s.max_color_degree, 1);
    }

    /// Brute-force pairwise validity check, independent of verify's bookkeeping.
    fn brute_force_valid(g: &EdgeColoredGraph, m: &RainbowMatching) -> bool {
        for (i, &(e1, c1)) in m.entries.iter().enumerate() {
            if e1 >= g.num_edges() || g.edge(e1).color != c1 {
                return false;
            }
            for &(e2, _) in &m.entries[i + 1..] {
                if e2 >= g.num_edges() {
                    return false;
                }
                let (a, b) = (g.edge(e1), g.edge(e2));
                if e1 == e2 || a.shares_vertex(b) || a.color == b.color {
                    return false;
                }
            }
        }
        true
    }

    fn arbitrary_graph() -> impl Strategy<Value = EdgeColoredGraph> {
        (2usize..12, 1usize..6, proptest::collection::vec((0usize..12, 0usize..12, 0usize..6), 0..24))
            .prop_map(|(n, k, raw)| {
                let mut seen = std::collections::HashSet::new();
                let mut edges = Vec::new();
                for (u, v, c) in raw {
                    let (u, v, c) = (u % n, v % n, c % k);
                    if u != v && seen.insert((u.min(v), u.max(v))) {
                        edges.push((u, v, c));
                    }
                }
                build_graph(n, k, &edges).unwrap()
            })
    }

    proptest! {
        #[test]
        fn deletion_sequences_keep_indexes_consistent(
            g in arbitrary_graph(),
            ops in proptest::collection::vec((0u8..3, 0usize..16), 0..24),
        ) {
            let mut g = g;
            for (kind, id) in ops {
                match kind {
                    0 => { let _ = g.delete_edge(id % g.num_edges().max(1)); }
                    1 => { let _ = g.delete_vertex(id % g.num_vertices()); }
                    _ => { let _ = g.delete_color_class(id % g.num_colors()); }
                }
                prop_assert!(g.check_index_consistency());
            }
            // Dead vertices and colors hold no alive edges.
            for v in 0..g.num_vertices() {
                if !g.is_vertex_alive(v) {
                    prop_assert_eq!(g.degree(v), 0);
                }
            }
            for c in 0..g.num_colors() {
                if !g.is_color_alive(c) {
                    prop_assert_eq!(g.class_size(c), 0);
                }
            }
        }

        #[test]
        fn verify_agrees_with_brute_force(
            g in arbitrary_graph(),
            picks in proptest::collection::vec((0usize..24, proptest::bool::ANY), 0..20),
        ) {
            // Build entries that are sometimes valid, sometimes corrupt.
            let mut m = RainbowMatching::new();
            for (raw, lie) in picks {
                if g.num_edges() == 0 { break; }
                let e = raw % g.num_edges();
                let c = if lie { (g.edge(e).color + 1) % g.num_colors() } else { g.edge(e).color };
                m.push(e, c);
            }
            let verdict = g.verify_rainbow_matching(&m).unwrap().is_empty();
            prop_assert_eq!(verdict, brute_force_valid(&g, &m));
        }
    }
}
