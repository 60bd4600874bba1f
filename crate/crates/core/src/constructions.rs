//! Instance families with known extremal behavior, plus seeded random
//! generators shaped for each solver's input contract.
//!
//! The explicit families pin down the boundary cases: the cyclic coloring
//! of `K_{n,n}` (full transversal iff `n` is odd), a blocked construction
//! whose maximum rainbow matching stops one short of the obvious bound, a
//! star forest separating colored from uncolored matchings, and a tight
//! near-factorization of `K_{2q-1}` where `q` edges per color and color
//! degree two still only admit a rainbow matching of size `q - 1`.

use crate::graph::{build_graph, ColorId, EdgeColoredGraph, VertexId};
use crate::rng::{Purpose, SeedSplitter};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("construction requires even t, got {t}")]
    OddT { t: usize },
    #[error("bad generator parameters: {reason}")]
    BadParameters { reason: String },
    #[error("generation budget exceeded after {attempts} rejected draws for one slot")]
    GenerationBudgetExceeded { attempts: u64 },
}

/// Rejected draws allowed per edge slot before a generator gives up.
pub const GENERATION_RETRY_BUDGET: u64 = 100;

/// The cyclic latin square `L[i][j] = (i + j) mod n`.
pub fn cyclic_square(n: usize) -> Vec<Vec<usize>> {
    assert!(n >= 1, "square side must be positive");
    (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect()
}

/// `K_{n,n}` colored by the cyclic square: left vertices `0..n`, right
/// vertices `n..2n`, edge `(i, n+j)` colored `(i + j) mod n`. The left
/// side is marked as side A. Maximum rainbow matching is `n` for odd `n`
/// and `n - 1` for even `n`.
pub fn cyclic_latin_coloring(n: usize) -> EdgeColoredGraph {
    assert!(n >= 1, "need at least one vertex per side");
    let mut edges: Vec<(VertexId, VertexId, ColorId)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            edges.push((i, n + j, (i + j) % n));
        }
    }
    let mut g = build_graph(2 * n, n, &edges).expect("K_{n,n} is simple");
    let left: Vec<VertexId> = (0..n).collect();
    g.set_part_a(&left);
    g
}

/// Cyclic `K_{t,t}` (colors `0..t`) plus one extra color `t` forming a
/// perfect matching inside each side: `{2i, 2i+1}` on the left and on the
/// right. Every color class has at least `t` edges, yet the maximum
/// rainbow matching is exactly `t - 1`: an extra-color edge burns two
/// same-side vertices, leaving too few to host `t - 1` more disjoint
/// cross edges, while the cyclic part alone tops out at `t - 1` for even
/// `t`. Requires even `t`.
pub fn prop2_counterexample(t: usize) -> Result<EdgeColoredGraph, ConstructionError> {
    if t % 2 != 0 {
        return Err(ConstructionError::OddT { t });
    }
    let mut edges: Vec<(VertexId, VertexId, ColorId)> = Vec::with_capacity(t * t + t);
    for j in 0..t {
        for a in 0..t {
            edges.push((a, t + (a + j) % t, j));
        }
    }
    for i in 0..t / 2 {
        edges.push((2 * i, 2 * i + 1, t));
    }
    for i in 0..t / 2 {
        edges.push((t + 2 * i, t + 2 * i + 1, t));
    }
    Ok(build_graph(2 * t, t + 1, &edges).expect("cross and intra-side pairs are distinct"))
}

/// `q - 1` disjoint stars `K_{1,n}`, the edges of each star colored
/// `0..n`. Any matching picks at most one edge per star, so both the
/// uncolored and the rainbow maximum matching equal `q - 1` (for
/// `n >= q - 1`).
pub fn star_forest(q: usize, n: usize) -> EdgeColoredGraph {
    assert!(q >= 1, "q must be positive");
    assert!(n >= 1, "stars need at least one leaf");
    let stars = q - 1;
    let mut edges: Vec<(VertexId, VertexId, ColorId)> = Vec::with_capacity(stars * n);
    for s in 0..stars {
        let center = s * (n + 1);
        for leaf in 0..n {
            edges.push((center, center + 1 + leaf, leaf));
        }
    }
    build_graph(stars * (n + 1), n, &edges).expect("disjoint stars are simple")
}

/// Near-factorization of `K_{2q-1}` into near-perfect matchings: in round
/// `r` vertex `r` sits out and `{i, j}` is paired iff `i + j = 2r` mod
/// `2q - 1` (each round's edges listed by increasing smaller endpoint).
fn k2qm1_rounds(q: usize) -> Vec<Vec<(VertexId, VertexId)>> {
    let m = 2 * q - 1;
    (0..m)
        .map(|r| {
            let mut round = Vec::with_capacity(q - 1);
            for i in 0..m {
                let j = (2 * r % m + m - i) % m;
                if i < j && i != r {
                    round.push((i, j));
                }
            }
            round
        })
        .collect()
}

/// Tight instance on `K_{2q-1}`: `2q - 3` colors, each class exactly `q`
/// edges with color degree at most two, maximum rainbow matching at most
/// `q - 1`. The first `2q - 3` rounds of the factorization become colors
/// `0..2q-3`; the last two rounds are interleaved edge by edge and dealt
/// onto those colors in order, except the final edge, which is dropped
/// (its deletion is what makes the counts come out even).
pub fn k2qm1_tight(q: usize) -> Result<EdgeColoredGraph, ConstructionError> {
    if q < 2 {
        return Err(ConstructionError::BadParameters {
            reason: format!("need q >= 2, got {q}"),
        });
    }
    let rounds = k2qm1_rounds(q);
    let num_colors = 2 * q - 3;
    let mut edges: Vec<(VertexId, VertexId, ColorId)> = Vec::new();
    for (r, round) in rounds.iter().take(num_colors).enumerate() {
        for &(u, v) in round {
            edges.push((u, v, r));
        }
    }
    let mut leftover: Vec<(VertexId, VertexId)> = Vec::with_capacity(2 * (q - 1));
    for idx in 0..(q - 1) {
        leftover.push(rounds[2 * q - 3][idx]);
        leftover.push(rounds[2 * q - 2][idx]);
    }
    for (c, &(u, v)) in leftover.iter().take(num_colors).enumerate() {
        edges.push((u, v, c));
    }
    // leftover[num_colors], the one edge too many, is deliberately dropped.
    Ok(build_graph(2 * q - 1, num_colors, &edges)
        .expect("a factorization never repeats a pair"))
}

/// Which solver's input contract a random instance should satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomKind {
    /// General graph: `max(1, q/8)` colors, each class `ceil((1+eps) q)`
    /// edges with per-vertex color degree at most `delta_max`.
    Uniform { n: usize, q: usize, eps: f64, delta_max: usize },
    /// Bipartite: side A is `0..q`; `ceil((1+eps) q)` rounds of random
    /// A-saturating injections into B, each round split over two fresh
    /// colors, so every A-vertex ends with degree `ceil((1+eps) q)` and
    /// every class is a matching.
    Saturating { n: usize, q: usize, eps: f64 },
    /// General graph: `2 ceil((1+eps) q)` colors, each class a uniform
    /// random matching of exactly `q` edges.
    ColorTarget { n: usize, q: usize, eps: f64 },
}

fn check(cond: bool, reason: impl Into<String>) -> Result<(), ConstructionError> {
    if cond {
        Ok(())
    } else {
        Err(ConstructionError::BadParameters { reason: reason.into() })
    }
}

/// Draws `classes` color classes of `class_size` edges each on `n`
/// vertices, keeping the graph simple and every per-class vertex degree
/// at most `delta_max`.
fn random_classes(
    n: usize,
    classes: usize,
    class_size: usize,
    delta_max: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(VertexId, VertexId, ColorId)>, ConstructionError> {
    let mut used_pairs: HashSet<(VertexId, VertexId)> = HashSet::new();
    let mut edges = Vec::with_capacity(classes * class_size);
    let mut class_degree = vec![0usize; n];
    for c in 0..classes {
        class_degree.iter_mut().for_each(|d| *d = 0);
        for _ in 0..class_size {
            let mut rejects = 0u64;
            loop {
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                let key = (u.min(v), u.max(v));
                if u != v
                    && class_degree[u] < delta_max
                    && class_degree[v] < delta_max
                    && !used_pairs.contains(&key)
                {
                    used_pairs.insert(key);
                    class_degree[u] += 1;
                    class_degree[v] += 1;
                    edges.push((u, v, c));
                    break;
                }
                rejects += 1;
                if rejects > GENERATION_RETRY_BUDGET {
                    return Err(ConstructionError::GenerationBudgetExceeded { attempts: rejects });
                }
            }
        }
    }
    Ok(edges)
}

/// Generates a seeded random instance for the given contract.
pub fn random_instance(kind: RandomKind, seed: u64) -> Result<EdgeColoredGraph, ConstructionError> {
    let mut rng = SeedSplitter::new(seed).stream(Purpose::Gen, 0, 0);
    match kind {
        RandomKind::Uniform { n, q, eps, delta_max } => {
            check(q >= 1, "q must be positive")?;
            check(eps > 0.0, "eps must be positive")?;
            check(delta_max >= 1, "delta_max must be positive")?;
            let class_size = ((1.0 + eps) * q as f64).ceil() as usize;
            let classes = (q / 8).max(1);
            check(
                n >= 2 * class_size,
                format!("need n >= {} for classes of {class_size} edges", 2 * class_size),
            )?;
            let edges = random_classes(n, classes, class_size, delta_max, &mut rng)?;
            Ok(build_graph(n, classes, &edges).expect("generator keeps the graph simple"))
        }
        RandomKind::Saturating { n, q, eps } => {
            check(q >= 2, "need at least two A-vertices")?;
            check(eps > 0.0, "eps must be positive")?;
            let degree = ((1.0 + eps) * q as f64).ceil() as usize;
            check(n > q, "need a nonempty B side")?;
            let b = n - q;
            check(
                b >= q,
                format!("B side must host an injection of A: need n >= {}", 2 * q),
            )?;
            let mut edges: Vec<(VertexId, VertexId, ColorId)> = Vec::with_capacity(q * degree);
            let mut neighbor: Vec<HashSet<VertexId>> = vec![HashSet::new(); q];
            let mut order: Vec<usize> = (0..q).collect();
            for round in 0..degree {
                let mut hit = vec![false; b];
                let mut targets = Vec::with_capacity(q);
                for a in 0..q {
                    let mut rejects = 0u64;
                    loop {
                        let t = rng.gen_range(0..b);
                        if !hit[t] && !neighbor[a].contains(&(q + t)) {
                            hit[t] = true;
                            neighbor[a].insert(q + t);
                            targets.push(q + t);
                            break;
                        }
                        rejects += 1;
                        if rejects > GENERATION_RETRY_BUDGET {
                            return Err(ConstructionError::GenerationBudgetExceeded {
                                attempts: rejects,
                            });
                        }
                    }
                }
                // Deal this round's edges onto two fresh colors by a random
                // half-split, so class membership is not tied to vertex id.
                for i in (1..q).rev() {
                    order.swap(i, rng.gen_range(0..=i));
                }
                let mut colored: Vec<(VertexId, VertexId, ColorId)> = (0..q)
                    .map(|pos| {
                        let a = order[pos];
                        let color = 2 * round + usize::from(pos >= q / 2);
                        (a, targets[a], color)
                    })
                    .collect();
                colored.sort_unstable_by_key(|&(a, _, _)| a);
                edges.extend(colored);
            }
            let mut g = build_graph(n, 2 * degree, &edges).expect("injections avoid repeats");
            let left: Vec<VertexId> = (0..q).collect();
            g.set_part_a(&left);
            Ok(g)
        }
        RandomKind::ColorTarget { n, q, eps } => {
            check(q >= 1, "q must be positive")?;
            check(eps > 0.0, "eps must be positive")?;
            let classes = 2 * ((1.0 + eps) * q as f64).ceil() as usize;
            check(n >= 2 * q, format!("a {q}-edge matching needs n >= {}", 2 * q))?;
            let edges = random_classes(n, classes, q, 1, &mut rng)?;
            Ok(build_graph(n, classes, &edges).expect("generator keeps the graph simple"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{max_matching_size_ignoring_colors, max_rainbow_matching};

    #[test]
    fn cyclic_coloring_matches_parity_rule() {
        // Frozen boundary values, then the general parity rule.
        assert_eq!(max_rainbow_matching(&cyclic_latin_coloring(2), u64::MAX).matching.len(), 1);
        assert_eq!(max_rainbow_matching(&cyclic_latin_coloring(3), u64::MAX).matching.len(), 3);
        for n in 2..=5 {
            let g = cyclic_latin_coloring(n);
            let expect = if n % 2 == 1 { n } else { n - 1 };
            let res = max_rainbow_matching(&g, u64::MAX);
            assert!(res.exact);
            assert_eq!(res.matching.len(), expect, "n = {n}");
            assert!(g.in_part_a(0) && !g.in_part_a(n));
        }
    }

    #[test]
    fn blocked_instance_stops_one_short() {
        assert!(matches!(prop2_counterexample(3), Err(ConstructionError::OddT { t: 3 })));
        for t in [2usize, 4] {
            let g = prop2_counterexample(t).unwrap();
            assert_eq!(g.num_colors(), t + 1);
            for c in 0..=t {
                assert_eq!(g.class_size(c), t, "color {c}");
            }
            let res = max_rainbow_matching(&g, u64::MAX);
            assert!(res.exact);
            assert_eq!(res.matching.len(), t - 1, "t = {t}");
        }
    }

    #[test]
    fn star_forest_bounds_both_matching_notions() {
        let g = star_forest(4, 3);
        assert_eq!(g.num_vertices(), 3 * 4);
        assert_eq!(g.num_colors(), 3);
        let (plain, exact) = max_matching_size_ignoring_colors(&g, u64::MAX);
        assert!(exact);
        assert_eq!(plain, 3);
        let rainbow = max_rainbow_matching(&g, u64::MAX);
        assert!(rainbow.exact);
        assert_eq!(rainbow.matching.len(), 3);
    }

    #[test]
    fn tight_instance_smallest_case_is_pinned() {
        // q = 2: triangle with one color class {1,2}, {0,2}; edge {0,1} dropped.
        let g = k2qm1_tight(2).unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_colors(), 1);
        assert_eq!(g.num_edges(), 2);
        let got: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(got, vec![(1, 2), (0, 2)]);
    }

    #[test]
    fn tight_instance_counts_and_bound() {
        for q in [3usize, 4] {
            let g = k2qm1_tight(q).unwrap();
            assert_eq!(g.num_vertices(), 2 * q - 1);
            assert_eq!(g.num_colors(), 2 * q - 3);
            for c in 0..g.num_colors() {
                assert_eq!(g.class_size(c), q, "q = {q}, color {c}");
            }
            let stats = g.snapshot_stats();
            assert!(stats.max_color_degree <= 2, "q = {q}");
            let res = max_rainbow_matching(&g, u64::MAX);
            assert!(res.exact);
            assert!(res.matching.len() <= q - 1, "q = {q}: {}", res.matching.len());
        }
    }

    #[test]
    fn uniform_generator_respects_contract() {
        let kind = RandomKind::Uniform { n: 60, q: 16, eps: 0.5, delta_max: 2 };
        let g = random_instance(kind, 7).unwrap();
        assert_eq!(g.num_colors(), 2);
        let class_size = (1.5f64 * 16.0).ceil() as usize;
        for c in 0..g.num_colors() {
            assert_eq!(g.class_size(c), class_size);
        }
        for v in 0..g.num_vertices() {
            for c in 0..g.num_colors() {
                assert!(g.color_degree(v, c) <= 2);
            }
        }
        let again = random_instance(kind, 7).unwrap();
        assert_eq!(g.edges(), again.edges(), "same seed must replay");
        let other = random_instance(kind, 8).unwrap();
        assert_ne!(g.edges(), other.edges(), "distinct seeds should differ");
    }

    #[test]
    fn saturating_generator_builds_regular_bipartite_sides() {
        let q = 10;
        let g = random_instance(RandomKind::Saturating { n: 36, q, eps: 0.3 }, 3).unwrap();
        let degree = (1.3f64 * q as f64).ceil() as usize;
        assert_eq!(g.num_colors(), 2 * degree);
        for a in 0..q {
            assert!(g.in_part_a(a));
            assert_eq!(g.degree(a), degree);
        }
        for c in 0..g.num_colors() {
            assert!(g.class_size(c) >= 1);
            // Each class is a matching: color degree never exceeds one.
            for v in 0..g.num_vertices() {
                assert!(g.color_degree(v, c) <= 1);
            }
        }
        for e in g.edges() {
            assert!(e.u < q && e.v >= q, "edges must cross the bipartition");
        }
    }

    #[test]
    fn color_target_generator_emits_exact_matchings() {
        let q = 6;
        let g = random_instance(RandomKind::ColorTarget { n: 40, q, eps: 0.3 }, 11).unwrap();
        assert_eq!(g.num_colors(), 2 * (1.3f64 * q as f64).ceil() as usize);
        for c in 0..g.num_colors() {
            assert_eq!(g.class_size(c), q);
            for v in 0..g.num_vertices() {
                assert!(g.color_degree(v, c) <= 1);
            }
        }
    }

    #[test]
    fn generators_reject_hopeless_parameters() {
        assert!(matches!(
            random_instance(RandomKind::ColorTarget { n: 4, q: 6, eps: 0.3 }, 0),
            Err(ConstructionError::BadParameters { .. })
        ));
        // Too few vertices to host a class of ceil(1.1 * 4) matching edges.
        assert!(matches!(
            random_instance(RandomKind::Uniform { n: 8, q: 4, eps: 0.1, delta_max: 1 }, 0),
            Err(ConstructionError::BadParameters { .. })
        ));
    }
}
