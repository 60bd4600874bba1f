//! Solver selection and parameter resolution: CLI flags name an algorithm
//! by its opaque tag and optionally override schedule constants; anything
//! left out is inferred from the instance or filled from the family's
//! default formulas.

use rainbow_nibble::graph::EdgeColoredGraph;
use rainbow_nibble::nibble::{color_target, saturating, uniform};
use rainbow_nibble::report::RunReport;

/// Which nibble family a solve run uses, keyed by the external tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Alg {
    /// Match every color: uniform color-activation rounds plus completion.
    Thm1,
    /// Saturate side A of a bipartite instance: batch rounds plus greedy.
    Thm3,
    /// Reach exactly q colors: heavy-set preprocessing plus batch rounds.
    Thmq,
}

impl Alg {
    pub fn as_tag(self) -> &'static str {
        match self {
            Alg::Thm1 => "thm1",
            Alg::Thm3 => "thm3",
            Alg::Thmq => "thmq",
        }
    }
}

/// Optional overrides; `None` means "use the default rule".
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOverrides {
    pub q: Option<usize>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub dmax: Option<usize>,
    pub retries: Option<usize>,
}

/// Fully resolved parameters, one variant per family.
#[derive(Debug, Clone, Copy)]
pub enum ResolvedParams {
    Uniform(uniform::UniformParams),
    Saturating(saturating::SaturatingParams),
    ColorTarget(color_target::ColorTargetParams),
}

#[derive(Debug, thiserror::Error)]
pub enum ParamError {
    #[error("instance marks no part-A vertices; thm3 needs them (or pass --q)")]
    NoPartA,
    #[error("cannot infer q: {reason}")]
    NoTarget { reason: String },
    #[error("invalid parameter: {reason}")]
    Invalid { reason: String },
}

fn min_alive_class_size(g: &EdgeColoredGraph) -> Option<usize> {
    (0..g.num_colors())
        .filter(|&c| g.is_color_alive(c))
        .map(|c| g.class_size(c))
        .min()
}

/// Resolves parameters for `alg` against the instance: explicit overrides
/// win, then instance-derived inferences, then the family's default
/// formulas. The `valid` flag reflects the family's calibrated range and
/// is re-evaluated after overrides.
pub fn resolve_params(
    alg: Alg,
    g: &EdgeColoredGraph,
    o: &SolveOverrides,
) -> Result<ResolvedParams, ParamError> {
    match alg {
        Alg::Thm1 => {
            let dmax = o
                .dmax
                .unwrap_or_else(|| g.snapshot_stats().max_color_degree.max(1));
            let min_class = min_alive_class_size(g).unwrap_or(0);
            let q = match (o.q, o.eps) {
                (Some(q), _) => q,
                (None, Some(eps)) => {
                    ((min_class as f64 / (1.0 + eps)).floor() as usize).max(1)
                }
                // Classes hold (1+eps)q edges; with eps unknown, the class
                // size itself is the only available scale.
                (None, None) => min_class.max(1),
            };
            if q == 0 {
                return Err(ParamError::NoTarget {
                    reason: "no alive classes and no --q".into(),
                });
            }
            // Defaults are derived from max(q, 2): the formulas divide by
            // ln q, but a target of 1 is still a legitimate ask.
            let mut p = uniform::default_params(q.max(2), dmax);
            p.q = q;
            if let Some(eps) = o.eps {
                p.eps = eps;
            }
            if let Some(delta) = o.delta {
                p.delta = delta;
            }
            if let Some(eta) = o.eta {
                p.eta = eta;
            }
            if let Some(retries) = o.retries {
                p.retries = retries;
            }
            check_positive(p.delta, "delta")?;
            p.valid = p.eps > 0.0 && p.eps < 1.0 && p.eta > 0.0 && p.delta < 1.0;
            Ok(ResolvedParams::Uniform(p))
        }
        Alg::Thm3 => {
            let part_a = g.part_a_vertices();
            let q = match o.q {
                Some(q) => q,
                None if part_a.is_empty() => return Err(ParamError::NoPartA),
                None => part_a.len(),
            };
            if q == 0 {
                return Err(ParamError::NoTarget { reason: "q = 0".into() });
            }
            let eps = o.eps.unwrap_or_else(|| {
                let min_deg = part_a.iter().map(|&v| g.degree(v)).min().unwrap_or(0);
                (min_deg as f64 / q as f64 - 1.0).max(0.0)
            });
            let mut p = saturating::default_params(q.max(2), eps);
            p.q = q;
            if let Some(delta) = o.delta {
                p.delta = delta;
            }
            if let Some(eta) = o.eta {
                p.eta = eta;
            }
            check_positive(p.delta, "delta")?;
            p.valid = p.eps > 0.0 && p.eps < 0.1 && p.delta > 0.0 && p.delta < 1.0;
            Ok(ResolvedParams::Saturating(p))
        }
        Alg::Thmq => {
            let eps = o.eps.unwrap_or(0.05);
            let q = match o.q {
                Some(q) => q,
                // The guarantee is calibrated to 2(1+eps)q colors.
                None => {
                    ((g.num_colors() as f64 / (2.0 * (1.0 + eps))).floor() as usize).max(2)
                }
            };
            if q < 2 {
                return Err(ParamError::NoTarget { reason: "q must be at least 2".into() });
            }
            let mut p = color_target::default_params(q, eps);
            if let Some(delta) = o.delta {
                p.delta = delta;
            }
            if let Some(retries) = o.retries {
                p.retries = retries;
            }
            check_positive(p.delta, "delta")?;
            p.valid = p.eps > 0.0 && p.eps < 0.1 && p.delta > 0.0 && p.delta < 1.0;
            Ok(ResolvedParams::ColorTarget(p))
        }
    }
}

fn check_positive(x: f64, name: &str) -> Result<(), ParamError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ParamError::Invalid { reason: format!("{name} must be positive and finite, got {x}") })
    }
}

/// Runs the resolved solver.
pub fn solve(g: &EdgeColoredGraph, params: &ResolvedParams, seed: u64) -> RunReport {
    match params {
        ResolvedParams::Uniform(p) => uniform::run(g, p, seed),
        ResolvedParams::Saturating(p) => saturating::run(g, p, seed),
        ResolvedParams::ColorTarget(p) => color_target::run(g, p, seed),
    }
}

/// Worker-count cap: `RNM_WORKERS` if set and positive, else available
/// parallelism, else 1.
pub fn workers_from_env() -> usize {
    match std::env::var("RNM_WORKERS") {
        Ok(s) => s.trim().parse::<usize>().ok().filter(|&w| w > 0).unwrap_or(1),
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rainbow_nibble::constructions::{random_instance, RandomKind};
    use rainbow_nibble::graph::build_graph;

    #[test]
    fn thm1_infers_scale_from_class_sizes() {
        let g = random_instance(RandomKind::Uniform { n: 180, q: 40, eps: 0.5, delta_max: 1 }, 3)
            .unwrap();
        let r = resolve_params(Alg::Thm1, &g, &SolveOverrides { eps: Some(0.5), ..Default::default() })
            .unwrap();
        match r {
            ResolvedParams::Uniform(p) => {
                assert_eq!(p.q, 40, "min class 60 = (1+0.5)q");
                assert_eq!(p.delta_max, 1);
            }
            other => panic!("wrong family: {other:?}"),
        }
    }

    #[test]
    fn thm3_takes_q_from_part_a() {
        let g = random_instance(RandomKind::Saturating { n: 260, q: 60, eps: 0.3 }, 3).unwrap();
        let r = resolve_params(Alg::Thm3, &g, &SolveOverrides::default()).unwrap();
        match r {
            ResolvedParams::Saturating(p) => {
                assert_eq!(p.q, 60);
                assert!((p.eps - 0.3).abs() < 0.05, "inferred from min A-degree: {}", p.eps);
                assert!(!p.valid, "eps 0.3 is outside the calibrated range");
            }
            other => panic!("wrong family: {other:?}"),
        }
    }

    #[test]
    fn thm3_without_part_a_needs_explicit_q() {
        let g = build_graph(2, 1, &[(0, 1, 0)]).unwrap();
        assert!(matches!(
            resolve_params(Alg::Thm3, &g, &SolveOverrides::default()),
            Err(ParamError::NoPartA)
        ));
    }

    #[test]
    fn thmq_divides_the_color_count() {
        let g = random_instance(RandomKind::ColorTarget { n: 160, q: 20, eps: 0.3 }, 3).unwrap();
        assert_eq!(g.num_colors(), 52);
        let r = resolve_params(
            Alg::Thmq,
            &g,
            &SolveOverrides { eps: Some(0.3), ..Default::default() },
        )
        .unwrap();
        match r {
            ResolvedParams::ColorTarget(p) => assert_eq!(p.q, 20),
            other => panic!("wrong family: {other:?}"),
        }
    }

    #[test]
    fn bad_delta_is_rejected() {
        let g = build_graph(2, 1, &[(0, 1, 0)]).unwrap();
        let o = SolveOverrides { q: Some(4), delta: Some(0.0), ..Default::default() };
        assert!(matches!(
            resolve_params(Alg::Thmq, &g, &o),
            Err(ParamError::Invalid { .. })
        ));
    }
}
