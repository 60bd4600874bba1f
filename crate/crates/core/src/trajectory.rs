//! Idealized trajectory curves, scheduled error envelopes, and numeric
//! verification of the algebraic identities the schedules rest on.
//!
//! Every solver follows a deterministic schedule derived from a pair of
//! closed-form curves `s(x)` (normalized class size / A-degree) and `g(x)`
//! (normalized degree), with error envelopes `α_t`, `β_t` widening as the
//! process runs. This module owns those closed forms; the solvers only
//! evaluate them.

use crate::report::TrajectoryRecord;
use thiserror::Error;

/// Envelope ceiling: scheduled `α_t`, `β_t` are capped here before use in
/// deletion probabilities. The analysis only ever relies on the envelopes
/// through this bound, and the raw schedules blow past it at desk scale.
pub const SCHEDULE_CAP: f64 = 0.01;

/// The capped (effective) value of a scheduled envelope entry.
pub fn capped(x: f64) -> f64 {
    x.min(SCHEDULE_CAP)
}

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("x = {x} outside curve domain [0, {eta}]")]
    OutOfDomain { x: f64, eta: f64 },
    #[error("identity violated at {worst:?}: residual {residual:e}")]
    IdentityViolated { worst: GridPoint, residual: f64 },
}

/// Derived shape constants of the color-target process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorTargetShape {
    pub eps: f64,
    pub theta: f64,
    pub gamma: f64,
    /// Exponent relating the curves: s = g^M, with M > 2.
    pub m: f64,
    pub eta: f64,
}

impl ColorTargetShape {
    pub fn new(eps: f64) -> Self {
        let theta = eps / 2.0;
        let gamma = (1.0 + theta) / (1.0 + eps);
        let m = ((1.0 - theta) + (1.0 + theta) * gamma) / gamma;
        let eta = 1.0 / (2.0 * (1.0 + eps)) * (1.0 - theta / 2.0 + theta * gamma / 2.0)
            / (1.0 - theta + theta * gamma);
        Self { eps, theta, gamma, m, eta }
    }

    /// Decay rate of the curves' common base `1 - slope * x`.
    pub fn base_slope(&self) -> f64 {
        2.0 * (1.0 + self.eps) * (1.0 - self.theta + self.theta * self.gamma)
    }
}

/// Which closed-form curve family applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// Color-activation process: s = (1-γx)², g = 1-γx.
    Uniform { gamma: f64 },
    /// Bipartite saturating process: same curve shapes.
    Saturating { gamma: f64 },
    /// Color-target process: s = base^{M/(M-1)}, g = base^{1/(M-1)} with
    /// base = 1 - 2(1+ε)(1-θ+θγ)x.
    ColorTarget { eps: f64 },
}

impl CurveKind {
    pub fn s(&self, x: f64) -> f64 {
        match *self {
            CurveKind::Uniform { gamma } | CurveKind::Saturating { gamma } => {
                let b = 1.0 - gamma * x;
                b * b
            }
            CurveKind::ColorTarget { eps } => {
                let shape = ColorTargetShape::new(eps);
                let b = 1.0 - shape.base_slope() * x;
                b.powf(shape.m / (shape.m - 1.0))
            }
        }
    }

    pub fn g(&self, x: f64) -> f64 {
        match *self {
            CurveKind::Uniform { gamma } | CurveKind::Saturating { gamma } => 1.0 - gamma * x,
            CurveKind::ColorTarget { eps } => {
                let shape = ColorTargetShape::new(eps);
                let b = 1.0 - shape.base_slope() * x;
                b.powf(1.0 / (shape.m - 1.0))
            }
        }
    }

    /// The exponent in s = g^M: two for the quadratic kinds, M otherwise.
    pub fn m_exponent(&self) -> f64 {
        match *self {
            CurveKind::Uniform { .. } | CurveKind::Saturating { .. } => 2.0,
            CurveKind::ColorTarget { eps } => ColorTargetShape::new(eps).m,
        }
    }
}

/// Closed-form curve values at `x`, domain-checked against `[0, eta]`.
pub fn ideal(kind: CurveKind, eta: f64, x: f64) -> Result<(f64, f64), TrajectoryError> {
    if !(0.0..=eta).contains(&x) {
        return Err(TrajectoryError::OutOfDomain { x, eta });
    }
    Ok((kind.s(x), kind.g(x)))
}

/// Scheduled error envelopes `y_t, z_t` and the derived `α_t, β_t`,
/// indexed `0..=t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSchedule {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Recursive envelopes of the color-activation process (natural logs):
/// y_{t+1} = y_t + 2δ²q ln²q (1-γtδ)/(1-tδ) + 4Δ√(δq) ln q and
/// z_{t+1} = z_t + δ²q + 2Δ√(δq) ln q + (2δ/(1-tδ)) y_t, from y_0 = z_0 = 0;
/// α_t = z_t / s̃_t and β_t = y_t / d̃_t with s̃_t = s(tδ)(1+ε)q and
/// d̃_t = (1-tδ)g(tδ)q.
pub fn uniform_error_sequences(
    q: f64,
    delta_max: f64,
    eps: f64,
    delta: f64,
    t_max: usize,
) -> ErrorSchedule {
    assert!(
        (t_max as f64) * delta < 1.0,
        "envelope recursion needs t delta < 1 (t_max {t_max}, delta {delta})"
    );
    let gamma = 1.0 / (1.0 + eps);
    let kind = CurveKind::Uniform { gamma };
    let lnq = q.ln();
    let mut y = vec![0.0; t_max + 1];
    let mut z = vec![0.0; t_max + 1];
    for t in 0..t_max {
        let x = t as f64 * delta;
        y[t + 1] = y[t]
            + 2.0 * delta * delta * q * lnq * lnq * (1.0 - gamma * x) / (1.0 - x)
            + 4.0 * delta_max * (delta * q).sqrt() * lnq;
        z[t + 1] = z[t]
            + delta * delta * q
            + 2.0 * delta_max * (delta * q).sqrt() * lnq
            + 2.0 * delta / (1.0 - x) * y[t];
    }
    let alpha = (0..=t_max)
        .map(|t| {
            let x = t as f64 * delta;
            z[t] / (kind.s(x) * (1.0 + eps) * q)
        })
        .collect();
    let beta = (0..=t_max)
        .map(|t| {
            let x = t as f64 * delta;
            y[t] / ((1.0 - x) * kind.g(x) * q)
        })
        .collect();
    ErrorSchedule { y, z, alpha, beta }
}

/// Closed-form envelope of the saturating process:
/// α_t = √δ ((1 + 10δ/(1-γη)²)^t - 1).
pub fn saturating_error_alpha(t: usize, delta: f64, gamma: f64, eta: f64) -> f64 {
    let denom = (1.0 - gamma * eta) * (1.0 - gamma * eta);
    delta.sqrt() * ((1.0 + 10.0 * delta / denom).powi(t as i32) - 1.0)
}

/// Closed-form envelopes of the color-target process: y_t = tδ^{3/2}q,
/// z_t = tδ^{5/4}q; α_t = z_t / s̃_t with s̃_t = s(tδ)q, and
/// β_t = y_t / d̃_t with d̃_t = 2(1-tδ)g(tδ)(1+ε)q.
pub fn color_target_error_sequences(q: f64, eps: f64, delta: f64, t_max: usize) -> ErrorSchedule {
    let kind = CurveKind::ColorTarget { eps };
    let y: Vec<f64> = (0..=t_max).map(|t| t as f64 * delta.powf(1.5) * q).collect();
    let z: Vec<f64> = (0..=t_max).map(|t| t as f64 * delta.powf(1.25) * q).collect();
    let alpha = (0..=t_max)
        .map(|t| {
            let x = t as f64 * delta;
            z[t] / (kind.s(x) * q)
        })
        .collect();
    let beta = (0..=t_max)
        .map(|t| {
            let x = t as f64 * delta;
            y[t] / (2.0 * (1.0 - x) * kind.g(x) * (1.0 + eps) * q)
        })
        .collect();
    ErrorSchedule { y, z, alpha, beta }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub eps: f64,
    pub delta: f64,
    pub t: usize,
    pub q: f64,
}

/// Outcome of the identity suite over a parameter grid.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub points_checked: usize,
    /// Worst relative residual of the one-step class-size identity
    /// (1-2ã_t)s̃_t = s̃_{t+1} - γ²δ²(1+ε)q.
    pub max_size_residual: f64,
    /// Worst relative residual of the one-step degree identity
    /// (1-ã_t)(1-δ/(1-tδ))d̃_t = d̃_{t+1}.
    pub max_degree_residual: f64,
    /// Worst relative defect of s = g^M across both curve families.
    pub max_power_residual: f64,
    /// Smallest K with (1-(1-θ)ã_t-(1+θ)b̃_t)s̃_t ≥ s̃_{t+1} - Kδ²q over
    /// the grid (color-target curves). Grid-specific, not universal.
    pub smallest_k: f64,
    /// Smallest K' with (1-b̃_t)(1-1/(τ-t))d̃_t ≤ d̃_{t+1} + K'δ²q (and the
    /// d̃'_t analogue) over the grid.
    pub smallest_k_prime: f64,
}

/// Deterministic pseudo-random grid of valid points for [`check_identities`]
/// (`t` stays within the color-target horizon, the tighter of the two).
pub fn random_grid(count: usize, seed: u64) -> Vec<GridPoint> {
    use rand::Rng;
    let mut rng = crate::rng::SeedSplitter::new(seed).stream(crate::rng::Purpose::Gen, 0, 1);
    (0..count)
        .map(|_| {
            let eps = rng.gen_range(0.001..0.5);
            let delta = rng.gen_range(0.0005..0.05);
            let q = rng.gen_range(1_000u64..=1_000_000) as f64;
            let eta = ColorTargetShape::new(eps).eta;
            let t_cap = (eta / delta).floor() as usize;
            let t = rng.gen_range(0..=t_cap);
            GridPoint { eps, delta, t, q }
        })
        .collect()
}

/// Verifies the one-step identities and inequality constants over `grid`.
/// Identities must hold to relative 1e-9 (they are exact; the tolerance
/// covers floating-point rounding), the power laws to 1e-12.
pub fn check_identities(grid: &[GridPoint]) -> Result<IdentityReport, TrajectoryError> {
    let mut report = IdentityReport {
        points_checked: grid.len(),
        max_size_residual: 0.0,
        max_degree_residual: 0.0,
        max_power_residual: 0.0,
        smallest_k: f64::NEG_INFINITY,
        smallest_k_prime: f64::NEG_INFINITY,
    };
    let mut worst: Option<(GridPoint, f64)> = None;
    let mut note = |point: &GridPoint, residual: f64, slot: &mut f64| {
        if residual > *slot {
            *slot = residual;
        }
        if worst.map_or(true, |(_, w)| residual > w) {
            worst = Some((*point, residual));
        }
    };
    for point in grid {
        let GridPoint { eps, delta, t, q } = *point;
        let x = t as f64 * delta;
        let x1 = (t + 1) as f64 * delta;

        // Quadratic family: one-step identities.
        let gamma = 1.0 / (1.0 + eps);
        let kind = CurveKind::Uniform { gamma };
        let (s0, g0) = (kind.s(x), kind.g(x));
        let a_ideal = gamma * delta * g0 / s0;
        let s_t = s0 * (1.0 + eps) * q;
        let s_t1 = kind.s(x1) * (1.0 + eps) * q;
        let lhs = (1.0 - 2.0 * a_ideal) * s_t;
        let rhs = s_t1 - gamma * gamma * delta * delta * (1.0 + eps) * q;
        note(point, (lhs - rhs).abs() / s_t, &mut report.max_size_residual);

        let d_t = (1.0 - x) * g0 * q;
        let d_t1 = (1.0 - x1) * kind.g(x1) * q;
        let lhs = (1.0 - a_ideal) * (1.0 - delta / (1.0 - x)) * d_t;
        note(point, (lhs - d_t1).abs() / d_t, &mut report.max_degree_residual);

        let power = (kind.s(x) - kind.g(x).powi(2)).abs() / kind.s(x);
        note(point, power, &mut report.max_power_residual);

        // Color-target family: power law plus inequality constants.
        let shape = ColorTargetShape::new(eps);
        let ct = CurveKind::ColorTarget { eps };
        let (cs0, cg0) = (ct.s(x), ct.g(x));
        let power = (cs0 - cg0.powf(shape.m)).abs() / cs0;
        note(point, power, &mut report.max_power_residual);

        let a_ideal = 2.0 * (1.0 + eps) * delta * cg0 / cs0;
        let b_ideal = 2.0 * (1.0 + shape.theta) * delta * cg0 / cs0;
        let s_t = cs0 * q;
        let s_t1 = ct.s(x1) * q;
        let removal = (1.0 - shape.theta) * a_ideal + (1.0 + shape.theta) * b_ideal;
        let k = (s_t1 - (1.0 - removal) * s_t) / (delta * delta * q);
        report.smallest_k = report.smallest_k.max(k);

        let shrink = (1.0 - b_ideal) * (1.0 - delta / (1.0 - x));
        for mult in [1.0 + eps, 1.0 + shape.theta] {
            let d_t = 2.0 * (1.0 - x) * cg0 * mult * q;
            let d_t1 = 2.0 * (1.0 - x1) * ct.g(x1) * mult * q;
            let k = (shrink * d_t - d_t1) / (delta * delta * q);
            report.smallest_k_prime = report.smallest_k_prime.max(k);
        }
    }
    let identity_worst = report.max_size_residual.max(report.max_degree_residual);
    if identity_worst >= 1e-9 || report.max_power_residual >= 1e-12 {
        let (worst, residual) = worst.expect("a violation implies a worst point");
        return Err(TrajectoryError::IdentityViolated { worst, residual });
    }
    Ok(report)
}

/// Empirical-vs-ideal deviation summary over a run's trajectory.
#[derive(Debug, Clone, Default)]
pub struct DeviationSummary {
    /// Per-record `(t, emp / (1-α_t)s̃_t)` for records with a size
    /// observation (the side-A minimum degree when present, otherwise the
    /// minimum class size).
    pub ratios: Vec<(usize, f64)>,
    pub mean_ratio: f64,
    pub max_abs_deviation: f64,
    pub final_ratio: f64,
    /// Iterations where the observed size fell below its scheduled floor.
    pub size_flags: Vec<usize>,
    /// Iterations where the observed max degree exceeded its scheduled cap.
    pub degree_flags: Vec<usize>,
}

/// Compares a trajectory against its schedule. `size_scale` turns
/// `s_ideal` into the absolute floor scale s̃_t (e.g. (1+ε)q), and
/// `degree_scale` turns `(1-x) g_ideal` into the absolute cap d̃_t.
pub fn compare(records: &[TrajectoryRecord], size_scale: f64, degree_scale: f64) -> DeviationSummary {
    assert!(!records.is_empty(), "need at least one trajectory record");
    let mut out = DeviationSummary::default();
    for r in records {
        let floor = (1.0 - r.alpha) * r.s_ideal * size_scale;
        let observed = r.emp_min_deg_a.or(r.emp_min_class);
        if let Some(emp) = observed {
            if floor > 0.0 {
                out.ratios.push((r.t, emp as f64 / floor));
            }
            if (emp as f64) < floor {
                out.size_flags.push(r.t);
            }
        }
        let cap = (1.0 + r.beta) * (1.0 - r.x) * r.g_ideal * degree_scale;
        let max_deg = match (r.emp_max_degree, r.emp_max_deg_a) {
            (Some(d), Some(da)) => Some(d.max(da)),
            (d, da) => d.or(da),
        };
        if let Some(deg) = max_deg {
            if deg as f64 > cap {
                out.degree_flags.push(r.t);
            }
        }
    }
    if !out.ratios.is_empty() {
        out.mean_ratio = out.ratios.iter().map(|&(_, r)| r).sum::<f64>() / out.ratios.len() as f64;
        out.max_abs_deviation = out
            .ratios
            .iter()
            .map(|&(_, r)| (r - 1.0).abs())
            .fold(0.0, f64::max);
        out.final_ratio = out.ratios.last().unwrap().1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_curve_values_are_pinned() {
        let kind = CurveKind::Uniform { gamma: 0.8 };
        assert_eq!(ideal(kind, 0.6, 0.0).unwrap(), (1.0, 1.0));
        let (s, g) = ideal(kind, 0.6, 0.5).unwrap();
        assert!((s - 0.36).abs() < 1e-15);
        assert!((g - 0.6).abs() < 1e-15);
        assert!(matches!(
            ideal(kind, 0.6, 0.7),
            Err(TrajectoryError::OutOfDomain { .. })
        ));
        assert!(matches!(
            ideal(kind, 0.6, -0.1),
            Err(TrajectoryError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn color_target_shape_constants() {
        let s = ColorTargetShape::new(0.1);
        assert!((s.theta - 0.05).abs() < 1e-15);
        assert!((s.gamma - 1.05 / 1.1).abs() < 1e-15);
        assert!((s.m - 2.045238).abs() < 1e-6);
        assert!(s.m > 2.0);

        let s = ColorTargetShape::new(0.3);
        assert!((s.theta - 0.15).abs() < 1e-15);
        assert!((s.gamma - 0.884615).abs() < 1e-6);
        assert!((s.m - 2.1108696).abs() < 1e-6);
        assert!((s.eta - 0.388002).abs() < 1e-6);
    }

    #[test]
    fn curves_obey_their_power_law_and_decrease() {
        for kind in [
            CurveKind::Uniform { gamma: 0.8 },
            CurveKind::Saturating { gamma: 1.0 / 1.3 },
            CurveKind::ColorTarget { eps: 0.3 },
            CurveKind::ColorTarget { eps: 0.1 },
        ] {
            let eta = match kind {
                CurveKind::ColorTarget { eps } => ColorTargetShape::new(eps).eta,
                _ => 0.6,
            };
            let m = kind.m_exponent();
            let mut prev_s = f64::INFINITY;
            let mut prev_g = f64::INFINITY;
            for i in 0..=200 {
                let x = eta * i as f64 / 200.0;
                let (s, g) = ideal(kind, eta, x).unwrap();
                assert!(s > 0.0 && g > 0.0, "{kind:?} at x={x}");
                assert!(s < prev_s && g < prev_g, "{kind:?} not strictly decreasing at x={x}");
                assert!((s - g.powf(m)).abs() / s < 1e-12, "{kind:?} power law at x={x}");
                prev_s = s;
                prev_g = g;
            }
        }
    }

    #[test]
    fn recursive_envelopes_start_at_zero_and_grow() {
        let q = 1.0e6;
        let delta = 0.02;
        let sched = uniform_error_sequences(q, 1.0, 0.25, delta, 20);
        assert_eq!(sched.y[0], 0.0);
        assert_eq!(sched.z[0], 0.0);
        assert_eq!(sched.alpha[0], 0.0);
        assert_eq!(sched.beta[0], 0.0);
        let lnq = q.ln();
        let y1 = 2.0 * delta * delta * q * lnq * lnq + 4.0 * (delta * q).sqrt() * lnq;
        assert!((sched.y[1] - y1).abs() / y1 < 1e-12);
        for t in 1..=20 {
            assert!(sched.alpha[t] >= sched.alpha[t - 1], "alpha dipped at t={t}");
            assert!(sched.beta[t] >= sched.beta[t - 1], "beta dipped at t={t}");
        }
    }

    #[test]
    fn closed_form_saturating_envelope() {
        assert_eq!(saturating_error_alpha(0, 0.04, 0.9, 0.7), 0.0);
        // Pure-substitution check: gamma*eta = -1 makes the growth factor
        // exactly 1.1 at delta = 0.04.
        let a2 = saturating_error_alpha(2, 0.04, 1.0, -1.0);
        assert!((a2 - 0.042).abs() < 1e-12, "got {a2}");
    }

    #[test]
    fn color_target_envelopes_are_monotone() {
        let sched = color_target_error_sequences(500.0, 0.3, 0.0095, 40);
        assert_eq!(sched.y[0], 0.0);
        for t in 1..=40 {
            assert!(sched.alpha[t] >= sched.alpha[t - 1]);
            assert!(sched.beta[t] >= sched.beta[t - 1]);
        }
    }

    #[test]
    fn capped_schedule_never_exceeds_ceiling() {
        assert_eq!(capped(0.5), SCHEDULE_CAP);
        assert_eq!(capped(0.003), 0.003);
    }

    #[test]
    fn identity_suite_passes_on_pinned_point_and_random_grid() {
        let pinned = GridPoint { eps: 0.25, delta: 0.01, t: 10, q: 1000.0 };
        let report = check_identities(&[pinned]).unwrap();
        assert!(report.max_size_residual < 1e-9);
        assert!(report.max_degree_residual < 1e-9);

        let grid = random_grid(2000, 17);
        let report = check_identities(&grid).unwrap();
        assert_eq!(report.points_checked, 2000);
        assert!(report.max_power_residual < 1e-12);
        assert!(report.smallest_k.is_finite());
        assert!(report.smallest_k_prime.is_finite());
    }

    #[test]
    fn inequality_constants_are_finite_on_a_small_eps_grid() {
        let mut grid = Vec::new();
        let eta = ColorTargetShape::new(0.1).eta;
        for i in 0..10 {
            let delta = 1e-3 + i as f64 * 1e-3;
            let t_cap = (eta / delta).floor() as usize;
            for frac in [0usize, 1, 2, 4] {
                grid.push(GridPoint { eps: 0.1, delta, t: t_cap * frac / 4, q: 1.0e5 });
            }
        }
        let report = check_identities(&grid).unwrap();
        assert!(report.smallest_k.is_finite() && report.smallest_k > 0.0);
        assert!(report.smallest_k_prime.is_finite());
    }

    #[test]
    fn comparison_flags_floor_and_cap_breaches() {
        use crate::report::TrajectoryRecord;
        let clean = TrajectoryRecord {
            t: 1,
            x: 0.1,
            s_ideal: 0.81,
            g_ideal: 0.9,
            alpha: 0.0,
            beta: 0.0,
            emp_min_class: Some(81),
            emp_max_degree: Some(50),
            ..Default::default()
        };
        // size_scale 100: floor = 81; degree_scale 100: cap = 0.9*0.9*100 = 81.
        let summary = compare(&[clean.clone()], 100.0, 100.0);
        assert_eq!(summary.ratios, vec![(1, 1.0)]);
        assert_eq!(summary.mean_ratio, 1.0);
        assert!(summary.size_flags.is_empty() && summary.degree_flags.is_empty());

        let mut bad = clean;
        bad.emp_min_class = Some(60);
        bad.emp_max_degree = Some(95);
        let summary = compare(&[bad], 100.0, 100.0);
        assert_eq!(summary.size_flags, vec![1]);
        assert_eq!(summary.degree_flags, vec![1]);
        assert!(summary.max_abs_deviation > 0.2);
    }
}
