//! The three randomized nibble solvers. Shared conventions:
//!
//! * One trial seed fans out into per-purpose, per-round substreams
//!   ([`crate::rng`]), so replays are byte-identical and independent of
//!   how diagnostics evolve.
//! * Scheduled error envelopes come from [`crate::trajectory`] and are
//!   capped at [`crate::trajectory::SCHEDULE_CAP`] before use.
//! * Randomized steps iterate vertices/colors/edges in ascending id
//!   order; "arbitrary" tie-breaks are by lowest id unless a solver
//!   documents otherwise.

pub mod color_target;
pub mod saturating;
pub mod uniform;

/// Probability that a size-`count` subset is hit by at least one of `m`
/// uniform draws (with replacement) from `total` items: the complement of
/// (1-count/total)^m, evaluated in log space.
pub(crate) fn batch_hit_prob(count: usize, total: usize, m: usize) -> f64 {
    if total == 0 || count == 0 {
        return 0.0;
    }
    let x = count as f64 / total as f64;
    if x >= 1.0 {
        return 1.0;
    }
    -((m as f64) * (-x).ln_1p()).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::batch_hit_prob;

    #[test]
    fn batch_hit_matches_direct_powers() {
        // 1-(1-0.25)^3 = 1-0.421875
        assert!((batch_hit_prob(1, 4, 3) - 0.578125).abs() < 1e-15);
        assert_eq!(batch_hit_prob(0, 10, 5), 0.0);
        assert_eq!(batch_hit_prob(3, 3, 2), 1.0);
        assert_eq!(batch_hit_prob(1, 0, 2), 0.0);
        // Tiny fractions stay accurate in log space.
        let p = batch_hit_prob(1, 1_000_000_000, 1);
        assert!((p - 1e-9).abs() < 1e-18);
    }
}
