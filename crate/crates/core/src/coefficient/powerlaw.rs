//! Periodic power-law series `Σ_{1<=|ξ|<=K} |ξ|^{-β} cos(ξ·x + θ_ξ)`.
//!
//! These are the rough witnesses of the crate: the limit `K → ∞` lies in
//! `H^s` exactly for `s < β - n/2`. Seed 0 gives coherent phases `θ_ξ = 0`,
//! which concentrates the series into a cusp at the origin (the periodic
//! analogue of `|x|^α`). Any other seed draws phases uniformly from a ChaCha8
//! stream in order of increasing `|ξ|`, so lowering `K` drops a suffix of the
//! modes and keeps every surviving phase.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::field::disk_modes;

/// One cosine mode `amp * cos(ξ·x + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineMode {
    pub freq: Vec<i64>,
    pub amp: f64,
    pub phase: f64,
}

/// Modes of `amp * ∂^deriv Σ_{1<=|ξ|<=cutoff} |ξ|^{-β} cos(ξ·x + θ_ξ)`.
pub fn modes(
    n: usize,
    beta: f64,
    cutoff: u64,
    seed: u64,
    amp: f64,
    deriv: &[u32],
) -> Vec<CosineMode> {
    let all = disk_modes(n, cutoff as i64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: u32 = deriv.iter().sum();
    all.into_iter()
        .filter(|xi| xi.iter().any(|&f| f != 0))
        .map(|xi| {
            let theta = if seed == 0 {
                0.0
            } else {
                2.0 * PI * rng.random::<f64>()
            };
            let norm: f64 = xi.iter().map(|f| (f * f) as f64).sum::<f64>().sqrt();
            // ∂^d cos(ξ·x + θ) = ξ^d cos(ξ·x + θ + |d|π/2)
            let monomial: f64 = xi
                .iter()
                .zip(deriv)
                .map(|(&f, &d)| (f as f64).powi(d as i32))
                .product();
            CosineMode {
                amp: amp * norm.powf(-beta) * monomial,
                phase: theta + order as f64 * FRAC_PI_2,
                freq: xi,
            }
        })
        .collect()
}

/// Largest integer `s` with `s < β - n/2`, or `None` when `β <= n/2`.
pub fn limit_grade(beta: f64, n: usize) -> Option<u32> {
    let excess = beta - n as f64 / 2.0;
    if !(excess > 0.0) {
        return None;
    }
    Some((excess.ceil() - 1.0) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grades_of_examples() {
        assert_eq!(limit_grade(2.0, 1), Some(1));
        assert_eq!(limit_grade(2.5, 2), Some(1));
        assert_eq!(limit_grade(2.5, 1), Some(1));
        assert_eq!(limit_grade(3.0, 1), Some(2));
        assert_eq!(limit_grade(0.51, 1), Some(0));
        assert_eq!(limit_grade(0.5, 1), None);
    }

    #[test]
    fn truncation_keeps_phases() {
        let long = modes(1, 2.0, 64, 7, 1.0, &[0]);
        let short = modes(1, 2.0, 16, 7, 1.0, &[0]);
        assert_eq!(&long[..short.len()], &short[..]);
        let long2 = modes(2, 2.0, 12, 3, 1.0, &[0, 0]);
        let short2 = modes(2, 2.0, 5, 3, 1.0, &[0, 0]);
        assert_eq!(&long2[..short2.len()], &short2[..]);
    }

    #[test]
    fn coherent_seed_zero() {
        assert!(modes(1, 1.0, 8, 0, 1.0, &[0]).iter().all(|m| m.phase == 0.0));
    }
}
