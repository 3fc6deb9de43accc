use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

/// Support radius of the bump profile, in lattice cells.
pub const DEFAULT_RADIUS: f64 = 1.5;

/// Smooth partition of unity `φ_j(x) = ψ((x - εj)/ε)` on the circle with
/// `m` centers `εj`, `ε = 2π/m`.
///
/// `ψ(t) = b(t) / Σ_k b(t - k)` where `b(t) = exp(-1/(1 - (t/R)²))` on `|t| < R`,
/// so the translates sum to one exactly (up to rounding) and every `φ_j` is
/// `C^∞`, non-negative and supported within `R` cells of its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpPartition {
    m: usize,
    radius: f64,
}

impl BumpPartition {
    pub fn new(m: usize, radius: f64) -> Result<Self> {
        if m < 4 {
            return Err(Error::Partition(format!("need at least 4 centers, got {m}")));
        }
        if radius <= 0.5 {
            return Err(Error::Partition(format!(
                "support radius {radius} cells leaves gaps between neighbours (need > 0.5)"
            )));
        }
        if 2.0 * radius >= m as f64 {
            return Err(Error::Partition(format!(
                "support radius {radius} cells wraps around a circle of {m} cells"
            )));
        }
        Ok(BumpPartition { m, radius })
    }

    pub fn with_centers(m: usize) -> Result<Self> {
        BumpPartition::new(m, DEFAULT_RADIUS)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn epsilon(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self, j: usize) -> f64 {
        self.epsilon() * j as f64
    }

    fn bump(&self, t: f64) -> f64 {
        let r = t / self.radius;
        if r.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - r * r)).exp()
        }
    }

    /// The normalized profile `ψ`.
    pub fn profile(&self, t: f64) -> f64 {
        let b = self.bump(t);
        if b == 0.0 {
            return 0.0;
        }
        let reach = self.radius.ceil() as i64 + 1;
        let total: f64 = (-reach..=reach).map(|k| self.bump(t - k as f64)).sum();
        b / total
    }

    /// Offset of grid point `p` from center `j` in cells, on a grid of
    /// `size` points; computed in integers so translations are exact.
    fn offset(&self, j: usize, p: usize, size: usize) -> f64 {
        let period = (self.m * size) as i64;
        let mut d = (p * self.m) as i64 - (j * size) as i64;
        d = d.rem_euclid(period);
        if d > period / 2 {
            d -= period;
        }
        d as f64 / size as f64
    }

    fn check_grid(&self, size: usize) -> Result<()> {
        if size % self.m != 0 {
            return Err(Error::Partition(format!(
                "{size} grid points are not a multiple of {} centers",
                self.m
            )));
        }
        Ok(())
    }

    /// Samples of `φ_j` at the `size` uniform points of the circle.
    pub fn samples(&self, j: usize, size: usize) -> Result<Vec<f64>> {
        self.check_grid(size)?;
        Ok((0..size).map(|p| self.profile(self.offset(j, p, size))).collect())
    }

    /// Points of a `size`-point grid inside the support of `φ_j`.
    pub fn support(&self, j: usize, size: usize) -> Result<Vec<usize>> {
        self.check_grid(size)?;
        Ok((0..size)
            .filter(|&p| self.offset(j, p, size).abs() < self.radius)
            .collect())
    }

    /// `φ_j` as a field (its grid interpolant).
    pub fn field(&self, j: usize, grid: TorusGrid) -> Result<SpectralField> {
        if grid.dim() != 1 {
            return Err(Error::Unsupported("partitions are built on the circle only".into()));
        }
        let s = self.samples(j, grid.modes())?;
        SpectralField::from_physical(grid, vec![s.into_iter().map(|v| Complex64::new(v, 0.0)).collect()])
    }

    /// `max_x |Σ_j φ_j(x) - 1|` over the `size` grid points.
    pub fn unity_residual(&self, size: usize) -> Result<f64> {
        let mut total = vec![0.0; size];
        for j in 0..self.m {
            for (t, v) in total.iter_mut().zip(self.samples(j, size)?) {
                *t += v;
            }
        }
        Ok(total.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_to_one() {
        let p = BumpPartition::with_centers(8).unwrap();
        assert!(p.unity_residual(256).unwrap() < 1e-10);
        for m in [4, 16, 64] {
            assert!(BumpPartition::with_centers(m).unwrap().unity_residual(512).unwrap() < 1e-10);
        }
    }

    #[test]
    fn translation_equivariance() {
        let p = BumpPartition::with_centers(8).unwrap();
        let shift = 256 / 8;
        for j in 0..7 {
            let a = p.samples(j, 256).unwrap();
            let b = p.samples(j + 1, 256).unwrap();
            for x in 0..256 {
                assert_eq!(b[(x + shift) % 256], a[x]);
            }
        }
    }

    #[test]
    fn nonnegative_and_local() {
        let p = BumpPartition::with_centers(16).unwrap();
        let cell = 512 / 16;
        for j in [0, 5, 15] {
            let s = p.samples(j, 512).unwrap();
            assert!(s.iter().all(|&v| v >= 0.0));
            let support = p.support(j, 512).unwrap();
            assert!(support.len() <= 2 * 2 * cell);
            for (x, v) in s.iter().enumerate() {
                if *v > 0.0 {
                    assert!(support.contains(&x));
                }
            }
        }
    }

    #[test]
    fn rejects_narrow_profiles() {
        assert!(BumpPartition::new(8, 0.4).is_err());
        assert!(BumpPartition::new(3, 1.5).is_err());
        assert!(BumpPartition::with_centers(8).unwrap().samples(0, 100).is_err());
    }
}
