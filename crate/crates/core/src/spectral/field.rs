use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::fourier::{wrap_index, FftNd};

/// A rank-`q` field on the torus, stored as Fourier coefficients per component.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    components: Vec<Vec<Complex64>>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid, q: usize) -> Self {
        SpectralField {
            grid,
            components: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; q],
            real: true,
        }
    }

    /// Wraps raw coefficients; the reality flag is set when the spectrum is
    /// Hermitian-symmetric to `1e-12`.
    pub fn from_coefficients(grid: TorusGrid, components: Vec<Vec<Complex64>>) -> Result<Self> {
        if components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::Shape(format!(
                "every component needs {} coefficients",
                grid.len()
            )));
        }
        let mut f = SpectralField {
            grid,
            components,
            real: false,
        };
        f.real = f.hermitian_defect() <= 1e-12 * f.max_abs().max(1.0);
        Ok(f)
    }

    /// Samples on the `N^n` physical grid, one vector per component.
    pub fn from_physical(grid: TorusGrid, samples: Vec<Vec<Complex64>>) -> Result<Self> {
        let fft = FftNd::new(grid.dim(), grid.modes());
        let mut comps = samples;
        for c in &mut comps {
            if c.len() != grid.len() {
                return Err(Error::Shape("sample count does not match grid".into()));
            }
            fft.forward(c);
        }
        Self::from_coefficients(grid, comps)
    }

    /// Builds a single-component field from a function of the grid point.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let h = 2.0 * std::f64::consts::PI / grid.modes() as f64;
        let n = grid.dim();
        let samples: Vec<Complex64> = (0..grid.len())
            .map(|idx| {
                let mut x = vec![0.0; n];
                let mut rest = idx;
                for c in (0..n).rev() {
                    x[c] = (rest % grid.modes()) as f64 * h;
                    rest /= grid.modes();
                }
                Complex64::new(f(&x), 0.0)
            })
            .collect();
        Self::from_physical(grid, vec![samples]).expect("sizes match")
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.components[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.components
    }

    pub fn coefficient(&self, c: usize, xi: &[i64]) -> Complex64 {
        self.grid
            .index_of(xi)
            .map(|i| self.components[c][i])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Physical samples per component.
    pub fn to_physical(&self) -> Vec<Vec<Complex64>> {
        let fft = FftNd::new(self.grid.dim(), self.grid.modes());
        self.components
            .iter()
            .map(|c| {
                let mut v = c.clone();
                fft.inverse(&mut v);
                v
            })
            .collect()
    }

    /// Largest violation of `û(-ξ) = conj(û(ξ))`; Nyquist modes have no partner
    /// on the grid and must be real on their own.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for comp in &self.components {
            for (idx, v) in comp.iter().enumerate() {
                let xi = self.grid.frequency(idx);
                let neg: Vec<i64> = xi.iter().map(|f| -f).collect();
                let partner = comp[wrap_index(&neg, self.grid.modes())];
                worst = worst.max((v - partner.conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// `‖u‖_s = (Σ_ξ (1 + |ξ|²)^s |û(ξ)|²)^{1/2}` summed over components.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let w = self.grid.sobolev_weights(2.0 * s);
        self.components
            .iter()
            .map(|c| c.iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Normalized `L²` pairing `⟨u, v⟩ = Σ_ξ û(ξ) conj(v̂(ξ))`.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>())
            .sum()
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            components: self
                .components
                .iter()
                .map(|v| v.iter().map(|x| x * c).collect())
                .collect(),
            real: self.real,
        }
    }

    fn zip_map(&self, other: &SpectralField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid);
        assert_eq!(self.rank(), other.rank());
        SpectralField {
            grid: self.grid,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
                .collect(),
            real: self.real && other.real,
        }
    }

    /// Multiplies every mode by `m(ξ)`; used for Fourier multipliers.
    pub fn map_modes(&self, m: impl Fn(&[i64]) -> Complex64) -> SpectralField {
        let table: Vec<Complex64> = (0..self.grid.len())
            .map(|i| m(&self.grid.frequency(i)))
            .collect();
        let comps: Vec<Vec<Complex64>> = self
            .components
            .iter()
            .map(|c| c.iter().zip(&table).map(|(v, t)| v * t).collect())
            .collect();
        SpectralField::from_coefficients(self.grid, comps).expect("same grid")
    }

    /// Largest `|ξ_c|` carrying a coefficient above `tol`.
    pub fn spectral_extent(&self, tol: f64) -> i64 {
        let mut extent = 0;
        for comp in &self.components {
            for (idx, v) in comp.iter().enumerate() {
                if v.norm() > tol {
                    let xi = self.grid.frequency(idx);
                    extent = extent.max(xi.iter().map(|f| f.abs()).max().unwrap_or(0));
                }
            }
        }
        extent
    }

    /// Random real field with Gaussian coefficients on the disk `|ξ| <= band`,
    /// each scaled by `(1 + |ξ|²)^{-decay/2}`.
    ///
    /// Coefficients are drawn in order of increasing `|ξ|`, so the field on a
    /// coarser grid is the band-truncation of the field on a finer grid.
    pub fn random(grid: TorusGrid, q: usize, band: usize, decay: f64, seed: u64) -> SpectralField {
        let modes = disk_modes(grid.dim(), band as i64);
        let mut comps = Vec::with_capacity(q);
        for c in 0..q {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut raw = vec![Complex64::new(0.0, 0.0); grid.len()];
            let mut draws = Vec::with_capacity(modes.len());
            for xi in &modes {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let k2: f64 = xi.iter().map(|f| (f * f) as f64).sum();
                draws.push((xi, Complex64::new(re, im) * (1.0 + k2).powf(-decay / 2.0)));
            }
            for (xi, g) in &draws {
                let neg: Vec<i64> = xi.iter().map(|f| -f).collect();
                if let (Some(i), Some(j)) = (grid.index_of(xi), grid.index_of(&neg)) {
                    raw[i] += 0.5 * g;
                    raw[j] += 0.5 * g.conj();
                }
            }
            comps.push(raw);
        }
        SpectralField::from_coefficients(grid, comps).expect("sizes match")
    }
}

/// Integer frequencies with `|ξ| <= band`, sorted by `|ξ|²` then lexicographically.
pub fn disk_modes(n: usize, band: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let width = (2 * band + 1) as usize;
    for idx in 0..width.pow(n as u32) {
        let mut rest = idx;
        let mut xi = vec![0i64; n];
        for c in (0..n).rev() {
            xi[c] = (rest % width) as i64 - band;
            rest /= width;
        }
        if xi.iter().map(|f| f * f).sum::<i64>() <= band * band {
            out.push(xi);
        }
    }
    out.sort_by_key(|xi| (xi.iter().map(|f| f * f).sum::<i64>(), xi.clone()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_has_unit_norm_at_every_order() {
        let g = TorusGrid::new(1, 16).unwrap();
        let one = SpectralField::from_fn(g, |_| 1.0);
        for s in 0..5 {
            assert!((one.sobolev_norm(s as f64) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cosine_norm_closed_form() {
        let g = TorusGrid::new(1, 32).unwrap();
        for k in 1..8 {
            let u = SpectralField::from_fn(g, |x| (k as f64 * x[0]).cos());
            for s in 0..4 {
                let want = (0.5 * (1.0 + (k * k) as f64).powi(s)).sqrt();
                assert!((u.sobolev_norm(s as f64) - want).abs() < 1e-12 * want);
            }
        }
    }

    #[test]
    fn parseval_against_trapezoid_quadrature() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = SpectralField::random(g, 1, 7, 0.0, 3);
        let phys = u.to_physical();
        let mean_sq: f64 = phys[0].iter().map(|v| v.norm_sqr()).sum::<f64>() / g.len() as f64;
        assert!((u.sobolev_norm(0.0).powi(2) - mean_sq).abs() < 1e-10 * mean_sq);
    }

    #[test]
    fn random_fields_are_real_and_nested() {
        let coarse = TorusGrid::new(1, 32).unwrap();
        let fine = TorusGrid::new(1, 128).unwrap();
        let a = SpectralField::random(coarse, 1, 8, 1.0, 9);
        let b = SpectralField::random(fine, 1, 8, 1.0, 9);
        assert!(a.is_real());
        for k in -8..=8 {
            assert_eq!(a.coefficient(0, &[k]), b.coefficient(0, &[k]));
        }
        let phys = a.to_physical();
        assert!(phys[0].iter().all(|v| v.im.abs() < 1e-12));
    }

    #[test]
    fn from_fn_places_cosine_at_plus_minus_one() {
        let g = TorusGrid::new(1, 8).unwrap();
        let u = SpectralField::from_fn(g, |x| (x[0] + PI / 3.0).cos());
        assert!((u.coefficient(0, &[1]) - Complex64::from_polar(0.5, PI / 3.0)).norm() < 1e-14);
        assert!((u.coefficient(0, &[-1]) - Complex64::from_polar(0.5, -PI / 3.0)).norm() < 1e-14);
    }
}
