//! FFT plumbing shared by the coefficient models and the spectral engine.
//!
//! Convention throughout: `u(x) = Σ_ξ û(ξ) e^{iξ·x}` on `[0, 2π)^n`, so the
//! constant function 1 has `û(0) = 1`. Storage is row-major with the first
//! coordinate slowest.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// In-place `n`-dimensional FFT on a cube of side `size`.
#[derive(Clone)]
pub struct FftNd {
    n: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd")
            .field("n", &self.n)
            .field("size", &self.size)
            .finish()
    }
}

impl FftNd {
    pub fn new(n: usize, size: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            n,
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical samples to Fourier coefficients (divides by the point count).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Fourier coefficients to physical samples (unnormalized sum).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len());
        let size = self.size;
        if self.n == 1 {
            plan.process(data);
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); size];
        let total = data.len();
        for axis in 0..self.n {
            let stride = size.pow((self.n - 1 - axis) as u32);
            let block = stride * size;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    if stride == 1 {
                        plan.process(&mut data[base..base + size]);
                        continue;
                    }
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = data[base + t * stride];
                    }
                    plan.process(&mut line);
                    for (t, v) in line.iter().enumerate() {
                        data[base + t * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Flat index of frequency `xi` on an FFT cube of side `size` (wrapping).
pub fn wrap_index(xi: &[i64], size: usize) -> usize {
    xi.iter().fold(0usize, |acc, &f| {
        acc * size + f.rem_euclid(size as i64) as usize
    })
}

/// Frequency stored at flat index `idx` of an FFT cube, using the range
/// `{-size/2 + 1, ..., size/2}` per axis.
pub fn unwrap_index(mut idx: usize, n: usize, size: usize) -> Vec<i64> {
    let mut out = vec![0i64; n];
    for c in (0..n).rev() {
        let k = (idx % size) as i64;
        idx /= size;
        out[c] = if k > (size / 2) as i64 { k - size as i64 } else { k };
    }
    out
}

/// Exact Fourier coefficients on the box `|ξ_c| <= band`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpectrum {
    n: usize,
    band: usize,
    data: Vec<Complex64>,
}

impl BoxSpectrum {
    pub fn zeros(n: usize, band: usize) -> Self {
        let width = 2 * band + 1;
        BoxSpectrum {
            n,
            band,
            data: vec![Complex64::new(0.0, 0.0); width.pow(n as u32)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn band(&self) -> usize {
        self.band
    }

    fn width(&self) -> usize {
        2 * self.band + 1
    }

    fn offset(&self, xi: &[i64]) -> Option<usize> {
        let b = self.band as i64;
        let w = self.width();
        let mut idx = 0usize;
        for &f in xi {
            if f.abs() > b {
                return None;
            }
            idx = idx * w + (f + b) as usize;
        }
        Some(idx)
    }

    pub fn get(&self, xi: &[i64]) -> Complex64 {
        self.offset(xi)
            .map(|o| self.data[o])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Adds `v` at `xi`; panics if `xi` lies outside the box.
    pub fn add_at(&mut self, xi: &[i64], v: Complex64) {
        let o = self.offset(xi).expect("frequency outside spectrum box");
        self.data[o] += v;
    }

    /// Adds `amp * cos(ξ·x + phase)`.
    pub fn add_cosine(&mut self, xi: &[i64], amp: f64, phase: f64) {
        let half = Complex64::from_polar(0.5 * amp, phase);
        self.add_at(xi, half);
        let neg: Vec<i64> = xi.iter().map(|f| -f).collect();
        self.add_at(&neg, half.conj());
    }

    /// Every frequency of the box together with its coefficient.
    pub fn modes(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        let w = self.width();
        let b = self.band as i64;
        let n = self.n;
        self.data.iter().enumerate().map(move |(mut idx, &v)| {
            let mut xi = vec![0i64; n];
            for c in (0..n).rev() {
                xi[c] = (idx % w) as i64 - b;
                idx /= w;
            }
            (xi, v)
        })
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    /// Sum with another spectrum; the result lives on the larger box.
    pub fn add(&self, other: &BoxSpectrum) -> BoxSpectrum {
        let mut out = BoxSpectrum::zeros(self.n, self.band.max(other.band));
        for (xi, v) in self.modes() {
            out.add_at(&xi, v);
        }
        for (xi, v) in other.modes() {
            out.add_at(&xi, v);
        }
        out
    }

    /// Restriction to `|ξ_c| <= band`.
    pub fn truncate(&self, band: usize) -> BoxSpectrum {
        if band >= self.band {
            return self.clone();
        }
        let mut out = BoxSpectrum::zeros(self.n, band);
        for (xi, v) in self.modes() {
            if xi.iter().all(|f| f.unsigned_abs() as usize <= band) {
                out.add_at(&xi, v);
            }
        }
        out
    }

    /// Spectral derivative `∂^index`, i.e. multiplication by `(iξ)^index`.
    pub fn differentiate(&self, index: &[u32]) -> BoxSpectrum {
        let mut out = self.clone();
        let w = self.width();
        let b = self.band as i64;
        for (mut idx, v) in out.data.iter_mut().enumerate() {
            let mut factor = Complex64::new(1.0, 0.0);
            for c in (0..self.n).rev() {
                let f = (idx % w) as i64 - b;
                idx /= w;
                factor *= Complex64::new(0.0, f as f64).powu(index[c]);
            }
            *v *= factor;
        }
        out
    }

    /// Exact product of the two represented trigonometric polynomials.
    pub fn convolve(&self, other: &BoxSpectrum) -> BoxSpectrum {
        let band = self.band + other.band;
        let size = (2 * band + 1).next_power_of_two();
        let fft = FftNd::new(self.n, size);
        let mut a = self.to_cube(size);
        let mut b = other.to_cube(size);
        fft.inverse(&mut a);
        fft.inverse(&mut b);
        a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
        fft.forward(&mut a);
        let mut out = BoxSpectrum::zeros(self.n, band);
        let xis: Vec<Vec<i64>> = out.modes().map(|(xi, _)| xi).collect();
        for xi in xis {
            let o = out.offset(&xi).unwrap();
            out.data[o] = a[wrap_index(&xi, size)];
        }
        out
    }

    /// Places the box on an FFT cube of side `size`, which must hold it.
    pub fn to_cube(&self, size: usize) -> Vec<Complex64> {
        let mut cube = vec![Complex64::new(0.0, 0.0); size.pow(self.n as u32)];
        for (xi, v) in self.modes() {
            cube[wrap_index(&xi, size)] += v;
        }
        cube
    }

    /// Real part of `Σ ĉ(ξ) e^{iξ·x}` at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.modes()
            .filter(|(_, v)| v.norm_sqr() > 0.0)
            .map(|(xi, v)| {
                let arg: f64 = xi.iter().zip(x).map(|(f, y)| *f as f64 * y).sum();
                (v * Complex64::from_polar(1.0, arg)).re
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Uniform grid points `2πk/size` of `[0, 2π)`.
pub fn grid_points(size: usize) -> Vec<f64> {
    (0..size).map(|k| 2.0 * PI * k as f64 / size as f64).collect()
}
