use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::DiffOp;
use crate::fourier::BoxSpectrum;

/// Default bound below which `|det σ(x, ξ)|` counts as degenerate.
pub const MARGIN_TOLERANCE: f64 = 1e-8;

/// Angular samples per `x` on the unit circle of covectors (`n = 2`).
const ANGLES: usize = 96;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolSample {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    /// Row-major `q x q` matrix `Σ_{|i|=s} A_i(x) ξ^i`.
    pub value: Vec<Vec<f64>>,
    pub det_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub elliptic: bool,
    pub worst_margin: f64,
    pub worst_x: Vec<f64>,
    pub worst_xi: Vec<f64>,
    pub samples: usize,
}

impl DiffOp {
    /// Principal symbol with real monomials `ξ^i` (no powers of the imaginary unit).
    pub fn principal_symbol(&self, x: &[f64], xi: &[f64]) -> SymbolSample {
        let top: Vec<_> = self
            .top_order_coefficients()
            .map(|(i, c)| (i.clone(), c.value_at(x)))
            .collect();
        symbol_sample(self.rank(), &top, x, xi)
    }

    /// Samples `|det σ(x, ξ)|` over `budget` points `x` of a Kronecker sequence
    /// (rotated by `seed`) and unit covectors `ξ`. In two dimensions every `x`
    /// gets an angular sweep, and sign changes of the determinant are located
    /// by bisection so that isolated characteristic directions are found. A sign
    /// change of `det σ(x, e_1)` between two base points is bisected along the
    /// segment joining them, which catches top coefficients that cross zero.
    pub fn is_elliptic(&self, budget: usize, seed: u64) -> EllipticityReport {
        self.is_elliptic_with(budget, seed, MARGIN_TOLERANCE)
    }

    pub fn is_elliptic_with(&self, budget: usize, seed: u64, tolerance: f64) -> EllipticityReport {
        let n = self.dim();
        let top: Vec<_> = self
            .top_order_coefficients()
            .map(|(i, c)| {
                let spectra: Vec<BoxSpectrum> = c.entries().iter().map(|s| s.spectrum(n)).collect();
                (i.clone(), spectra)
            })
            .collect();
        let q = self.rank();
        let value_at = |x: &[f64]| -> Vec<(crate::sobolev::MultiIndex, DMatrix<f64>)> {
            top.iter()
                .map(|(i, spectra)| {
                    let vals: Vec<f64> = spectra.iter().map(|s| s.eval(x)).collect();
                    (i.clone(), DMatrix::from_row_slice(q, q, &vals))
                })
                .collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let alpha = kronecker_steps(n);
        let mut worst = (f64::INFINITY, Vec::new(), Vec::new());
        let xi_ref: Vec<f64> = (0..n).map(|c| if c == 0 { 1.0 } else { 0.0 }).collect();
        let (mut positive, mut negative) = (None, None);
        for t in 0..budget.max(1) {
            let x: Vec<f64> = (0..n)
                .map(|c| 2.0 * PI * (shift[c] + (t + 1) as f64 * alpha[c]).fract())
                .collect();
            let coeffs = value_at(&x);
            let det = |xi: &[f64]| symbol_sample(q, &coeffs, &x, xi).det_abs;
            let (margin, xi) = if n == 1 {
                (det(&[1.0]), vec![1.0])
            } else {
                worst_direction(|theta| signed_det(q, &coeffs, &[theta.cos(), theta.sin()]), &det)
            };
            let reference = signed_det(q, &coeffs, &xi_ref);
            if reference > 0.0 && positive.is_none() {
                positive = Some(x.clone());
            } else if reference < 0.0 && negative.is_none() {
                negative = Some(x.clone());
            }
            if margin < worst.0 {
                worst = (margin, x, xi);
            }
        }
        // det σ(·, ξ) is continuous on the connected torus, so a sign change
        // between two samples forces a zero on the segment joining them.
        if let (Some(a), Some(b)) = (positive, negative) {
            let at = |t: f64| -> Vec<f64> { a.iter().zip(&b).map(|(p, m)| p + t * (m - p)).collect() };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if signed_det(q, &value_at(&at(mid)), &xi_ref) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x = at(0.5 * (lo + hi));
            let margin = symbol_sample(q, &value_at(&x), &x, &xi_ref).det_abs;
            if margin < worst.0 {
                worst = (margin, x, xi_ref.clone());
            }
        }
        EllipticityReport {
            elliptic: worst.0 >= tolerance,
            worst_margin: worst.0,
            worst_x: worst.1,
            worst_xi: worst.2,
            samples: budget.max(1),
        }
    }
}

fn monomial(i: &crate::sobolev::MultiIndex, xi: &[f64]) -> f64 {
    i.entries().iter().zip(xi).map(|(&e, &v)| v.powi(e as i32)).product()
}

fn symbol_matrix(q: usize, top: &[(crate::sobolev::MultiIndex, DMatrix<f64>)], xi: &[f64]) -> DMatrix<f64> {
    let mut value = DMatrix::<f64>::zeros(q, q);
    for (i, a) in top {
        value += a * monomial(i, xi);
    }
    value
}

fn signed_det(q: usize, top: &[(crate::sobolev::MultiIndex, DMatrix<f64>)], xi: &[f64]) -> f64 {
    symbol_matrix(q, top, xi).determinant()
}

fn symbol_sample(q: usize, top: &[(crate::sobolev::MultiIndex, DMatrix<f64>)], x: &[f64], xi: &[f64]) -> SymbolSample {
    let value = symbol_matrix(q, top, xi);
    SymbolSample {
        x: x.to_vec(),
        xi: xi.to_vec(),
        value: (0..q).map(|r| (0..q).map(|c| value[(r, c)]).collect()).collect(),
        det_abs: value.determinant().abs(),
    }
}

/// Steps of the generalized golden-ratio Kronecker sequence in `n` dimensions.
fn kronecker_steps(n: usize) -> Vec<f64> {
    // φ_n solves x^{n+1} = x + 1
    let mut phi: f64 = 2.0;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (n as f64 + 1.0));
    }
    (1..=n).map(|c| phi.powi(-(c as i32)).fract()).collect()
}

/// Smallest `|det|` over the unit circle: coarse sweep, then bisection on
/// sign changes and golden-section refinement of the smallest sample.
fn worst_direction(signed: impl Fn(f64) -> f64, abs_det: impl Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let h = 2.0 * PI / ANGLES as f64;
    let thetas: Vec<f64> = (0..ANGLES).map(|k| k as f64 * h).collect();
    let vals: Vec<f64> = thetas.iter().map(|&t| signed(t)).collect();
    let at = |t: f64| abs_det(&[t.cos(), t.sin()]);
    let mut best = (f64::INFINITY, 0.0);
    let mut consider = |t: f64| {
        let v = at(t);
        if v < best.0 {
            best = (v, t);
        }
    };
    for k in 0..ANGLES {
        let (a, b) = (thetas[k], thetas[k] + h);
        let (fa, fb) = (vals[k], vals[(k + 1) % ANGLES]);
        consider(a);
        if fa == 0.0 || fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = signed(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            consider(0.5 * (lo + hi));
        }
    }
    // golden-section refinement around the smallest coarse sample
    let k = (0..ANGLES)
        .min_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()))
        .unwrap_or(0);
    let (mut lo, mut hi) = (thetas[k] - h, thetas[k] + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if at(m1) < at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    consider(0.5 * (lo + hi));
    let t = best.1;
    (best.0, vec![t.cos(), t.sin()])
}
