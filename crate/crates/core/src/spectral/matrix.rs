use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TorusGrid;
use crate::error::{Error, Result};
use crate::fourier::BoxSpectrum;
use crate::operator::DiffOp;

/// Largest number of unknowns (`q N^n`) assembled densely.
pub const DENSE_GUARD: usize = 4096;

/// Matrix of `P: H^l -> H^{l-s}` in Sobolev-orthonormal Fourier bases on the
/// retained modes. Unknowns are ordered component-major, then by grid index.
pub fn operator_matrix(op: &DiffOp, grid: &TorusGrid, l: i64) -> Result<DMatrix<Complex64>> {
    let q = op.rank();
    let m = q * grid.len();
    if m > DENSE_GUARD {
        return Err(Error::GuardExceeded {
            modes: m,
            limit: DENSE_GUARD,
        });
    }
    if op.dim() != grid.dim() {
        return Err(Error::Shape("operator and grid dimensions differ".into()));
    }
    let n = grid.dim();
    let freqs = grid.frequencies();
    let w_in = grid.sobolev_weights(-(l as f64));
    let w_out = grid.sobolev_weights((l - op.order() as i64) as f64);
    let band = grid.coefficient_band();
    let terms: Vec<(Vec<Complex64>, Vec<Option<BoxSpectrum>>)> = op
        .coefficients()
        .map(|(i, c)| {
            let symbol = super::apply::derivative_symbol(grid, i);
            let spectra = c
                .entries()
                .iter()
                .map(|s| (!s.is_zero()).then(|| s.spectrum(n).truncate(band)))
                .collect();
            (symbol, spectra)
        })
        .collect();
    let len = grid.len();
    let mut mat = DMatrix::<Complex64>::zeros(m, m);
    let mut diff = vec![0i64; n];
    for (symbol, spectra) in &terms {
        for r in 0..q {
            for c in 0..q {
                let Some(spec) = &spectra[r * q + c] else {
                    continue;
                };
                for (ei, eta) in freqs.iter().enumerate() {
                    for (xi_i, xi) in freqs.iter().enumerate() {
                        for d in 0..n {
                            diff[d] = eta[d] - xi[d];
                        }
                        let a = spec.get(&diff);
                        if a.re != 0.0 || a.im != 0.0 {
                            mat[(r * len + ei, c * len + xi_i)] += a * symbol[xi_i];
                        }
                    }
                }
            }
        }
    }
    for row in 0..m {
        for col in 0..m {
            mat[(row, col)] *= w_out[row % len] * w_in[col % len];
        }
    }
    Ok(mat)
}

/// Thresholds for counting numerically zero singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvdPolicy {
    /// `σ < relative_zero * σ_max` counts as zero.
    pub relative_zero: f64,
    /// Smallest acceptable ratio between the smallest retained singular value
    /// and the largest zero (or the zero threshold when there is none).
    pub gap_threshold: f64,
}

impl Default for SvdPolicy {
    fn default() -> Self {
        SvdPolicy {
            relative_zero: 1e-7,
            gap_threshold: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub l: i64,
    pub modes: usize,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub index: i64,
    pub singular_value_gap: f64,
    pub resolved: bool,
    pub sigma_max: f64,
    pub sigma_min_retained: f64,
    pub sigma_zero_max: Option<f64>,
}

/// Kernel, cokernel and index of the truncated `H^l -> H^{l-s}` matrix.
///
/// The kernel dimension is the number of columns minus the numerical rank and
/// the cokernel dimension the number of rows minus it.
pub fn index_report(op: &DiffOp, grid: &TorusGrid, l: i64, policy: SvdPolicy) -> Result<IndexReport> {
    let mat = operator_matrix(op, grid, l)?;
    let (rows, cols) = mat.shape();
    let mut sigma: Vec<f64> = mat.singular_values().iter().copied().collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let cut = policy.relative_zero * sigma_max;
    let rank = sigma.iter().filter(|&&s| s >= cut).count();
    let sigma_min_retained = sigma[..rank].last().copied().unwrap_or(0.0);
    let sigma_zero_max = sigma.get(rank).copied();
    let floor = match sigma_zero_max {
        Some(z) => z.max(f64::EPSILON * sigma_max),
        None => cut,
    };
    let gap = if floor > 0.0 { sigma_min_retained / floor } else { f64::INFINITY };
    Ok(IndexReport {
        l,
        modes: grid.modes(),
        dim_ker: cols - rank,
        dim_coker: rows - rank,
        index: cols as i64 - rows as i64,
        singular_value_gap: gap,
        resolved: gap >= policy.gap_threshold,
        sigma_max,
        sigma_min_retained,
        sigma_zero_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{Coefficient, Scalar};
    use crate::sobolev::MultiIndex;
    use crate::spectral::{PreparedOperator, SpectralField};

    fn d1(k: u32) -> MultiIndex {
        MultiIndex::new(vec![k])
    }

    #[test]
    fn identity_matrix() {
        let g = TorusGrid::new(1, 16).unwrap();
        let m = operator_matrix(&DiffOp::identity(1, 1), &g, 3).unwrap();
        let diff = m - DMatrix::<Complex64>::identity(16, 16);
        assert!(diff.iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn derivative_is_diagonal_with_symbol_entries() {
        let g = TorusGrid::new(1, 32).unwrap();
        let m = operator_matrix(&DiffOp::derivative(1, 1, d1(1)).unwrap(), &g, 1).unwrap();
        for r in 0..32 {
            for c in 0..32 {
                let xi = g.frequency(c)[0] as f64;
                let want = if r == c {
                    Complex64::new(0.0, xi / (1.0 + xi * xi).sqrt())
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((m[(r, c)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn columns_match_apply() {
        let g = TorusGrid::new(1, 16).unwrap();
        let a = Coefficient::scalar(1, Scalar::trig(vec![vec![2], vec![9]], vec![1.0, 0.3], vec![0.2, 1.0])).unwrap();
        let op = DiffOp::new(1, 1, vec![(d1(0), a.clone()), (d1(1), a)]).unwrap();
        let (l, s) = (2i64, 1i64);
        let m = operator_matrix(&op, &g, l).unwrap();
        let prepared = PreparedOperator::new(&op, g).unwrap();
        let w_in = g.sobolev_weights(-(l as f64));
        let w_out = g.sobolev_weights((l - s) as f64);
        for col in 0..g.len() {
            let mut e = vec![Complex64::new(0.0, 0.0); g.len()];
            e[col] = Complex64::new(w_in[col], 0.0);
            let u = SpectralField::from_coefficients(g, vec![e]).unwrap();
            let pu = prepared.apply(&u).unwrap();
            for row in 0..g.len() {
                assert!((m[(row, col)] - pu.component(0)[row] * w_out[row]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn index_of_positive_and_derivative_operators() {
        let g = TorusGrid::new(1, 64).unwrap();
        let pos = DiffOp::identity(1, 1)
            .sub(&DiffOp::derivative(1, 1, d1(2)).unwrap())
            .unwrap();
        let r = index_report(&pos, &g, 2, SvdPolicy::default()).unwrap();
        assert_eq!((r.dim_ker, r.dim_coker, r.index), (0, 0, 0));
        assert!(r.resolved);
        let d = DiffOp::derivative(1, 1, d1(1)).unwrap();
        let r = index_report(&d, &g, 1, SvdPolicy::default()).unwrap();
        assert_eq!((r.dim_ker, r.dim_coker, r.index), (1, 1, 0));
        assert!(r.resolved);
    }

    #[test]
    fn guard() {
        let g = TorusGrid::new(2, 128).unwrap();
        assert!(matches!(
            operator_matrix(&DiffOp::identity(2, 1), &g, 0),
            Err(Error::GuardExceeded { .. })
        ));
    }
}
