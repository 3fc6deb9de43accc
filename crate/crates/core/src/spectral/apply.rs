use num_complex::Complex64;

use super::{SpectralField, TorusGrid};
use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::fourier::FftNd;
use crate::operator::DiffOp;
use crate::sobolev::MultiIndex;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `(iξ)^index` per stored mode of `grid`.
pub fn derivative_symbol(grid: &TorusGrid, index: &MultiIndex) -> Vec<Complex64> {
    (0..grid.len())
        .map(|k| {
            grid.frequency(k)
                .iter()
                .zip(index.entries())
                .map(|(&f, &e)| Complex64::new(0.0, f as f64).powu(e))
                .product()
        })
        .collect()
}

/// Coefficient entries sampled on the padded grid, after truncating their
/// spectra to the modes a Galerkin product can see (`|ξ_c| <= N - 1`).
pub(crate) fn padded_samples(c: &Coefficient, grid: &TorusGrid, fft: &FftNd) -> Vec<Option<Vec<Complex64>>> {
    c.entries()
        .iter()
        .map(|s| {
            if s.is_zero() {
                return None;
            }
            let spec = s.spectrum(grid.dim()).truncate(grid.coefficient_band());
            let mut cube = spec.to_cube(grid.padded_modes());
            fft.inverse(&mut cube);
            Some(cube)
        })
        .collect()
}

struct PreparedTerm {
    symbol: Vec<Complex64>,
    /// Row-major `q x q`, `None` for zero entries.
    samples: Vec<Option<Vec<Complex64>>>,
}

/// An operator discretized on a grid as the exact Galerkin truncation
/// `Π_N P Π_N`: derivatives act spectrally and coefficient products are
/// formed on a grid padded by two, which is alias-free for the retained modes.
pub struct PreparedOperator {
    grid: TorusGrid,
    q: usize,
    s: u32,
    fft: FftNd,
    positions: Vec<usize>,
    terms: Vec<PreparedTerm>,
}

impl PreparedOperator {
    pub fn new(op: &DiffOp, grid: TorusGrid) -> Result<Self> {
        if op.dim() != grid.dim() {
            return Err(Error::Shape(format!(
                "operator on T^{} applied on a grid over T^{}",
                op.dim(),
                grid.dim()
            )));
        }
        let fft = FftNd::new(grid.dim(), grid.padded_modes());
        let terms = op
            .coefficients()
            .map(|(i, c)| PreparedTerm {
                symbol: derivative_symbol(&grid, i),
                samples: padded_samples(c, &grid, &fft),
            })
            .collect();
        Ok(PreparedOperator {
            grid,
            q: op.rank(),
            s: op.order(),
            fft,
            positions: (0..grid.len()).map(|k| grid.padded_position(k)).collect(),
            terms,
        })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn rank(&self) -> usize {
        self.q
    }

    pub fn order(&self) -> u32 {
        self.s
    }

    fn to_padded_physical(&self, coeffs: &[Complex64], multiplier: Option<&[Complex64]>) -> Vec<Complex64> {
        let mut cube = vec![ZERO; self.grid.padded_len()];
        for (k, &pos) in self.positions.iter().enumerate() {
            cube[pos] = match multiplier {
                Some(m) => coeffs[k] * m[k],
                None => coeffs[k],
            };
        }
        self.fft.inverse(&mut cube);
        cube
    }

    fn to_grid_spectrum(&self, mut phys: Vec<Complex64>) -> Vec<Complex64> {
        self.fft.forward(&mut phys);
        self.positions.iter().map(|&pos| phys[pos]).collect()
    }

    fn check(&self, u: &SpectralField) -> Result<()> {
        if u.grid() != self.grid || u.rank() != self.q {
            return Err(Error::Shape(format!(
                "field of rank {} on {} modes, operator expects rank {} on {}",
                u.rank(),
                u.grid().modes(),
                self.q,
                self.grid.modes()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        self.check(u)?;
        let len = self.grid.padded_len();
        let mut out = vec![vec![ZERO; len]; self.q];
        for term in &self.terms {
            for c in 0..self.q {
                let used: Vec<usize> = (0..self.q).filter(|r| term.samples[r * self.q + c].is_some()).collect();
                if used.is_empty() {
                    continue;
                }
                let du = self.to_padded_physical(u.component(c), Some(&term.symbol));
                for r in used {
                    let a = term.samples[r * self.q + c].as_ref().expect("filtered");
                    for ((o, x), y) in out[r].iter_mut().zip(a).zip(&du) {
                        *o += x * y;
                    }
                }
            }
        }
        let comps = out.into_iter().map(|phys| self.to_grid_spectrum(phys)).collect();
        SpectralField::from_coefficients(self.grid, comps)
    }

    /// Hermitian adjoint of the Galerkin matrix in the plain coefficient pairing.
    pub fn apply_adjoint(&self, v: &SpectralField) -> Result<SpectralField> {
        self.check(v)?;
        let phys: Vec<Vec<Complex64>> = v.components().iter().map(|c| self.to_padded_physical(c, None)).collect();
        let mut out = vec![vec![ZERO; self.grid.len()]; self.q];
        for term in &self.terms {
            for c in 0..self.q {
                let mut acc = vec![ZERO; self.grid.padded_len()];
                let mut any = false;
                for r in 0..self.q {
                    if let Some(a) = &term.samples[r * self.q + c] {
                        any = true;
                        for ((o, x), y) in acc.iter_mut().zip(a).zip(&phys[r]) {
                            *o += x.conj() * y;
                        }
                    }
                }
                if !any {
                    continue;
                }
                let spec = self.to_grid_spectrum(acc);
                for ((o, x), m) in out[c].iter_mut().zip(&spec).zip(&term.symbol) {
                    *o += m.conj() * x;
                }
            }
        }
        SpectralField::from_coefficients(self.grid, out)
    }
}

/// One-shot application of `op` to `u` on `u`'s grid.
pub fn apply(op: &DiffOp, u: &SpectralField) -> Result<SpectralField> {
    PreparedOperator::new(op, u.grid())?.apply(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::Scalar;

    fn d1(k: u32) -> MultiIndex {
        MultiIndex::new(vec![k])
    }

    #[test]
    fn derivative_of_sine() {
        let g = TorusGrid::new(1, 32).unwrap();
        let u = SpectralField::from_fn(g, |x| x[0].sin());
        let du = apply(&DiffOp::derivative(1, 1, d1(1)).unwrap(), &u).unwrap();
        let want = SpectralField::from_fn(g, |x| x[0].cos());
        assert!(du.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn laplacian_in_two_dimensions() {
        let g = TorusGrid::new(2, 16).unwrap();
        let lap = DiffOp::new(
            2,
            1,
            vec![
                (MultiIndex::new(vec![2, 0]), Coefficient::constant(2, 1.0)),
                (MultiIndex::new(vec![0, 2]), Coefficient::constant(2, 1.0)),
            ],
        )
        .unwrap();
        let u = SpectralField::from_fn(g, |x| (x[0] + 2.0 * x[1]).cos());
        let got = apply(&lap, &u).unwrap();
        assert!(got.sub(&u.scale(-5.0)).max_abs() < 1e-12);
    }

    #[test]
    fn variable_coefficient_matches_refined_pointwise_product() {
        let coarse = TorusGrid::new(1, 64).unwrap();
        let fine = TorusGrid::new(1, 256).unwrap();
        let a = Coefficient::scalar(
            1,
            Scalar::constant(1.0).add(&Scalar::trig(vec![vec![1]], vec![0.5], vec![0.0])),
        )
        .unwrap();
        let op = DiffOp::new(1, 1, vec![(d1(2), a)]).unwrap();
        let u = SpectralField::random(coarse, 1, 16, 0.0, 4);
        let got = apply(&op, &u).unwrap();
        // oracle: u'' by hand on a 4x finer grid, times the coefficient pointwise
        let mut fine_coeffs = vec![ZERO; fine.len()];
        for k in 0..coarse.len() {
            let xi = coarse.frequency(k);
            let v = u.component(0)[k];
            if v != ZERO {
                fine_coeffs[fine.index_of(&xi).unwrap()] = v * -((xi[0] * xi[0]) as f64);
            }
        }
        let upp = SpectralField::from_coefficients(fine, vec![fine_coeffs]).unwrap().to_physical();
        let pts = crate::fourier::grid_points(256);
        let prod: Vec<Complex64> = upp[0]
            .iter()
            .zip(&pts)
            .map(|(v, x)| v * (1.0 + 0.5 * x.cos()))
            .collect();
        let oracle = SpectralField::from_physical(fine, vec![prod]).unwrap();
        let scale = got.max_abs();
        for k in 0..coarse.len() {
            let xi = coarse.frequency(k);
            if xi[0].abs() < 32 {
                assert!((got.component(0)[k] - oracle.coefficient(0, &xi)).norm() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn adjoint_is_hermitian_transpose() {
        let g = TorusGrid::new(1, 32).unwrap();
        let a = Coefficient::scalar(1, Scalar::power_law(1, 2.0, 100, 3, 1.0)).unwrap();
        let b = Coefficient::scalar(1, Scalar::trig(vec![vec![5]], vec![1.0], vec![0.4])).unwrap();
        let op = DiffOp::new(1, 1, vec![(d1(1), a), (d1(2), b)]).unwrap();
        let p = PreparedOperator::new(&op, g).unwrap();
        let u = SpectralField::random(g, 1, 15, 0.0, 1);
        let v = SpectralField::random(g, 1, 15, 0.0, 2);
        let lhs = p.apply(&u).unwrap().inner(&v);
        let rhs = u.inner(&p.apply_adjoint(&v).unwrap());
        assert!((lhs - rhs).norm() < 1e-11 * lhs.norm().max(1.0));
    }

    #[test]
    fn systems_act_blockwise() {
        let g = TorusGrid::new(1, 16).unwrap();
        let a = Coefficient::new(
            1,
            2,
            2,
            vec![Scalar::zero(), Scalar::constant(1.0), Scalar::constant(2.0), Scalar::zero()],
        )
        .unwrap();
        let op = DiffOp::multiplication(a).unwrap();
        let u = SpectralField::random(g, 2, 7, 0.0, 5);
        let out = apply(&op, &u).unwrap();
        for k in 0..g.len() {
            assert!((out.component(0)[k] - u.component(1)[k]).norm() < 1e-14);
            assert!((out.component(1)[k] - 2.0 * u.component(0)[k]).norm() < 1e-14);
        }
    }
}
