//! Local parametrix on the circle: freeze coefficients on a lattice, invert
//! the constant-coefficient pieces by Fourier multipliers, and check the
//! splitting identity
//!
//! `u = Σ_j [E_j(φ_j f) - E_j R_j u + E_j Q_j u - ρ(φ_j u)]`, `f = P u`,
//!
//! with `R_j u = φ_j (P - P_j) u`, `Q_j u = P_j(φ_j u) - φ_j P_j u` and
//! `E_j P_j = 1 + ρ`, `ρ̂ = -κ`.

mod partition;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

pub use partition::{BumpPartition, DEFAULT_RADIUS};

use crate::error::{Error, Result};
use crate::fourier::FftNd;
use crate::operator::DiffOp;
use crate::sobolev::MultiIndex;
use crate::spectral::{PreparedOperator, SpectralField, TorusGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Mean of `a` over `[center - ε, center + ε]`, one entry per component.
///
/// The mean of the grid interpolant is exact: `e^{iξx}` averages to
/// `e^{iξc} sin(ξε)/(ξε)`. The ball must span at least four grid cells.
pub fn average_coefficient(a: &SpectralField, center: f64, epsilon: f64) -> Result<Vec<f64>> {
    let grid = a.grid();
    if grid.dim() != 1 {
        return Err(Error::Unsupported("ball averages are implemented on the circle".into()));
    }
    let h = 2.0 * PI / grid.modes() as f64;
    if 2.0 * epsilon < 4.0 * h - 1e-12 {
        return Err(Error::UnderResolved(format!(
            "ball of radius {epsilon} spans fewer than 4 cells of width {h}"
        )));
    }
    Ok(a.components()
        .iter()
        .map(|comp| {
            comp.iter()
                .enumerate()
                .map(|(k, v)| {
                    let xi = grid.frequency(k)[0] as f64;
                    let sinc = if xi == 0.0 { 1.0 } else { (xi * epsilon).sin() / (xi * epsilon) };
                    (v * Complex64::from_polar(sinc, xi * center)).re
                })
                .sum()
        })
        .collect())
}

/// Constant-coefficient operator `Σ â_i ∂^i` frozen at a lattice center.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenOperator {
    pub center: usize,
    pub position: f64,
    pub order: u32,
    pub rank: usize,
    pub coefficients: Vec<(MultiIndex, DMatrix<f64>)>,
}

impl FrozenOperator {
    /// Full symbol `Σ â_i (iξ)^i`.
    pub fn symbol(&self, xi: i64) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(self.rank, self.rank);
        for (i, a) in &self.coefficients {
            let m = Complex64::new(0.0, xi as f64).powu(i.entries()[0]);
            out += a.map(|v| Complex64::new(v, 0.0)) * m;
        }
        out
    }

    pub fn apply(&self, u: &SpectralField) -> SpectralField {
        multiplier_apply(u, |xi| self.symbol(xi))
    }
}

fn multiplier_apply(u: &SpectralField, m: impl Fn(i64) -> DMatrix<Complex64>) -> SpectralField {
    let grid = u.grid();
    let q = u.rank();
    let mut out = vec![vec![ZERO; grid.len()]; q];
    for k in 0..grid.len() {
        let mk = m(grid.frequency(k)[0]);
        for r in 0..q {
            out[r][k] = (0..q).map(|c| mk[(r, c)] * u.component(c)[k]).sum();
        }
    }
    SpectralField::from_coefficients(grid, out).expect("same grid")
}

/// Freezes every coefficient of `op` at every lattice center.
pub fn freeze(op: &DiffOp, partition: &BumpPartition, grid: TorusGrid) -> Result<Vec<FrozenOperator>> {
    if op.dim() != 1 || grid.dim() != 1 {
        return Err(Error::Unsupported("freezing is implemented on the circle".into()));
    }
    let q = op.rank();
    let sampled: Vec<(MultiIndex, SpectralField)> = op
        .coefficients()
        .map(|(i, c)| Ok((i.clone(), c.sample(&grid)?)))
        .collect::<Result<_>>()?;
    (0..partition.len())
        .map(|j| {
            let position = partition.center(j);
            let coefficients = sampled
                .iter()
                .map(|(i, a)| {
                    let avg = average_coefficient(a, position, partition.epsilon())?;
                    Ok((i.clone(), DMatrix::from_row_slice(q, q, &avg)))
                })
                .collect::<Result<_>>()?;
            Ok(FrozenOperator {
                center: j,
                position,
                order: op.order(),
                rank: q,
                coefficients,
            })
        })
        .collect()
}

/// Smooth cutoff: 1 on `|ξ| <= K_c`, 0 on `|ξ| >= K_c + 1`.
pub fn kappa(r: f64, k_c: f64) -> f64 {
    let t = r - k_c;
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let f = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    f(1.0 - t) / (f(1.0 - t) + f(t))
}

/// Fourier multiplier `Ẽ = (1 - κ) p̃⁻¹` of a frozen operator.
#[derive(Debug, Clone)]
pub struct NearInverse {
    grid: TorusGrid,
    order: u32,
    k_c: f64,
    multiplier: Vec<DMatrix<Complex64>>,
}

impl NearInverse {
    pub fn new(frozen: &FrozenOperator, grid: TorusGrid, k_c: f64) -> Result<Self> {
        let mut multiplier = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let xi = grid.frequency(k)[0];
            let cut = kappa(xi.abs() as f64, k_c);
            if cut == 1.0 {
                multiplier.push(DMatrix::zeros(frozen.rank, frozen.rank));
                continue;
            }
            let p = frozen.symbol(xi);
            let scale = (1.0 + (xi * xi) as f64).powf(frozen.order as f64 / 2.0);
            let inv = p
                .clone()
                .try_inverse()
                .filter(|_| p.determinant().norm() > 1e-12 * scale.powi(frozen.rank as i32))
                .ok_or_else(|| {
                    Error::NotElliptic(format!(
                        "frozen symbol at center {} degenerates at ξ = {xi}",
                        frozen.center
                    ))
                })?;
            multiplier.push(inv * Complex64::new(1.0 - cut, 0.0));
        }
        Ok(NearInverse {
            grid,
            order: frozen.order,
            k_c,
            multiplier,
        })
    }

    pub fn multiplier(&self, xi: i64) -> &DMatrix<Complex64> {
        &self.multiplier[self.grid.index_of(&[xi]).expect("grid mode")]
    }

    pub fn apply(&self, u: &SpectralField) -> SpectralField {
        multiplier_apply(u, |xi| self.multiplier(xi).clone())
    }

    /// The remainder `ρ = E P_F - 1` as the multiplier `-κ`.
    pub fn remainder(&self, u: &SpectralField) -> SpectralField {
        let k_c = self.k_c;
        u.map_modes(|xi| Complex64::new(-kappa(xi[0].abs() as f64, k_c), 0.0))
    }

    /// `‖E‖_{H^σ -> H^{σ+s}} = max_ξ |Ẽ(ξ)| (1 + ξ²)^{s/2}` (independent of σ).
    pub fn norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| {
                let xi = self.grid.frequency(k)[0] as f64;
                let m = &self.multiplier[k];
                let size = if m.nrows() == 1 { m[(0, 0)].norm() } else { m.singular_values().max() };
                size * (1.0 + xi * xi).powf(self.order as f64 / 2.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Pointwise product with a grid field, taken on the padded grid and truncated
/// back to the retained modes.
struct GridMultiplier {
    grid: TorusGrid,
    fft: FftNd,
    positions: Vec<usize>,
    samples: Vec<Complex64>,
}

impl GridMultiplier {
    fn new(phi: &SpectralField) -> Self {
        let grid = phi.grid();
        let fft = FftNd::new(1, grid.padded_modes());
        let positions: Vec<usize> = (0..grid.len()).map(|k| grid.padded_position(k)).collect();
        let mut samples = vec![ZERO; grid.padded_len()];
        for (k, &p) in positions.iter().enumerate() {
            samples[p] = phi.component(0)[k];
        }
        fft.inverse(&mut samples);
        GridMultiplier {
            grid,
            fft,
            positions,
            samples,
        }
    }

    fn apply(&self, u: &SpectralField) -> SpectralField {
        let comps = u
            .components()
            .iter()
            .map(|c| {
                let mut cube = vec![ZERO; self.grid.padded_len()];
                for (k, &p) in self.positions.iter().enumerate() {
                    cube[p] = c[k];
                }
                self.fft.inverse(&mut cube);
                cube.iter_mut().zip(&self.samples).for_each(|(v, s)| *v *= s);
                self.fft.forward(&mut cube);
                self.positions.iter().map(|&p| cube[p]).collect()
            })
            .collect();
        SpectralField::from_coefficients(self.grid, comps).expect("same grid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingReport {
    pub l: i64,
    pub u_norm: f64,
    /// `‖u - RHS‖_l`.
    pub residual: f64,
    pub source_term: f64,
    pub freezing_term: f64,
    pub commutator_term: f64,
    pub smoothing_term: f64,
}

/// Assembles the splitting identity for `u` and reports the four term norms.
pub fn splitting_check(op: &DiffOp, u: &SpectralField, partition: &BumpPartition, k_c: f64, l: i64) -> Result<SplittingReport> {
    let grid = u.grid();
    let prepared = PreparedOperator::new(op, grid)?;
    let f = prepared.apply(u)?;
    let frozen = freeze(op, partition, grid)?;
    let zero = SpectralField::zeros(grid, u.rank());
    let (mut source, mut freezing, mut commutator, mut smoothing) = (zero.clone(), zero.clone(), zero.clone(), zero);
    for (j, fj) in frozen.iter().enumerate() {
        let phi = GridMultiplier::new(&partition.field(j, grid)?);
        let e = NearInverse::new(fj, grid, k_c)?;
        let pj_u = fj.apply(u);
        let phi_u = phi.apply(u);
        source = source.add(&e.apply(&phi.apply(&f)));
        freezing = freezing.add(&e.apply(&phi.apply(&f.sub(&pj_u))));
        commutator = commutator.add(&e.apply(&fj.apply(&phi_u).sub(&phi.apply(&pj_u))));
        smoothing = smoothing.add(&e.remainder(&phi_u));
    }
    let rhs = source.sub(&freezing).add(&commutator).sub(&smoothing);
    let ls = l as f64;
    Ok(SplittingReport {
        l,
        u_norm: u.sobolev_norm(ls),
        residual: u.sub(&rhs).sobolev_norm(ls),
        source_term: source.sobolev_norm(ls),
        freezing_term: freezing.sobolev_norm(ls),
        commutator_term: commutator.sobolev_norm(ls),
        smoothing_term: smoothing.sobolev_norm(ls),
    })
}

/// `A(ε) = max_j max_{|i|=s} sup_{supp φ_j} |a_i - â_i(εj)|`, evaluated on the
/// padded grid.
pub fn freezing_error(op: &DiffOp, partition: &BumpPartition, grid: TorusGrid) -> Result<f64> {
    let frozen = freeze(op, partition, grid)?;
    let fft = FftNd::new(1, grid.padded_modes());
    let size = grid.padded_modes();
    let mut worst: f64 = 0.0;
    for (i, c) in op.top_order_coefficients() {
        let samples = crate::spectral::padded_samples(c, &grid, &fft);
        for fj in &frozen {
            let avg = &fj.coefficients.iter().find(|(k, _)| k == i).expect("frozen every key").1;
            let support = partition.support(fj.center, size)?;
            for (e, s) in samples.iter().enumerate() {
                let mean = avg[(e / fj.rank, e % fj.rank)];
                for &p in &support {
                    let v = s.as_ref().map(|s| s[p].re).unwrap_or(0.0);
                    worst = worst.max((v - mean).abs());
                }
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParametrixRow {
    pub epsilon: f64,
    pub centers: usize,
    pub a_eps: f64,
    /// `‖Σ E_j R_j u‖_l / ‖u‖_l` for the probe field.
    pub er_coefficient: f64,
    pub residual: f64,
    pub e_norm: f64,
    pub unity_residual: f64,
}

/// CSV layout of a sweep row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParametrixCsvRow {
    pub epsilon: f64,
    #[serde(rename = "A_eps")]
    pub a_eps: f64,
    #[serde(rename = "ER_coefficient")]
    pub er_coefficient: f64,
    pub residual: f64,
}

impl From<&ParametrixRow> for ParametrixCsvRow {
    fn from(r: &ParametrixRow) -> Self {
        ParametrixCsvRow {
            epsilon: r.epsilon,
            a_eps: r.a_eps,
            er_coefficient: r.er_coefficient,
            residual: r.residual,
        }
    }
}

/// Runs the construction for each lattice size in `centers`; rows are sorted
/// by decreasing `ε`. The probe is a random field band-limited to `N/4`.
pub fn parametrix_sweep(
    op: &DiffOp,
    grid: TorusGrid,
    centers: &[usize],
    k_c: f64,
    l: i64,
    seed: u64,
) -> Result<Vec<ParametrixRow>> {
    let decay = l as f64 + 1.0;
    let u = SpectralField::random(grid, op.rank(), grid.modes() / 4, decay, seed);
    let mut rows = Vec::new();
    let mut sorted = centers.to_vec();
    sorted.sort_unstable();
    for &m in &sorted {
        let partition = BumpPartition::with_centers(m)?;
        let split = splitting_check(op, &u, &partition, k_c, l)?;
        let e_norm = freeze(op, &partition, grid)?
            .iter()
            .map(|f| NearInverse::new(f, grid, k_c).map(|e| e.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        rows.push(ParametrixRow {
            epsilon: partition.epsilon(),
            centers: m,
            a_eps: freezing_error(op, &partition, grid)?,
            er_coefficient: split.freezing_term / split.u_norm,
            residual: split.residual,
            e_norm,
            unity_residual: partition.unity_residual(grid.modes())?,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_power(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}
