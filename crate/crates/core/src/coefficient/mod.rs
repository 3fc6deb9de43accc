//! Coefficient models on `T^n` with exactly known Sobolev grade.
//!
//! A [`Scalar`] is a finite sum of [`Term`]s; a [`Coefficient`] is a matrix of
//! scalars. Constants and trigonometric polynomials are smooth. Power-law
//! series are graded by their `K → ∞` limit even though every truncation is
//! smooth, which is what lets the numerics watch norms blow up as `K` grows.
//! Products and derivatives produced by the operator calculus are stored as
//! opaque terms and only expanded when sampled.

mod grade;
pub mod powerlaw;

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use grade::{GradeCertificate, GradeRule};

use crate::error::{Error, Result};
use crate::fourier::BoxSpectrum;
use crate::sobolev::{product_grade, MultiIndex, Regularity};
use crate::spectral::{SpectralField, TorusGrid};

fn one() -> f64 {
    1.0
}

/// One summand of a scalar coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum Term {
    #[serde(rename = "const")]
    Const { value: f64 },
    /// `Σ_m amps[m] cos(freqs[m]·x + phases[m])`.
    #[serde(rename = "trig")]
    Trig {
        freqs: Vec<Vec<i64>>,
        amps: Vec<f64>,
        phases: Vec<f64>,
    },
    /// `amp * ∂^deriv Σ_{1<=|ξ|<=K} |ξ|^{-β} cos(ξ·x + θ_ξ)`.
    #[serde(rename = "powerlaw")]
    PowerLaw {
        n: usize,
        beta: f64,
        #[serde(rename = "K")]
        cutoff: u64,
        seed: u64,
        #[serde(default = "one")]
        amp: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        deriv: Option<MultiIndex>,
    },
    #[serde(rename = "product")]
    Product { left: Scalar, right: Scalar },
    #[serde(rename = "deriv")]
    Deriv { index: MultiIndex, inner: Scalar },
}

impl Term {
    pub fn power_law(n: usize, beta: f64, cutoff: u64, seed: u64, amp: f64) -> Term {
        Term::PowerLaw {
            n,
            beta,
            cutoff,
            seed,
            amp,
            deriv: None,
        }
    }

    /// Exact grade in dimension `n`, validating the term on the way.
    pub fn grade(&self, n: usize) -> Result<Regularity> {
        match self {
            Term::Const { .. } => Ok(Regularity::Infinite),
            Term::Trig {
                freqs,
                amps,
                phases,
            } => {
                if freqs.len() != amps.len() || amps.len() != phases.len() {
                    return Err(Error::Spec(
                        "trig term needs equally long freqs, amps and phases".into(),
                    ));
                }
                if let Some(f) = freqs.iter().find(|f| f.len() != n) {
                    return Err(Error::Spec(format!(
                        "trig frequency {f:?} does not have dimension {n}"
                    )));
                }
                Ok(Regularity::Infinite)
            }
            Term::PowerLaw {
                n: term_n,
                beta,
                deriv,
                ..
            } => {
                if *term_n != n {
                    return Err(Error::Spec(format!(
                        "powerlaw term declares n = {term_n} inside a dimension-{n} coefficient"
                    )));
                }
                let base = powerlaw::limit_grade(*beta, n).ok_or_else(|| {
                    Error::Spec(format!("powerlaw beta = {beta} must exceed n/2 = {}", n as f64 / 2.0))
                })?;
                let order = match deriv {
                    Some(d) if d.dim() != n => {
                        return Err(Error::Spec(format!("powerlaw deriv {d} has wrong dimension")))
                    }
                    Some(d) => d.order(),
                    None => 0,
                };
                Regularity::Finite(base)
                    .checked_sub(order)
                    .ok_or(Error::NegativeGrade {
                        grade: Regularity::Finite(base),
                        order,
                    })
            }
            Term::Product { left, right } => {
                let (gl, gr) = (left.grade(n)?, right.grade(n)?);
                product_grade(gl, gr, n).ok_or(Error::UngradedProduct {
                    left: gl,
                    right: gr,
                    n,
                })
            }
            Term::Deriv { index, inner } => {
                let g = inner.grade(n)?;
                g.checked_sub(index.order()).ok_or(Error::NegativeGrade {
                    grade: g,
                    order: index.order(),
                })
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Term {
        match self {
            Term::Const { value } => Term::Const { value: value * c },
            Term::Trig {
                freqs,
                amps,
                phases,
            } => Term::Trig {
                freqs: freqs.clone(),
                amps: amps.iter().map(|a| a * c).collect(),
                phases: phases.clone(),
            },
            Term::PowerLaw {
                n,
                beta,
                cutoff,
                seed,
                amp,
                deriv,
            } => Term::PowerLaw {
                n: *n,
                beta: *beta,
                cutoff: *cutoff,
                seed: *seed,
                amp: amp * c,
                deriv: deriv.clone(),
            },
            Term::Product { left, right } => Term::Product {
                left: left.scaled(c),
                right: right.clone(),
            },
            Term::Deriv { index, inner } => Term::Deriv {
                index: index.clone(),
                inner: inner.scaled(c),
            },
        }
    }

    fn spectrum(&self, n: usize) -> BoxSpectrum {
        match self {
            Term::Const { value } => {
                let mut s = BoxSpectrum::zeros(n, 0);
                s.add_at(&vec![0; n], Complex64::new(*value, 0.0));
                s
            }
            Term::Trig {
                freqs,
                amps,
                phases,
            } => {
                let band = freqs
                    .iter()
                    .flatten()
                    .map(|f| f.unsigned_abs() as usize)
                    .max()
                    .unwrap_or(0);
                let mut s = BoxSpectrum::zeros(n, band);
                for ((f, a), p) in freqs.iter().zip(amps).zip(phases) {
                    s.add_cosine(f, *a, *p);
                }
                s
            }
            Term::PowerLaw { cutoff, .. } => {
                let mut s = BoxSpectrum::zeros(n, *cutoff as usize);
                for m in self.power_law_modes(n) {
                    s.add_cosine(&m.freq, m.amp, m.phase);
                }
                s
            }
            Term::Product { left, right } => left.spectrum(n).convolve(&right.spectrum(n)),
            Term::Deriv { index, inner } => inner.spectrum(n).differentiate(index.entries()),
        }
    }

    fn power_law_modes(&self, n: usize) -> Vec<powerlaw::CosineMode> {
        match self {
            Term::PowerLaw {
                beta,
                cutoff,
                seed,
                amp,
                deriv,
                ..
            } => {
                let zero = vec![0; n];
                let d = deriv.as_ref().map(|d| d.entries()).unwrap_or(&zero);
                powerlaw::modes(n, *beta, *cutoff, *seed, *amp, d)
            }
            _ => Vec::new(),
        }
    }

    fn value_at(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let cosine = |f: &[i64], a: f64, p: f64| {
            let arg: f64 = f.iter().zip(x).map(|(k, y)| *k as f64 * y).sum();
            a * (arg + p).cos()
        };
        match self {
            Term::Const { value } => *value,
            Term::Trig {
                freqs,
                amps,
                phases,
            } => freqs
                .iter()
                .zip(amps)
                .zip(phases)
                .map(|((f, a), p)| cosine(f, *a, *p))
                .sum(),
            Term::PowerLaw { .. } => self
                .power_law_modes(n)
                .iter()
                .map(|m| cosine(&m.freq, m.amp, m.phase))
                .sum(),
            Term::Product { left, right } => left.value_at(x) * right.value_at(x),
            Term::Deriv { .. } => self.spectrum(n).eval(x),
        }
    }

    fn derivative(&self, j: &MultiIndex, n: usize) -> Result<Option<Term>> {
        let g = self.grade(n)?;
        if g.checked_sub(j.order()).is_none() {
            return Err(Error::NegativeGrade {
                grade: g,
                order: j.order(),
            });
        }
        if j.is_zero() {
            return Ok(Some(self.clone()));
        }
        Ok(match self {
            Term::Const { .. } => None,
            Term::Trig {
                freqs,
                amps,
                phases,
            } => {
                let shift = j.order() as f64 * FRAC_PI_2;
                let mut out = (Vec::new(), Vec::new(), Vec::new());
                for ((f, a), p) in freqs.iter().zip(amps).zip(phases) {
                    let monomial: f64 = f
                        .iter()
                        .zip(j.entries())
                        .map(|(&k, &d)| (k as f64).powi(d as i32))
                        .product();
                    if monomial != 0.0 {
                        out.0.push(f.clone());
                        out.1.push(a * monomial);
                        out.2.push(p + shift);
                    }
                }
                (!out.0.is_empty()).then_some(Term::Trig {
                    freqs: out.0,
                    amps: out.1,
                    phases: out.2,
                })
            }
            Term::PowerLaw {
                n,
                beta,
                cutoff,
                seed,
                amp,
                deriv,
            } => Some(Term::PowerLaw {
                n: *n,
                beta: *beta,
                cutoff: *cutoff,
                seed: *seed,
                amp: *amp,
                deriv: Some(match deriv {
                    Some(d) => d.add(j),
                    None => j.clone(),
                }),
            }),
            Term::Product { .. } => Some(Term::Deriv {
                index: j.clone(),
                inner: Scalar::from_terms(vec![self.clone()]),
            }),
            Term::Deriv { index, inner } => Some(Term::Deriv {
                index: index.add(j),
                inner: inner.clone(),
            }),
        })
    }

    /// Replaces every power-law series by its trigonometric truncation at
    /// `min(K, cutoff)`.
    fn smoothed(&self, cutoff: u64, n: usize) -> Term {
        match self {
            Term::PowerLaw { cutoff: k, .. } => {
                let keep = (*k).min(cutoff);
                let modes = self.power_law_modes(n);
                let kept: Vec<_> = modes
                    .into_iter()
                    .filter(|m| m.freq.iter().map(|f| f * f).sum::<i64>() <= (keep * keep) as i64)
                    .collect();
                Term::Trig {
                    freqs: kept.iter().map(|m| m.freq.clone()).collect(),
                    amps: kept.iter().map(|m| m.amp).collect(),
                    phases: kept.iter().map(|m| m.phase).collect(),
                }
            }
            Term::Product { left, right } => Term::Product {
                left: left.smoothed(cutoff, n),
                right: right.smoothed(cutoff, n),
            },
            Term::Deriv { index, inner } => Term::Deriv {
                index: index.clone(),
                inner: inner.smoothed(cutoff, n),
            },
            other => other.clone(),
        }
    }

    fn top_level_trig_extent(&self) -> i64 {
        match self {
            Term::Trig { freqs, .. } => freqs.iter().flatten().map(|f| f.abs()).max().unwrap_or(0),
            _ => 0,
        }
    }
}

/// Finite sum of terms; the empty sum is the zero function.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scalar {
    terms: Vec<Term>,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar { terms: Vec::new() }
    }

    pub fn constant(value: f64) -> Self {
        Scalar::from_terms(vec![Term::Const { value }])
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        Scalar { terms }
    }

    /// `Σ amps[m] cos(freqs[m]·x + phases[m])`.
    pub fn trig(freqs: Vec<Vec<i64>>, amps: Vec<f64>, phases: Vec<f64>) -> Self {
        Scalar::from_terms(vec![Term::Trig {
            freqs,
            amps,
            phases,
        }])
    }

    pub fn power_law(n: usize, beta: f64, cutoff: u64, seed: u64, amp: f64) -> Self {
        Scalar::from_terms(vec![Term::power_law(n, beta, cutoff, seed, amp)])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    /// The constant value when every term is a constant.
    pub fn as_constant(&self) -> Option<f64> {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Const { value } => Some(*value),
                _ => None,
            })
            .sum()
    }

    pub fn grade(&self, n: usize) -> Result<Regularity> {
        self.terms
            .iter()
            .try_fold(Regularity::Infinite, |acc, t| Ok(acc.min(t.grade(n)?)))
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Scalar { terms }
    }

    pub fn scaled(&self, c: f64) -> Scalar {
        if c == 0.0 {
            return Scalar::zero();
        }
        Scalar {
            terms: self.terms.iter().map(|t| t.scaled(c)).collect(),
        }
    }

    /// Pointwise product, with constants folded in as scalings.
    pub fn mul(&self, other: &Scalar, n: usize) -> Result<Scalar> {
        if self.is_zero() || other.is_zero() {
            return Ok(Scalar::zero());
        }
        if let Some(c) = self.as_constant() {
            return Ok(other.scaled(c));
        }
        if let Some(c) = other.as_constant() {
            return Ok(self.scaled(c));
        }
        let term = Term::Product {
            left: self.clone(),
            right: other.clone(),
        };
        term.grade(n)?;
        Ok(Scalar::from_terms(vec![term]))
    }

    pub fn derivative(&self, j: &MultiIndex, n: usize) -> Result<Scalar> {
        let mut terms = Vec::new();
        for t in &self.terms {
            if let Some(d) = t.derivative(j, n)? {
                terms.push(d);
            }
        }
        Ok(Scalar { terms })
    }

    /// Exact Fourier coefficients of the represented function.
    pub fn spectrum(&self, n: usize) -> BoxSpectrum {
        self.terms
            .iter()
            .fold(BoxSpectrum::zeros(n, 0), |acc, t| acc.add(&t.spectrum(n)))
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value_at(x)).sum()
    }

    pub fn smoothed(&self, cutoff: u64, n: usize) -> Scalar {
        Scalar {
            terms: self.terms.iter().map(|t| t.smoothed(cutoff, n)).collect(),
        }
    }

    fn trig_extent(&self) -> i64 {
        self.terms
            .iter()
            .map(Term::top_level_trig_extent)
            .max()
            .unwrap_or(0)
    }
}

/// Matrix-valued coefficient on `T^n`, stored entrywise (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    n: usize,
    rows: usize,
    cols: usize,
    entries: Vec<Scalar>,
    declared: Regularity,
}

impl Coefficient {
    pub fn new(n: usize, rows: usize, cols: usize, entries: Vec<Scalar>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} coefficient needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let mut c = Coefficient {
            n,
            rows,
            cols,
            entries,
            declared: Regularity::Infinite,
        };
        c.declared = c.exact_grade()?;
        Ok(c)
    }

    pub fn scalar(n: usize, s: Scalar) -> Result<Self> {
        Coefficient::new(n, 1, 1, vec![s])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Coefficient::scalar(n, Scalar::constant(value)).expect("constants are well formed")
    }

    pub fn zeros(n: usize, rows: usize, cols: usize) -> Self {
        Coefficient::new(n, rows, cols, vec![Scalar::zero(); rows * cols]).expect("zero")
    }

    pub fn identity(n: usize, q: usize) -> Self {
        let entries = (0..q * q)
            .map(|i| {
                if i / q == i % q {
                    Scalar::constant(1.0)
                } else {
                    Scalar::zero()
                }
            })
            .collect();
        Coefficient::new(n, q, q, entries).expect("identity")
    }

    /// Lowers the declared grade; declaring more than the exact grade is refused.
    pub fn with_declared_grade(mut self, grade: Regularity) -> Result<Self> {
        let exact = self.exact_grade()?;
        if grade > exact {
            return Err(Error::Spec(format!(
                "declared grade {grade} exceeds exact grade {exact}"
            )));
        }
        self.declared = grade;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entry(&self, r: usize, c: usize) -> &Scalar {
        &self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Scalar::is_zero)
    }

    /// Minimum over entries of the termwise-minimum grade; zero entries are smooth.
    pub fn exact_grade(&self) -> Result<Regularity> {
        self.entries
            .iter()
            .try_fold(Regularity::Infinite, |acc, s| Ok(acc.min(s.grade(self.n)?)))
    }

    pub fn declared_grade(&self) -> Regularity {
        self.declared
    }

    pub fn grade_certificate(&self) -> Result<GradeCertificate> {
        let grades = self
            .entries
            .iter()
            .map(|s| s.grade(self.n))
            .collect::<Result<Vec<_>>>()?;
        Ok(GradeCertificate::termwise(grades))
    }

    fn map_entries(&self, f: impl Fn(&Scalar) -> Result<Scalar>) -> Result<Coefficient> {
        let entries = self.entries.iter().map(f).collect::<Result<Vec<_>>>()?;
        Coefficient::new(self.n, self.rows, self.cols, entries)
    }

    /// Entrywise `∂^j`, decrementing the grade by `|j|`.
    pub fn derivative(&self, j: &MultiIndex) -> Result<Coefficient> {
        if j.dim() != self.n {
            return Err(Error::DimensionMismatch {
                index: j.clone(),
                expected: self.n,
                got: j.dim(),
            });
        }
        let g = self.exact_grade()?;
        if g.checked_sub(j.order()).is_none() {
            return Err(Error::NegativeGrade {
                grade: g,
                order: j.order(),
            });
        }
        let mut out = self.map_entries(|s| s.derivative(j, self.n))?;
        out.declared = self
            .declared
            .checked_sub(j.order())
            .unwrap_or(Regularity::ZERO)
            .min(out.declared);
        Ok(out)
    }

    /// Matrix product, graded by the product rule on the whole-matrix grades.
    pub fn multiply(&self, other: &Coefficient) -> Result<(Coefficient, GradeCertificate)> {
        if self.cols != other.rows || self.n != other.n {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (ga, gb) = (self.exact_grade()?, other.exact_grade()?);
        let cert = GradeCertificate::product(ga, gb, self.n).ok_or(Error::UngradedProduct {
            left: ga,
            right: gb,
            n: self.n,
        })?;
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Scalar::zero();
                for m in 0..self.cols {
                    acc = acc.add(&self.entry(r, m).mul(other.entry(m, c), self.n)?);
                }
                entries.push(acc);
            }
        }
        let mut out = Coefficient::new(self.n, self.rows, other.cols, entries)?;
        out.declared = cert.grade.min(out.declared);
        Ok((out, cert))
    }

    pub fn add(&self, other: &Coefficient) -> Result<Coefficient> {
        if self.shape() != other.shape() {
            return Err(Error::Shape("cannot add coefficients of different shape".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        Coefficient::new(self.n, self.rows, self.cols, entries)
    }

    pub fn scaled(&self, c: f64) -> Coefficient {
        self.map_entries(|s| Ok(s.scaled(c))).expect("scaling keeps grades")
    }

    pub fn transpose(&self) -> Coefficient {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.entry(r, c).clone());
            }
        }
        Coefficient::new(self.n, self.cols, self.rows, entries).expect("transpose keeps grades")
    }

    pub fn smoothed(&self, cutoff: u64) -> Coefficient {
        self.map_entries(|s| Ok(s.smoothed(cutoff, self.n)))
            .expect("smoothing only raises grades")
    }

    /// Constant matrix when every entry is constant.
    pub fn as_constant(&self) -> Option<DMatrix<f64>> {
        let vals: Option<Vec<f64>> = self.entries.iter().map(Scalar::as_constant).collect();
        vals.map(|v| DMatrix::from_row_slice(self.rows, self.cols, &v))
    }

    pub fn value_at(&self, x: &[f64]) -> DMatrix<f64> {
        let vals: Vec<f64> = self.entries.iter().map(|s| s.value_at(x)).collect();
        DMatrix::from_row_slice(self.rows, self.cols, &vals)
    }

    /// Samples every entry on `grid` (one field component per entry, row-major).
    ///
    /// Power-law series are capped at the grid's symmetric band `N/2 - 1`;
    /// trigonometric terms that do not fit are an error.
    pub fn sample(&self, grid: &TorusGrid) -> Result<SpectralField> {
        if grid.dim() != self.n {
            return Err(Error::Shape(format!(
                "coefficient of dimension {} sampled on a dimension-{} grid",
                self.n,
                grid.dim()
            )));
        }
        let band = grid.symmetric_band();
        let mut comps = Vec::with_capacity(self.entries.len());
        for s in &self.entries {
            let extent = s.trig_extent();
            if extent as usize > band {
                return Err(Error::GridTooSmall {
                    freq: vec![extent],
                    modes: grid.modes(),
                });
            }
            let spec = s.spectrum(self.n).truncate(band);
            let mut comp = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (xi, v) in spec.modes() {
                if let Some(i) = grid.index_of(&xi) {
                    comp[i] += v;
                }
            }
            comps.push(comp);
        }
        SpectralField::from_coefficients(*grid, comps)
    }
}
