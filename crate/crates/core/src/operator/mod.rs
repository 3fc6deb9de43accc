//! Linear differential operators `P = Σ_{|i|<=s} A_i ∂^i` with graded
//! matrix coefficients, and their symbolic calculus.

mod calculus;
mod examples;
mod safety;
mod symbol;

use std::collections::BTreeMap;

pub(crate) use calculus::coefficients_agree;
pub use examples::{divergence_form_laplacian, schroedinger_like};
pub use safety::{SafenessReport, SafenessRow};
pub use symbol::{EllipticityReport, SymbolSample, MARGIN_TOLERANCE};

use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::sobolev::{MultiIndex, Regularity};

#[derive(Debug, Clone, PartialEq)]
pub struct DiffOp {
    n: usize,
    q: usize,
    s: u32,
    coeffs: BTreeMap<MultiIndex, Coefficient>,
}

impl DiffOp {
    /// Builds an operator whose order is the largest order carrying a nonzero
    /// coefficient. Structurally zero coefficients are dropped.
    pub fn new(n: usize, q: usize, coeffs: Vec<(MultiIndex, Coefficient)>) -> Result<Self> {
        let mut map: BTreeMap<MultiIndex, Coefficient> = BTreeMap::new();
        for (i, c) in coeffs {
            if i.dim() != n {
                return Err(Error::DimensionMismatch {
                    index: i.clone(),
                    expected: n,
                    got: i.dim(),
                });
            }
            if c.dim() != n {
                return Err(Error::InvalidOperator(format!(
                    "coefficient at {i} has dimension {}, operator has {n}",
                    c.dim()
                )));
            }
            if c.shape() != (q, q) {
                return Err(Error::InvalidOperator(format!(
                    "coefficient at {i} has shape {:?}, expected {q}x{q}",
                    c.shape()
                )));
            }
            c.exact_grade()?;
            let merged = match map.remove(&i) {
                Some(prev) => prev.add(&c)?,
                None => c,
            };
            map.insert(i, merged);
        }
        map.retain(|_, c| !c.is_zero());
        let s = map.keys().map(MultiIndex::order).max().unwrap_or(0);
        Ok(DiffOp { n, q, s, coeffs: map })
    }

    /// Like [`DiffOp::new`] but declares order `s`, which must bound every
    /// nonzero coefficient. Used for differences whose top part cancels.
    pub fn with_order(n: usize, q: usize, s: u32, coeffs: Vec<(MultiIndex, Coefficient)>) -> Result<Self> {
        let mut op = DiffOp::new(n, q, coeffs)?;
        if op.s > s {
            return Err(Error::InvalidOperator(format!(
                "declared order {s} below the top nonzero order {}",
                op.s
            )));
        }
        op.s = s;
        Ok(op)
    }

    pub fn identity(n: usize, q: usize) -> Self {
        DiffOp::new(n, q, vec![(MultiIndex::zero(n), Coefficient::identity(n, q))]).expect("identity")
    }

    /// The pure derivative `∂^j` acting on each component.
    pub fn derivative(n: usize, q: usize, j: MultiIndex) -> Result<Self> {
        DiffOp::new(n, q, vec![(j, Coefficient::identity(n, q))])
    }

    /// Multiplication by a `q x q` coefficient.
    pub fn multiplication(c: Coefficient) -> Result<Self> {
        let (q, _) = c.shape();
        DiffOp::new(c.dim(), q, vec![(MultiIndex::zero(c.dim()), c)])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.q
    }

    pub fn order(&self) -> u32 {
        self.s
    }

    pub fn coefficient(&self, i: &MultiIndex) -> Option<&Coefficient> {
        self.coeffs.get(i)
    }

    /// Nonzero coefficients in graded multiindex order.
    pub fn coefficients(&self) -> impl Iterator<Item = (&MultiIndex, &Coefficient)> {
        self.coeffs.iter()
    }

    pub fn top_order_coefficients(&self) -> impl Iterator<Item = (&MultiIndex, &Coefficient)> {
        let s = self.s;
        self.coeffs.iter().filter(move |(i, _)| i.order() == s)
    }

    /// Smallest exact grade over all coefficients.
    pub fn min_grade(&self) -> Regularity {
        self.coeffs
            .values()
            .map(|c| c.exact_grade().expect("validated on construction"))
            .min()
            .unwrap_or(Regularity::Infinite)
    }

    fn check_compatible(&self, other: &DiffOp) -> Result<()> {
        if self.n != other.n || self.q != other.q {
            return Err(Error::InvalidOperator(format!(
                "operators act on (n={}, q={}) and (n={}, q={})",
                self.n, self.q, other.n, other.q
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &DiffOp) -> Result<DiffOp> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .chain(other.coeffs.iter())
            .map(|(i, c)| (i.clone(), c.clone()))
            .collect();
        DiffOp::with_order(self.n, self.q, self.s.max(other.s), coeffs)
    }

    pub fn sub(&self, other: &DiffOp) -> Result<DiffOp> {
        self.add(&other.scaled(-1.0))
    }

    pub fn scaled(&self, c: f64) -> DiffOp {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(i, a)| (i.clone(), a.scaled(c)))
            .collect();
        DiffOp::with_order(self.n, self.q, self.s, coeffs).expect("scaling keeps structure")
    }

    /// Replaces every power-law series by its truncation at `min(K, cutoff)`;
    /// every coefficient of the result is smooth.
    pub fn smooth_approximation(&self, cutoff: u64) -> DiffOp {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(i, a)| (i.clone(), a.smoothed(cutoff)))
            .collect();
        DiffOp::with_order(self.n, self.q, self.s, coeffs).expect("smoothing keeps structure")
    }
}

/// Evenly spread sample points of `T^n`, `per_axis^n` of them.
pub(crate) fn sample_points(n: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let h = 2.0 * std::f64::consts::PI / per_axis as f64;
    (0..per_axis.pow(n as u32))
        .map(|mut idx| {
            let mut x = vec![0.0; n];
            for c in (0..n).rev() {
                x[c] = (idx % per_axis) as f64 * h + 0.5 * h;
                idx /= per_axis;
            }
            x
        })
        .collect()
}
