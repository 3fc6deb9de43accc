use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{sample_points, DiffOp};
use crate::coefficient::{Coefficient, Scalar};
use crate::error::{Error, Result};
use crate::sobolev::MultiIndex;

/// Sample resolution (per axis) for positivity checks of metrics and densities.
const CHECK_POINTS: usize = 64;

impl DiffOp {
    /// Formal adjoint with respect to the metric `g` and density `w`
    /// (identity and 1 when omitted):
    /// `(A')_j = Σ_{l >= j} (-1)^{|l|} C(l, j) ∂^{l-j}(A^g_l w)`, `A^g = g⁻¹ Aᵀ g`.
    ///
    /// The result satisfies `⟨P u, v⟩_w = ⟨u, P' v⟩` where the left pairing is
    /// weighted by `w` and the right one is plain `L²`.
    pub fn formal_adjoint(&self, metric: Option<&Coefficient>, density: Option<&Coefficient>) -> Result<DiffOp> {
        let twist = MetricTwist::new(self, metric)?;
        let density = match density {
            Some(w) => Some(self.check_density(w)?),
            None => None,
        };
        let mut out: BTreeMap<MultiIndex, Coefficient> = BTreeMap::new();
        for (l, a) in self.coefficients() {
            let mut base = twist.apply(a)?;
            if let Some(w) = &density {
                base = base.multiply(w)?.0;
            }
            let sign = if l.order() % 2 == 0 { 1.0 } else { -1.0 };
            for j in l.below() {
                let d = base.derivative(&l.sub(&j)?)?;
                let term = d.scaled(sign * l.binom(&j)? as f64);
                accumulate(&mut out, j, term)?;
            }
        }
        DiffOp::with_order(self.dim(), self.rank(), self.order(), out.into_iter().collect())
    }

    /// `P1 ∘ P2` with `A_J = Σ C(j1, j1 + j2 - J) A¹_{j1} ∂^{j1+j2-J} A²_{j2}`
    /// over `j2 <= J <= j1 + j2` componentwise.
    pub fn compose(&self, other: &DiffOp) -> Result<DiffOp> {
        self.check_compatible(other)?;
        let mut out: BTreeMap<MultiIndex, Coefficient> = BTreeMap::new();
        for (j1, a1) in self.coefficients() {
            for (j2, a2) in other.coefficients() {
                for m in j1.below() {
                    let d = a2.derivative(&m)?;
                    if d.is_zero() {
                        continue;
                    }
                    let (prod, _) = a1.multiply(&d)?;
                    let term = prod.scaled(j1.binom(&m)? as f64);
                    accumulate(&mut out, j1.sub(&m)?.add(j2), term)?;
                }
            }
        }
        DiffOp::with_order(
            self.dim(),
            self.rank(),
            self.order() + other.order(),
            out.into_iter().collect(),
        )
    }

    /// Compares `P` with its formal adjoint (default metric and density) at
    /// `points^n` sample points.
    pub fn is_formally_self_adjoint(&self, points: usize, tol: f64) -> Result<bool> {
        let adj = self.formal_adjoint(None, None)?;
        Ok(coefficients_agree(self, &adj, points, tol))
    }

    fn check_density(&self, w: &Coefficient) -> Result<Coefficient> {
        if w.shape() != (1, 1) || w.dim() != self.dim() {
            return Err(Error::Shape("density must be a scalar coefficient".into()));
        }
        for x in sample_points(self.dim(), CHECK_POINTS) {
            let v = w.value_at(&x)[(0, 0)];
            if v <= 0.0 {
                return Err(Error::NotPositive(format!("density is {v} at {x:?}")));
            }
        }
        let entries = (0..self.rank() * self.rank())
            .map(|k| {
                if k / self.rank() == k % self.rank() {
                    w.entry(0, 0).clone()
                } else {
                    Scalar::zero()
                }
            })
            .collect();
        Coefficient::new(self.dim(), self.rank(), self.rank(), entries)
    }
}

/// Whether two operators have the same coefficient values at sampled points.
pub(crate) fn coefficients_agree(a: &DiffOp, b: &DiffOp, points: usize, tol: f64) -> bool {
    let mut keys: Vec<&MultiIndex> = a.coeffs.keys().chain(b.coeffs.keys()).collect();
    keys.sort();
    keys.dedup();
    let xs = sample_points(a.dim(), points);
    keys.into_iter().all(|i| {
        let (ca, cb) = (a.coefficient(i), b.coefficient(i));
        xs.iter().all(|x| {
            let va = ca.map(|c| c.value_at(x));
            let vb = cb.map(|c| c.value_at(x));
            let diff = match (va, vb) {
                (Some(p), Some(q)) => (p - q).abs().max(),
                (Some(p), None) | (None, Some(p)) => p.abs().max(),
                (None, None) => 0.0,
            };
            diff <= tol
        })
    })
}

fn accumulate(out: &mut BTreeMap<MultiIndex, Coefficient>, key: MultiIndex, term: Coefficient) -> Result<()> {
    let merged = match out.remove(&key) {
        Some(prev) => prev.add(&term)?,
        None => term,
    };
    out.insert(key, merged);
    Ok(())
}

/// `A -> g⁻¹ Aᵀ g` for the supported metrics.
enum MetricTwist {
    Transpose,
    Constant { g: Coefficient, g_inv: Coefficient },
}

impl MetricTwist {
    fn new(op: &DiffOp, metric: Option<&Coefficient>) -> Result<Self> {
        let q = op.rank();
        let Some(g) = metric else {
            return Ok(MetricTwist::Transpose);
        };
        if g.shape() != (q, q) || g.dim() != op.dim() {
            return Err(Error::Shape(format!("metric must be {q}x{q}")));
        }
        for x in sample_points(op.dim(), CHECK_POINTS) {
            let m = g.value_at(&x);
            if (&m - m.transpose()).abs().max() > 1e-12 * m.abs().max().max(1.0) {
                return Err(Error::NotPositive(format!("metric is not symmetric at {x:?}")));
            }
            if m.clone().cholesky().is_none() {
                return Err(Error::NotPositive(format!("metric is not positive definite at {x:?}")));
            }
        }
        if q == 1 {
            // g⁻¹ a g = a for scalars
            return Ok(MetricTwist::Transpose);
        }
        let Some(gm) = g.as_constant() else {
            return Err(Error::Unsupported(
                "non-constant metrics are only supported for scalar operators".into(),
            ));
        };
        let inv: DMatrix<f64> = gm.clone().try_inverse().ok_or_else(|| Error::NotPositive("metric is singular".into()))?;
        let constant = |m: &DMatrix<f64>| {
            let entries = m.transpose().iter().map(|v| Scalar::constant(*v)).collect();
            Coefficient::new(g.dim(), q, q, entries).expect("constant matrix")
        };
        Ok(MetricTwist::Constant {
            g: constant(&gm),
            g_inv: constant(&inv),
        })
    }

    fn apply(&self, a: &Coefficient) -> Result<Coefficient> {
        let t = a.transpose();
        match self {
            MetricTwist::Transpose => Ok(t),
            MetricTwist::Constant { g, g_inv } => Ok(g_inv.multiply(&t)?.0.multiply(g)?.0),
        }
    }
}
