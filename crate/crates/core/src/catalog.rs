//! The example operators shipped with the crate (all on the circle `T^1`).
//!
//! Each one also exists as a spec file under `specs/`; the golden tests check
//! that parsing the file reproduces the constructor here.

use crate::coefficient::{Coefficient, Scalar};
use crate::error::Result;
use crate::operator::{divergence_form_laplacian, schroedinger_like, DiffOp};
use crate::sobolev::MultiIndex;

fn d(k: u32) -> MultiIndex {
    MultiIndex::new(vec![k])
}

fn one_plus_half_cos() -> Scalar {
    Scalar::constant(1.0).add(&Scalar::trig(vec![vec![1]], vec![0.5], vec![0.0]))
}

/// Grade-2 perturbation of 1: `1 + 0.2 Σ_{1<=|ξ|<=256} |ξ|^{-3} cos(ξx + θ_ξ)`.
pub fn rough_conductivity() -> Scalar {
    Scalar::constant(1.0).add(&Scalar::power_law(1, 3.0, 256, 11, 0.2))
}

/// `1 - ∂²`.
pub fn laplacian() -> DiffOp {
    DiffOp::new(
        1,
        1,
        vec![(d(0), Coefficient::constant(1, 1.0)), (d(2), Coefficient::constant(1, -1.0))],
    )
    .expect("well formed")
}

/// `∂`.
pub fn derivative() -> DiffOp {
    DiffOp::derivative(1, 1, d(1)).expect("well formed")
}

/// `∂((1 + ½cos x) ∂)`.
pub fn smooth_divergence() -> Result<DiffOp> {
    divergence_form_laplacian(&Coefficient::scalar(1, one_plus_half_cos())?)
}

/// `∂(a ∂)` with the grade-2 conductivity, so 3-safe and not 4-safe.
pub fn rough_divergence() -> Result<DiffOp> {
    divergence_form_laplacian(&Coefficient::scalar(1, rough_conductivity())?)
}

/// `(1 + ½cos x) ∂² + V` with `V` a grade-1 power law; 3-safe.
pub fn rough_potential() -> Result<DiffOp> {
    DiffOp::new(
        1,
        1,
        vec![
            (d(2), Coefficient::scalar(1, one_plus_half_cos())?),
            (d(0), Coefficient::scalar(1, Scalar::power_law(1, 2.0, 512, 5, 1.0))?),
        ],
    )
}

/// `∂(a ∂) - V` with the rough conductivity and a positive grade-1 potential,
/// so the operator is negative definite and has trivial kernel.
pub fn schroedinger() -> Result<DiffOp> {
    let a = Coefficient::scalar(1, rough_conductivity())?;
    let v = Coefficient::scalar(
        1,
        Scalar::constant(1.0).add(&Scalar::power_law(1, 2.5, 512, 13, 0.3)),
    )?;
    schroedinger_like(&a, &v, 1.0)
}

/// `a ∂` with `a` a coherent-phase grade-0 power law: bounded `H^1 -> L²`
/// only if `a` were of grade 1, so it is not 1-safe.
pub fn unsafe_counterexample() -> Result<DiffOp> {
    DiffOp::new(
        1,
        1,
        vec![(d(1), Coefficient::scalar(1, Scalar::power_law(1, 0.51, 4096, 0, 1.0))?)],
    )
}

/// Name, operator and the Sobolev order `l` at which its index is computed.
pub fn shipped() -> Result<Vec<(&'static str, DiffOp, i64)>> {
    Ok(vec![
        ("laplacian", laplacian(), 2),
        ("derivative", derivative(), 1),
        ("smooth_divergence", smooth_divergence()?, 2),
        ("rough_divergence", rough_divergence()?, 2),
        ("rough_potential", rough_potential()?, 2),
        ("schroedinger", schroedinger()?, 2),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sobolev::Regularity;

    #[test]
    fn safeness_of_examples() {
        let k3 = Regularity::Finite(3);
        assert!(rough_divergence().unwrap().is_safe(k3).overall);
        assert!(!rough_divergence().unwrap().is_safe(Regularity::Finite(4)).overall);
        assert!(rough_potential().unwrap().is_safe(k3).overall);
        assert!(schroedinger().unwrap().is_safe(k3).overall);
        assert!(!unsafe_counterexample().unwrap().is_safe(Regularity::Finite(1)).overall);
    }

    #[test]
    fn self_adjoint_examples() {
        for (name, op, _) in shipped().unwrap() {
            let sym = op.is_formally_self_adjoint(16, 1e-9).unwrap();
            let want = !matches!(name, "derivative" | "rough_potential");
            assert_eq!(sym, want, "{name}");
        }
    }
}
