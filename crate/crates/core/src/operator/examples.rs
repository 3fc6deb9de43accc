use nalgebra::SymmetricEigen;

use super::{sample_points, DiffOp};
use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::sobolev::MultiIndex;

/// `Σ_c ∂_c (a ∂_c) = Σ_c (a ∂_c² + (∂_c a) ∂_c)` for a positive (symmetric) `a`.
pub fn divergence_form_laplacian(a: &Coefficient) -> Result<DiffOp> {
    let n = a.dim();
    let (q, cols) = a.shape();
    if q != cols {
        return Err(Error::Shape("divergence-form coefficient must be square".into()));
    }
    for x in sample_points(n, 64) {
        let m = a.value_at(&x);
        let sym = 0.5 * (&m + m.transpose());
        if (&m - &sym).abs().max() > 1e-12 * m.abs().max().max(1.0) {
            return Err(Error::NotPositive(format!("coefficient is not symmetric at {x:?}")));
        }
        let low = SymmetricEigen::new(sym).eigenvalues.min();
        if low <= 0.0 {
            return Err(Error::NotPositive(format!("smallest eigenvalue {low} at {x:?}")));
        }
    }
    let mut coeffs = Vec::new();
    for c in 0..n {
        let e = MultiIndex::unit(n, c);
        coeffs.push((e.add(&e), a.clone()));
        coeffs.push((e.clone(), a.derivative(&e)?));
    }
    DiffOp::with_order(n, q, 2, coeffs)
}

/// `divergence_form_laplacian(a) - C V`.
pub fn schroedinger_like(a: &Coefficient, potential: &Coefficient, c: f64) -> Result<DiffOp> {
    let lap = divergence_form_laplacian(a)?;
    let v = DiffOp::multiplication(potential.scaled(-c))?;
    lap.add(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::Scalar;
    use crate::sobolev::Regularity;

    fn d(k: u32) -> MultiIndex {
        MultiIndex::new(vec![k])
    }

    #[test]
    fn constant_coefficient_gives_laplacian() {
        let p = divergence_form_laplacian(&Coefficient::constant(1, 1.0)).unwrap();
        assert_eq!(p.coefficients().count(), 1);
        assert_eq!(p.coefficient(&d(2)).unwrap().as_constant().unwrap()[(0, 0)], 1.0);
        let p2 = divergence_form_laplacian(&Coefficient::constant(2, 1.0)).unwrap();
        assert_eq!(p2.coefficients().count(), 2);
    }

    #[test]
    fn cosine_coefficient() {
        let a = Coefficient::scalar(
            1,
            Scalar::constant(1.0).add(&Scalar::trig(vec![vec![1]], vec![0.5], vec![0.0])),
        )
        .unwrap();
        let p = divergence_form_laplacian(&a).unwrap();
        for x in [0.2, 1.9, 3.3] {
            let c1 = p.coefficient(&d(1)).unwrap().value_at(&[x])[(0, 0)];
            assert!((c1 + 0.5 * f64::sin(x)).abs() < 1e-14);
        }
        assert!(p.is_safe(Regularity::Infinite).overall);
        assert!(p.is_formally_self_adjoint(16, 1e-12).unwrap());
    }

    #[test]
    fn rough_coefficient_grade_pattern() {
        for k in 2..5u32 {
            // grade k - 1 on the coefficient
            let beta = k as f64 - 1.0 + 0.5 + 0.4;
            let pl = Scalar::power_law(1, beta, 64, 5, 0.1);
            let a = Coefficient::scalar(1, Scalar::constant(1.0).add(&pl)).unwrap();
            assert_eq!(a.exact_grade().unwrap(), Regularity::Finite(k - 1));
            let p = divergence_form_laplacian(&a).unwrap();
            assert!(p.is_safe(Regularity::Finite(k)).overall, "k = {k}");
            assert!(!p.is_safe(Regularity::Finite(k + 1)).overall, "k = {k}");
        }
    }

    #[test]
    fn rejects_nonpositive() {
        let a = Coefficient::scalar(1, Scalar::trig(vec![vec![1]], vec![1.0], vec![0.0])).unwrap();
        assert!(matches!(divergence_form_laplacian(&a), Err(Error::NotPositive(_))));
    }

    #[test]
    fn schroedinger_patterns() {
        let one = Coefficient::constant(1, 1.0);
        let p = schroedinger_like(&one, &Coefficient::constant(1, 0.0), 1.0).unwrap();
        assert_eq!(p.coefficients().count(), 1);
        let p = schroedinger_like(&one, &one, -1.0).unwrap();
        assert_eq!(p.coefficient(&d(0)).unwrap().as_constant().unwrap()[(0, 0)], 1.0);
        let v = Coefficient::scalar(1, Scalar::power_law(1, 2.0, 128, 2, 1.0)).unwrap();
        let p = schroedinger_like(&one, &v, 1.0).unwrap();
        assert!(p.is_safe(Regularity::Finite(3)).overall);
    }
}
