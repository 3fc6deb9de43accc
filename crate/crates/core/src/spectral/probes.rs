use serde::Serialize;

use super::{PreparedOperator, SpectralField, TorusGrid};
use crate::error::Result;
use crate::operator::DiffOp;

pub const POWER_ITERATIONS: usize = 200;
pub const POWER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEstimate {
    pub l: i64,
    pub modes: usize,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest singular value of `P: H^l -> H^{l-s}` on the grid, by power
/// iteration on the normal operator (matrix-free, best of `trials` starts).
pub fn operator_norm_estimate(op: &DiffOp, grid: TorusGrid, l: i64, trials: usize, seed: u64) -> Result<NormEstimate> {
    let p = PreparedOperator::new(op, grid)?;
    let w_in = grid.sobolev_weights(-(l as f64));
    let w_out = grid.sobolev_weights((l - op.order() as i64) as f64);
    let weighted = |u: &SpectralField, w: &[f64]| u.map_modes(|xi| {
        let k = grid.index_of(xi).expect("grid mode");
        w[k].into()
    });
    let mut best = NormEstimate {
        l,
        modes: grid.modes(),
        value: 0.0,
        iterations: 0,
        converged: false,
    };
    for t in 0..trials.max(1) {
        let mut v = SpectralField::random(grid, op.rank(), grid.modes() / 2, 0.0, seed.wrapping_add(t as u64));
        v = v.scale(1.0 / v.sobolev_norm(0.0));
        let mut sigma = 0.0;
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=POWER_ITERATIONS {
            iterations = it;
            let tv = weighted(&p.apply(&weighted(&v, &w_in))?, &w_out);
            let next = tv.sobolev_norm(0.0);
            let back = weighted(&p.apply_adjoint(&weighted(&tv, &w_out))?, &w_in);
            let size = back.sobolev_norm(0.0);
            if size == 0.0 {
                sigma = next;
                converged = true;
                break;
            }
            v = back.scale(1.0 / size);
            let change = (next - sigma).abs();
            sigma = next;
            if change <= POWER_TOLERANCE * sigma {
                converged = true;
                break;
            }
        }
        if sigma > best.value || t == 0 {
            best = NormEstimate {
                l,
                modes: grid.modes(),
                value: sigma,
                iterations,
                converged,
            };
        }
    }
    Ok(best)
}

/// `‖u‖_{p+s} / (‖Pu‖_p + ‖u‖_{p+s-1})`.
pub fn garding_ratio(op: &DiffOp, p: i64, u: &SpectralField) -> Result<f64> {
    let pu = super::apply(op, u)?;
    Ok(garding_ratio_with(op.order(), p, u, &pu))
}

fn garding_ratio_with(s: u32, p: i64, u: &SpectralField, pu: &SpectralField) -> f64 {
    let top = (p + s as i64) as f64;
    u.sobolev_norm(top) / (pu.sobolev_norm(p as f64) + u.sobolev_norm(top - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GardingEstimate {
    pub p: i64,
    pub modes: usize,
    pub c_est: f64,
    pub trials: usize,
}

/// Largest Gårding ratio over random fields band-limited to `N/4`.
///
/// Probe coefficients decay like `(1+|ξ|²)^{-(p+s)/2 - (n+1)/4}`, so every norm
/// in the ratio converges as the band grows, and the draws are nested across
/// grids; the estimate therefore settles under refinement.
pub fn elliptic_constant_probe(op: &DiffOp, p: i64, grid: TorusGrid, trials: usize, seed: u64) -> Result<GardingEstimate> {
    let prepared = PreparedOperator::new(op, grid)?;
    let decay = (p + op.order() as i64) as f64 + (grid.dim() as f64 + 1.0) / 2.0;
    let mut c_est: f64 = 0.0;
    for t in 0..trials.max(1) {
        let u = SpectralField::random(grid, op.rank(), grid.modes() / 4, decay, seed.wrapping_add(t as u64));
        let pu = prepared.apply(&u)?;
        c_est = c_est.max(garding_ratio_with(op.order(), p, &u, &pu));
    }
    Ok(GardingEstimate {
        p,
        modes: grid.modes(),
        c_est,
        trials: trials.max(1),
    })
}
