use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{unwrap_index, wrap_index};

/// Uniform grid on the flat torus `[0, 2π)^n` with `modes` points per axis.
///
/// Fields on the grid keep the Fourier modes `{-N/2 + 1, ..., N/2}` per axis.
/// Coefficient products are evaluated on a grid padded by `PADDING`, which
/// makes the coefficient-times-field product an exact Galerkin projection for
/// coefficients band-limited to `N - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TorusGrid {
    n: usize,
    modes: usize,
}

impl TorusGrid {
    pub const PADDING: usize = 2;

    pub fn new(n: usize, modes: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidGrid(format!(
                "dimension {n} not supported (1 or 2)"
            )));
        }
        if modes < 8 || !modes.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "{modes} modes per axis (need a power of two >= 8)"
            )));
        }
        Ok(TorusGrid { n, modes })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of stored modes, `N^n`.
    pub fn len(&self) -> usize {
        self.modes.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn padded_modes(&self) -> usize {
        self.modes * Self::PADDING
    }

    pub fn padded_len(&self) -> usize {
        self.padded_modes().pow(self.n as u32)
    }

    /// Largest `|ξ_c|` of a coefficient mode that enters the Galerkin product.
    pub fn coefficient_band(&self) -> usize {
        self.modes - 1
    }

    /// Largest `|ξ_c|` kept symmetrically (the Nyquist mode excluded).
    pub fn symmetric_band(&self) -> usize {
        self.modes / 2 - 1
    }

    pub fn frequency(&self, idx: usize) -> Vec<i64> {
        unwrap_index(idx, self.n, self.modes)
    }

    pub fn index_of(&self, xi: &[i64]) -> Option<usize> {
        let half = (self.modes / 2) as i64;
        if xi.len() != self.n || xi.iter().any(|&f| f <= -half || f > half) {
            return None;
        }
        Some(wrap_index(xi, self.modes))
    }

    pub fn frequencies(&self) -> Vec<Vec<i64>> {
        (0..self.len()).map(|i| self.frequency(i)).collect()
    }

    /// `|ξ|²` per stored mode.
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        self.frequencies()
            .iter()
            .map(|xi| xi.iter().map(|&f| (f * f) as f64).sum())
            .collect()
    }

    /// Sobolev weights `(1 + |ξ|²)^{order/2}` per stored mode.
    pub fn sobolev_weights(&self, order: f64) -> Vec<f64> {
        self.wavenumber_sq()
            .into_iter()
            .map(|k2| (1.0 + k2).powf(order / 2.0))
            .collect()
    }

    /// Position of stored mode `idx` inside the padded cube.
    pub fn padded_position(&self, idx: usize) -> usize {
        wrap_index(&self.frequency(idx), self.padded_modes())
    }
}
