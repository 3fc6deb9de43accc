//! Fourier-spectral numerics on `T^n`, `n` in {1, 2}.

mod apply;
pub mod field;
pub mod grid;
mod matrix;
mod probes;

use std::path::Path;

use serde::Serialize;

pub use apply::{apply, derivative_symbol, PreparedOperator};
pub(crate) use apply::padded_samples;
pub use field::SpectralField;
pub use grid::TorusGrid;
pub use matrix::{index_report, operator_matrix, IndexReport, SvdPolicy, DENSE_GUARD};
pub use probes::{
    elliptic_constant_probe, garding_ratio, operator_norm_estimate, GardingEstimate, NormEstimate,
    POWER_ITERATIONS, POWER_TOLERANCE,
};

use crate::error::Result;
use crate::operator::DiffOp;

/// Every power-law coefficient truncated at `min(K, cutoff)`.
pub fn smooth_approximation(op: &DiffOp, cutoff: u64) -> DiffOp {
    op.smooth_approximation(cutoff)
}

/// One row of a sweep: the swept parameter and the measured quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub value: f64,
}

/// Writes serializable rows as CSV with a header taken from the field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
