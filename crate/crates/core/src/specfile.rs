//! Operator spec files: strict JSON with top-level keys `operator`, `metric`
//! and `density`.
//!
//! ```json
//! {
//!   "operator": {
//!     "n": 1, "q": 1, "s": 2,
//!     "coefficients": [
//!       { "index": [2], "entries": [ { "row": 0, "col": 0, "terms": [ { "type": "const", "value": 1.0 } ] } ] }
//!     ]
//!   }
//! }
//! ```
//!
//! Entries are sparse (a missing entry is zero). Unknown keys anywhere are
//! rejected. [`to_canonical`] writes coefficients in graded multiindex order
//! and entries row-major, so it is idempotent on its own output.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficient::{Coefficient, Scalar};
use crate::error::{Error, Result};
use crate::operator::DiffOp;
use crate::sobolev::{MultiIndex, Regularity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<ScalarSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub n: usize,
    pub q: usize,
    pub s: u32,
    pub coefficients: Vec<CoefficientSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub index: MultiIndex,
    pub entries: Vec<EntrySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade: Option<Regularity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub row: usize,
    pub col: usize,
    pub terms: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub entries: Vec<EntrySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarSpec {
    pub terms: Scalar,
}

/// A validated spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSpec {
    pub description: Option<String>,
    pub operator: DiffOp,
    pub metric: Option<Coefficient>,
    pub density: Option<Coefficient>,
}

fn matrix(n: usize, q: usize, entries: &[EntrySpec], what: &str) -> Result<Coefficient> {
    let mut cells = vec![None; q * q];
    for e in entries {
        if e.row >= q || e.col >= q {
            return Err(Error::Spec(format!(
                "{what}: entry ({}, {}) outside a {q}x{q} matrix",
                e.row, e.col
            )));
        }
        let slot = &mut cells[e.row * q + e.col];
        if slot.is_some() {
            return Err(Error::Spec(format!("{what}: entry ({}, {}) given twice", e.row, e.col)));
        }
        *slot = Some(e.terms.clone());
    }
    let scalars = cells.into_iter().map(|c| c.unwrap_or_default()).collect();
    Coefficient::new(n, q, q, scalars).map_err(|err| Error::Spec(format!("{what}: {err}")))
}

pub fn parse_spec(text: &str) -> Result<ParsedSpec> {
    let file: SpecFile = serde_json::from_str(text)?;
    from_spec_file(&file)
}

pub fn read_spec(path: &Path) -> Result<ParsedSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_spec(&text).map_err(|e| match e {
        Error::Json(j) => Error::Spec(format!("{}: {j}", path.display())),
        other => other,
    })
}

pub fn from_spec_file(file: &SpecFile) -> Result<ParsedSpec> {
    let OperatorSpec { n, q, s, coefficients } = &file.operator;
    let (n, q, s) = (*n, *q, *s);
    if q == 0 {
        return Err(Error::Spec("operator rank q must be positive".into()));
    }
    let mut seen = Vec::new();
    let mut coeffs = Vec::new();
    for c in coefficients {
        let what = format!("coefficient {}", c.index);
        if c.index.dim() != n {
            return Err(Error::Spec(format!("{what}: multiindex has dimension {}, expected {n}", c.index.dim())));
        }
        if c.index.order() > s {
            return Err(Error::Spec(format!("{what}: order {} exceeds declared order {s}", c.index.order())));
        }
        if seen.contains(&c.index) {
            return Err(Error::Spec(format!("{what}: given twice")));
        }
        seen.push(c.index.clone());
        let mut coef = matrix(n, q, &c.entries, &what)?;
        if let Some(g) = c.grade {
            coef = coef.with_declared_grade(g).map_err(|e| Error::Spec(format!("{what}: {e}")))?;
        }
        coeffs.push((c.index.clone(), coef));
    }
    let operator = DiffOp::new(n, q, coeffs).map_err(|e| Error::Spec(e.to_string()))?;
    if operator.order() != s {
        return Err(Error::Spec(format!(
            "declared order {s} but the highest nonzero coefficient has order {}",
            operator.order()
        )));
    }
    let metric = file
        .metric
        .as_ref()
        .map(|m| matrix(n, q, &m.entries, "metric"))
        .transpose()?;
    let density = file
        .density
        .as_ref()
        .map(|d| Coefficient::scalar(n, d.terms.clone()).map_err(|e| Error::Spec(format!("density: {e}"))))
        .transpose()?;
    Ok(ParsedSpec {
        description: file.description.clone(),
        operator,
        metric,
        density,
    })
}

fn entries(c: &Coefficient) -> Vec<EntrySpec> {
    let (rows, cols) = c.shape();
    let mut out = Vec::new();
    for row in 0..rows {
        for col in 0..cols {
            let s = c.entry(row, col);
            if !s.is_zero() {
                out.push(EntrySpec {
                    row,
                    col,
                    terms: s.clone(),
                });
            }
        }
    }
    out
}

pub fn to_spec_file(spec: &ParsedSpec) -> SpecFile {
    let op = &spec.operator;
    let coefficients = op
        .coefficients()
        .map(|(i, c)| {
            let exact = c.exact_grade().expect("validated");
            CoefficientSpec {
                index: i.clone(),
                entries: entries(c),
                grade: (c.declared_grade() < exact).then_some(c.declared_grade()),
            }
        })
        .collect();
    SpecFile {
        description: spec.description.clone(),
        operator: OperatorSpec {
            n: op.dim(),
            q: op.rank(),
            s: op.order(),
            coefficients,
        },
        metric: spec.metric.as_ref().map(|m| MatrixSpec { entries: entries(m) }),
        density: spec.density.as_ref().map(|d| ScalarSpec {
            terms: d.entry(0, 0).clone(),
        }),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_canonical(spec: &ParsedSpec) -> String {
    let mut s = serde_json::to_string_pretty(&to_spec_file(spec)).expect("spec files serialize");
    s.push('\n');
    s
}

/// Spec of a bare operator (default metric and density).
pub fn operator_spec(op: &DiffOp, description: Option<&str>) -> ParsedSpec {
    ParsedSpec {
        description: description.map(str::to_string),
        operator: op.clone(),
        metric: None,
        density: None,
    }
}
