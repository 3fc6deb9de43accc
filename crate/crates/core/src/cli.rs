//! The `ksafe` command line: one subcommand per analysis, a structured report
//! on stdout (text or `--json`) and optional CSV tables.
//!
//! Exit codes: 0 when the analysis ran and passed, 2 when it ran but flagged
//! something (not safe, not elliptic, unresolved gap, failed precondition),
//! 1 on usage, spec or I/O errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::operator::{DiffOp, EllipticityReport, SafenessReport, MARGIN_TOLERANCE};
use crate::parametrix::{fit_power, parametrix_sweep, ParametrixCsvRow, ParametrixRow};
use crate::sobolev::Regularity;
use crate::specfile::{read_spec, to_spec_file, ParsedSpec, SpecFile};
use crate::spectral::{
    elliptic_constant_probe, index_report, operator_norm_estimate, smooth_approximation, write_csv, IndexReport,
    SvdPolicy, TorusGrid,
};

pub const SCHEMA_VERSION: u32 = 1;

const POINTS: usize = 16;
const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// k-safeness table
    Check,
    /// formal adjoint (uses `metric` and `density` from the input file)
    Adjoint,
    /// composition with `--with`
    Compose,
    /// principal symbol sampling
    Ellipticity,
    /// kernel, cokernel and index of the truncated matrix
    Index,
    /// operator norm and Gårding constant under grid refinement
    Estimate,
    /// frozen-coefficient parametrix sweep over partitions (n = 1)
    Parametrix,
    /// smoothing sweep: distance to truncated coefficients and its index
    Sweep,
}

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "ksafe", version, about = "Sobolev-regularity analysis of differential operators on tori")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Operator spec file (JSON).
    pub spec: PathBuf,
    /// Regularity k (integer or `inf`).
    #[arg(long)]
    pub k: Option<Regularity>,
    /// Sobolev order of the domain; defaults to the operator order.
    #[arg(long, allow_hyphen_values = true)]
    pub l: Option<i64>,
    /// Order p of the Gårding probe.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<i64>,
    /// Grid modes per dimension (comma separated for refinement studies).
    #[arg(long = "N", value_delimiter = ',')]
    #[serde(rename = "N")]
    pub modes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random starts for the norm and Gårding probes.
    #[arg(long, default_value_t = 4)]
    pub trials: usize,
    /// Number of base points for the ellipticity sampler.
    #[arg(long, default_value_t = 256)]
    pub budget: usize,
    /// Determinant magnitude below which the symbol counts as degenerate.
    #[arg(long, default_value_t = MARGIN_TOLERANCE)]
    pub margin: f64,
    /// Relative threshold for zero singular values.
    #[arg(long, default_value_t = 1e-7)]
    pub svd_zero: f64,
    /// Minimum acceptable singular value gap.
    #[arg(long, default_value_t = 1e3)]
    pub svd_gap: f64,
    /// Partition sizes for `parametrix`.
    #[arg(long, value_delimiter = ',')]
    pub centers: Vec<usize>,
    /// Frequency cutoff of the near-inverse.
    #[arg(long, default_value_t = 2.0)]
    pub kc: f64,
    /// Coefficient cutoffs for `sweep`.
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Vec<u64>,
    /// Grid used for the index in `sweep`.
    #[arg(long, default_value_t = 64)]
    pub index_modes: usize,
    /// Second operator for `compose`.
    #[arg(long)]
    pub with: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    #[serde(skip)]
    pub json: bool,
    /// Write the table of a sweep to this CSV file.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Omit the timestamp so reports are byte-reproducible.
    #[arg(long)]
    #[serde(skip)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Flagged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    #[serde(rename = "N")]
    pub modes: usize,
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub c_est: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub cutoff: u64,
    pub distance: f64,
    pub converged: bool,
    pub index: i64,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Results {
    Check {
        safeness: SafenessReport,
    },
    Adjoint {
        adjoint: SpecFile,
        self_adjoint: bool,
        safeness: Option<SafenessReport>,
    },
    Compose {
        composed: SpecFile,
        safeness: Option<SafenessReport>,
    },
    Ellipticity {
        ellipticity: EllipticityReport,
    },
    Index {
        ellipticity: EllipticityReport,
        safeness: SafenessReport,
        index: Option<IndexReport>,
    },
    Estimate {
        l: i64,
        p: Option<i64>,
        safeness: SafenessReport,
        rows: Vec<EstimateRow>,
        growth: f64,
    },
    Parametrix {
        l: i64,
        rows: Vec<ParametrixRow>,
        /// Fitted exponent of `A(ε) ~ ε^γ`.
        gamma: f64,
        /// `max/min` of the near-inverse norm over the sweep.
        e_norm_spread: f64,
    },
    Sweep {
        l: i64,
        rows: Vec<SweepRow>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub spec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub config: Args,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub status: Status,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub results: Option<Results>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::Flagged => 2,
        }
    }
}

enum Table {
    Estimate(Vec<EstimateRow>),
    Parametrix(Vec<ParametrixCsvRow>),
    Sweep(Vec<SweepRow>),
}

struct Outcome {
    results: Results,
    warnings: Vec<String>,
    table: Option<Table>,
}

impl Outcome {
    fn new(results: Results) -> Self {
        Outcome {
            results,
            warnings: Vec::new(),
            table: None,
        }
    }
}

/// Fill command-dependent defaults so the echoed config is complete.
fn resolve(args: &mut Args, op: &DiffOp) {
    let s = op.order() as i64;
    if args.modes.is_empty() {
        args.modes = match args.command {
            Command::Estimate => vec![128, 256, 512, 1024],
            Command::Parametrix => vec![512],
            Command::Sweep => vec![1024],
            _ => vec![64],
        };
    }
    if args.l.is_none() && matches!(args.command, Command::Index | Command::Estimate | Command::Parametrix | Command::Sweep) {
        args.l = Some(s);
    }
    if args.command == Command::Parametrix && args.centers.is_empty() {
        args.centers = vec![8, 16, 32, 64];
    }
    if args.command == Command::Sweep && args.cutoffs.is_empty() {
        args.cutoffs = vec![16, 32, 64, 128, 256];
    }
}

fn grid(op: &DiffOp, modes: usize) -> Result<TorusGrid> {
    TorusGrid::new(op.dim(), modes)
}

fn analyse(args: &Args, spec: &ParsedSpec) -> Result<Outcome> {
    let op = &spec.operator;
    let l = args.l.unwrap_or(op.order() as i64);
    let policy = SvdPolicy {
        relative_zero: args.svd_zero,
        gap_threshold: args.svd_gap,
    };
    match args.command {
        Command::Check => {
            let k = args.k.ok_or_else(|| Error::Usage("check needs --k".into()))?;
            let safeness = op.is_safe(k);
            let mut out = Outcome::new(Results::Check {
                safeness: safeness.clone(),
            });
            if !safeness.overall {
                out.warnings.push(format!("operator is not {k}-safe"));
            }
            Ok(out)
        }
        Command::Adjoint => {
            let adjoint = op.formal_adjoint(spec.metric.as_ref(), spec.density.as_ref())?;
            let self_adjoint = crate::operator::coefficients_agree(&adjoint, op, POINTS, SYMMETRY_TOLERANCE);
            let safeness = args
                .k
                .map(|k| adjoint.is_safe(k.checked_sub(op.order()).unwrap_or(Regularity::ZERO)));
            let mut out = Outcome::new(Results::Adjoint {
                adjoint: to_spec_file(&crate::specfile::operator_spec(&adjoint, None)),
                self_adjoint,
                safeness: safeness.clone(),
            });
            if safeness.is_some_and(|s| !s.overall) {
                out.warnings.push("adjoint is not (k - s)-safe".into());
            }
            Ok(out)
        }
        Command::Compose => {
            let path = args.with.as_ref().ok_or_else(|| Error::Usage("compose needs --with".into()))?;
            let other = read_spec(path)?;
            let composed = op.compose(&other.operator)?;
            let safeness = args.k.map(|k| composed.is_safe(k));
            let mut out = Outcome::new(Results::Compose {
                composed: to_spec_file(&crate::specfile::operator_spec(&composed, None)),
                safeness: safeness.clone(),
            });
            if safeness.is_some_and(|s| !s.overall) {
                out.warnings.push("composition is not k-safe".into());
            }
            Ok(out)
        }
        Command::Ellipticity => {
            let ellipticity = op.is_elliptic_with(args.budget, args.seed, args.margin);
            let mut out = Outcome::new(Results::Ellipticity {
                ellipticity: ellipticity.clone(),
            });
            if !ellipticity.elliptic {
                out.warnings.push(format!(
                    "principal symbol degenerates: |det| = {:.3e} at x = {:?}, xi = {:?}",
                    ellipticity.worst_margin, ellipticity.worst_x, ellipticity.worst_xi
                ));
            }
            Ok(out)
        }
        Command::Index => {
            let ellipticity = op.is_elliptic_with(args.budget, args.seed, args.margin);
            let k = Regularity::from_signed(l).ok_or_else(|| Error::Usage("index needs l >= 0".into()))?;
            let safeness = op.is_safe(k);
            let mut warnings = Vec::new();
            let mut index = None;
            if !ellipticity.elliptic {
                warnings.push("precondition failed: operator is not elliptic".into());
            }
            if !safeness.overall {
                warnings.push(format!("precondition failed: operator is not {l}-safe"));
            }
            if warnings.is_empty() {
                let r = index_report(op, &grid(op, args.modes[0])?, l, policy)?;
                if !r.resolved {
                    warnings.push(format!(
                        "singular value gap {:.3e} below {:.1e}: kernel dimension unresolved",
                        r.singular_value_gap, policy.gap_threshold
                    ));
                }
                index = Some(r);
            }
            Ok(Outcome {
                results: Results::Index {
                    ellipticity,
                    safeness,
                    index,
                },
                warnings,
                table: None,
            })
        }
        Command::Estimate => {
            let k = Regularity::from_signed(l.max(args.p.map_or(0, |p| p + op.order() as i64)))
                .ok_or_else(|| Error::Usage("estimate needs l >= 0".into()))?;
            let safeness = op.is_safe(k);
            let mut warnings = Vec::new();
            if !safeness.overall {
                warnings.push(format!("operator is not {k}-safe: norms need not stay bounded"));
            }
            let mut rows = Vec::new();
            for &m in &args.modes {
                let g = grid(op, m)?;
                let e = operator_norm_estimate(op, g, l, args.trials, args.seed)?;
                if !e.converged {
                    warnings.push(format!("power iteration did not converge at N = {m}"));
                }
                let c_est = args
                    .p
                    .map(|p| elliptic_constant_probe(op, p, g, args.trials, args.seed).map(|g| g.c_est))
                    .transpose()?;
                rows.push(EstimateRow {
                    modes: m,
                    norm: e.value,
                    iterations: e.iterations,
                    converged: e.converged,
                    c_est,
                });
            }
            let growth = match (rows.first(), rows.last()) {
                (Some(a), Some(b)) if a.norm > 0.0 => b.norm / a.norm,
                _ => 1.0,
            };
            Ok(Outcome {
                table: Some(Table::Estimate(rows.clone())),
                results: Results::Estimate {
                    l,
                    p: args.p,
                    safeness,
                    rows,
                    growth,
                },
                warnings,
            })
        }
        Command::Parametrix => {
            let rows = parametrix_sweep(op, grid(op, args.modes[0])?, &args.centers, args.kc, l, args.seed)?;
            let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
            let a: Vec<f64> = rows.iter().map(|r| r.a_eps).collect();
            let gamma = if rows.len() >= 2 && a.iter().all(|&v| v > 0.0) {
                fit_power(&eps, &a)
            } else {
                f64::NAN
            };
            let e_max = rows.iter().map(|r| r.e_norm).fold(0.0, f64::max);
            let e_min = rows.iter().map(|r| r.e_norm).fold(f64::INFINITY, f64::min);
            Ok(Outcome {
                table: Some(Table::Parametrix(rows.iter().map(ParametrixCsvRow::from).collect())),
                results: Results::Parametrix {
                    l,
                    rows,
                    gamma,
                    e_norm_spread: e_max / e_min,
                },
                warnings: Vec::new(),
            })
        }
        Command::Sweep => {
            let g = grid(op, args.modes[0])?;
            let index_grid = grid(op, args.index_modes)?;
            let mut warnings = Vec::new();
            let mut rows = Vec::new();
            for &cutoff in &args.cutoffs {
                let smooth = smooth_approximation(op, cutoff);
                let diff = op.sub(&smooth)?;
                let e = operator_norm_estimate(&diff, g, l, args.trials, args.seed)?;
                let r = index_report(&smooth, &index_grid, l, policy)?;
                if !r.resolved {
                    warnings.push(format!("index unresolved at cutoff {cutoff}"));
                }
                rows.push(SweepRow {
                    cutoff,
                    distance: e.value,
                    converged: e.converged,
                    index: r.index,
                    dim_ker: r.dim_ker,
                    dim_coker: r.dim_coker,
                    resolved: r.resolved,
                });
            }
            Ok(Outcome {
                table: Some(Table::Sweep(rows.clone())),
                results: Results::Sweep { l, rows },
                warnings,
            })
        }
    }
}

/// Errors that mean the analysis ran into a mathematical obstruction rather
/// than bad input.
fn is_flag(e: &Error) -> bool {
    !matches!(e, Error::Usage(_) | Error::Spec(_) | Error::Json(_) | Error::Io(_) | Error::Csv(_))
}

/// Runs one command. `Err` is reserved for usage, spec and I/O errors.
pub fn run(mut args: Args) -> Result<Report> {
    let spec = read_spec(&args.spec)?;
    resolve(&mut args, &spec.operator);
    let timestamp = (!args.no_timestamp).then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        tool: "ksafe",
        version: env!("CARGO_PKG_VERSION"),
        command: args.command,
        spec: args.spec.display().to_string(),
        description: spec.description.clone(),
        config: args.clone(),
        timestamp,
        status: Status::Ok,
        warnings: Vec::new(),
        error: None,
        results: None,
    };
    match analyse(&args, &spec) {
        Ok(out) => {
            if let (Some(path), Some(table)) = (&args.csv, &out.table) {
                match table {
                    Table::Estimate(rows) => write_csv(path, rows)?,
                    Table::Parametrix(rows) => write_csv(path, rows)?,
                    Table::Sweep(rows) => write_csv(path, rows)?,
                }
            }
            if !out.warnings.is_empty() {
                report.status = Status::Flagged;
            }
            report.warnings = out.warnings;
            report.results = Some(out.results);
        }
        Err(e) if is_flag(&e) => {
            report.status = Status::Flagged;
            report.error = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn is_leaf_list(items: &[Value]) -> bool {
    items.iter().all(|v| !v.is_object() && !v.is_array())
}

fn render(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::Object(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(v, indent + 1, out);
                    }
                    Value::Array(items) if !is_leaf_list(items) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(v, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {}\n", inline(v))),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                if item.is_object() {
                    out.push_str(&format!("{pad}-\n"));
                    render(item, indent + 1, out);
                } else {
                    out.push_str(&format!("{pad}- {}\n", inline(item)));
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::Array(items) => format!("[{}]", items.iter().map(inline).collect::<Vec<_>>().join(", ")),
        other => scalar(other),
    }
}

/// Human-readable form of the report: nested `key: value` lines.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    render(&serde_json::to_value(report).expect("reports serialize"), 0, &mut out);
    out
}

pub fn render_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let json = args.json;
    let out_path = args.out.clone();
    let report = match run(args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let text = if json { render_json(&report) } else { render_text(&report) };
    let written = match out_path {
        Some(p) => std::fs::write(&p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 1;
    }
    report.exit_code()
}
