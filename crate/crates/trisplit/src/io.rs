//! Problem files, report documents, and trace tables.
//!
//! Problem files are JSON with top-level keys `dim`, `operator_a`,
//! `operator_b`, `cocoercive_c`, optional `x0`, and optional `params`
//! (`gamma`, `delta`, `eta_fraction`). Unknown keys are rejected. Writing is
//! canonical: keys in sorted order, every float rendered in scientific
//! notation with 17 significant digits, so write -> parse -> write is
//! byte-identical and downstream diffs are exact.
//!
//! This module is deliberately concrete over `f64`: the interchange format
//! is decimal text, and 17 digits round-trip doubles exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{kkt_residual, RunReport, RunStatus};
use crate::linalg::{Matrix, Vector};
use crate::operators::{
    CocoerciveKind, CocoerciveSpec, Cocoercivity, OperatorKind, OperatorSpec, Problem, SpecError,
};
use crate::params::{ParamPlan, Regime};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("problem file is not valid JSON or violates the schema: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("problem file entries must be finite numbers")]
    NonFinite,
    #[error(
        "matrix for a {dim}-dimensional problem must have {expected} row-major entries, got {got}"
    )]
    BadMatrixLength {
        dim: usize,
        expected: usize,
        got: usize,
    },
    #[error("vector must have {expected} entries, got {got}")]
    BadVectorLength { expected: usize, got: usize },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Formats one float with 17 significant digits; the canonical number
/// rendering of every writer here.
pub fn fmt_float(value: f64) -> String {
    format!("{value:.16e}")
}

// ---------------------------------------------------------------------------
// schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorNode {
    Zero,
    ScaledIdentity { alpha: f64 },
    Affine { matrix: Vec<f64>, offset: Vec<f64> },
    SubdiffQuadratic { matrix: Vec<f64>, offset: Vec<f64> },
    SubdiffL1 { weight: f64 },
    SubdiffBox { lo: Vec<f64>, hi: Vec<f64> },
    SubdiffBall { radius: f64 },
    Shifted { base: Box<OperatorNode>, tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocoerciveNode {
    Zero,
    LinearPsd { matrix: Vec<f64>, offset: Vec<f64> },
    HuberGrad { threshold: f64, target: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileParams {
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim: usize,
    pub operator_a: OperatorNode,
    pub operator_b: OperatorNode,
    pub cocoercive_c: CocoerciveNode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<FileParams>,
}

fn to_vector(entries: &[f64], dim: usize) -> Result<Vector<f64>, IoError> {
    if entries.len() != dim {
        return Err(IoError::BadVectorLength {
            expected: dim,
            got: entries.len(),
        });
    }
    Vector::new(entries.to_vec()).map_err(|_| IoError::NonFinite)
}

fn to_matrix(entries: &[f64], dim: usize) -> Result<Matrix<f64>, IoError> {
    if entries.len() != dim * dim {
        return Err(IoError::BadMatrixLength {
            dim,
            expected: dim * dim,
            got: entries.len(),
        });
    }
    if entries.iter().any(|e| !e.is_finite()) {
        return Err(IoError::NonFinite);
    }
    Ok(Matrix::from_row_major(dim, entries))
}

impl OperatorNode {
    pub fn build(&self, dim: usize) -> Result<OperatorSpec<f64>, IoError> {
        match self {
            OperatorNode::Zero => Ok(OperatorSpec::zero()),
            OperatorNode::ScaledIdentity { alpha } => {
                if !alpha.is_finite() {
                    return Err(IoError::NonFinite);
                }
                Ok(OperatorSpec::scaled_identity(*alpha))
            }
            OperatorNode::Affine { matrix, offset } => Ok(OperatorSpec::affine(
                to_matrix(matrix, dim)?,
                to_vector(offset, dim)?,
            )?),
            OperatorNode::SubdiffQuadratic { matrix, offset } => Ok(
                OperatorSpec::subdiff_quadratic(to_matrix(matrix, dim)?, to_vector(offset, dim)?)?,
            ),
            OperatorNode::SubdiffL1 { weight } => {
                if !weight.is_finite() {
                    return Err(IoError::NonFinite);
                }
                Ok(OperatorSpec::subdiff_l1(*weight)?)
            }
            OperatorNode::SubdiffBox { lo, hi } => Ok(OperatorSpec::subdiff_box(
                to_vector(lo, dim)?,
                to_vector(hi, dim)?,
            )?),
            OperatorNode::SubdiffBall { radius } => {
                if !radius.is_finite() {
                    return Err(IoError::NonFinite);
                }
                Ok(OperatorSpec::subdiff_ball(*radius)?)
            }
            OperatorNode::Shifted { base, tau } => {
                if !tau.is_finite() {
                    return Err(IoError::NonFinite);
                }
                Ok(OperatorSpec::shifted(base.build(dim)?, *tau))
            }
        }
    }

    pub fn from_spec(spec: &OperatorSpec<f64>) -> Self {
        match spec.kind() {
            OperatorKind::Zero => OperatorNode::Zero,
            OperatorKind::ScaledIdentity { alpha } => {
                OperatorNode::ScaledIdentity { alpha: *alpha }
            }
            OperatorKind::Affine { matrix, offset } => OperatorNode::Affine {
                matrix: matrix.row_major().to_vec(),
                offset: offset.as_slice().to_vec(),
            },
            OperatorKind::SubdiffQuadratic { q, lin } => OperatorNode::SubdiffQuadratic {
                matrix: q.row_major().to_vec(),
                offset: lin.as_slice().to_vec(),
            },
            OperatorKind::SubdiffL1 { weight } => OperatorNode::SubdiffL1 { weight: *weight },
            OperatorKind::SubdiffBoxIndicator { lo, hi } => OperatorNode::SubdiffBox {
                lo: lo.as_slice().to_vec(),
                hi: hi.as_slice().to_vec(),
            },
            OperatorKind::SubdiffBallIndicator { radius } => {
                OperatorNode::SubdiffBall { radius: *radius }
            }
            OperatorKind::Shifted { base, tau } => OperatorNode::Shifted {
                base: Box::new(OperatorNode::from_spec(base)),
                tau: *tau,
            },
        }
    }
}

impl CocoerciveNode {
    pub fn build(&self, dim: usize) -> Result<CocoerciveSpec<f64>, IoError> {
        match self {
            CocoerciveNode::Zero => Ok(CocoerciveSpec::zero()),
            CocoerciveNode::LinearPsd { matrix, offset } => Ok(CocoerciveSpec::linear_psd(
                to_matrix(matrix, dim)?,
                to_vector(offset, dim)?,
            )?),
            CocoerciveNode::HuberGrad { threshold, target } => {
                if !threshold.is_finite() {
                    return Err(IoError::NonFinite);
                }
                Ok(CocoerciveSpec::huber_grad(
                    *threshold,
                    to_vector(target, dim)?,
                )?)
            }
        }
    }

    pub fn from_spec(spec: &CocoerciveSpec<f64>) -> Self {
        match spec.kind() {
            CocoerciveKind::Zero => CocoerciveNode::Zero,
            CocoerciveKind::LinearPsd { q, lin } => CocoerciveNode::LinearPsd {
                matrix: q.row_major().to_vec(),
                offset: lin.as_slice().to_vec(),
            },
            CocoerciveKind::HuberGrad { threshold, target } => CocoerciveNode::HuberGrad {
                threshold: *threshold,
                target: target.as_slice().to_vec(),
            },
        }
    }
}

/// A parsed-and-validated problem file.
#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub problem: Problem<f64>,
    pub x0: Option<Vector<f64>>,
    pub params: Option<FileParams>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<BuiltProblem, IoError> {
        let problem = Problem::new(
            self.operator_a.build(self.dim)?,
            self.operator_b.build(self.dim)?,
            self.cocoercive_c.build(self.dim)?,
            self.dim,
        )?;
        let x0 = match &self.x0 {
            Some(entries) => Some(to_vector(entries, self.dim)?),
            None => None,
        };
        if let Some(p) = &self.params {
            let bad = !p.gamma.is_finite()
                || p.delta.map(|d| !d.is_finite()).unwrap_or(false)
                || p.eta_fraction.map(|f| !f.is_finite()).unwrap_or(false);
            if bad {
                return Err(IoError::NonFinite);
            }
        }
        Ok(BuiltProblem {
            problem,
            x0,
            params: self.params.clone(),
        })
    }

    pub fn from_problem(
        problem: &Problem<f64>,
        x0: Option<&Vector<f64>>,
        params: Option<FileParams>,
    ) -> Self {
        ProblemFile {
            dim: problem.dim(),
            operator_a: OperatorNode::from_spec(&problem.a),
            operator_b: OperatorNode::from_spec(&problem.b),
            cocoercive_c: CocoerciveNode::from_spec(&problem.c),
            x0: x0.map(|v| v.as_slice().to_vec()),
            params,
        }
    }

    /// Canonical text rendering (sorted keys, 17-digit floats).
    pub fn write(&self) -> String {
        let value = serde_json::to_value(self).expect("schema types serialize");
        let mut out = String::new();
        write_canonical(&value, 0, &mut out);
        out.push('\n');
        out
    }
}

// ---------------------------------------------------------------------------
// canonical JSON writer
// ---------------------------------------------------------------------------

fn write_canonical(value: &serde_json::Value, depth: usize, out: &mut String) {
    use serde_json::Value;
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(num) => {
            if let Some(u) = num.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = num.as_i64() {
                out.push_str(&i.to_string());
            } else {
                out.push_str(&fmt_float(num.as_f64().expect("finite float")));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serializes"));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_canonical(item, depth, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            // serde_json's default map is a BTreeMap: keys arrive sorted
            out.push_str("{\n");
            let indent = "  ".repeat(depth + 1);
            for (i, (key, val)) in map.iter().enumerate() {
                if i > 0 {
                    out.push_str(",\n");
                }
                out.push_str(&indent);
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push_str(": ");
                write_canonical(val, depth + 1, out);
            }
            out.push('\n');
            out.push_str(&"  ".repeat(depth));
            out.push('}');
        }
    }
}

// ---------------------------------------------------------------------------
// report document and trace table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanNode {
    pub regime: String,
    pub alpha: f64,
    pub beta: f64,
    /// `null` when the cocoercive slot is the zero map (unbounded constant).
    pub sigma: Option<f64>,
    pub gamma: f64,
    pub delta: f64,
    pub lambda: f64,
    pub eta: f64,
    pub eta_star: f64,
}

impl PlanNode {
    pub fn from_plan(plan: &ParamPlan<f64>) -> Self {
        PlanNode {
            regime: match plan.regime {
                Regime::Neutral => "neutral".into(),
                Regime::Strong => "strong".into(),
            },
            alpha: plan.alpha,
            beta: plan.beta,
            sigma: match plan.sigma {
                Cocoercivity::Finite(s) => Some(s),
                Cocoercivity::Unbounded => None,
            },
            gamma: plan.gamma,
            delta: plan.delta,
            lambda: plan.lambda,
            eta: plan.eta,
            eta_star: plan.eta_star,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub status: String,
    pub iterations: usize,
    pub residual: f64,
    pub kkt: f64,
    pub shadow: Vec<f64>,
    pub plan: PlanNode,
}

pub fn status_name(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Converged => "converged",
        RunStatus::MaxIters => "max_iters",
        RunStatus::Diverged => "diverged",
    }
}

/// Renders the run report document canonically.
pub fn write_report(report: &RunReport<f64>) -> String {
    let doc = ReportFile {
        status: status_name(report.status).to_string(),
        iterations: report.iterations,
        residual: report.final_record().residual,
        kkt: report.kkt,
        shadow: report.final_shadow.as_slice().to_vec(),
        plan: PlanNode::from_plan(&report.plan),
    };
    let value = serde_json::to_value(&doc).expect("report serializes");
    let mut out = String::new();
    write_canonical(&value, 0, &mut out);
    out.push('\n');
    out
}

/// Renders the iteration trace as CSV with columns
/// `n,residual,sqrt_n_times_residual,kkt`; `.` decimal separator, header
/// mandatory, every row newline-terminated.
pub fn write_trace(report: &RunReport<f64>) -> String {
    let mut out = String::from("n,residual,sqrt_n_times_residual,kkt\n");
    for record in &report.records {
        let sqrtn = (record.n as f64).sqrt() * record.residual;
        let kkt = kkt_residual(record, &report.plan);
        out.push_str(&format!(
            "{},{},{},{}\n",
            record.n,
            fmt_float(record.residual),
            fmt_float(sqrtn),
            fmt_float(kkt)
        ));
    }
    out
}
