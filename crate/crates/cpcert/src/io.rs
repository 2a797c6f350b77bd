//! JSON and CSV wire formats.
//!
//! All structures use stable snake_case keys; unknown keys in inputs are
//! rejected so schema drift fails loudly. Numbers round-trip exactly: the
//! serializer emits the shortest decimal form that parses back to the
//! same float.
//!
//! - Matrix: `{"r": 2, "entries": [1.0, 0.5, 0.5, 1.0]}`, row-major.
//! - Channel: `{"n": …, "m": …, "choi": <matrix>}` or
//!   `{"n": …, "m": …, "kraus": [[[[re, im], …], …], …]}` with each Kraus
//!   operator stored as m rows of n `[re, im]` pairs.
//! - Block form: `{"n": …, "d0": […], "d1": […], "b": [row-major]}`.
//! - Certificate: `{"r": …, "vectors": [[…]], "residual": …, "strategy": …}`.
//! - Verification job: `{"matrix": <matrix>, "certificate": <certificate>}`.
//! - CSV (matrices only): r rows of r comma-separated reals.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::choi::{BlockForm, ChoiMatrix};
use crate::classify::{ClassificationReport, CpStatus, Refutation, StageTimings};
use crate::cpfact::{CpCertificate, FactorDiagnostics, FactorOutcome, FactorStatus};
use crate::error::{Error, Result};
use crate::matcore::{SymMatrix, ToleranceConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub r: usize,
    /// Row-major entries, length r².
    pub entries: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(s: &SymMatrix) -> Self {
        MatrixJson {
            r: s.dim(),
            entries: s.to_row_major(),
        }
    }

    pub fn to_matrix(&self, tol: &ToleranceConfig) -> Result<SymMatrix> {
        SymMatrix::from_entries(self.r, &self.entries, tol)
    }
}

/// One Kraus operator: m rows of n `[re, im]` pairs.
pub type KrausOperatorJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<KrausOperatorJson>>,
}

impl ChannelJson {
    pub fn from_choi(j: &ChoiMatrix) -> Self {
        ChannelJson {
            n: j.n(),
            m: j.m(),
            choi: Some(MatrixJson::from_matrix(j.matrix())),
            kraus: None,
        }
    }

    pub fn from_kraus_ops(n: usize, m: usize, kraus: &[DMatrix<Complex<f64>>]) -> Self {
        let ops = kraus
            .iter()
            .map(|k| {
                (0..m)
                    .map(|a| (0..n).map(|j| [k[(a, j)].re, k[(a, j)].im]).collect())
                    .collect()
            })
            .collect();
        ChannelJson {
            n,
            m,
            choi: None,
            kraus: Some(ops),
        }
    }

    /// Builds the Choi matrix from whichever representation is present.
    pub fn to_choi(&self, tol: &ToleranceConfig) -> Result<ChoiMatrix> {
        match (&self.choi, &self.kraus) {
            (Some(matrix), None) => {
                let mat = matrix.to_matrix(tol)?;
                ChoiMatrix::new(self.n, self.m, mat)
            }
            (None, Some(ops)) => {
                let kraus = ops
                    .iter()
                    .map(|op| self.parse_kraus_operator(op))
                    .collect::<Result<Vec<_>>>()?;
                ChoiMatrix::from_kraus(self.n, self.m, &kraus, tol)
            }
            (Some(_), Some(_)) => Err(Error::Parse(
                "channel defines both \"choi\" and \"kraus\"; use exactly one".into(),
            )),
            (None, None) => Err(Error::Parse(
                "channel defines neither \"choi\" nor \"kraus\"".into(),
            )),
        }
    }

    fn parse_kraus_operator(&self, op: &KrausOperatorJson) -> Result<DMatrix<Complex<f64>>> {
        if op.len() != self.m || op.iter().any(|row| row.len() != self.n) {
            return Err(Error::Parse(format!(
                "kraus operator must be {}x{} [re, im] pairs",
                self.m, self.n
            )));
        }
        Ok(DMatrix::from_fn(self.m, self.n, |a, j| {
            Complex::new(op[a][j][0], op[a][j][1])
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockFormJson {
    pub n: usize,
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    /// Row-major n×n entries.
    pub b: Vec<f64>,
}

impl BlockFormJson {
    pub fn from_block_form(bf: &BlockForm) -> Self {
        let n = bf.n();
        let mut b = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                b.push(bf.b()[(i, j)]);
            }
        }
        BlockFormJson {
            n,
            d0: bf.d0().to_vec(),
            d1: bf.d1().to_vec(),
            b,
        }
    }

    pub fn to_block_form(&self) -> Result<BlockForm> {
        if self.b.len() != self.n * self.n {
            return Err(Error::Parse(format!(
                "block form \"b\" must have {} row-major entries",
                self.n * self.n
            )));
        }
        BlockForm::new(
            self.n,
            self.d0.clone(),
            self.d1.clone(),
            DMatrix::from_row_slice(self.n, self.n, &self.b),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    pub r: usize,
    pub vectors: Vec<Vec<f64>>,
    pub residual: f64,
    pub strategy: String,
}

impl CertificateJson {
    pub fn from_certificate(cert: &CpCertificate, strategy: &str) -> Self {
        CertificateJson {
            r: cert.dim(),
            vectors: cert
                .vectors()
                .iter()
                .map(|x| x.iter().copied().collect())
                .collect(),
            residual: cert.residual,
            strategy: strategy.to_string(),
        }
    }

    pub fn to_certificate(&self) -> Result<CpCertificate> {
        let mut cert = CpCertificate::from_rows(self.r, &self.vectors)?;
        cert.residual = self.residual;
        Ok(cert)
    }
}

/// Input for the `verify` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyJobJson {
    pub matrix: MatrixJson,
    pub certificate: CertificateJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefutationJson {
    /// "negative_entry" or "not_psd".
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_eigenvalue: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

impl RefutationJson {
    pub fn from_refutation(refutation: &Refutation) -> Self {
        match refutation {
            Refutation::NegativeEntry { row, col, value } => RefutationJson {
                reason: "negative_entry".into(),
                entry: Some([*row, *col]),
                value: Some(*value),
                min_eigenvalue: None,
                witness: None,
            },
            Refutation::NotPsd {
                min_eigenvalue,
                witness,
            } => RefutationJson {
                reason: "not_psd".into(),
                entry: None,
                value: None,
                min_eigenvalue: Some(*min_eigenvalue),
                witness: Some(witness.clone()),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingsJson {
    pub trace_check: f64,
    pub dnn_check: f64,
    pub factorization: f64,
    pub total: f64,
}

impl TimingsJson {
    fn from_timings(t: &StageTimings) -> Self {
        TimingsJson {
            trace_check: t.trace_check,
            dnn_check: t.dnn_check,
            factorization: t.factorization,
            total: t.total,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub n: usize,
    pub m: usize,
    pub is_trace_preserving: bool,
    pub is_dnn: bool,
    /// "certified", "refuted", or "unknown".
    pub cp_status: String,
    pub certificate: Option<CertificateJson>,
    pub refutation: Option<RefutationJson>,
    pub strategy: String,
    pub timings: TimingsJson,
}

impl ReportJson {
    pub fn from_report(report: &ClassificationReport) -> Self {
        ReportJson {
            n: report.n,
            m: report.m,
            is_trace_preserving: report.is_trace_preserving,
            is_dnn: report.is_dnn,
            cp_status: match report.cp_status {
                CpStatus::Certified => "certified".into(),
                CpStatus::Refuted => "refuted".into(),
                CpStatus::Unknown => "unknown".into(),
            },
            certificate: report
                .certificate
                .as_ref()
                .map(|cert| CertificateJson::from_certificate(cert, &report.strategy)),
            refutation: report.refutation.as_ref().map(RefutationJson::from_refutation),
            strategy: report.strategy.clone(),
            timings: TimingsJson::from_timings(&report.timings),
        }
    }
}

/// Failure half of the `factorize` output.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorFailureJson {
    pub status: String,
    pub strategy: String,
    pub iterations: usize,
    pub infeasibility: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FactorFailureJson {
    pub fn from_diagnostics(d: &FactorDiagnostics) -> Self {
        FactorFailureJson {
            status: "failed".into(),
            strategy: d.strategy.clone(),
            iterations: d.iterations,
            infeasibility: d.infeasibility,
            note: d.note.clone(),
        }
    }
}

/// Serializes a factorization outcome: the certificate on success, the
/// diagnostics on failure.
pub fn factor_outcome_json(outcome: &FactorOutcome) -> serde_json::Value {
    match outcome.status {
        FactorStatus::Certified => {
            let cert = outcome
                .certificate
                .as_ref()
                .expect("certified outcomes carry a certificate");
            serde_json::to_value(CertificateJson::from_certificate(
                cert,
                &outcome.diagnostics.strategy,
            ))
            .expect("certificate serialization cannot fail")
        }
        FactorStatus::Failed => {
            serde_json::to_value(FactorFailureJson::from_diagnostics(&outcome.diagnostics))
                .expect("diagnostics serialization cannot fail")
        }
    }
}

/// Result of the `verify` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReportJson {
    pub verified: bool,
    pub residual: f64,
    pub eps_residual: f64,
    pub min_entry: f64,
}

/// Machine-readable error object printed to stderr, one line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorJson {
    pub error: String,
    pub message: String,
}

impl ErrorJson {
    pub fn from_error(err: &Error) -> Self {
        ErrorJson {
            error: err.code().into(),
            message: err.to_string().replace('\n', " "),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("error serialization cannot fail")
    }
}

/// Parses a square matrix from CSV text: r rows of r comma-separated reals.
pub fn matrix_from_csv(text: &str, tol: &ToleranceConfig) -> Result<SymMatrix> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty())
        .map(|line| {
            line.split(',')
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("invalid CSV number: {cell:?}")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let r = rows.len();
    if r == 0 {
        return Err(Error::Parse("CSV matrix is empty".into()));
    }
    if rows.iter().any(|row| row.len() != r) {
        return Err(Error::Parse(format!(
            "CSV matrix must be square: {r} rows, but row lengths differ"
        )));
    }
    let entries: Vec<f64> = rows.into_iter().flatten().collect();
    SymMatrix::from_entries(r, &entries, tol)
}

/// Renders a matrix as CSV text: r rows of r comma-separated reals.
pub fn matrix_to_csv(s: &SymMatrix) -> String {
    let r = s.dim();
    let mut out = String::new();
    for i in 0..r {
        let row: Vec<String> = (0..r).map(|j| format_float(s.entry(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Shortest decimal form that parses back to the same f64.
fn format_float(v: f64) -> String {
    let mut buffer = ryu::Buffer::new();
    buffer.format(v).to_string()
}

/// Reads a matrix in the named format.
pub fn read_matrix(text: &str, format: TextFormat, tol: &ToleranceConfig) -> Result<SymMatrix> {
    match format {
        TextFormat::Json => {
            let parsed: MatrixJson =
                serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
            parsed.to_matrix(tol)
        }
        TextFormat::Csv => matrix_from_csv(text, tol),
    }
}

/// Input/output text format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextFormat {
    Json,
    Csv,
}

/// Certificate vectors mapped back to the sampler convention.
pub fn certificate_to_vec(cert: &CpCertificate) -> Vec<Vec<f64>> {
    cert.vectors()
        .iter()
        .map(|x| x.iter().copied().collect())
        .collect()
}

/// Builds a [`CpCertificate`] from plain vectors; used by callers that
/// assemble certificates from parsed data.
pub fn certificate_from_vec(r: usize, rows: &[Vec<f64>]) -> Result<CpCertificate> {
    CpCertificate::from_rows(r, rows)
}

/// Convenience: a `DVector` from a plain vector.
pub fn dvector(values: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(values)
}
