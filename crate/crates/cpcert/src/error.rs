//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by matrix construction, cone tests, factorization
/// engines, and the classification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input matrix deviates from symmetry beyond `eps_sym`.
    #[error("input asymmetry {max_deviation:e} exceeds eps_sym {eps_sym:e}")]
    Asymmetry { max_deviation: f64, eps_sym: f64 },

    /// Input contains a NaN or infinite entry.
    #[error("input contains a non-finite entry")]
    NonFinite,

    /// The symmetric eigensolver did not converge.
    #[error("symmetric eigendecomposition failed to converge for dimension {dim}")]
    Convergence { dim: usize },

    /// A permutation argument is not a bijection on `0..r`.
    #[error("not a valid permutation of 0..{expected_len}")]
    InvalidPermutation { expected_len: usize },

    /// A diagonal scaling vector has a nonpositive entry.
    #[error("diagonal scale entry {index} is {value}, expected > 0")]
    NonPositiveScale { index: usize, value: f64 },

    /// Choi blocks violate `blocks[j][i] == blocks[i][j]ᵀ`.
    #[error("choi blocks ({i},{j}) and ({j},{i}) are not mutual transposes (deviation {deviation:e})")]
    BlockSymmetry { i: usize, j: usize, deviation: f64 },

    /// Dimensions of the inputs do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A Kraus-assembled Choi matrix has imaginary parts above tolerance,
    /// so the map cannot have a real doubly nonnegative Choi matrix.
    #[error("choi matrix has imaginary entries up to {max_imag:e}; not representable as a real DNN matrix")]
    NonRealChoi { max_imag: f64 },

    /// Block index out of range.
    #[error("block index ({i},{j}) out of range for n = {n}")]
    Index { i: usize, j: usize, n: usize },

    /// An off-diagonal block entry that trace preservation forces to zero
    /// is nonzero, so the input is not a DNN trace-preserving Choi matrix.
    #[error("forced zero violated: |{kind}_{{{i},{j}}}| = {value:e} > eps_zero")]
    ForcedZero {
        kind: &'static str,
        i: usize,
        j: usize,
        value: f64,
    },

    /// Operation requires output dimension m == 2.
    #[error("operation requires a qubit output (m = 2), got m = {m}")]
    NotQubitOutput { m: usize },

    /// The support graph is not a forest.
    #[error("support graph is not a forest")]
    NotAForest,

    /// A Schur complement update produced a diagonal entry below the PSD
    /// tolerance; the input was not positive semidefinite.
    #[error("negative Schur update at vertex {vertex}: {value:e}")]
    NegativeSchurUpdate { vertex: usize, value: f64 },

    /// Row sums exceed the diagonal beyond tolerance.
    #[error("matrix is not diagonally dominant at row {row} (excess {excess:e})")]
    NotDiagonallyDominant { row: usize, excess: f64 },

    /// A zero diagonal entry has a nonzero row, which is impossible for a
    /// positive semidefinite matrix.
    #[error("zero diagonal at index {index} with nonzero row entry {entry:e}; input is not PSD")]
    ZeroDiagonalNonzeroRow { index: usize, entry: f64 },

    /// The input did not satisfy the hypotheses of the qubit-output
    /// certification pipeline (DNN + trace-preserving + m = 2).
    #[error("pipeline hypothesis violated: {source}")]
    HypothesisViolation {
        #[source]
        source: Box<Error>,
    },

    /// Every factorization engine failed on an input that satisfies the
    /// pipeline hypotheses. This indicates a defect, not an honest verdict.
    #[error("all factorization engines failed (infeasibility {infeasibility:e}); this input satisfies the pipeline hypotheses")]
    PipelineExhausted { infeasibility: f64 },

    /// Convergence failure in a sampler.
    #[error("sampler did not converge after {attempts} attempts")]
    SamplerConvergence { attempts: usize },

    /// Malformed input file or flag value.
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error as a pipeline hypothesis violation.
    pub fn hypothesis(source: Error) -> Self {
        Error::HypothesisViolation {
            source: Box::new(source),
        }
    }

    /// Short machine-readable code for CLI error objects.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Asymmetry { .. } => "asymmetry",
            Error::NonFinite => "non_finite",
            Error::Convergence { .. } => "convergence",
            Error::InvalidPermutation { .. } => "invalid_permutation",
            Error::NonPositiveScale { .. } => "non_positive_scale",
            Error::BlockSymmetry { .. } => "block_symmetry",
            Error::Dimension(_) => "dimension",
            Error::NonRealChoi { .. } => "non_real_choi",
            Error::Index { .. } => "index",
            Error::ForcedZero { .. } => "forced_zero",
            Error::NotQubitOutput { .. } => "not_qubit_output",
            Error::NotAForest => "not_a_forest",
            Error::NegativeSchurUpdate { .. } => "negative_schur_update",
            Error::NotDiagonallyDominant { .. } => "not_diagonally_dominant",
            Error::ZeroDiagonalNonzeroRow { .. } => "zero_diagonal_nonzero_row",
            Error::HypothesisViolation { .. } => "hypothesis_violation",
            Error::PipelineExhausted { .. } => "pipeline_exhausted",
            Error::SamplerConvergence { .. } => "sampler_convergence",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
