//! Cone membership and factorization certificates for doubly nonnegative
//! and completely positive matrices, with channel-level classification of
//! Choi matrices.
//!
//! A real symmetric matrix is *completely positive* (CP) when it can be
//! written as a finite sum of rank-one matrices `x xᵀ` with entrywise
//! nonnegative `x`; it is *doubly nonnegative* (DNN) when it is positive
//! semidefinite and entrywise nonnegative. CP membership is hard in
//! general, but for Choi matrices of trace-preserving maps into a qubit
//! the DNN relaxation is exact, and this crate turns that fact into an
//! algorithm: every DNN, trace-preserving, qubit-output Choi matrix is
//! driven through a permutation into a bipartite block form and factored
//! into an explicit nonnegative rank-one certificate.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`matcore`]: dense symmetric matrices, tolerance-aware PSD / DNN
//!   tests, permutation and diagonal congruences.
//! - [`graph`]: support graphs, two-coloring, components, DOT export.
//! - [`choi`]: Choi matrices, Kraus assembly, block trace conditions,
//!   and the interleaved-to-block basis permutation.
//! - [`cpfact`]: factorization engines producing [`cpfact::CpCertificate`]
//!   values, and the verifier that is the sole arbiter of correctness.
//! - [`classify`]: channel-level verdicts (trace preservation, DNN, CP
//!   status) and the qubit-output certification pipeline.
//! - [`sampler`]: seeded, reproducible instance generators.
//! - [`io`] / [`cli`]: JSON/CSV formats and the command-line front end.
//!
//! ```
//! use cpcert::choi::ChoiMatrix;
//! use cpcert::classify::{classify_channel, CpStatus};
//! use cpcert::cpfact::FactorParams;
//! use cpcert::matcore::ToleranceConfig;
//!
//! // Choi matrix of the identity qubit channel.
//! let entries = [
//!     1.0, 0.0, 0.0, 1.0,
//!     0.0, 0.0, 0.0, 0.0,
//!     0.0, 0.0, 0.0, 0.0,
//!     1.0, 0.0, 0.0, 1.0,
//! ];
//! let tol = ToleranceConfig::default();
//! let choi = ChoiMatrix::from_row_major(2, 2, &entries, &tol).unwrap();
//! let report = classify_channel(&choi, &tol, &FactorParams::default()).unwrap();
//! assert_eq!(report.cp_status, CpStatus::Certified);
//! ```

pub mod choi;
pub mod classify;
pub mod cli;
pub mod cpfact;
pub mod error;
pub mod graph;
pub mod io;
pub mod matcore;
pub mod sampler;

pub use error::Error;
pub use matcore::{SymMatrix, ToleranceConfig};
