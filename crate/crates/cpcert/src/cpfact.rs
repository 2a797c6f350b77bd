//! Completely positive factorization engines and the certificate verifier.
//!
//! Every engine produces a [`CpCertificate`]: a list of entrywise
//! nonnegative vectors whose Gram sum reconstructs the target matrix. No
//! engine ever reports `Certified` without [`verify_certificate`] passing,
//! so correctness never depends on the engines themselves — the verifier
//! is the sole arbiter.
//!
//! Engines, from most to least structured:
//!
//! - [`factor_forest`]: exact leaf elimination for forest support graphs.
//! - [`factor_diag_dominant`]: the classical edge-plus-remainder split for
//!   diagonally dominant matrices.
//! - [`factor_bipartite_blockform`]: edge allocation for `[[D0,B],[Bᵀ,D1]]`
//!   matrices, the guaranteed-success domain of the qubit-output pipeline.
//! - [`factor_alternating_projection`]: a seeded spectral/nonnegative
//!   alternating projection backstop for everything else.
//!
//! [`factor_auto`] tries them in that order and returns the first verified
//! certificate.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::choi::BlockForm;
use crate::error::{Error, Result};
use crate::graph::{ColoringOutcome, SupportGraph, TwoColoring};
use crate::matcore::{Permutation, SymMatrix, ToleranceConfig};

/// An explicit completely positive factorization: `Σ_t x_t x_tᵀ ≈ target`
/// with every `x_t` entrywise nonnegative. The empty list certifies the
/// zero matrix.
#[derive(Debug, Clone)]
pub struct CpCertificate {
    r: usize,
    vectors: Vec<DVector<f64>>,
    /// Relative Frobenius reconstruction error, filled by the verifier.
    pub residual: f64,
}

impl CpCertificate {
    pub fn new(r: usize, vectors: Vec<DVector<f64>>) -> Result<Self> {
        if r == 0 {
            return Err(Error::Dimension(
                "certificate dimension must be at least 1".into(),
            ));
        }
        for x in &vectors {
            if x.len() != r {
                return Err(Error::Dimension(format!(
                    "certificate vector has length {}, expected {r}",
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(CpCertificate {
            r,
            vectors,
            residual: f64::NAN,
        })
    }

    pub fn from_rows(r: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let vectors = rows
            .iter()
            .map(|row| DVector::from_row_slice(row))
            .collect();
        Self::new(r, vectors)
    }

    pub fn dim(&self) -> usize {
        self.r
    }

    /// Number of rank-one terms.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    /// Gram sum `Σ_t x_t x_tᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let mut gram = DMatrix::zeros(self.r, self.r);
        for x in &self.vectors {
            gram += x * x.transpose();
        }
        // Accumulated entrywise, so the result is exactly symmetric.
        SymMatrix::from_symmetric_unchecked(gram)
    }

    /// Smallest entry over all vectors; `+∞` for the empty certificate.
    pub fn min_entry(&self) -> f64 {
        self.vectors
            .iter()
            .flat_map(|x| x.iter())
            .fold(f64::INFINITY, |acc, &v| acc.min(v))
    }
}

/// Verifies a certificate against its target matrix.
///
/// Returns `(passed, residual)` where
/// `residual = ‖S − Σ x_t x_tᵀ‖_F / max(1, ‖S‖_F)` and the check passes iff
/// the residual is within `eps_residual` and every entry is `≥ -eps_nonneg`.
pub fn verify_certificate(
    s: &SymMatrix,
    cert: &CpCertificate,
    tol: &ToleranceConfig,
) -> Result<(bool, f64)> {
    if cert.dim() != s.dim() {
        return Err(Error::Dimension(format!(
            "certificate dimension {} does not match matrix dimension {}",
            cert.dim(),
            s.dim()
        )));
    }
    let gram = cert.reconstruct();
    let residual = (s.matrix() - gram.matrix()).norm() / s.frobenius_norm().max(1.0);
    let nonneg = cert.min_entry() >= -tol.eps_nonneg;
    Ok((residual <= tol.eps_residual && nonneg, residual))
}

/// Permutes every certificate vector: `x_new[perm(k)] = x_old[k]`, so the
/// result certifies the congruence-permuted target. Coordinates are only
/// relabeled, so nonnegativity is preserved, and the stored residual
/// carries over unchanged (the Frobenius norm is permutation invariant).
pub fn map_certificate_perm(cert: &CpCertificate, perm: &Permutation) -> Result<CpCertificate> {
    if perm.len() != cert.dim() {
        return Err(Error::InvalidPermutation {
            expected_len: cert.dim(),
        });
    }
    let vectors = cert
        .vectors
        .iter()
        .map(|x| {
            let mut y = DVector::zeros(x.len());
            for k in 0..x.len() {
                y[perm.apply(k)] = x[k];
            }
            y
        })
        .collect();
    let mut mapped = CpCertificate::new(cert.dim(), vectors)?;
    mapped.residual = cert.residual;
    Ok(mapped)
}

/// Rescales every vector by a positive diagonal: the result certifies
/// `diag(d) · S · diag(d)`. The stored residual becomes stale for
/// non-uniform scales; re-verify against the scaled target to refresh it.
pub fn map_certificate_diag(cert: &CpCertificate, d: &[f64]) -> Result<CpCertificate> {
    if d.len() != cert.dim() {
        return Err(Error::Dimension(format!(
            "diagonal scale has length {}, expected {}",
            d.len(),
            cert.dim()
        )));
    }
    for (index, &value) in d.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveScale { index, value });
        }
    }
    let vectors = cert
        .vectors
        .iter()
        .map(|x| DVector::from_fn(x.len(), |k, _| d[k] * x[k]))
        .collect();
    let mut mapped = CpCertificate::new(cert.dim(), vectors)?;
    mapped.residual = cert.residual;
    Ok(mapped)
}

/// How a factorization attempt ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorStatus {
    Certified,
    Failed,
}

/// Engine bookkeeping attached to every outcome.
#[derive(Debug, Clone)]
pub struct FactorDiagnostics {
    /// Name of the engine that produced (or last attempted) the outcome.
    pub strategy: String,
    pub iterations: usize,
    /// Residual infeasibility or reconstruction error of the best attempt.
    pub infeasibility: f64,
    /// Failure reason or strategy notes.
    pub note: Option<String>,
}

/// Result of a factorization attempt. `status == Certified` implies the
/// certificate is present and has passed [`verify_certificate`].
#[derive(Debug, Clone)]
pub struct FactorOutcome {
    pub status: FactorStatus,
    pub certificate: Option<CpCertificate>,
    pub diagnostics: FactorDiagnostics,
}

impl FactorOutcome {
    fn certified(certificate: CpCertificate, diagnostics: FactorDiagnostics) -> Self {
        FactorOutcome {
            status: FactorStatus::Certified,
            certificate: Some(certificate),
            diagnostics,
        }
    }

    fn failed(diagnostics: FactorDiagnostics) -> Self {
        FactorOutcome {
            status: FactorStatus::Failed,
            certificate: None,
            diagnostics,
        }
    }

    pub fn is_certified(&self) -> bool {
        self.status == FactorStatus::Certified
    }
}

/// Tuning knobs for the iterative engines. Engines are pure functions of
/// `(input, params)`, so identical parameters reproduce identical
/// outcomes, restarts included.
#[derive(Debug, Clone, Copy)]
pub struct FactorParams {
    /// Iteration cap for edge rebalancing and alternating projection.
    pub max_iter: usize,
    /// Seeded restarts of the alternating projection engine.
    pub restarts: usize,
    /// Column count for alternating projection; defaults to `2r + |edges|`.
    pub columns: Option<usize>,
    pub seed: u64,
}

impl Default for FactorParams {
    fn default() -> Self {
        FactorParams {
            max_iter: 5000,
            restarts: 20,
            columns: None,
            seed: 0,
        }
    }
}

/// Exact factorization for DNN matrices with forest support graphs by leaf
/// elimination: each leaf contributes one vector and a Schur complement
/// update `a_jj ← a_jj − a_ij²/a_ii` on its neighbor.
///
/// Always certifies valid inputs, with residual at rounding level and at
/// most `r + |edges|` vectors. Ties break toward the lowest-index leaf, so
/// the output is deterministic.
pub fn factor_forest(
    s: &SymMatrix,
    g: &SupportGraph,
    tol: &ToleranceConfig,
) -> Result<FactorOutcome> {
    if g.vertex_count() != s.dim() {
        return Err(Error::Dimension(format!(
            "graph has {} vertices, matrix has dimension {}",
            g.vertex_count(),
            s.dim()
        )));
    }
    if !g.is_forest() {
        return Err(Error::NotAForest);
    }
    let r = s.dim();
    let max_diag = (0..r).fold(0.0f64, |acc, i| acc.max(s.entry(i, i).abs()));
    let schur_tol = tol.eps_psd * max_diag.max(1.0);

    let mut diag: Vec<f64> = (0..r).map(|i| s.entry(i, i)).collect();
    let mut neighbors: Vec<std::collections::BTreeSet<usize>> = (0..r)
        .map(|v| g.neighbors(v).iter().copied().collect())
        .collect();
    let mut active = vec![true; r];
    let mut vectors: Vec<DVector<f64>> = Vec::new();
    let mut iterations = 0usize;

    loop {
        let leaf = (0..r).find(|&v| active[v] && neighbors[v].len() == 1);
        let Some(i) = leaf else { break };
        iterations += 1;
        let j = *neighbors[i].iter().next().expect("leaf has one neighbor");
        let a = diag[i];
        let c = s.entry(i, j);
        if a > 0.0 {
            let root = a.sqrt();
            let mut x = DVector::zeros(r);
            x[i] = root;
            x[j] = c / root;
            vectors.push(x);
            let update = diag[j] - c * c / a;
            if update < -schur_tol {
                return Err(Error::NegativeSchurUpdate {
                    vertex: j,
                    value: update,
                });
            }
            diag[j] = update.max(0.0);
        } else {
            // PSD forces the whole row of a zero diagonal to vanish.
            if c.abs() > tol.eps_zero {
                return Err(Error::ZeroDiagonalNonzeroRow { index: i, entry: c });
            }
            if a < -schur_tol {
                return Err(Error::NegativeSchurUpdate { vertex: i, value: a });
            }
        }
        active[i] = false;
        neighbors[j].remove(&i);
        neighbors[i].clear();
    }

    for v in 0..r {
        if !active[v] {
            continue;
        }
        let a = diag[v];
        if a < -schur_tol {
            return Err(Error::NegativeSchurUpdate { vertex: v, value: a });
        }
        if a > 0.0 {
            let mut x = DVector::zeros(r);
            x[v] = a.sqrt();
            vectors.push(x);
        }
    }

    let mut cert = CpCertificate::new(r, vectors)?;
    let (passed, residual) = verify_certificate(s, &cert, tol)?;
    cert.residual = residual;
    let diagnostics = FactorDiagnostics {
        strategy: "forest".into(),
        iterations,
        infeasibility: residual,
        note: None,
    };
    if passed {
        Ok(FactorOutcome::certified(cert, diagnostics))
    } else {
        Ok(FactorOutcome::failed(diagnostics))
    }
}

/// Classical decomposition for diagonally dominant DNN matrices: one
/// vector `√S_ij (e_i + e_j)` per off-diagonal entry plus the diagonal
/// remainder `√(S_ii − Σ_j S_ij) e_i`.
pub fn factor_diag_dominant(s: &SymMatrix, tol: &ToleranceConfig) -> Result<FactorOutcome> {
    let r = s.dim();
    for i in 0..r {
        let row_sum: f64 = (0..r).filter(|&j| j != i).map(|j| s.entry(i, j)).sum();
        if s.entry(i, i) < row_sum - tol.eps_zero {
            return Err(Error::NotDiagonallyDominant {
                row: i,
                excess: row_sum - s.entry(i, i),
            });
        }
    }
    let mut vectors = Vec::new();
    let mut emitted = vec![0.0f64; r];
    for i in 0..r {
        for j in (i + 1)..r {
            let v = s.entry(i, j);
            if v > tol.eps_zero {
                let root = v.sqrt();
                let mut x = DVector::zeros(r);
                x[i] = root;
                x[j] = root;
                vectors.push(x);
                emitted[i] += v;
                emitted[j] += v;
            }
        }
    }
    for i in 0..r {
        let remainder = (s.entry(i, i) - emitted[i]).max(0.0);
        if remainder > 0.0 {
            let mut x = DVector::zeros(r);
            x[i] = remainder.sqrt();
            vectors.push(x);
        }
    }
    let mut cert = CpCertificate::new(r, vectors)?;
    let (passed, residual) = verify_certificate(s, &cert, tol)?;
    cert.residual = residual;
    let diagnostics = FactorDiagnostics {
        strategy: "diag-dominant".into(),
        iterations: 1,
        infeasibility: residual,
        note: None,
    };
    if passed {
        Ok(FactorOutcome::certified(cert, diagnostics))
    } else {
        Ok(FactorOutcome::failed(diagnostics))
    }
}

/// Sparse bipartite edge structure over stripped vertex sets.
struct EdgeSystem {
    /// (left index, right index, weight) with weight > eps_zero.
    edges: Vec<(usize, usize, f64)>,
    /// Edge indices incident to each left vertex.
    rows: Vec<Vec<usize>>,
    /// Edge indices incident to each right vertex.
    cols: Vec<Vec<usize>>,
    d0: Vec<f64>,
    d1: Vec<f64>,
}

impl EdgeSystem {
    fn new(d0: Vec<f64>, d1: Vec<f64>, b: &DMatrix<f64>, eps_zero: f64) -> Self {
        let mut edges = Vec::new();
        let mut rows = vec![Vec::new(); d0.len()];
        let mut cols = vec![Vec::new(); d1.len()];
        for i in 0..d0.len() {
            for j in 0..d1.len() {
                let w = b[(i, j)];
                if w > eps_zero {
                    let e = edges.len();
                    edges.push((i, j, w));
                    rows[i].push(e);
                    cols[j].push(e);
                }
            }
        }
        EdgeSystem {
            edges,
            rows,
            cols,
            d0,
            d1,
        }
    }

    /// Proportional allocation `u_e = D0_i · B_ij² / Σ_{e'∋i} B_ie'²`:
    /// rows are tight by construction, columns may overload.
    fn proportional(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.edges.len()];
        for (i, incident) in self.rows.iter().enumerate() {
            let total: f64 = incident
                .iter()
                .map(|&e| self.edges[e].2 * self.edges[e].2)
                .sum();
            if total <= 0.0 {
                continue;
            }
            for &e in incident {
                let w = self.edges[e].2;
                u[e] = self.d0[i] * w * w / total;
            }
        }
        u
    }

    /// Allocation from the top singular pair of the diagonally normalized
    /// edge matrix `K_ij = B_ij / √(D0_i D1_j)`, computed per connected
    /// component: `u_e = D0_i K_ij ψ_j / (σ φ_i)`. When the assembled
    /// matrix is PSD, `σ ≤ 1` and this allocation meets the row budgets
    /// with equality and the column budgets with factor `σ²`.
    fn perron(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.edges.len()];
        for (left, right) in self.components() {
            let li: std::collections::HashMap<usize, usize> =
                left.iter().enumerate().map(|(k, &v)| (v, k)).collect();
            let ri: std::collections::HashMap<usize, usize> =
                right.iter().enumerate().map(|(k, &v)| (v, k)).collect();
            let mut k_mat = DMatrix::zeros(left.len(), right.len());
            for &(i, j, w) in &self.edges {
                if let (Some(&a), Some(&b)) = (li.get(&i), ri.get(&j)) {
                    let scale = (self.d0[i].max(f64::MIN_POSITIVE)
                        * self.d1[j].max(f64::MIN_POSITIVE))
                    .sqrt();
                    k_mat[(a, b)] = w / scale;
                }
            }
            let svd = k_mat.clone().svd(true, true);
            let sigma = svd.singular_values[0].max(f64::MIN_POSITIVE);
            let u_mat = svd.u.expect("requested");
            let v_t = svd.v_t.expect("requested");
            let phi: Vec<f64> = (0..left.len()).map(|a| u_mat[(a, 0)].abs()).collect();
            let psi: Vec<f64> = (0..right.len()).map(|b| v_t[(0, b)].abs()).collect();
            for (e, &(i, j, _)) in self.edges.iter().enumerate() {
                if let (Some(&a), Some(&b)) = (li.get(&i), ri.get(&j)) {
                    let denom = (sigma * phi[a]).max(f64::MIN_POSITIVE);
                    u[e] = self.d0[i] * k_mat[(a, b)] * psi[b] / denom;
                }
            }
        }
        u
    }

    /// Connected components of the bipartite edge graph as
    /// (left vertices, right vertices); isolated vertices excluded.
    fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let p = self.d0.len();
        let q = self.d1.len();
        let mut seen = vec![false; p + q];
        let mut out = Vec::new();
        for start in 0..p {
            if seen[start] || self.rows[start].is_empty() {
                continue;
            }
            let mut left = Vec::new();
            let mut right = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                if v < p {
                    left.push(v);
                    for &e in &self.rows[v] {
                        let w = p + self.edges[e].1;
                        if !seen[w] {
                            seen[w] = true;
                            stack.push(w);
                        }
                    }
                } else {
                    right.push(v - p);
                    for &e in &self.cols[v - p] {
                        let w = self.edges[e].0;
                        if !seen[w] {
                            seen[w] = true;
                            stack.push(w);
                        }
                    }
                }
            }
            left.sort_unstable();
            right.sort_unstable();
            out.push((left, right));
        }
        out
    }

    fn column_loads(&self, u: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|incident| {
                incident
                    .iter()
                    .map(|&e| {
                        let w = self.edges[e].2;
                        w * w / u[e].max(f64::MIN_POSITIVE)
                    })
                    .sum()
            })
            .collect()
    }

    fn row_loads(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|incident| incident.iter().map(|&e| u[e]).sum())
            .collect()
    }

    /// Max relative budget violation over all rows and columns.
    fn infeasibility(&self, u: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (i, load) in self.row_loads(u).iter().enumerate() {
            worst = worst.max((load - self.d0[i]) / self.d0[i].max(1.0));
        }
        for (j, load) in self.column_loads(u).iter().enumerate() {
            worst = worst.max((load - self.d1[j]) / self.d1[j].max(1.0));
        }
        worst.max(0.0)
    }

    /// Monotone multiplicative rebalancing: overloaded columns scale their
    /// incident `u` up (which drops the column load exactly onto its
    /// budget), then overloaded rows scale back down. Returns the best
    /// infeasibility seen and the sweep count; `u` holds the best iterate.
    fn rebalance(&self, u: &mut Vec<f64>, max_sweeps: usize, target: f64) -> (f64, usize) {
        let mut best = u.clone();
        let mut best_infeas = self.infeasibility(u);
        let mut sweeps = 0;
        for sweep in 0..max_sweeps {
            sweeps = sweep + 1;
            if best_infeas <= target {
                break;
            }
            let col_loads = self.column_loads(u);
            for (j, incident) in self.cols.iter().enumerate() {
                if col_loads[j] > self.d1[j] && self.d1[j] > 0.0 {
                    let rho = col_loads[j] / self.d1[j];
                    for &e in incident {
                        u[e] *= rho;
                    }
                }
            }
            let row_loads = self.row_loads(u);
            for (i, incident) in self.rows.iter().enumerate() {
                if row_loads[i] > self.d0[i] && row_loads[i] > 0.0 {
                    let shrink = self.d0[i] / row_loads[i];
                    for &e in incident {
                        u[e] *= shrink;
                    }
                }
            }
            let infeas = self.infeasibility(u);
            if infeas < best_infeas {
                best_infeas = infeas;
                best.copy_from_slice(u);
            }
        }
        u.copy_from_slice(&best);
        (best_infeas, sweeps)
    }
}

/// Edge allocation for a bipartite block layout over already-validated
/// diagonals. Returns `(vectors, infeasibility, iterations)` in the local
/// `p + q` coordinate system.
fn allocate_bipartite(
    d0: &[f64],
    d1: &[f64],
    b: &DMatrix<f64>,
    tol: &ToleranceConfig,
    params: &FactorParams,
) -> Result<(Vec<DVector<f64>>, f64, usize)> {
    let p = d0.len();
    let q = d1.len();

    // A vanishing diagonal forces its whole row (or column) to vanish in
    // any PSD matrix.
    for i in 0..p {
        if d0[i] <= 0.0 {
            for j in 0..q {
                if b[(i, j)].abs() > tol.eps_zero {
                    return Err(Error::ZeroDiagonalNonzeroRow {
                        index: i,
                        entry: b[(i, j)],
                    });
                }
            }
        }
    }
    for j in 0..q {
        if d1[j] <= 0.0 {
            for i in 0..p {
                if b[(i, j)].abs() > tol.eps_zero {
                    return Err(Error::ZeroDiagonalNonzeroRow {
                        index: p + j,
                        entry: b[(i, j)],
                    });
                }
            }
        }
    }

    // Only edges between strictly positive diagonals survive stripping.
    let mut masked = b.clone();
    for i in 0..p {
        for j in 0..q {
            if d0[i] <= 0.0 || d1[j] <= 0.0 {
                masked[(i, j)] = 0.0;
            }
        }
    }
    let system = EdgeSystem::new(d0.to_vec(), d1.to_vec(), &masked, tol.eps_zero);

    let feas_target = 1e-14;
    let mut u = system.proportional();
    let (mut infeas, mut iterations) =
        system.rebalance(&mut u, params.max_iter.max(2) / 2, feas_target);
    if infeas > feas_target {
        let mut perron = system.perron();
        let (perron_infeas, extra) = system.rebalance(&mut perron, 50, feas_target);
        iterations += extra;
        if perron_infeas < infeas {
            u = perron;
            infeas = perron_infeas;
        }
    }

    let mut vectors = Vec::new();
    for (e, &(i, j, w)) in system.edges.iter().enumerate() {
        let alloc = u[e];
        if alloc <= 0.0 {
            continue;
        }
        let root = alloc.sqrt();
        let mut x = DVector::zeros(p + q);
        x[i] = root;
        x[p + j] = w / root;
        vectors.push(x);
    }
    let row_loads = system.row_loads(&u);
    for i in 0..p {
        let slack = (d0[i] - row_loads[i]).max(0.0);
        if slack > 0.0 {
            let mut x = DVector::zeros(p + q);
            x[i] = slack.sqrt();
            vectors.push(x);
        }
    }
    let col_loads = system.column_loads(&u);
    for j in 0..q {
        let slack = (d1[j] - col_loads[j]).max(0.0);
        if slack > 0.0 {
            let mut x = DVector::zeros(p + q);
            x[p + j] = slack.sqrt();
            vectors.push(x);
        }
    }
    Ok((vectors, infeas, iterations))
}

/// Factorization of a bipartite block form `[[diag D0, B],[Bᵀ, diag D1]]`.
///
/// One positive allocation `u_e` per edge turns the matrix into a sum of
/// edge vectors `√u_e e_i + (B_ij/√u_e) e_{n+j}` plus diagonal slack. The
/// allocations must satisfy `Σ_{e∋i} u_e ≤ D0_i` and
/// `Σ_{e∋j} B_ij²/u_e ≤ D1_j`; this convex feasibility system is solved by
/// proportional initialization plus multiplicative rebalancing, with a
/// singular-pair allocation as the second phase. The result is verified
/// before being reported.
pub fn factor_bipartite_blockform(
    bf: &BlockForm,
    tol: &ToleranceConfig,
    params: &FactorParams,
) -> Result<FactorOutcome> {
    let target = bf.assemble();
    let (vectors, infeas, iterations) = allocate_bipartite(bf.d0(), bf.d1(), bf.b(), tol, params)?;
    let mut cert = CpCertificate::new(target.dim(), vectors)?;
    let (passed, residual) = verify_certificate(&target, &cert, tol)?;
    cert.residual = residual;
    let diagnostics = FactorDiagnostics {
        strategy: "bipartite-blockform".into(),
        iterations,
        infeasibility: if passed { residual } else { infeas.max(residual) },
        note: None,
    };
    if passed {
        Ok(FactorOutcome::certified(cert, diagnostics))
    } else {
        Ok(FactorOutcome::failed(diagnostics))
    }
}

/// Bipartite factorization of a general matrix from a two-coloring of its
/// support graph: permute the color classes into a block layout, allocate
/// edges there, and map the certificate back through the inverse
/// permutation.
fn factor_bipartite_coloring(
    s: &SymMatrix,
    coloring: &TwoColoring,
    tol: &ToleranceConfig,
    params: &FactorParams,
) -> Result<FactorOutcome> {
    let r = s.dim();
    let left = coloring.left_vertices();
    let right = coloring.right_vertices();
    let p = left.len();
    let mut map = vec![0usize; r];
    for (pos, &v) in left.iter().chain(right.iter()).enumerate() {
        map[v] = pos;
    }
    let perm = Permutation::new(map)?;
    let d0: Vec<f64> = left.iter().map(|&v| s.entry(v, v)).collect();
    let d1: Vec<f64> = right.iter().map(|&v| s.entry(v, v)).collect();
    let mut b = DMatrix::zeros(p, right.len());
    for (i, &v) in left.iter().enumerate() {
        for (j, &w) in right.iter().enumerate() {
            b[(i, j)] = s.entry(v, w);
        }
    }
    let (vectors, infeas, iterations) = allocate_bipartite(&d0, &d1, &b, tol, params)?;
    let local = CpCertificate::new(r, vectors)?;
    let mut cert = map_certificate_perm(&local, &perm.inverse())?;
    let (passed, residual) = verify_certificate(s, &cert, tol)?;
    cert.residual = residual;
    let diagnostics = FactorDiagnostics {
        strategy: "bipartite".into(),
        iterations,
        infeasibility: if passed { residual } else { infeas.max(residual) },
        note: None,
    };
    if passed {
        Ok(FactorOutcome::certified(cert, diagnostics))
    } else {
        Ok(FactorOutcome::failed(diagnostics))
    }
}

/// Alternating projection between the spectral set `{X : XXᵀ = S}` and the
/// nonnegative orthant.
///
/// The spectral step re-projects through the eigendecomposition square
/// root composed with an orthogonal right-factor alignment (Procrustes) to
/// the current nonnegative iterate; the orthant step clips entries.
/// Restarts are seeded and the whole engine is deterministic for fixed
/// parameters; it returns `Certified` only when the verifier passes.
pub fn factor_alternating_projection(
    s: &SymMatrix,
    params: &FactorParams,
    tol: &ToleranceConfig,
) -> FactorOutcome {
    let r = s.dim();
    let norm = s.frobenius_norm();

    if norm <= tol.eps_residual {
        let mut cert = CpCertificate::new(r, Vec::new()).expect("r >= 1");
        cert.residual = norm / norm.max(1.0);
        return FactorOutcome::certified(
            cert,
            FactorDiagnostics {
                strategy: "alternating-projection".into(),
                iterations: 0,
                infeasibility: 0.0,
                note: Some("zero matrix".into()),
            },
        );
    }

    let Ok((values, vectors)) = s.eigen() else {
        return FactorOutcome::failed(FactorDiagnostics {
            strategy: "alternating-projection".into(),
            iterations: 0,
            infeasibility: f64::INFINITY,
            note: Some("eigendecomposition failed".into()),
        });
    };
    let lambda_max = values[values.len() - 1].max(0.0);
    let rank_floor = 1e-13 * lambda_max.max(1.0);
    let kept: Vec<usize> = (0..r).filter(|&k| values[k] > rank_floor).collect();
    let rank = kept.len();
    if rank == 0 {
        let mut cert = CpCertificate::new(r, Vec::new()).expect("r >= 1");
        let (_, residual) = verify_certificate(s, &cert, tol).expect("dimensions match");
        cert.residual = residual;
        return FactorOutcome::certified(
            cert,
            FactorDiagnostics {
                strategy: "alternating-projection".into(),
                iterations: 0,
                infeasibility: residual,
                note: Some("numerically zero spectrum".into()),
            },
        );
    }
    // root · rootᵀ = S up to clipped negative dust.
    let mut root = DMatrix::zeros(r, rank);
    for (col, &k) in kept.iter().enumerate() {
        let scale = values[k].sqrt();
        for row in 0..r {
            root[(row, col)] = vectors[(row, k)] * scale;
        }
    }

    let edge_count = SupportGraph::from_matrix(s, tol.eps_zero).edge_count();
    let columns = params.columns.unwrap_or(2 * r + edge_count).max(rank);

    let mut best_residual = f64::INFINITY;
    let mut total_iterations = 0usize;

    for restart in 0..params.restarts.max(1) {
        let mut y: DMatrix<f64> = if restart == 0 {
            // Structured start: spectral root columns, sign-flipped so the
            // dominant entry is positive, padded to full width.
            let mut y0 = DMatrix::zeros(r, columns);
            for col in 0..rank {
                let column = root.column(col);
                let dominant = column
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .map(|(idx, _)| idx)
                    .unwrap_or(0);
                let sign = if column[dominant] < 0.0 { -1.0 } else { 1.0 };
                for row in 0..r {
                    y0[(row, col)] = (sign * column[row]).max(0.0);
                }
            }
            y0
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(restart as u64);
            let gauss =
                DMatrix::from_fn(columns, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
            let q = gauss.qr().q();
            (&root * q.transpose()).map(|v| v.max(0.0))
        };

        let mut since_improvement = 0usize;
        let mut restart_best = f64::INFINITY;
        for _ in 0..params.max_iter {
            total_iterations += 1;
            // Procrustes alignment of the spectral root to the iterate.
            let m = y.transpose() * &root;
            let svd = m.svd(true, true);
            let q = svd.u.expect("requested") * svd.v_t.expect("requested");
            let x = &root * q.transpose();
            y = x.map(|v| v.max(0.0));

            let residual = (s.matrix() - &y * y.transpose()).norm() / norm.max(1.0);
            best_residual = best_residual.min(residual);
            if residual < restart_best * (1.0 - 1e-3) {
                restart_best = residual;
                since_improvement = 0;
            } else {
                since_improvement += 1;
            }
            if residual <= tol.eps_residual {
                let columns_kept: Vec<DVector<f64>> = (0..columns)
                    .map(|c| DVector::from(y.column(c).clone_owned()))
                    .filter(|x| x.norm() > 1e-14)
                    .collect();
                let mut cert =
                    CpCertificate::new(r, columns_kept).expect("iterate entries are finite");
                let (passed, verified_residual) =
                    verify_certificate(s, &cert, tol).expect("dimensions match");
                if passed {
                    cert.residual = verified_residual;
                    return FactorOutcome::certified(
                        cert,
                        FactorDiagnostics {
                            strategy: "alternating-projection".into(),
                            iterations: total_iterations,
                            infeasibility: verified_residual,
                            note: Some(format!("restart {restart}")),
                        },
                    );
                }
            }
            if since_improvement > 150 {
                break;
            }
        }
    }

    FactorOutcome::failed(FactorDiagnostics {
        strategy: "alternating-projection".into(),
        iterations: total_iterations,
        infeasibility: best_residual,
        note: Some("no restart reached the residual target".into()),
    })
}

/// Strategy dispatch: refuse non-DNN inputs, then try forest, diagonal
/// dominance, bipartite block layout, and alternating projection in that
/// order. The first verified certificate wins and the winning strategy is
/// recorded in the diagnostics.
pub fn factor_auto(
    s: &SymMatrix,
    tol: &ToleranceConfig,
    params: &FactorParams,
) -> Result<FactorOutcome> {
    let dnn = s.is_dnn(tol)?;
    if !dnn.verdict {
        return Ok(FactorOutcome::failed(FactorDiagnostics {
            strategy: "none".into(),
            iterations: 0,
            infeasibility: f64::INFINITY,
            note: Some("not_dnn".into()),
        }));
    }
    let graph = SupportGraph::from_matrix(s, tol.eps_zero);
    let mut notes: Vec<String> = Vec::new();

    if graph.is_forest() {
        match factor_forest(s, &graph, tol) {
            Ok(outcome) if outcome.is_certified() => return Ok(outcome),
            Ok(outcome) => notes.push(format!(
                "forest failed (residual {:.3e})",
                outcome.diagnostics.infeasibility
            )),
            Err(err) => notes.push(format!("forest error: {err}")),
        }
    }

    match factor_diag_dominant(s, tol) {
        Ok(outcome) if outcome.is_certified() => return Ok(outcome),
        Ok(outcome) => notes.push(format!(
            "diag-dominant failed (residual {:.3e})",
            outcome.diagnostics.infeasibility
        )),
        Err(Error::NotDiagonallyDominant { .. }) => {}
        Err(err) => notes.push(format!("diag-dominant error: {err}")),
    }

    if let ColoringOutcome::Colored(coloring) = graph.two_coloring() {
        match factor_bipartite_coloring(s, &coloring, tol, params) {
            Ok(outcome) if outcome.is_certified() => return Ok(outcome),
            Ok(outcome) => notes.push(format!(
                "bipartite failed (infeasibility {:.3e})",
                outcome.diagnostics.infeasibility
            )),
            Err(err) => notes.push(format!("bipartite error: {err}")),
        }
    }

    let mut outcome = factor_alternating_projection(s, params, tol);
    if !notes.is_empty() {
        let prior = notes.join("; ");
        outcome.diagnostics.note = Some(match outcome.diagnostics.note.take() {
            Some(existing) => format!("{prior}; {existing}"),
            None => prior,
        });
    }
    Ok(outcome)
}
