//! Dense real symmetric matrices and tolerance-aware cone tests.
//!
//! [`SymMatrix`] is the ambient object for everything in this crate: it is
//! symmetrized exactly at construction and immutable afterwards. The cone
//! tests ([`SymMatrix::is_psd`], [`SymMatrix::is_dnn`]) use the relative
//! tolerances in [`ToleranceConfig`], because floating-point instances
//! sitting on the PSD boundary are the common case in this domain, not the
//! exception.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerances for all cone tests and certificate checks.
///
/// All fields must be finite and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Maximum allowed asymmetry of raw input entries.
    pub eps_sym: f64,
    /// Relative eigenvalue floor for the PSD test.
    pub eps_psd: f64,
    /// Entry floor for nonnegativity tests.
    pub eps_nonneg: f64,
    /// Support/edge threshold: entries at or below this are treated as zero.
    pub eps_zero: f64,
    /// Relative Frobenius residual bound for certificate verification.
    pub eps_residual: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            eps_sym: 1e-10,
            eps_psd: 1e-9,
            eps_nonneg: 1e-10,
            eps_zero: 1e-10,
            eps_residual: 1e-8,
        }
    }
}

impl ToleranceConfig {
    /// Checks that every tolerance is finite and nonnegative.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.eps_sym,
            self.eps_psd,
            self.eps_nonneg,
            self.eps_zero,
            self.eps_residual,
        ];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Parse(
                "tolerances must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// A permutation of `0..len`, applied to matrix indices and certificate
/// coordinates. `map(i)` is the image of index `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    /// Validates that `map` is a bijection on `0..map.len()`.
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let len = map.len();
        let mut seen = vec![false; len];
        for &image in &map {
            if image >= len || seen[image] {
                return Err(Error::InvalidPermutation { expected_len: len });
            }
            seen[image] = true;
        }
        Ok(Permutation { map })
    }

    pub fn identity(len: usize) -> Self {
        Permutation {
            map: (0..len).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Image of index `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &image) in self.map.iter().enumerate() {
            inv[image] = i;
        }
        Permutation { map: inv }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }
}

/// Outcome of the PSD test.
#[derive(Debug, Clone)]
pub struct PsdReport {
    pub passed: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Unit eigenvector `v` with `vᵀSv < 0`, present iff the test failed.
    pub witness: Option<Vec<f64>>,
}

/// Outcome of the DNN (doubly nonnegative) test.
#[derive(Debug, Clone)]
pub struct DnnReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub is_nonneg: bool,
    /// Location and value of the minimum entry.
    pub worst_entry: (usize, usize, f64),
    /// `is_psd && is_nonneg`.
    pub verdict: bool,
    /// PSD witness when `is_psd` is false.
    pub psd_witness: Option<Vec<f64>>,
}

/// Dense real symmetric matrix. Exactly symmetric after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    mat: DMatrix<f64>,
    /// Max asymmetry of the raw input, recorded by the constructor.
    asymmetry: f64,
}

impl SymMatrix {
    /// Builds a symmetric matrix from row-major entries.
    ///
    /// Entries must be finite and symmetric within `eps_sym`; sub-tolerance
    /// asymmetry is averaged away rather than rejected, since matrices
    /// assembled from floating-point products are near-symmetric, not
    /// exactly symmetric.
    pub fn from_entries(r: usize, entries: &[f64], tol: &ToleranceConfig) -> Result<Self> {
        if r == 0 {
            return Err(Error::Dimension("dimension must be at least 1".into()));
        }
        if entries.len() != r * r {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {r}x{r} matrix, got {}",
                r * r,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mat = DMatrix::from_row_slice(r, r, entries);
        Self::from_dmatrix(mat, tol)
    }

    /// Symmetrizes a square `DMatrix` under the same contract as
    /// [`SymMatrix::from_entries`].
    pub fn from_dmatrix(mat: DMatrix<f64>, tol: &ToleranceConfig) -> Result<Self> {
        let r = mat.nrows();
        if r == 0 || mat.ncols() != r {
            return Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut asymmetry = 0.0f64;
        for i in 0..r {
            for j in (i + 1)..r {
                asymmetry = asymmetry.max((mat[(i, j)] - mat[(j, i)]).abs());
            }
        }
        if asymmetry > tol.eps_sym {
            return Err(Error::Asymmetry {
                max_deviation: asymmetry,
                eps_sym: tol.eps_sym,
            });
        }
        let mut sym = mat;
        for i in 0..r {
            for j in (i + 1)..r {
                let avg = 0.5 * (sym[(i, j)] + sym[(j, i)]);
                sym[(i, j)] = avg;
                sym[(j, i)] = avg;
            }
        }
        Ok(SymMatrix {
            mat: sym,
            asymmetry,
        })
    }

    /// Wraps a matrix that is already exactly symmetric by construction.
    pub(crate) fn from_symmetric_unchecked(mat: DMatrix<f64>) -> Self {
        debug_assert!(mat.nrows() == mat.ncols());
        debug_assert!((0..mat.nrows()).all(|i| (0..mat.ncols()).all(|j| mat[(i, j)] == mat[(j, i)])));
        SymMatrix {
            mat,
            asymmetry: 0.0,
        }
    }

    pub fn zeros(r: usize) -> Self {
        SymMatrix {
            mat: DMatrix::zeros(r, r),
            asymmetry: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Max asymmetry of the raw input this matrix was built from.
    pub fn recorded_asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let r = self.dim();
        let mut out = Vec::with_capacity(r * r);
        for i in 0..r {
            for j in 0..r {
                out.push(self.mat[(i, j)]);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Full symmetric eigendecomposition, smallest eigenvalue first.
    ///
    /// Fails loudly rather than returning a silently wrong spectrum.
    pub fn eigen(&self) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let r = self.dim();
        let max_iter = 60 * r + 240;
        let eig = nalgebra::SymmetricEigen::try_new(self.mat.clone(), f64::EPSILON, max_iter)
            .ok_or(Error::Convergence { dim: r })?;
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DMatrix::zeros(r, r);
        for (col, &k) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(k));
        }
        Ok((values, vectors))
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (values, _) = self.eigen()?;
        Ok(values[0])
    }

    /// PSD test with a relative floor: passes iff
    /// `λ_min ≥ -eps_psd · max(1, |λ_max|)`, so the zero matrix and tiny
    /// matrices are not rejected by absolute floors.
    pub fn is_psd(&self, tol: &ToleranceConfig) -> Result<PsdReport> {
        let (values, vectors) = self.eigen()?;
        let min_eigenvalue = values[0];
        let max_eigenvalue = values[values.len() - 1];
        let floor = -tol.eps_psd * max_eigenvalue.abs().max(1.0);
        let passed = min_eigenvalue >= floor;
        let witness = if passed {
            None
        } else {
            Some(vectors.column(0).iter().copied().collect())
        };
        Ok(PsdReport {
            passed,
            min_eigenvalue,
            max_eigenvalue,
            witness,
        })
    }

    /// Minimum entry and its location.
    pub fn min_entry(&self) -> (usize, usize, f64) {
        let r = self.dim();
        let mut worst = (0, 0, self.mat[(0, 0)]);
        for i in 0..r {
            for j in 0..r {
                let v = self.mat[(i, j)];
                if v < worst.2 {
                    worst = (i, j, v);
                }
            }
        }
        worst
    }

    /// Doubly nonnegative test: PSD within `eps_psd` and entrywise
    /// `≥ -eps_nonneg`.
    pub fn is_dnn(&self, tol: &ToleranceConfig) -> Result<DnnReport> {
        let psd = self.is_psd(tol)?;
        let worst_entry = self.min_entry();
        let is_nonneg = worst_entry.2 >= -tol.eps_nonneg;
        Ok(DnnReport {
            is_psd: psd.passed,
            min_eigenvalue: psd.min_eigenvalue,
            is_nonneg,
            worst_entry,
            verdict: psd.passed && is_nonneg,
            psd_witness: psd.witness,
        })
    }

    /// Congruence by a permutation matrix: `result[p(i)][p(j)] = S[i][j]`.
    /// Eigenvalues are preserved.
    pub fn permute_congruence(&self, perm: &Permutation) -> Result<SymMatrix> {
        let r = self.dim();
        if perm.len() != r {
            return Err(Error::InvalidPermutation { expected_len: r });
        }
        let mut out = DMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                out[(perm.apply(i), perm.apply(j))] = self.mat[(i, j)];
            }
        }
        Ok(SymMatrix {
            mat: out,
            asymmetry: 0.0,
        })
    }

    /// Congruence by a positive diagonal: `result[i][j] = d_i S[i][j] d_j`.
    pub fn diag_congruence(&self, d: &[f64]) -> Result<SymMatrix> {
        let r = self.dim();
        if d.len() != r {
            return Err(Error::Dimension(format!(
                "diagonal scale has length {}, expected {r}",
                d.len()
            )));
        }
        for (index, &value) in d.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveScale { index, value });
            }
        }
        let mut out = self.mat.clone();
        for i in 0..r {
            for j in 0..r {
                out[(i, j)] *= d[i] * d[j];
            }
        }
        Ok(SymMatrix {
            mat: out,
            asymmetry: 0.0,
        })
    }
}

/// Relative Frobenius distance `‖a − b‖_F / max(1, ‖a‖_F)`.
pub fn relative_distance(a: &SymMatrix, b: &SymMatrix) -> f64 {
    (a.matrix() - b.matrix()).norm() / a.frobenius_norm().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn from_entries_keeps_symmetric_input() {
        let s = SymMatrix::from_entries(2, &[1.0, 0.5, 0.5, 1.0], &tol()).unwrap();
        assert_eq!(s.entry(0, 1), 0.5);
        assert_eq!(s.recorded_asymmetry(), 0.0);
    }

    #[test]
    fn from_entries_averages_sub_tolerance_asymmetry() {
        let s = SymMatrix::from_entries(2, &[1.0, 0.5 + 1e-12, 0.5, 1.0], &tol()).unwrap();
        assert!((s.entry(0, 1) - (0.5 + 5e-13)).abs() < 1e-15);
        assert_eq!(s.entry(0, 1), s.entry(1, 0));
        assert!((s.recorded_asymmetry() - 1e-12).abs() < 1e-16);
    }

    #[test]
    fn from_entries_rejects_gross_asymmetry() {
        let err = SymMatrix::from_entries(2, &[1.0, 2.0, 0.0, 1.0], &tol()).unwrap_err();
        assert!(matches!(err, Error::Asymmetry { .. }));
    }

    #[test]
    fn from_entries_rejects_non_finite() {
        let err = SymMatrix::from_entries(2, &[1.0, f64::NAN, f64::NAN, 1.0], &tol()).unwrap_err();
        assert!(matches!(err, Error::NonFinite));
    }

    #[test]
    fn min_eigenvalue_examples() {
        let s = SymMatrix::from_entries(2, &[2.0, 1.0, 1.0, 2.0], &tol()).unwrap();
        assert!((s.min_eigenvalue().unwrap() - 1.0).abs() < 1e-12);

        let s = SymMatrix::from_entries(2, &[1.0, 2.0, 2.0, 1.0], &tol()).unwrap();
        assert!((s.min_eigenvalue().unwrap() + 1.0).abs() < 1e-12);

        let eye = SymMatrix::from_dmatrix(DMatrix::identity(5, 5), &tol()).unwrap();
        assert!((eye.min_eigenvalue().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn is_psd_examples() {
        let s = SymMatrix::from_entries(2, &[2.0, 1.0, 1.0, 2.0], &tol()).unwrap();
        let r = s.is_psd(&tol()).unwrap();
        assert!(r.passed && r.witness.is_none());

        let s = SymMatrix::from_entries(2, &[1.0, 2.0, 2.0, 1.0], &tol()).unwrap();
        let r = s.is_psd(&tol()).unwrap();
        assert!(!r.passed);
        let w = DVector::from_vec(r.witness.unwrap());
        assert!((w.norm() - 1.0).abs() < 1e-12);
        let quad = (w.transpose() * s.matrix() * &w)[(0, 0)];
        assert!(quad < 0.0);
        assert!((quad + 1.0).abs() < 1e-12);

        let zero = SymMatrix::zeros(3);
        assert!(zero.is_psd(&tol()).unwrap().passed);
    }

    #[test]
    fn is_dnn_examples() {
        let s = SymMatrix::from_entries(2, &[1.0, 0.5, 0.5, 1.0], &tol()).unwrap();
        assert!(s.is_dnn(&tol()).unwrap().verdict);

        let s = SymMatrix::from_entries(2, &[1.0, -0.1, -0.1, 1.0], &tol()).unwrap();
        let r = s.is_dnn(&tol()).unwrap();
        assert!(r.is_psd && !r.is_nonneg && !r.verdict);
        assert_eq!((r.worst_entry.0, r.worst_entry.1), (0, 1));
        assert_eq!(r.worst_entry.2, -0.1);

        let s = SymMatrix::from_entries(2, &[1.0, 2.0, 2.0, 1.0], &tol()).unwrap();
        let r = s.is_dnn(&tol()).unwrap();
        assert!(!r.is_psd && r.is_nonneg && !r.verdict);
    }

    #[test]
    fn permute_congruence_examples() {
        let s = SymMatrix::from_entries(2, &[1.0, 0.0, 0.0, 2.0], &tol()).unwrap();
        let id = Permutation::identity(2);
        assert_eq!(s.permute_congruence(&id).unwrap(), s);

        let swap = Permutation::new(vec![1, 0]).unwrap();
        let p = s.permute_congruence(&swap).unwrap();
        assert_eq!(p.entry(0, 0), 2.0);
        assert_eq!(p.entry(1, 1), 1.0);
    }

    #[test]
    fn interleave_perm_fixes_identity_choi() {
        // The Choi matrix of the identity qubit channel is invariant under
        // the interleaved-to-block reordering: applying the definition
        // entrywise, every entry lands back on an equal entry.
        let j = SymMatrix::from_entries(
            4,
            &[
                1.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 1.0,
            ],
            &tol(),
        )
        .unwrap();
        let perm = Permutation::new(vec![0, 2, 1, 3]).unwrap();
        let a = j.permute_congruence(&perm).unwrap();
        assert_eq!(a, j);
    }

    #[test]
    fn invalid_permutation_rejected() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
    }

    #[test]
    fn diag_congruence_examples() {
        let s = SymMatrix::from_entries(2, &[1.0, 1.0, 1.0, 1.0], &tol()).unwrap();
        let ones = s.diag_congruence(&[1.0, 1.0]).unwrap();
        assert_eq!(ones, s);

        let scaled = s.diag_congruence(&[2.0, 1.0]).unwrap();
        assert_eq!(scaled.to_row_major(), vec![4.0, 2.0, 2.0, 1.0]);

        assert!(matches!(
            s.diag_congruence(&[0.0, 1.0]),
            Err(Error::NonPositiveScale { .. })
        ));
    }

    #[test]
    fn diag_congruence_normalizes_unit_diagonal() {
        let s = SymMatrix::from_entries(2, &[4.0, 1.0, 1.0, 9.0], &tol()).unwrap();
        let d: Vec<f64> = (0..2).map(|i| 1.0 / s.entry(i, i).sqrt()).collect();
        let unit = s.diag_congruence(&d).unwrap();
        assert!((unit.entry(0, 0) - 1.0).abs() < 1e-15);
        assert!((unit.entry(1, 1) - 1.0).abs() < 1e-15);
    }

    fn sym_strategy(max_dim: usize) -> impl Strategy<Value = SymMatrix> {
        (1..=max_dim)
            .prop_flat_map(|r| {
                proptest::collection::vec(-3.0f64..3.0, r * r).prop_map(move |v| (r, v))
            })
            .prop_map(|(r, v)| {
                let m = DMatrix::from_row_slice(r, r, &v);
                let sym = 0.5 * (&m + m.transpose());
                SymMatrix::from_dmatrix(sym, &ToleranceConfig::default()).unwrap()
            })
    }

    /// Deterministic Fisher-Yates driven by a seed parameter.
    fn seeded_permutation(len: usize, seed: u64) -> Permutation {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut map: Vec<usize> = (0..len).collect();
        for i in (1..len).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            map.swap(i, j);
        }
        Permutation::new(map).unwrap()
    }

    proptest! {
        #[test]
        fn permutation_preserves_eigenvalues(s in sym_strategy(6), seed in 0u64..1_000_000) {
            let r = s.dim();
            let perm = seeded_permutation(r, seed);
            let p = s.permute_congruence(&perm).unwrap();
            let (ev_a, _) = s.eigen().unwrap();
            let (ev_b, _) = p.eigen().unwrap();
            let scale = ev_a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in ev_a.iter().zip(ev_b.iter()) {
                prop_assert!((a - b).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn diag_congruence_round_trips(s in sym_strategy(6), seed in 1u64..1000) {
            let r = s.dim();
            let d: Vec<f64> = (0..r)
                .map(|i| 0.25 + ((seed as f64 * 0.37 + i as f64 * 0.61) % 1.0) * 2.0)
                .collect();
            let inv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
            let back = s.diag_congruence(&d).unwrap().diag_congruence(&inv).unwrap();
            let err = (back.matrix() - s.matrix()).norm();
            prop_assert!(err <= 1e-12 * s.frobenius_norm().max(1.0));
        }

        #[test]
        fn dnn_monotone_in_entry_threshold(s in sym_strategy(5)) {
            // Tightening eps_nonneg to 0 never flips a false verdict to true.
            let loose = ToleranceConfig::default();
            let tight = ToleranceConfig { eps_nonneg: 0.0, ..loose };
            let loose_verdict = s.is_dnn(&loose).unwrap().verdict;
            let tight_verdict = s.is_dnn(&tight).unwrap().verdict;
            prop_assert!(!tight_verdict || loose_verdict);
        }
    }
}
