//! Choi matrices and their block structure.
//!
//! A linear map from n×n to m×m matrices is represented by its Choi
//! matrix: the nm×nm block matrix whose (i,j) block is the image of the
//! matrix unit `E_ij`. Basis order is `(i,a)` row-major with the output
//! index `a` fastest, so block (i,j) occupies rows `i·m..(i+1)·m` and
//! columns `j·m..(j+1)·m`. This ordering is part of the file-format
//! contract and is pinned in the README.
//!
//! For trace-preserving maps the block traces satisfy `tr(J_ij) = δ_ij`.
//! When additionally the Choi matrix is entrywise nonnegative and m = 2,
//! the off-diagonal blocks are forced to have zero diagonals, which is
//! what [`ChoiMatrix::to_block_form`] verifies and exploits.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::matcore::{Permutation, SymMatrix, ToleranceConfig};

/// Result of checking the trace-preservation conditions on Choi blocks.
#[derive(Debug, Clone, Copy)]
pub struct TraceCheck {
    /// True iff every block trace deviation is within `eps_zero`.
    pub passed: bool,
    /// Block with the largest deviation.
    pub worst_block: (usize, usize),
    /// `max |tr(J_ij) - δ_ij|`.
    pub worst_deviation: f64,
}

/// Real symmetric Choi matrix tagged with input/output dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    n: usize,
    m: usize,
    mat: SymMatrix,
}

impl ChoiMatrix {
    /// Wraps an existing symmetric matrix of size `n·m`.
    pub fn new(n: usize, m: usize, mat: SymMatrix) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Dimension("dimensions must be at least 1".into()));
        }
        if mat.dim() != n * m {
            return Err(Error::Dimension(format!(
                "matrix has dimension {}, expected n·m = {}",
                mat.dim(),
                n * m
            )));
        }
        Ok(ChoiMatrix { n, m, mat })
    }

    /// Builds the Choi matrix from row-major entries of size `(n·m)²`.
    pub fn from_row_major(n: usize, m: usize, entries: &[f64], tol: &ToleranceConfig) -> Result<Self> {
        let mat = SymMatrix::from_entries(n * m, entries, tol)?;
        Self::new(n, m, mat)
    }

    /// Assembles the Choi matrix from its n×n array of m×m blocks.
    ///
    /// Requires `blocks[j][i] == blocks[i][j]ᵀ` within `eps_sym`.
    pub fn from_blocks(
        n: usize,
        m: usize,
        blocks: &[Vec<DMatrix<f64>>],
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if blocks.len() != n || blocks.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension(format!(
                "expected an {n}x{n} array of blocks"
            )));
        }
        for row in blocks {
            for block in row {
                if block.nrows() != m || block.ncols() != m {
                    return Err(Error::Dimension(format!(
                        "expected {m}x{m} blocks, got {}x{}",
                        block.nrows(),
                        block.ncols()
                    )));
                }
            }
        }
        for i in 0..n {
            for j in i..n {
                let deviation = (&blocks[j][i] - blocks[i][j].transpose()).abs().max();
                if deviation > tol.eps_sym {
                    return Err(Error::BlockSymmetry { i, j, deviation });
                }
            }
        }
        let dim = n * m;
        let mut full = DMatrix::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                for a in 0..m {
                    for b in 0..m {
                        full[(i * m + a, j * m + b)] = blocks[i][j][(a, b)];
                    }
                }
            }
        }
        let mat = SymMatrix::from_dmatrix(full, tol)?;
        Self::new(n, m, mat)
    }

    /// Assembles the Choi matrix of `X ↦ Σ_k K X K†` from Kraus operators.
    ///
    /// Each K must be m×n. Trace preservation is not assumed; it is checked
    /// separately by [`ChoiMatrix::check_trace_conditions`]. If any block
    /// entry has imaginary part above `eps_sym` the map has no real Choi
    /// matrix, hence cannot be doubly nonnegative, and the assembly fails
    /// rather than silently projecting.
    pub fn from_kraus(
        n: usize,
        m: usize,
        kraus: &[DMatrix<Complex<f64>>],
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        for k in kraus {
            if k.nrows() != m || k.ncols() != n {
                return Err(Error::Dimension(format!(
                    "kraus operator is {}x{}, expected {m}x{n}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let dim = n * m;
        let mut full = DMatrix::<Complex<f64>>::zeros(dim, dim);
        for k in kraus {
            // Block (i,j) of the Choi matrix is Σ_k (col_i K)(col_j K)†.
            for i in 0..n {
                for j in 0..n {
                    for a in 0..m {
                        for b in 0..m {
                            full[(i * m + a, j * m + b)] += k[(a, i)] * k[(b, j)].conj();
                        }
                    }
                }
            }
        }
        let max_imag = full.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
        if max_imag > tol.eps_sym {
            return Err(Error::NonRealChoi { max_imag });
        }
        let real = full.map(|z| z.re);
        let mat = SymMatrix::from_dmatrix(real, tol)?;
        Self::new(n, m, mat)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Total dimension `n·m`.
    pub fn dim(&self) -> usize {
        self.n * self.m
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.mat
    }

    /// The m×m block `J_ij`.
    pub fn block(&self, i: usize, j: usize) -> Result<DMatrix<f64>> {
        if i >= self.n || j >= self.n {
            return Err(Error::Index { i, j, n: self.n });
        }
        let m = self.m;
        let mut out = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                out[(a, b)] = self.mat.entry(i * m + a, j * m + b);
            }
        }
        Ok(out)
    }

    /// Checks `|tr(J_ii) - 1| ≤ eps_zero` and `|tr(J_ij)| ≤ eps_zero` for
    /// `i ≠ j`, reporting the worst deviation.
    pub fn check_trace_conditions(&self, tol: &ToleranceConfig) -> TraceCheck {
        let mut worst_block = (0, 0);
        let mut worst_deviation = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let mut trace = 0.0;
                for a in 0..self.m {
                    trace += self.mat.entry(i * self.m + a, j * self.m + a);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                let deviation = (trace - target).abs();
                if deviation > worst_deviation {
                    worst_deviation = deviation;
                    worst_block = (i, j);
                }
            }
        }
        TraceCheck {
            passed: worst_deviation <= tol.eps_zero,
            worst_block,
            worst_deviation,
        }
    }

    /// Verifies the forced zeros and extracts the block form of a qubit-
    /// output Choi matrix.
    ///
    /// For a DNN trace-preserving Choi matrix with m = 2, nonnegativity and
    /// `a_ij + d_ij = 0` force the off-diagonal blocks to have zero
    /// diagonals. This is re-derived from the data rather than assumed, so
    /// corrupted inputs fail loudly instead of producing bogus certificates.
    pub fn to_block_form(&self, tol: &ToleranceConfig) -> Result<BlockForm> {
        if self.m != 2 {
            return Err(Error::NotQubitOutput { m: self.m });
        }
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let a = self.mat.entry(2 * i, 2 * j);
                if a.abs() > tol.eps_zero {
                    return Err(Error::ForcedZero {
                        kind: "a",
                        i,
                        j,
                        value: a.abs(),
                    });
                }
                let d = self.mat.entry(2 * i + 1, 2 * j + 1);
                if d.abs() > tol.eps_zero {
                    return Err(Error::ForcedZero {
                        kind: "d",
                        i,
                        j,
                        value: d.abs(),
                    });
                }
            }
        }
        for i in 0..n {
            let sum = self.mat.entry(2 * i, 2 * i) + self.mat.entry(2 * i + 1, 2 * i + 1);
            if (sum - 1.0).abs() > tol.eps_zero {
                return Err(Error::ForcedZero {
                    kind: "trace",
                    i,
                    j: i,
                    value: (sum - 1.0).abs(),
                });
            }
        }
        let perm = interleave_to_block_perm(n);
        let a = self
            .mat
            .permute_congruence(&perm)
            .expect("permutation length matches 2n");
        let d0: Vec<f64> = (0..n).map(|i| a.entry(i, i)).collect();
        let d1: Vec<f64> = (0..n).map(|i| a.entry(n + i, n + i)).collect();
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = a.entry(i, n + j);
            }
        }
        BlockForm::new(n, d0, d1, b)
    }

    /// Largest forced-zero deviation `max_{i≠j} max(|a_ij|, |d_ij|)`,
    /// measured before any thresholding. Zero for exactly block-structured
    /// inputs.
    pub fn max_forced_zero_deviation(&self) -> Result<f64> {
        if self.m != 2 {
            return Err(Error::NotQubitOutput { m: self.m });
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                worst = worst.max(self.mat.entry(2 * i, 2 * j).abs());
                worst = worst.max(self.mat.entry(2 * i + 1, 2 * j + 1).abs());
            }
        }
        Ok(worst)
    }
}

/// Permutation that reorders the interleaved basis `(1,1),(1,2),…,(n,2)`
/// into the block basis `(1,1),…,(n,1),(1,2),…,(n,2)`: position `2i+a`
/// maps to `i` when a = 0 and to `n+i` when a = 1.
pub fn interleave_to_block_perm(n: usize) -> Permutation {
    let mut map = vec![0usize; 2 * n];
    for i in 0..n {
        map[2 * i] = i;
        map[2 * i + 1] = n + i;
    }
    Permutation::new(map).expect("constructed map is a bijection")
}

/// The `[[diag D0, B],[Bᵀ, diag D1]]` form of a qubit-output Choi matrix
/// after the block reordering.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockForm {
    n: usize,
    d0: Vec<f64>,
    d1: Vec<f64>,
    b: DMatrix<f64>,
}

impl BlockForm {
    pub fn new(n: usize, d0: Vec<f64>, d1: Vec<f64>, b: DMatrix<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("block form size must be at least 1".into()));
        }
        if d0.len() != n || d1.len() != n || b.nrows() != n || b.ncols() != n {
            return Err(Error::Dimension(format!(
                "block form parts must have size {n} (got d0: {}, d1: {}, b: {}x{})",
                d0.len(),
                d1.len(),
                b.nrows(),
                b.ncols()
            )));
        }
        if d0.iter().chain(d1.iter()).chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(BlockForm { n, d0, d1, b })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d0(&self) -> &[f64] {
        &self.d0
    }

    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Assembles the 2n×2n matrix `[[diag D0, B],[Bᵀ, diag D1]]`.
    pub fn assemble(&self) -> SymMatrix {
        let n = self.n;
        let mut full = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            full[(i, i)] = self.d0[i];
            full[(n + i, n + i)] = self.d1[i];
        }
        for i in 0..n {
            for j in 0..n {
                full[(i, n + j)] = self.b[(i, j)];
                full[(n + j, i)] = self.b[(i, j)];
            }
        }
        SymMatrix::from_symmetric_unchecked(full)
    }

    /// Smallest negative entry margin: `min(0, min entry)`.
    pub fn min_entry(&self) -> f64 {
        self.d0
            .iter()
            .chain(self.d1.iter())
            .chain(self.b.iter())
            .fold(f64::INFINITY, |acc, &v| acc.min(v))
    }
}

/// Rebuilds the interleaved Choi matrix from a block form; inverse of
/// [`ChoiMatrix::to_block_form`] up to exact entry moves.
pub fn from_block_form(bf: &BlockForm) -> ChoiMatrix {
    let n = bf.n();
    let a = bf.assemble();
    let perm = interleave_to_block_perm(n).inverse();
    let mat = a
        .permute_congruence(&perm)
        .expect("permutation length matches 2n");
    ChoiMatrix::new(n, 2, mat).expect("dimensions are consistent by construction")
}
