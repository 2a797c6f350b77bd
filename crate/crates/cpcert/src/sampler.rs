//! Seeded random instance generators.
//!
//! Every generator is a pure function of its parameters: identical
//! `(params, generator, arguments)` reproduce identical output bit for
//! bit, on any platform. Batch generation derives an independent ChaCha
//! stream per instance index, so parallel draws are schedule-independent.
//!
//! The generators cover the hypothesis classes the crate certifies or
//! refutes: bipartite block-form channels (interior and PSD-boundary),
//! explicit CP Gram sums, general DNN matrices, forest-supported DNN
//! matrices, and random isometry channels as negative controls.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::choi::BlockForm;
use crate::cpfact::CpCertificate;
use crate::error::{Error, Result};
use crate::matcore::{SymMatrix, ToleranceConfig};

/// Parameters shared by all generators.
#[derive(Debug, Clone, Copy)]
pub struct SampleParams {
    pub seed: u64,
    /// Probability that an off-diagonal slot receives a nonzero entry.
    pub density: f64,
    /// Probability of rescaling an instance onto the PSD boundary.
    pub boundary_bias: f64,
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams {
            seed: 0,
            density: 0.5,
            boundary_bias: 0.0,
        }
    }
}

impl SampleParams {
    pub fn with_seed(self, seed: u64) -> Self {
        SampleParams { seed, ..self }
    }

    /// Independent ChaCha stream for one generator invocation. The
    /// `label` separates generators sharing a seed.
    fn rng(&self, label: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(label);
        rng
    }
}

const LABEL_BLOCKFORM: u64 = 1;
const LABEL_CP: u64 = 2;
const LABEL_DNN: u64 = 3;
const LABEL_KRAUS: u64 = 4;
const LABEL_FOREST: u64 = 5;

/// Draws a trace-normalized bipartite block form: `D0` uniform in [0,1],
/// `D1 = 1 − D0`, and `B ≥ 0` with the given density, rescaled by
/// `t ∈ (0,1]` so the assembled matrix is PSD. The min eigenvalue is a
/// nonincreasing function of `t`, so bisection finds the boundary scale;
/// with probability `boundary_bias` the draw is pushed onto the boundary
/// (min eigenvalue within `eps_psd` of zero), otherwise it backs off into
/// the interior.
pub fn sample_blockform_channel(n: usize, p: &SampleParams) -> BlockForm {
    let tol = ToleranceConfig::default();
    let mut rng = p.rng(LABEL_BLOCKFORM);
    let d0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let d1: Vec<f64> = d0.iter().map(|v| 1.0 - v).collect();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if rng.gen::<f64>() < p.density {
                b[(i, j)] = rng.gen::<f64>();
            }
        }
    }
    let push_to_boundary = rng.gen::<f64>() < p.boundary_bias;

    let assemble = |scale: f64| {
        BlockForm::new(n, d0.clone(), d1.clone(), &b * scale)
            .expect("dimensions are consistent")
            .assemble()
    };
    let min_eig = |scale: f64| {
        assemble(scale)
            .min_eigenvalue()
            .expect("symmetric eigensolver converges on these sizes")
    };

    let scale = if min_eig(1.0) >= 0.0 {
        1.0
    } else {
        // Bisect to the largest scale that keeps the matrix PSD.
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if min_eig(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if min_eig(lo) < tol.eps_psd * 0.5 && min_eig(lo) >= 0.0 {
                break;
            }
        }
        if push_to_boundary {
            lo
        } else {
            lo * (0.3 + 0.6 * rng.gen::<f64>())
        }
    };
    BlockForm::new(n, d0, d1, &b * scale).expect("dimensions are consistent")
}

/// Draws `s` nonnegative vectors (entries uniform in [0,1], sparsified by
/// density) and returns their Gram sum together with the generating
/// certificate. The certificate verifies with zero residual by
/// construction.
pub fn sample_cp(r: usize, s: usize, p: &SampleParams) -> (SymMatrix, CpCertificate) {
    let mut rng = p.rng(LABEL_CP);
    let mut vectors = Vec::with_capacity(s);
    for _ in 0..s {
        let mut x = DVector::zeros(r);
        for k in 0..r {
            if rng.gen::<f64>() < p.density {
                x[k] = rng.gen::<f64>();
            }
        }
        vectors.push(x);
    }
    let mut cert = CpCertificate::new(r, vectors).expect("generated vectors are finite");
    let gram = cert.reconstruct();
    cert.residual = 0.0;
    (gram, cert)
}

/// Draws a random DNN matrix: a Gaussian Gram start followed by Dykstra-
/// corrected alternating projection onto the PSD cone (eigenvalue
/// clipping) and the nonnegative orthant (entry clipping) until both
/// memberships hold. Rejection would die off quickly with `r`, which is
/// why projection is used instead. Retries with derived sub-seeds up to
/// 10 times before giving up.
pub fn sample_dnn(r: usize, p: &SampleParams) -> Result<SymMatrix> {
    let tol = ToleranceConfig::default();
    for attempt in 0..10u64 {
        let mut rng = p.rng(LABEL_DNN.wrapping_add(attempt << 8));
        let factor = DMatrix::from_fn(r, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let start = (&factor * factor.transpose()) / r as f64;
        let mut x = start.clone();
        // Dykstra correction for the PSD projection; the orthant clip is
        // absorbed directly since the iteration ends on the PSD side.
        let mut psd_correction = DMatrix::zeros(r, r);
        let mut converged = false;
        for _ in 0..500 {
            let sym = SymMatrix::from_symmetric_unchecked(symmetrize(&x));
            if sym.is_dnn(&tol)?.verdict {
                converged = true;
                break;
            }
            let shifted = symmetrize(&x) + &psd_correction;
            let projected = project_psd(&shifted)?;
            psd_correction = shifted - &projected;
            x = projected.map(|v| v.max(0.0));
        }
        if converged {
            return Ok(SymMatrix::from_symmetric_unchecked(symmetrize(&x)));
        }
    }
    Err(Error::SamplerConvergence { attempts: 10 })
}

/// Draws a DNN matrix whose support graph is exactly a random forest:
/// one rank-one term per tree edge plus optional per-vertex slack. Off-
/// tree entries are exact zeros, so the support is the tree by
/// construction and leaf elimination factors the result at rounding
/// precision.
pub fn sample_forest_dnn(r: usize, p: &SampleParams) -> (SymMatrix, usize) {
    let mut rng = p.rng(LABEL_FOREST);
    let mut gram = DMatrix::zeros(r, r);
    let mut edges = 0usize;
    for v in 1..r {
        if rng.gen::<f64>() < p.density {
            let parent = rng.gen_range(0..v);
            let alpha = 0.2 + 0.8 * rng.gen::<f64>();
            let beta = 0.2 + 0.8 * rng.gen::<f64>();
            let mut x = DVector::<f64>::zeros(r);
            x[parent] = alpha;
            x[v] = beta;
            gram += &x * x.transpose();
            edges += 1;
        }
    }
    for v in 0..r {
        // Slack is zero for roughly a quarter of the vertices, which
        // parks those diagonals on the PSD boundary.
        if rng.gen::<f64>() < 0.75 {
            let slack = 0.1 + 0.9 * rng.gen::<f64>();
            let mut x = DVector::<f64>::zeros(r);
            x[v] = slack;
            gram += &x * x.transpose();
        }
    }
    (SymMatrix::from_symmetric_unchecked(gram), edges)
}

/// Draws `k` Kraus operators slicing a Haar-ish random isometry: the QR
/// factor of a complex Gaussian `km×n` matrix, cut into m×n blocks.
/// Satisfies `Σ K†K = I_n` at rounding precision, so the induced map is
/// trace-preserving; generic draws have genuinely complex Choi matrices.
pub fn sample_kraus_channel(
    n: usize,
    m: usize,
    k: usize,
    p: &SampleParams,
) -> Result<Vec<DMatrix<Complex<f64>>>> {
    if k * m < n {
        return Err(Error::Dimension(format!(
            "k·m = {} < n = {n}: no isometry exists",
            k * m
        )));
    }
    let mut rng = p.rng(LABEL_KRAUS);
    let gauss = DMatrix::from_fn(k * m, n, |_, _| {
        Complex::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    let q = gauss.qr().q();
    let mut out = Vec::with_capacity(k);
    for block in 0..k {
        let mut op = DMatrix::<Complex<f64>>::zeros(m, n);
        for a in 0..m {
            for j in 0..n {
                op[(a, j)] = q[(block * m + a, j)];
            }
        }
        out.push(op);
    }
    Ok(out)
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    out
}

/// Projection onto the PSD cone by eigenvalue clipping.
fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = SymMatrix::from_symmetric_unchecked(symmetrize(m));
    let (values, vectors) = sym.eigen()?;
    let r = m.nrows();
    let mut out = DMatrix::zeros(r, r);
    for k in 0..r {
        if values[k] > 0.0 {
            let col = vectors.column(k);
            for i in 0..r {
                for j in 0..r {
                    out[(i, j)] += values[k] * col[i] * col[j];
                }
            }
        }
    }
    Ok(symmetrize(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::from_block_form;
    use crate::cpfact::verify_certificate;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn blockform_draws_satisfy_hypotheses() {
        for seed in 0..30 {
            let p = SampleParams {
                seed,
                density: 0.6,
                boundary_bias: 0.3,
            };
            let bf = sample_blockform_channel(3, &p);
            for i in 0..3 {
                assert!((bf.d0()[i] + bf.d1()[i] - 1.0).abs() < 1e-15);
            }
            assert!(bf.min_entry() >= 0.0);
            let assembled = bf.assemble();
            assert!(assembled.min_eigenvalue().unwrap() >= -tol().eps_psd);
            let j = from_block_form(&bf);
            assert!(j.check_trace_conditions(&tol()).passed);
            assert!(j.matrix().is_dnn(&tol()).unwrap().verdict);
        }
    }

    #[test]
    fn blockform_boundary_bias_lands_on_boundary() {
        let p = SampleParams {
            seed: 7,
            density: 1.0,
            boundary_bias: 1.0,
        };
        let mut boundary_seen = false;
        for seed in 0..20 {
            let bf = sample_blockform_channel(4, &p.with_seed(seed));
            let min_eig = bf.assemble().min_eigenvalue().unwrap();
            assert!(min_eig >= 0.0 || min_eig.abs() <= tol().eps_psd);
            if min_eig.abs() <= tol().eps_psd {
                boundary_seen = true;
            }
        }
        assert!(boundary_seen, "full-density boundary draws should touch the boundary");
    }

    #[test]
    fn blockform_density_zero_is_diagonal() {
        let p = SampleParams {
            seed: 3,
            density: 0.0,
            boundary_bias: 0.0,
        };
        let bf = sample_blockform_channel(4, &p);
        assert_eq!(bf.b().abs().max(), 0.0);
        let j = from_block_form(&bf);
        assert!(j.matrix().is_dnn(&tol()).unwrap().verdict);
    }

    #[test]
    fn cp_samples_verify_exactly() {
        for seed in 0..20 {
            let p = SampleParams {
                seed,
                density: 0.7,
                boundary_bias: 0.0,
            };
            let (gram, cert) = sample_cp(6, 9, &p);
            let (ok, residual) = verify_certificate(&gram, &cert, &tol()).unwrap();
            assert!(ok);
            assert!(residual <= 1e-14);
            assert!(gram.is_dnn(&tol()).unwrap().verdict);
        }
    }

    #[test]
    fn cp_zero_terms_gives_zero_matrix() {
        let (gram, cert) = sample_cp(4, 0, &SampleParams::default());
        assert_eq!(gram.frobenius_norm(), 0.0);
        assert!(cert.is_empty());
    }

    #[test]
    fn dnn_samples_pass_is_dnn() {
        for seed in 0..20 {
            let p = SampleParams {
                seed,
                density: 0.5,
                boundary_bias: 0.0,
            };
            let s = sample_dnn(5, &p).unwrap();
            assert!(s.is_dnn(&tol()).unwrap().verdict);
        }
        let scalar = sample_dnn(1, &SampleParams::default()).unwrap();
        assert!(scalar.entry(0, 0) >= 0.0);
    }

    #[test]
    fn forest_samples_have_forest_support() {
        use crate::graph::SupportGraph;
        for seed in 0..20 {
            let p = SampleParams {
                seed,
                density: 0.8,
                boundary_bias: 0.0,
            };
            let (s, edges) = sample_forest_dnn(8, &p);
            let g = SupportGraph::from_matrix(&s, tol().eps_zero);
            assert!(g.is_forest());
            assert_eq!(g.edge_count(), edges);
            assert!(s.is_dnn(&tol()).unwrap().verdict);
        }
    }

    #[test]
    fn kraus_draws_are_trace_preserving() {
        for seed in 0..10 {
            let p = SampleParams::default().with_seed(seed);
            let kraus = sample_kraus_channel(3, 2, 2, &p).unwrap();
            let mut sum = DMatrix::<Complex<f64>>::zeros(3, 3);
            for k in &kraus {
                sum += k.adjoint() * k;
            }
            let dev = (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let target = if i == j { 1.0 } else { 0.0 };
                    (sum[(i, j)] - Complex::new(target, 0.0)).norm()
                })
                .fold(0.0f64, f64::max);
            assert!(dev <= 1e-10, "Σ K†K deviates from identity by {dev:e}");
        }
        assert!(matches!(
            sample_kraus_channel(4, 2, 1, &SampleParams::default()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn single_kraus_square_case_is_unitary() {
        let kraus = sample_kraus_channel(2, 2, 1, &SampleParams::default().with_seed(11)).unwrap();
        assert_eq!(kraus.len(), 1);
        let k = &kraus[0];
        let dev = (k.adjoint() * k - DMatrix::identity(2, 2)).norm();
        assert!(dev <= 1e-12);
    }

    #[test]
    fn generators_are_deterministic() {
        let p = SampleParams {
            seed: 42,
            density: 0.6,
            boundary_bias: 0.5,
        };
        let a = sample_blockform_channel(4, &p);
        let b = sample_blockform_channel(4, &p);
        assert_eq!(a, b);

        let (ga, ca) = sample_cp(5, 7, &p);
        let (gb, cb) = sample_cp(5, 7, &p);
        assert_eq!(ga.to_row_major(), gb.to_row_major());
        assert_eq!(ca.len(), cb.len());

        let da = sample_dnn(4, &p).unwrap();
        let db = sample_dnn(4, &p).unwrap();
        assert_eq!(da.to_row_major(), db.to_row_major());

        let ka = sample_kraus_channel(3, 2, 2, &p).unwrap();
        let kb = sample_kraus_channel(3, 2, 2, &p).unwrap();
        assert_eq!(ka, kb);
    }
}
