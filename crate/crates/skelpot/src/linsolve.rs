//! Sparse direct solves for the complex symmetric (non-Hermitian) systems
//! behind every potential computation.
//!
//! The assembled forms are invertible because the mu-rotated field has a
//! positive-definite Hermitian part; a singular factorisation therefore
//! signals an assembly bug rather than an expected failure mode. One
//! factorisation serves many right-hand sides (each column of V, K, K', W
//! solves against the same matrix).

use crate::assembly::{CsrMatrix, FormMatrix};
use crate::{C64, Result, SkelError};
use faer::sparse::{SparseColMat, Triplet};
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_ID: AtomicU64 = AtomicU64::new(0);
static PAR_INIT: std::sync::Once = std::sync::Once::new();

/// Outcome of one solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub relative_residual: f64,
    pub method: &'static str,
    pub factorization_id: u64,
}

/// Reusable sparse LU factorisation.
pub struct Factorization {
    n: usize,
    mat: CsrMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, C64>,
    id: u64,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("n", &self.n)
            .field("id", &self.id)
            .finish()
    }
}

/// Factorise an assembled form matrix.
pub fn factorize(m: &FormMatrix) -> Result<Factorization> {
    factorize_csr(&m.mat)
}

pub fn factorize_csr(mat: &CsrMatrix) -> Result<Factorization> {
    if mat.nrows != mat.ncols {
        return Err(SkelError::Input("factorize needs a square matrix".into()));
    }
    // Deterministic single-threaded kernels.
    PAR_INIT.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
    let mut trips = Vec::with_capacity(mat.nnz());
    for r in 0..mat.nrows {
        for (c, v) in mat.row(r) {
            trips.push(Triplet::new(r, c, v));
        }
    }
    let a = SparseColMat::<usize, C64>::try_new_from_triplets(mat.nrows, mat.ncols, &trips)
        .map_err(|e| SkelError::Solve(format!("sparse build failed: {e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| SkelError::Solve(format!("LU factorization failed (singular to working precision?): {e:?}")))?;
    Ok(Factorization {
        n: mat.nrows,
        mat: mat.clone(),
        lu,
        id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
    })
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve `M x = b` and verify the relative residual against `tol`.
    pub fn solve(&self, b: &[C64], tol: f64) -> Result<(Vec<C64>, SolveReport)> {
        if b.len() != self.n {
            return Err(SkelError::Input(format!(
                "rhs length {} does not match system size {}",
                b.len(),
                self.n
            )));
        }
        let bnorm: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok((
                vec![C64::new(0.0, 0.0); self.n],
                SolveReport {
                    relative_residual: 0.0,
                    method: "direct",
                    factorization_id: self.id,
                },
            ));
        }
        let mut rhs = faer::Mat::<C64>::zeros(self.n, 1);
        for (i, &v) in b.iter().enumerate() {
            rhs[(i, 0)] = v;
        }
        use faer::linalg::solvers::Solve;
        let x = self.lu.solve(&rhs);
        let xs: Vec<C64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        let ax = self.mat.matvec(&xs);
        let rnorm: f64 = ax
            .iter()
            .zip(b)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let rel = rnorm / bnorm;
        if rel > tol {
            return Err(SkelError::Solve(format!(
                "direct solve residual {rel:.3e} above tolerance {tol:.1e}"
            )));
        }
        Ok((
            xs,
            SolveReport {
                relative_residual: rel,
                method: "direct",
                factorization_id: self.id,
            },
        ))
    }
}
