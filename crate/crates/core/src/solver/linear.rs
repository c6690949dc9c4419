//! Sparse direct solves with faer's LU.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use crate::linalg::{norm2, CsrMatrix};

use super::SolverError;

/// Relative residual targeted by [`SparseLu::solve`].
pub const LINEAR_TOLERANCE: f64 = 1e-10;

/// Outcome of one linear solve.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    /// `|A x - b| / |b|` after refinement (0 for `b = 0`).
    pub relative_residual: f64,
    pub refined: bool,
}

/// LU factorization of a CSR matrix. The symbolic analysis is kept and
/// reused as long as the sparsity pattern does not change.
#[derive(Default)]
pub struct SparseLu {
    symbolic: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
    numeric: Option<Lu<usize, f64>>,
    n: usize,
}

impl SparseLu {
    pub fn new() -> Self {
        Self::default()
    }

    /// Factorizes `a`. The CSR arrays of `a` are read as the CSC arrays of
    /// `a^T`, so later solves go through the transposed factorization.
    pub fn factorize(&mut self, a: &CsrMatrix) -> Result<(), SolverError> {
        if a.nrows != a.ncols {
            return Err(SolverError::NotSquare {
                rows: a.nrows,
                cols: a.ncols,
            });
        }
        let n = a.nrows;
        let reuse =
            matches!(&self.symbolic, Some((rp, ci, _)) if *rp == a.row_ptr && *ci == a.col_idx);
        let at_sym = SymbolicSparseColMatRef::new_checked(n, n, &a.row_ptr, None, &a.col_idx);
        if !reuse {
            let sym = SymbolicLu::try_new(at_sym)
                .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
            self.symbolic = Some((a.row_ptr.clone(), a.col_idx.clone(), sym));
        }
        let sym = self
            .symbolic
            .as_ref()
            .expect("symbolic analysis present")
            .2
            .clone();
        let at = SparseColMatRef::new(at_sym, &a.values);
        self.numeric = Some(Lu::try_new_with_symbolic(sym, at).map_err(map_lu_error)?);
        self.n = n;
        Ok(())
    }

    /// Solves `A x = b` with the current factors.
    pub fn apply_inverse(&self, b: &[f64]) -> Result<Vec<f64>, SolverError> {
        self.apply(b, false)
    }

    /// Solves `A^T x = b` with the current factors.
    pub fn apply_inverse_transpose(&self, b: &[f64]) -> Result<Vec<f64>, SolverError> {
        self.apply(b, true)
    }

    fn apply(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>, SolverError> {
        let lu = self.numeric.as_ref().ok_or(SolverError::NotFactorized)?;
        assert_eq!(b.len(), self.n, "right-hand side length");
        let mut x = b.to_vec();
        let col = MatMut::from_column_major_slice_mut(&mut x, self.n, 1);
        // the factors are those of A^T
        if transpose {
            lu.solve_in_place(col);
        } else {
            lu.solve_transpose_in_place(col);
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::Singular { index: Some(index) });
        }
        Ok(x)
    }

    /// Factorizes `a` and solves `a x = b`, with one step of iterative
    /// refinement when the relative residual misses [`LINEAR_TOLERANCE`].
    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<LinearSolution, SolverError> {
        self.factorize(a)?;
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(LinearSolution {
                x: vec![0.0; b.len()],
                relative_residual: 0.0,
                refined: false,
            });
        }
        let mut x = self.apply_inverse(b)?;
        let mut rel = relative_residual(a, &x, b, bnorm);
        let mut refined = false;
        if rel >= LINEAR_TOLERANCE {
            let r: Vec<f64> = a.matvec(&x).iter().zip(b).map(|(ax, b)| b - ax).collect();
            let dx = self.apply_inverse(&r)?;
            for (x, d) in x.iter_mut().zip(&dx) {
                *x += d;
            }
            rel = relative_residual(a, &x, b, bnorm);
            refined = true;
            if rel >= LINEAR_TOLERANCE {
                log::warn!("linear solve reached relative residual {rel:e} after refinement");
            }
        }
        Ok(LinearSolution {
            x,
            relative_residual: rel,
            refined,
        })
    }
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64], bnorm: f64) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(ax, b)| b - ax).collect();
    norm2(&r) / bnorm
}

fn map_lu_error(e: faer::sparse::linalg::LuError) -> SolverError {
    match e {
        faer::sparse::linalg::LuError::SymbolicSingular { index } => {
            SolverError::Singular { index: Some(index) }
        }
        other => SolverError::Factorization(format!("{other:?}")),
    }
}

/// One-shot solve of `a x = b`.
pub fn linear_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    Ok(SparseLu::new().solve(a, b)?.x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let a = CsrMatrix::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(linear_solve(&a, &b).unwrap(), b.to_vec());
    }

    #[test]
    fn diagonal_system() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let x = linear_solve(&a, &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nonsymmetric_system_and_its_transpose() {
        let a = CsrMatrix::from_dense(&[
            vec![4.0, 1.0, 0.0],
            vec![2.0, 5.0, 1.0],
            vec![0.0, 3.0, 6.0],
        ]);
        let mut lu = SparseLu::new();
        let b = [1.0, 2.0, 3.0];
        let sol = lu.solve(&a, &b).unwrap();
        let ax = a.matvec(&sol.x);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-14);
        }
        let y = lu.apply_inverse_transpose(&b).unwrap();
        let aty = a.transpose().matvec(&y);
        for i in 0..3 {
            assert!((aty[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn structurally_singular_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 0, 1.0), (2, 2, 1.0)]);
        let err = linear_solve(&a, &[1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, SolverError::Singular { .. }), "{err}");
    }

    #[test]
    fn numerically_singular_matrix_is_reported() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(linear_solve(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn pattern_is_reused_across_factorizations() {
        let mut a = CsrMatrix::from_dense(&[vec![3.0, 1.0], vec![1.0, 2.0]]);
        let mut lu = SparseLu::new();
        lu.solve(&a, &[1.0, 0.0]).unwrap();
        a.values.iter_mut().for_each(|v| *v *= 2.0);
        let x = lu.solve(&a, &[1.0, 0.0]).unwrap().x;
        // inverse of 2 [[3,1],[1,2]] applied to e_1
        assert!((x[0] - 0.2).abs() < 1e-15 && (x[1] + 0.1).abs() < 1e-15);
    }
}
