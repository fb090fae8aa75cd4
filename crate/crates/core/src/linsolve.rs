//! Sparse direct solves for the Newton systems.
//!
//! Backed by faer's supernodal LU. The symbolic analysis depends only on the
//! (structurally symmetric) pattern and is computed once; each Newton
//! iteration refactorizes numerically.
//!
//! Our CSR arrays, read as CSC, describe `Mᵀ`. We factor `Mᵀ` and solve with
//! the transposed factors, which avoids copying values into column order.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Par};

use crate::error::{QgError, Result};
use crate::sparse::{CsrMatrix, SparsityPattern};

/// Which linear solver backs the Newton iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LinearSolverKind {
    #[default]
    SparseLu,
}

impl std::str::FromStr for LinearSolverKind {
    type Err = QgError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lu" | "sparse-lu" => Ok(Self::SparseLu),
            other => Err(QgError::Config(format!("unknown linear solver '{other}'"))),
        }
    }
}

impl std::fmt::Display for LinearSolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::SparseLu => f.write_str("sparse-lu"),
        }
    }
}

/// Pattern-bound LU solver with a cached symbolic factorization.
pub struct SparseLuSolver {
    pattern: std::sync::Arc<SparsityPattern>,
    symbolic: SymbolicLu<usize>,
}

impl std::fmt::Debug for SparseLuSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLuSolver")
            .field("n", &self.pattern.n_rows)
            .field("nnz", &self.pattern.nnz())
            .finish()
    }
}

fn symbolic_view(p: &SparsityPattern) -> SymbolicSparseColMatRef<'_, usize> {
    SymbolicSparseColMatRef::new_checked(p.n_rows, p.n_cols, &p.row_offsets, None, &p.col_indices)
}

impl SparseLuSolver {
    pub fn new(pattern: std::sync::Arc<SparsityPattern>) -> Result<Self> {
        let symbolic = SymbolicLu::try_new(symbolic_view(&pattern))
            .map_err(|e| QgError::LinearSolve(format!("symbolic analysis failed: {e:?}")))?;
        Ok(Self { pattern, symbolic })
    }

    /// Solve `M x = b` for a matrix on this solver's pattern.
    pub fn solve(&self, m: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        if **m.pattern() != *self.pattern {
            return Err(QgError::LinearSolve("matrix pattern differs from the factorized pattern".into()));
        }
        let n = self.pattern.n_rows;
        if b.len() != n {
            return Err(QgError::LinearSolve(format!("rhs length {} != {n}", b.len())));
        }
        // CSR of M == CSC of Mᵀ
        let mt = SparseColMatRef::new(symbolic_view(&self.pattern), m.values());
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), mt)
            .map_err(|e| QgError::LinearSolve(format!("numeric factorization failed: {e:?}")))?;
        let mut rhs = Mat::from_fn(n, 1, |i, _| b[i]);
        lu.solve_transpose_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(QgError::LinearSolve("singular or ill-conditioned system".into()));
        }
        Ok(x)
    }
}

/// Set faer's internal parallelism; `1` gives sequential, reproducible solves.
pub fn set_solver_threads(threads: usize) {
    let par = if threads <= 1 { Par::Seq } else { Par::rayon(threads) };
    faer::set_global_parallelism(par);
}
