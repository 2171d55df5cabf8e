use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{ColMut, Par};
use serde::{Deserialize, Serialize};

use super::sparse::SystemMatrix;

/// Work counters of a [`LinearSolver`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    pub symbolic_analyses: usize,
    pub numeric_factorizations: usize,
    pub solves: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinearSolveError {
    #[error("matrix has no assembled pattern")]
    Empty,
    #[error("symbolic analysis failed: {0}")]
    Symbolic(String),
    #[error("matrix is numerically singular: {0}")]
    Singular(String),
}

/// Sparse LU solver that analyzes a pattern once and refactors numerically
/// on every call. A new analysis runs only when the pattern hash changes.
pub struct LinearSolver {
    symbolic: Option<(u64, SymbolicLu<usize>)>,
    stats: SolverStats,
}

impl Default for LinearSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl LinearSolver {
    pub fn new() -> Self {
        faer::set_global_parallelism(Par::Seq);
        LinearSolver {
            symbolic: None,
            stats: SolverStats::default(),
        }
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// Solves `J · dx = -g` and returns `dx`.
    pub fn solve(&mut self, matrix: &SystemMatrix, g: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
        let hash = matrix.pattern_hash().ok_or(LinearSolveError::Empty)?;
        let n = matrix.dim();
        let structure = SymbolicSparseColMatRef::new_checked(n, n, matrix.col_ptr(), None, matrix.row_idx());
        if self.symbolic.as_ref().map(|(h, _)| *h) != Some(hash) {
            let symbolic = SymbolicLu::try_new(structure).map_err(|e| LinearSolveError::Symbolic(format!("{e:?}")))?;
            self.stats.symbolic_analyses += 1;
            self.symbolic = Some((hash, symbolic));
        }
        let symbolic = self.symbolic.as_ref().map(|(_, s)| s.clone()).unwrap();
        let lu = Lu::try_new_with_symbolic(symbolic, SparseColMatRef::new(structure, matrix.values()))
            .map_err(|e| LinearSolveError::Singular(format!("{e:?}")))?;
        self.stats.numeric_factorizations += 1;

        let mut dx: Vec<f64> = g.iter().map(|v| -v).collect();
        lu.solve_in_place(ColMut::from_slice_mut(&mut dx));
        self.stats.solves += 1;
        if dx.iter().all(|v| v.is_finite()) {
            Ok(dx)
        } else {
            Err(LinearSolveError::Singular("non-finite increment".into()))
        }
    }
}
