//! Thin wrapper over the sparse LU of `faer`.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Square sparse matrix assembled from `(row, col, value)` triplets;
/// duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub struct SparseSystem {
    n: usize,
    triplets: Vec<Triplet<usize, usize, f64>>,
}

impl SparseSystem {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::with_capacity(9 * n),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.triplets.push(Triplet::new(row, col, value));
        }
    }

    /// Solves `A x = b` by sparse LU.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::GridMismatch(format!(
                "right-hand side of length {} for a system of size {}",
                rhs.len(),
                self.n
            )));
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.triplets)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let b = Col::<f64>::from_fn(self.n, |i| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::LinearSolve("singular or ill-conditioned system".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_system() {
        let n = 50;
        let mut a = SparseSystem::new(n);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        // exact solution x_i = i + 1 gives b = 0 except at the ends
        let mut b = vec![0.0; n];
        b[n - 1] = (n + 1) as f64;
        let x = a.solve(&b).unwrap();
        for (i, v) in x.iter().enumerate() {
            assert!((v - (i + 1) as f64).abs() < 1e-10);
        }
        assert!(a.solve(&[1.0]).is_err());
    }
}
