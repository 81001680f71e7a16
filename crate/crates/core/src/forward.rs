//! Linear forward operators `y = A u`.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};

/// Dense `m_obs x d` operator.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForwardModel {
    matrix: DMatrix<f64>,
    pub row_labels: Option<Vec<String>>,
    pub col_labels: Option<Vec<String>>,
}

impl LinearForwardModel {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::Structural(format!(
                "operator must be at least 1x1, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if let Some(bad) = matrix.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("operator entry is not finite: {bad}")));
        }
        Ok(LinearForwardModel {
            matrix,
            row_labels: None,
            col_labels: None,
        })
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, d))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Number of observations.
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Dimension of the unknown.
    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.cols() {
            return Err(Error::Dimension {
                context: "forward apply",
                expected: self.cols(),
                found: u.len(),
            });
        }
        let mut out = vec![0.0; self.rows()];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self
                .matrix
                .row(i)
                .iter()
                .zip(u)
                .map(|(a, x)| a * x)
                .sum();
        }
        Ok(out)
    }

    /// Repeats rows cyclically until there are `n_obs` of them; used to
    /// observe the same physical operator several times.
    pub fn tile_rows(&self, n_obs: usize) -> Result<Self> {
        if n_obs == 0 {
            return Err(Error::Structural("cannot tile to zero rows".into()));
        }
        let m = self.rows();
        let matrix = DMatrix::from_fn(n_obs, self.cols(), |i, j| self.matrix[(i % m, j)]);
        let row_labels = self
            .row_labels
            .as_ref()
            .map(|l| (0..n_obs).map(|i| l[i % m].clone()).collect());
        Ok(LinearForwardModel {
            matrix,
            row_labels,
            col_labels: self.col_labels.clone(),
        })
    }
}

/// Square blur operator: row `i` holds a Gaussian kernel of standard deviation
/// `kernel_sd` (in grid cells) centered at `i`, normalized to sum to one.
pub fn deconvolution_operator(grid_size: usize, kernel_sd: f64) -> Result<LinearForwardModel> {
    if grid_size < 3 {
        return Err(Error::Structural(format!(
            "deconvolution grid must have at least 3 cells, got {grid_size}"
        )));
    }
    if !(kernel_sd.is_finite() && kernel_sd > 0.0) {
        return Err(Error::Domain(format!("kernel_sd must be > 0, got {kernel_sd}")));
    }
    let mut a = DMatrix::from_fn(grid_size, grid_size, |i, j| {
        let r = i as f64 - j as f64;
        (-0.5 * (r / kernel_sd).powi(2)).exp()
    });
    for mut row in a.row_iter_mut() {
        let s: f64 = row.sum();
        row /= s;
    }
    LinearForwardModel::new(a)
}

/// Cauchy-Laplace boundary-data operator on an `(N+2) x (N+2)` grid of the unit
/// square.
///
/// The unknown is the Dirichlet data on the `N` interior nodes of the top edge;
/// the other three edges (and the corners) are held at zero. The observation is
/// the discrete harmonic solution on the interior row next to the bottom edge.
/// Column `k` is the response to the `k`-th unit boundary vector, obtained from
/// one Cholesky factorization of the 5-point Laplacian.
pub fn cauchy_laplace_operator(n: usize) -> Result<LinearForwardModel> {
    if n < 4 {
        return Err(Error::Structural(format!(
            "Cauchy-Laplace grid must be at least 4, got {n}"
        )));
    }
    let unknowns = n * n;
    // row-major interior index, row 0 is adjacent to the bottom edge
    let idx = |col: usize, row: usize| row * n + col;

    let mut lap = DMatrix::<f64>::zeros(unknowns, unknowns);
    for row in 0..n {
        for col in 0..n {
            let p = idx(col, row);
            lap[(p, p)] = 4.0;
            if col > 0 {
                lap[(p, idx(col - 1, row))] = -1.0;
            }
            if col + 1 < n {
                lap[(p, idx(col + 1, row))] = -1.0;
            }
            if row > 0 {
                lap[(p, idx(col, row - 1))] = -1.0;
            }
            if row + 1 < n {
                lap[(p, idx(col, row + 1))] = -1.0;
            }
        }
    }
    let chol = Cholesky::new(lap)
        .ok_or_else(|| Error::Decomposition("5-point Laplacian is not positive definite".into()))?;

    // top boundary node k couples into interior node (k, n-1)
    let mut rhs = DMatrix::<f64>::zeros(unknowns, n);
    for k in 0..n {
        rhs[(idx(k, n - 1), k)] = 1.0;
    }
    let sol = chol.solve(&rhs);
    let a = DMatrix::from_fn(n, n, |i, k| sol[(idx(i, 0), k)]);
    LinearForwardModel::new(a)
}
