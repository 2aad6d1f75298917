//! Dense linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_RANK_TAU: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Square symmetric matrix. Construction mirrors the lower triangle, so the
/// stored matrix is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn from_lower(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::Dimension(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut m = m;
        let n = m.nrows();
        for j in 0..n {
            for i in 0..j {
                m[(i, j)] = m[(j, i)];
            }
        }
        Ok(SymMatrix(m))
    }

    /// Symmetrize as `(A + A^T) / 2`.
    pub fn symmetrized(m: &DMatrix<f64>) -> Self {
        SymMatrix((m + m.transpose()) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<f64>,
}

pub fn eig_sym(a: &SymMatrix) -> Result<EigenDecomposition, LinalgError> {
    if a.0.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let n = a.order();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(a.0.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomposition { values, vectors })
}

pub fn min_eigenvalue(a: &SymMatrix) -> Result<f64, LinalgError> {
    Ok(eig_sym(a)?
        .values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// Result of a thresholded SVD rank decision.
#[derive(Debug, Clone, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    /// Descending singular values.
    pub singular_values: Vec<f64>,
    pub tau: f64,
    /// Orthonormal basis of the right null space, one column per vector.
    #[serde(skip)]
    pub null_basis: DMatrix<f64>,
}

/// `rank = #{ sigma_i > tau * sigma_max }` plus an orthonormal null-space basis.
pub fn numerical_rank(a: &DMatrix<f64>, tau: f64) -> RankInfo {
    let (m, n) = a.shape();
    if n == 0 {
        return RankInfo {
            rank: 0,
            singular_values: Vec::new(),
            tau,
            null_basis: DMatrix::zeros(0, 0),
        };
    }
    // Pad wide matrices with zero rows so the SVD returns a full V.
    let padded;
    let work = if m < n {
        padded = {
            let mut p = DMatrix::zeros(n, n);
            p.view_mut((0, 0), (m, n)).copy_from(a);
            p
        };
        &padded
    } else {
        a
    };
    let svd = work.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = if smax > 0.0 {
        sv.iter().filter(|&&s| s > tau * smax).count()
    } else {
        0
    };
    let nnull = n - rank;
    let mut null_basis = DMatrix::zeros(n, nnull);
    for (col, &i) in idx[rank..].iter().enumerate() {
        null_basis.set_column(col, &v_t.row(i).transpose());
    }
    let singular_values = sv.into_iter().take(m.min(n)).collect();
    RankInfo {
        rank,
        singular_values,
        tau,
        null_basis,
    }
}

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: DVector<f64>,
    pub residual: f64,
}

/// Minimum-norm least-squares solution via SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LstsqSolution, LinalgError> {
    if a.nrows() != b.len() {
        return Err(LinalgError::Dimension(format!(
            "A has {} rows, b has {} entries",
            a.nrows(),
            b.len()
        )));
    }
    if a.ncols() == 0 {
        return Ok(LstsqSolution {
            x: DVector::zeros(0),
            residual: b.norm(),
        });
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * f64::EPSILON * a.nrows().max(a.ncols()) as f64;
    let x = svd
        .solve(b, cutoff)
        .map_err(|e| LinalgError::Dimension(e.to_string()))?;
    let residual = (b - a * &x).norm();
    Ok(LstsqSolution { x, residual })
}

/// Nonnegative least squares (all variables sign-constrained).
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LstsqSolution, LinalgError> {
    bounded_lstsq(a, b, &vec![true; a.ncols()])
}

/// Least squares where `nonneg[j]` marks variables constrained to `x_j >= 0`;
/// the remaining variables are free. Lawson-Hanson active-set iteration with
/// free variables kept permanently in the passive set.
pub fn bounded_lstsq(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    nonneg: &[bool],
) -> Result<LstsqSolution, LinalgError> {
    let n = a.ncols();
    if nonneg.len() != n || a.nrows() != b.len() {
        return Err(LinalgError::Dimension("bounded_lstsq shapes".into()));
    }
    let mut passive: Vec<bool> = nonneg.iter().map(|&c| !c).collect();
    let mut x = DVector::zeros(n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0) * b.norm().max(1.0);
    let tol = 1e-13 * scale * n.max(1) as f64;

    let solve_passive = |passive: &[bool]| -> Result<DVector<f64>, LinalgError> {
        let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut z = DVector::zeros(n);
        if cols.is_empty() {
            return Ok(z);
        }
        let sub = a.select_columns(&cols);
        let sol = lstsq(&sub, b)?;
        for (k, &j) in cols.iter().enumerate() {
            z[j] = sol.x[k];
        }
        Ok(z)
    };

    // Free variables first.
    if passive.iter().any(|&p| p) {
        x = solve_passive(&passive)?;
    }
    for _outer in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n)
            .filter(|&j| nonneg[j] && !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = cand else { break };
        passive[t] = true;
        for _inner in 0..(3 * n + 10) {
            let z = solve_passive(&passive)?;
            let bad: Vec<usize> = (0..n)
                .filter(|&j| nonneg[j] && passive[j] && z[j] <= 0.0)
                .collect();
            if bad.is_empty() {
                x = z;
                break;
            }
            let alpha = bad
                .iter()
                .map(|&j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            x = &x + (&z - &x) * alpha;
            for j in 0..n {
                if nonneg[j] && passive[j] && x[j] <= tol.min(1e-15) {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    for j in 0..n {
        if nonneg[j] && x[j] < 0.0 {
            x[j] = 0.0;
        }
    }
    let residual = (b - a * &x).norm();
    Ok(LstsqSolution { x, residual })
}

/// Determinant via LU.
pub fn det(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    a.clone().lu().determinant()
}

pub fn cholesky(a: &SymMatrix) -> Result<DMatrix<f64>, LinalgError> {
    a.0.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or(LinalgError::NotPositiveDefinite)
}

/// Frobenius inner product.
pub fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
