//! Symmetric eigensolvers: a residual-checked dense decomposition and a
//! thick-restart Lanczos iteration for the lowest eigenpairs of large sparse
//! operators.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors, SelfAdjointEvdParams};
use faer::{Col, Mat, MatRef, Par};
use rayon::prelude::*;

use crate::error::{Result, UnimonError};

/// Dimension below which `lowest_eigenpairs` uses the dense path.
pub const DENSE_LIMIT: usize = 3000;

pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    /// y ← A x.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Any upper bound of the spectral norm.
    fn norm_estimate(&self) -> f64;
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Rows given as (column, value) lists; columns are sorted and merged.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for (c, v) in row {
                assert!(c < n, "column {c} out of range");
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn from_dense(a: MatRef<'_, f64>) -> Self {
        let rows = (0..a.nrows())
            .map(|i| (0..a.ncols()).filter(|&j| a[(i, j)] != 0.0).map(|j| (j, a[(i, j)])).collect())
            .collect();
        CsrMatrix::from_rows(rows)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(pos) => self.vals[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        CsrMatrix::from_rows(rows)
    }

    /// (A + Aᵀ)/2.
    pub fn symmetrized(&self) -> CsrMatrix {
        let t = self.transpose();
        let rows = (0..self.n)
            .map(|i| {
                self.row(i)
                    .map(|(j, v)| (j, 0.5 * v))
                    .chain(t.row(i).map(|(j, v)| (j, 0.5 * v)))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut a = Mat::<f64>::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    pub fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] = f(i, self.cols[k], self.vals[k]);
            }
        }
        out
    }
}

impl SymmetricOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        });
    }

    fn norm_estimate(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Lowest eigenpairs with their true residual norms ‖Ax − λx‖.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

fn evd(a: MatRef<'_, f64>, recursion_threshold: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    let mut params: SelfAdjointEvdParams = faer::Auto::<f64>::auto();
    params.recursion_threshold = recursion_threshold;
    let mut s = faer::diag::Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let par = Par::rayon(0);
    let mut mem = MemBuffer::new(self_adjoint_evd_scratch::<f64>(n, ComputeEigenvectors::Yes, par, params.into()));
    self_adjoint_evd(a, s.as_mut(), Some(u.as_mut()), par, MemStack::new(&mut mem), params.into())
        .map_err(|e| UnimonError::Numerical(format!("dense eigendecomposition failed: {e:?}")))?;
    Ok(((0..n).map(|i| s[i]).collect(), u))
}

fn worst_column_residual(a: MatRef<'_, f64>, values: &[f64], u: &Mat<f64>) -> f64 {
    let au = a * u;
    (0..values.len())
        .map(|j| {
            (0..a.nrows())
                .map(|i| (au[(i, j)] - values[j] * u[(i, j)]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Full decomposition of a symmetric matrix, ascending. The fast
/// divide-and-conquer result is residual-checked; on failure the QR
/// iteration result is used instead.
pub fn symmetric_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let scale = a.norm_max().max(f64::MIN_POSITIVE) * n as f64;
    let tolerance = 1e-11 * scale;
    let (values, u) = evd(a, 128)?;
    if worst_column_residual(a, &values, &u) <= tolerance {
        return Ok((values, u));
    }
    log::debug!("divide-and-conquer eigenpairs failed the residual check at n = {n}; using QR iteration");
    let (values, u) = evd(a, usize::MAX)?;
    let worst = worst_column_residual(a, &values, &u);
    if worst > tolerance {
        return Err(UnimonError::Numerical(format!("dense eigenpair residual {worst:e} exceeds {tolerance:e}")));
    }
    Ok((values, u))
}

pub fn dense_lowest(a: MatRef<'_, f64>, k: usize) -> Result<Eigenpairs> {
    let (values, u) = symmetric_eigen(a)?;
    let k = k.min(values.len());
    let vectors: Vec<Vec<f64>> = (0..k).map(|j| (0..a.nrows()).map(|i| u[(i, j)]).collect()).collect();
    let residuals = residuals_of(&DenseOperator(a.to_owned()), &values[..k], &vectors);
    Ok(Eigenpairs { values: values[..k].to_vec(), vectors, residuals })
}

/// Dense matrix wrapped as an operator.
pub struct DenseOperator(pub Mat<f64>);

impl SymmetricOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let xc = Col::<f64>::from_fn(x.len(), |i| x[i]);
        let yc = &self.0 * &xc;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = yc[i];
        }
    }

    fn norm_estimate(&self) -> f64 {
        (0..self.0.nrows())
            .map(|i| (0..self.0.ncols()).map(|j| self.0[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn residuals_of(op: &dyn SymmetricOperator, values: &[f64], vectors: &[Vec<f64>]) -> Vec<f64> {
    let mut y = vec![0.0; op.dim()];
    values
        .iter()
        .zip(vectors)
        .map(|(lambda, v)| {
            op.apply(v, &mut y);
            y.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosParams {
    /// Krylov subspace size; `None` picks max(3k, k + 50).
    pub subspace: Option<usize>,
    pub max_restarts: usize,
    /// Relative residual target ‖Ax − λx‖ < tolerance·‖A‖.
    pub tolerance: f64,
}

impl Default for LanczosParams {
    fn default() -> Self {
        LanczosParams { subspace: None, max_restarts: 2000, tolerance: 1e-8 }
    }
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64;
            1.0 + 0.5 * (0.7 * x + 0.3).sin() + 0.25 * (1.913 * x + 1.1).cos()
        })
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

fn column_vec(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Thick-restart Lanczos with full reorthogonalization for the `k` lowest
/// eigenpairs. Converged pairs are checked against their true residual.
pub fn lanczos_lowest(op: &dyn SymmetricOperator, k: usize, params: &LanczosParams) -> Result<Eigenpairs> {
    let n = op.dim();
    if k == 0 {
        return Ok(Eigenpairs { values: Vec::new(), vectors: Vec::new(), residuals: Vec::new() });
    }
    let k = k.min(n);
    let m = params.subspace.unwrap_or((3 * k).max(k + 50)).min(n);
    if m <= k + 1 || m == n {
        // the whole space fits: build the matrix explicitly
        let mut dense = Mat::<f64>::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            op.apply(&e, &mut y);
            for i in 0..n {
                dense[(i, j)] = y[i];
            }
        }
        let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (dense[(i, j)] + dense[(j, i)]));
        return dense_lowest(sym.as_ref(), k);
    }
    let norm = op.norm_estimate().max(f64::MIN_POSITIVE);
    let target = params.tolerance * norm;

    let mut basis = Mat::<f64>::zeros(n, m + 1);
    let mut len = 1;
    let start = start_vector(n);
    for i in 0..n {
        basis[(i, 0)] = start[i];
    }
    let mut t = Mat::<f64>::zeros(m, m);
    let mut w = vec![0.0; n];
    let mut restarts = 0;
    let mut best = f64::INFINITY;

    loop {
        let mut beta = 0.0;
        while len <= m {
            let idx = len - 1;
            let v = column_vec(&basis, idx);
            op.apply(&v, &mut w);
            let mut wc = Col::<f64>::from_fn(n, |i| w[i]);
            let active = basis.get(.., 0..len);
            let mut h = active.transpose() * &wc;
            wc -= active * &h;
            let h2 = active.transpose() * &wc;
            wc -= active * &h2;
            h += &h2;
            for i in 0..len {
                t[(i, idx)] = h[i];
                t[(idx, i)] = h[i];
            }
            beta = wc.norm_l2();
            if len == m {
                for i in 0..n {
                    basis[(i, m)] = if beta > 0.0 { wc[i] / beta } else { 0.0 };
                }
                break;
            }
            if beta <= 1e-14 * norm {
                // invariant subspace: continue with a fresh orthogonal direction
                let mut fresh = Col::<f64>::from_fn(n, |i| ((i * 31 + len * 17) % 97) as f64 / 97.0 - 0.5);
                let active = basis.get(.., 0..len);
                for _ in 0..2 {
                    let c = active.transpose() * &fresh;
                    fresh -= active * &c;
                }
                let norm_fresh = fresh.norm_l2();
                for i in 0..n {
                    basis[(i, len)] = fresh[i] / norm_fresh;
                }
                // the expansion is exact: no coupling to the new direction
                beta = 0.0;
            } else {
                for i in 0..n {
                    basis[(i, len)] = wc[i] / beta;
                }
            }
            len += 1;
        }

        let (theta, y) = symmetric_eigen(t.as_ref())?;
        let estimates: Vec<f64> = (0..k).map(|i| (beta * y[(m - 1, i)]).abs()).collect();
        let worst_estimate = estimates.iter().copied().fold(0.0, f64::max);
        best = best.min(worst_estimate);

        if worst_estimate <= 0.1 * target {
            let ritz = basis.get(.., 0..m) * y.get(.., 0..k);
            let vectors: Vec<Vec<f64>> = (0..k).map(|j| column_vec(&ritz, j)).collect();
            let values = theta[..k].to_vec();
            let residuals = residuals_of(op, &values, &vectors);
            if residuals.iter().all(|r| *r <= target) {
                return Ok(Eigenpairs { values, vectors, residuals });
            }
            log::debug!("Lanczos estimates converged but true residuals lag: {residuals:?}");
        }

        restarts += 1;
        if restarts > params.max_restarts {
            return Err(UnimonError::Numerical(format!(
                "Lanczos did not converge after {} restarts: worst residual estimate {:.3e} (best {:.3e}), target {:.3e}",
                params.max_restarts, worst_estimate, best, target
            )));
        }

        // keep the lowest p Ritz vectors plus the residual direction
        let p = (k + (m - k) / 2).min(m - 1);
        let kept = basis.get(.., 0..m) * y.get(.., 0..p);
        let residual = column_vec(&basis, m);
        for j in 0..p {
            for i in 0..n {
                basis[(i, j)] = kept[(i, j)];
            }
        }
        for i in 0..n {
            basis[(i, p)] = residual[i];
        }
        t.fill(0.0);
        for i in 0..p {
            t[(i, i)] = theta[i];
            let s = beta * y[(m - 1, i)];
            t[(i, p)] = s;
            t[(p, i)] = s;
        }
        len = p + 1;
    }
}

/// Dense path below `DENSE_LIMIT`, Lanczos above.
pub fn lowest_eigenpairs(matrix: &CsrMatrix, k: usize) -> Result<Eigenpairs> {
    if matrix.dim() < DENSE_LIMIT {
        dense_lowest(matrix.to_dense().as_ref(), k)
    } else {
        lanczos_lowest(matrix, k, &LanczosParams::default())
    }
}
