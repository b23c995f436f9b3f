//! Sparse linear algebra on a fixed stencil pattern.
//!
//! The pattern is analyzed once; refactorizations only refill values.
//! [`gmres`] lets a stale LU factorization act as a preconditioner for a
//! nearby matrix, which is how the Newton solvers avoid refactoring on
//! every iteration.

use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::{MatMut, Side};

use crate::error::{Error, Result};

/// Fixed sparsity pattern with entries listed in assembly order.
/// Duplicate positions are summed.
pub struct Pattern {
    n: usize,
    nnz_in: usize,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu_symbolic: Option<SymbolicLu<usize>>,
    llt_symbolic: Option<SymbolicLlt<usize>>,
}

fn lin_err(e: impl std::fmt::Debug) -> Error {
    Error::LinearSolve(format!("{e:?}"))
}

impl Pattern {
    pub fn new(n: usize, entries: &[(usize, usize)]) -> Result<Self> {
        let pairs: Vec<Pair<usize, usize>> = entries
            .iter()
            .map(|&(row, col)| Pair { row, col })
            .collect();
        let (symbolic, argsort) =
            SymbolicSparseColMat::try_new_from_indices(n, n, &pairs).map_err(lin_err)?;
        Ok(Self {
            n,
            nnz_in: entries.len(),
            symbolic,
            argsort,
            lu_symbolic: None,
            llt_symbolic: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self, values: &[f64]) -> Result<Matrix> {
        if values.len() != self.nnz_in {
            return Err(Error::LinearSolve(format!(
                "{} values for a pattern of {} entries",
                values.len(),
                self.nnz_in
            )));
        }
        let m = SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, values)
            .map_err(lin_err)?;
        Ok(Matrix { m })
    }

    pub fn lu(&mut self, a: &Matrix) -> Result<LuFactor> {
        if self.lu_symbolic.is_none() {
            self.lu_symbolic = Some(SymbolicLu::try_new(a.m.symbolic()).map_err(lin_err)?);
        }
        let sym = self.lu_symbolic.clone().expect("set above");
        let lu = Lu::try_new_with_symbolic(sym, a.m.as_ref()).map_err(lin_err)?;
        Ok(LuFactor { n: self.n, lu })
    }

    /// Cholesky factor of a symmetric positive definite matrix; only the
    /// lower triangle of `a` is read.
    pub fn cholesky(&mut self, a: &Matrix) -> Result<LltFactor> {
        if self.llt_symbolic.is_none() {
            self.llt_symbolic =
                Some(SymbolicLlt::try_new(a.m.symbolic(), Side::Lower).map_err(lin_err)?);
        }
        let sym = self.llt_symbolic.clone().expect("set above");
        let llt = Llt::try_new_with_symbolic(sym, a.m.as_ref(), Side::Lower).map_err(lin_err)?;
        Ok(LltFactor { n: self.n, llt })
    }
}

pub struct Matrix {
    m: SparseColMat<usize, f64>,
}

impl Matrix {
    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        let a = self.m.as_ref();
        let sym = a.symbolic();
        let (cp, ri, v) = (sym.col_ptr(), sym.row_idx(), a.val());
        for (j, &xj) in x.iter().enumerate() {
            for p in cp[j]..cp[j + 1] {
                y[ri[p]] += v[p] * xj;
            }
        }
    }

    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; b.len()];
        self.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        r
    }
}

pub struct LuFactor {
    n: usize,
    lu: Lu<usize, f64>,
}

impl LuFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        use faer::linalg::solvers::SolveCore;
        let mut x = b.to_vec();
        self.lu.solve_in_place_with_conj(
            faer::Conj::No,
            MatMut::from_column_major_slice_mut(&mut x, self.n, 1),
        );
        x
    }
}

pub struct LltFactor {
    n: usize,
    llt: Llt<usize, f64>,
}

impl LltFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        use faer::linalg::solvers::SolveCore;
        let mut x = b.to_vec();
        self.llt.solve_in_place_with_conj(
            faer::Conj::No,
            MatMut::from_column_major_slice_mut(&mut x, self.n, 1),
        );
        x
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug)]
pub struct GmresOutcome {
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Right-preconditioned restarted GMRES for `A x = b`, starting from `x`.
/// The returned residual is the true `|b - A x| / |b|`.
pub fn gmres(
    a: &Matrix,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome {
    let n = b.len();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    let mut w = vec![0.0; n];
    loop {
        let r = a.residual(x, b);
        let beta = norm2(&r);
        if beta / bnorm <= tol || iterations >= max_iter {
            return GmresOutcome {
                relative_residual: beta / bnorm,
                iterations,
                converged: beta / bnorm <= tol,
            };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut zs: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut m = 0;
        while m < restart && iterations < max_iter {
            let z = precond(&basis[m]);
            a.apply(&z, &mut w);
            zs.push(z);
            // Modified Gram-Schmidt.
            for (i, q) in basis.iter().enumerate() {
                let hij: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                h[i][m] = hij;
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= hij * qk;
                }
            }
            let hn = norm2(&w);
            h[m + 1][m] = hn;
            for i in 0..m {
                let t = cs[i] * h[i][m] + sn[i] * h[i + 1][m];
                h[i + 1][m] = -sn[i] * h[i][m] + cs[i] * h[i + 1][m];
                h[i][m] = t;
            }
            let den = h[m][m].hypot(h[m + 1][m]);
            cs[m] = h[m][m] / den;
            sn[m] = h[m + 1][m] / den;
            h[m][m] = den;
            h[m + 1][m] = 0.0;
            g[m + 1] = -sn[m] * g[m];
            g[m] *= cs[m];
            m += 1;
            iterations += 1;
            if g[m].abs() / bnorm <= tol * 0.5 || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, z) in y.iter().zip(&zs) {
            for (xk, zk) in x.iter_mut().zip(z) {
                *xk += yi * zk;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize, shift: f64) -> (Vec<(usize, usize)>, Vec<f64>) {
        let mut e = Vec::new();
        let mut v = Vec::new();
        for i in 0..n {
            e.push((i, i));
            v.push(2.0 + shift);
            if i > 0 {
                e.push((i, i - 1));
                v.push(-1.0);
            }
            if i + 1 < n {
                e.push((i, i + 1));
                v.push(-1.0);
            }
        }
        (e, v)
    }

    #[test]
    fn lu_solves_tridiagonal() {
        let (e, v) = laplace_1d(50, 0.1);
        let mut p = Pattern::new(50, &e).unwrap();
        let a = p.matrix(&v).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x = p.lu(&a).unwrap().solve(&b);
        assert!(norm2(&a.residual(&x, &b)) < 1e-12);
        let y = p.cholesky(&a).unwrap().solve(&b);
        assert!(norm2(&a.residual(&y, &b)) < 1e-12);
    }

    #[test]
    fn duplicates_are_summed() {
        let p = Pattern::new(2, &[(0, 0), (0, 0), (1, 1), (1, 0)]).unwrap();
        let a = p.matrix(&[1.0, 2.0, 5.0, 1.0]).unwrap();
        let mut y = [0.0; 2];
        a.apply(&[1.0, 1.0], &mut y);
        assert_eq!(y, [3.0, 6.0]);
    }

    #[test]
    fn gmres_with_stale_preconditioner() {
        let n = 200;
        let (e, v0) = laplace_1d(n, 0.1);
        let mut p = Pattern::new(n, &e).unwrap();
        let a0 = p.matrix(&v0).unwrap();
        let lu = p.lu(&a0).unwrap();
        let (_, v1) = laplace_1d(n, 0.15);
        let a1 = p.matrix(&v1).unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.3).cos()).collect();
        let mut x = vec![0.0; n];
        let out = gmres(&a1, |r| lu.solve(r), &b, &mut x, 1e-12, 30, 200);
        assert!(out.converged, "{out:?}");
        assert!(norm2(&a1.residual(&x, &b)) / norm2(&b) < 1e-11);
    }
}
