//! Sparse storage, dense Hermitian eigensolver and the Krylov step
//! exponential used by the propagators.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Compressed sparse rows. Row sums are accumulated left to right, so a
/// product is bit-reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed; entries that sum to exactly zero are
    /// dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<C64> = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside {dim}×{dim}");
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let keep: Vec<bool> = vals.iter().map(|v| *v != ZERO).collect();
        let mut k = 0;
        rows.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        k = 0;
        cols.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        vals.retain(|v| *v != ZERO);
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    /// `y += alpha · A x`.
    pub fn mul_add(&self, alpha: f64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr += acc * alpha;
        }
    }

    /// `y = A x`.
    pub fn mul_into(&self, x: &[C64], y: &mut [C64]) {
        y.fill(ZERO);
        self.mul_add(1.0, x, y);
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.vals[k].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending; column `n` of
/// `vectors` is the eigenvector for `values[n]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

pub fn eigh(m: &DMatrix<C64>) -> HermitianEigen {
    let n = m.nrows();
    let (values, vectors) = if m.iter().all(|v| v.im == 0.0) {
        let re = m.map(|v| v.re);
        let e = SymmetricEigen::new(re);
        (e.eigenvalues.as_slice().to_vec(), e.eigenvectors.map(|v| C64::new(v, 0.0)))
    } else {
        let e = SymmetricEigen::new(m.clone());
        (e.eigenvalues.as_slice().to_vec(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    HermitianEigen { values: sorted_values, vectors: sorted_vectors }
}

pub fn eigvalsh(m: &DMatrix<C64>) -> Vec<f64> {
    let mut v: Vec<f64> = if m.iter().all(|v| v.im == 0.0) {
        m.map(|v| v.re).symmetric_eigenvalues().as_slice().to_vec()
    } else {
        m.clone().symmetric_eigenvalues().as_slice().to_vec()
    };
    v.sort_by(f64::total_cmp);
    v
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Bound on the a-posteriori truncation error per step.
    pub tolerance: f64,
    pub max_dim: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { tolerance: 1e-13, max_dim: 40 }
    }
}

/// Lanczos workspace, reused across steps of one propagation.
pub struct Krylov {
    options: KrylovOptions,
    basis: Vec<Vec<C64>>,
    w: Vec<C64>,
    /// Largest Krylov dimension used so far.
    pub max_used: usize,
}

impl Krylov {
    pub fn new(dim: usize, options: KrylovOptions) -> Self {
        let cap = options.max_dim.min(dim.max(1)) + 1;
        Self {
            options,
            basis: (0..cap).map(|_| vec![ZERO; dim]).collect(),
            w: vec![ZERO; dim],
            max_used: 0,
        }
    }

    /// `psi ← exp(-i H dt) psi` where `apply(x, y)` computes `y = H x`.
    ///
    /// Splits the step when the Krylov space does not converge within
    /// `max_dim` vectors.
    pub fn step<F>(&mut self, apply: &mut F, psi: &mut [C64], dt: f64) -> Result<()>
    where
        F: FnMut(&[C64], &mut [C64]),
    {
        if self.try_step(apply, psi, dt)? {
            return Ok(());
        }
        let mut pieces = 2;
        loop {
            if pieces > 1 << 16 {
                return Err(Error::Numerical(format!("Krylov step failed to converge for dt={dt}")));
            }
            let mut work = psi.to_vec();
            let sub = dt / pieces as f64;
            let mut ok = true;
            for _ in 0..pieces {
                if !self.try_step(apply, &mut work, sub)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                psi.copy_from_slice(&work);
                return Ok(());
            }
            pieces *= 2;
        }
    }

    fn try_step<F>(&mut self, apply: &mut F, psi: &mut [C64], dt: f64) -> Result<bool>
    where
        F: FnMut(&[C64], &mut [C64]),
    {
        let dim = psi.len();
        let beta0 = norm(psi);
        if beta0 == 0.0 {
            return Ok(true);
        }
        if !beta0.is_finite() {
            return Err(Error::Numerical("non-finite amplitudes".into()));
        }
        let max_m = self.basis.len() - 1;
        let mut alpha: Vec<f64> = Vec::with_capacity(max_m);
        let mut beta: Vec<f64> = Vec::with_capacity(max_m);
        for (b, p) in self.basis[0].iter_mut().zip(psi.iter()) {
            *b = p / beta0;
        }
        for j in 0..max_m {
            apply(&self.basis[j], &mut self.w);
            let a = dot(&self.basis[j], &self.w).re;
            // Full reorthogonalization against every previous vector.
            for k in 0..=j {
                let c = dot(&self.basis[k], &self.w);
                for (wi, bi) in self.w.iter_mut().zip(&self.basis[k]) {
                    *wi -= c * bi;
                }
            }
            alpha.push(a);
            let b = norm(&self.w);
            if !b.is_finite() {
                return Err(Error::Numerical("non-finite Krylov vector".into()));
            }
            let m = j + 1;
            let scale = alpha.iter().map(|x| x.abs()).fold(0.0, f64::max) + beta.iter().fold(0.0f64, |s, x| s.max(*x));
            let breakdown = b <= 1e-13 * scale.max(1e-300) || m == dim;
            if m >= 2 || breakdown {
                let y = tridiagonal_exp_first_column(&alpha, &beta, dt);
                let err = b * y[m - 1].norm();
                if breakdown || err < self.options.tolerance {
                    psi.fill(ZERO);
                    for (k, yk) in y.iter().enumerate() {
                        let c = yk * beta0;
                        for (p, bk) in psi.iter_mut().zip(&self.basis[k]) {
                            *p += c * bk;
                        }
                    }
                    self.max_used = self.max_used.max(m);
                    return Ok(true);
                }
            }
            if m == max_m {
                break;
            }
            beta.push(b);
            let (head, tail) = self.basis.split_at_mut(j + 1);
            let _ = head;
            for (t, wi) in tail[0].iter_mut().zip(&self.w) {
                *t = wi / b;
            }
        }
        Ok(false)
    }
}

/// `exp(-i dt T) e₁` for the real symmetric tridiagonal `T` with diagonal
/// `alpha` and off-diagonal `beta`.
fn tridiagonal_exp_first_column(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<C64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let e = SymmetricEigen::new(t);
    (0..m)
        .map(|r| {
            (0..m).fold(ZERO, |acc, n| {
                let phase = C64::from_polar(1.0, -e.eigenvalues[n] * dt);
                acc + phase * (e.eigenvectors[(r, n)] * e.eigenvectors[(0, n)])
            })
        })
        .collect()
}
