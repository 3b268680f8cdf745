//! Small dense matrices over a [`Scalar`] and the linear solves used by the
//! cohomology solvers.
//!
//! Floating scalars use a singular value decomposition and return the
//! minimum-norm least-squares solution; exact scalars use fraction-free row
//! reduction and return the basic solution with free variables set to zero.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let data = rows.into_iter().flatten().collect();
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn diagonal(d: &[S]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, x) in d.iter().enumerate() {
            m.data[i * d.len() + i] = x.clone();
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j].add_to(&a.times(b));
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for (j, x) in v.iter().enumerate() {
                    let a = self.get(i, j);
                    if !a.is_zero() && !x.is_zero() {
                        acc.add_to(&a.times(x));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn scaled(&self, s: &S) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.times(s)).collect(),
        }
    }

    pub fn minus(&self, other: &Self) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.minus(b))
                .collect(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).is_zero()))
    }

    pub fn diag(&self) -> Vec<S> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i).clone())
            .collect()
    }

    /// Largest entry modulus of `self^* self - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let id = Self::identity(self.cols);
        p.minus(&id)
            .data
            .iter()
            .map(|x| x.modulus())
            .fold(0.0, f64::max)
    }

    /// Exact unitarity for exact scalars, `defect <= tol` otherwise.
    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        if S::EXACT {
            let p = self.adjoint().mul(self);
            p == Self::identity(self.cols)
        } else {
            self.unitarity_defect() <= tol
        }
    }

    pub fn to_c64(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).to_c64())
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        let b = other.get(k, l);
                        if !b.is_zero() {
                            out.set(i * other.rows + k, j * other.cols + l, a.times(b));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// Inverse by exact or partial-pivoting elimination.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.rows;
        if n != self.cols {
            return None;
        }
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .filter(|&r| !a.get(r, col).is_zero())
                .max_by(|&x, &y| a.get(x, col).modulus().total_cmp(&a.get(y, col).modulus()))?;
            if !S::EXACT && a.get(pivot, col).modulus() < 1e-300 {
                return None;
            }
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let p = a.get(col, col).inv()?;
            for j in 0..n {
                let v = a.get(col, j).times(&p);
                a.set(col, j, v);
                let w = inv.get(col, j).times(&p);
                inv.set(col, j, w);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(r, j).minus(&f.times(a.get(col, j)));
                    a.set(r, j, v);
                    let w = inv.get(r, j).minus(&f.times(inv.get(col, j)));
                    inv.set(r, j, w);
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

/// Outcome of a (possibly inconsistent) linear solve `A x = b`.
#[derive(Clone, Debug)]
pub struct LinearSolve<S> {
    pub solution: Vec<S>,
    /// `b - A x`; zero when the system is consistent.
    pub residual: Vec<S>,
    /// Smallest singular value of `A` (zero when rank deficient).
    pub sigma_min: f64,
    /// Smallest singular value kept in the solve.
    pub sigma_min_kept: f64,
    pub rank: usize,
}

/// Singular values below this are treated as zero in float mode.
pub const RANK_CUTOFF: f64 = 1e-12;

pub fn solve<S: Scalar>(a: &Mat<S>, b: &[S]) -> LinearSolve<S> {
    if S::EXACT {
        solve_exact(a, b)
    } else {
        solve_svd(a, b)
    }
}

fn singular_values(a: &Mat<impl Scalar>) -> Vec<f64> {
    if a.rows == 0 || a.cols == 0 {
        return vec![];
    }
    let m = a.to_c64();
    m.singular_values().iter().copied().collect()
}

fn solve_svd<S: Scalar>(a: &Mat<S>, b: &[S]) -> LinearSolve<S> {
    let m = a.to_c64();
    let rhs = nalgebra::DVector::from_iterator(b.len(), b.iter().map(|x| x.to_c64()));
    if a.cols == 0 {
        return LinearSolve {
            solution: vec![],
            residual: b.to_vec(),
            sigma_min: 0.0,
            sigma_min_kept: f64::INFINITY,
            rank: 0,
        };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let mut x = nalgebra::DVector::<Complex64>::zeros(a.cols);
    let mut rank = 0;
    let mut kept = f64::INFINITY;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > RANK_CUTOFF {
            rank += 1;
            kept = kept.min(s);
            let coef = u.column(k).dotc(&rhs) / s;
            x += vt.row(k).adjoint() * coef;
        }
    }
    let res = rhs - m * &x;
    let full = a.cols.min(a.rows);
    let sigma_min = if rank < a.cols {
        0.0
    } else {
        svd.singular_values
            .iter()
            .take(full)
            .copied()
            .fold(f64::INFINITY, f64::min)
    };
    LinearSolve {
        solution: x.iter().map(|c| S::from_c64(*c)).collect(),
        residual: res.iter().map(|c| S::from_c64(*c)).collect(),
        sigma_min,
        sigma_min_kept: kept,
        rank,
    }
}

fn solve_exact<S: Scalar>(a: &Mat<S>, b: &[S]) -> LinearSolve<S> {
    let rows = a.rows;
    let cols = a.cols;
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let Some(p) = (row..rows).find(|&r| !m.get(r, col).is_zero()) else {
            continue;
        };
        m.swap_rows(row, p);
        rhs.swap(row, p);
        let inv = m.get(row, col).inv().expect("nonzero pivot");
        for j in col..cols {
            let v = m.get(row, j).times(&inv);
            m.set(row, j, v);
        }
        rhs[row] = rhs[row].times(&inv);
        for r in 0..rows {
            if r == row {
                continue;
            }
            let f = m.get(r, col).clone();
            if f.is_zero() {
                continue;
            }
            for j in col..cols {
                let v = m.get(r, j).minus(&f.times(m.get(row, j)));
                m.set(r, j, v);
            }
            let v = rhs[r].minus(&f.times(&rhs[row]));
            rhs[r] = v;
        }
        pivots.push(col);
        row += 1;
    }
    let mut x = vec![S::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = rhs[r].clone();
    }
    let ax = a.apply(&x);
    let residual: Vec<S> = b.iter().zip(&ax).map(|(bi, yi)| bi.minus(yi)).collect();
    let sv = singular_values(a);
    let rank = pivots.len();
    let sigma_min = if rank < cols {
        0.0
    } else {
        sv.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let kept = sv
        .iter()
        .copied()
        .filter(|&s| s > 0.0)
        .fold(f64::INFINITY, f64::min);
    LinearSolve {
        solution: x,
        residual,
        sigma_min,
        sigma_min_kept: kept,
        rank,
    }
}

pub fn sup_norm<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}
