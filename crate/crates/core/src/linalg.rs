//! Small fixed-size vectors and matrices, plus the dense and banded solvers
//! used by the relaxation and shooting code.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A 2-vector in joint space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T>(pub [T; 2]);

impl<T: Scalar> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self([x, y])
    }

    #[inline]
    pub fn zero() -> Self {
        Self([T::zero(); 2])
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self([v, v])
    }

    #[inline]
    pub fn x(&self) -> T {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> T {
        self.0[1]
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1]
    }

    #[inline]
    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.0[0].hypot(self.0[1])
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.0[0].is_finite() && self.0[1].is_finite()
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self([f(self.0[0]), f(self.0[1])])
    }

    /// Componentwise conversion between scalar widths.
    pub fn cast<U: Scalar>(self) -> Vec2<U> {
        Vec2([U::lit(self.0[0].to_f64_lossy()), U::lit(self.0[1].to_f64_lossy())])
    }
}

impl<T> Index<usize> for Vec2<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vec2<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.0[0] += o.0[0];
        self.0[1] += o.0[1];
    }
}

impl<T: Scalar> SubAssign for Vec2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.0[0] -= o.0[0];
        self.0[1] -= o.0[1];
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self([self.0[0] * s, self.0[1] * s])
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self([-self.0[0], -self.0[1]])
    }
}

/// A 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2<T>(pub [[T; 2]; 2]);

impl<T: Scalar> Mat2<T> {
    #[inline]
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Self([[a, b], [c, d]])
    }

    #[inline]
    pub fn zero() -> Self {
        Self([[T::zero(); 2]; 2])
    }

    #[inline]
    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn symmetric(a: T, b: T, d: T) -> Self {
        Self::new(a, b, b, d)
    }

    #[inline]
    pub fn det(&self) -> T {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    #[inline]
    pub fn trace(&self) -> T {
        self.0[0][0] + self.0[1][1]
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Self::new(self.0[0][0], self.0[1][0], self.0[0][1], self.0[1][1])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        let inv = T::one() / d;
        Some(Self::new(
            self.0[1][1] * inv,
            -self.0[0][1] * inv,
            -self.0[1][0] * inv,
            self.0[0][0] * inv,
        ))
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec2<T>) -> Vec2<T> {
        Vec2([
            self.0[0][0] * v.0[0] + self.0[0][1] * v.0[1],
            self.0[1][0] * v.0[0] + self.0[1][1] * v.0[1],
        ])
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j];
            }
        }
        r
    }

    /// `vᵀ A w`.
    #[inline]
    pub fn quad(&self, v: &Vec2<T>, w: &Vec2<T>) -> T {
        v.dot(&self.mul_vec(w))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.0[0][0] * s, self.0[0][1] * s, self.0[1][0] * s, self.0[1][1] * s)
    }

    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flatten()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn sym_eigenvalues(&self) -> [T; 2] {
        let two = T::lit(2.0);
        let half_tr = self.trace() / two;
        let half_diff = (self.0[0][0] - self.0[1][1]) / two;
        let off = (self.0[0][1] + self.0[1][0]) / two;
        let r = half_diff.hypot(off);
        [half_tr - r, half_tr + r]
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.0[0][0] + o.0[0][0],
            self.0[0][1] + o.0[0][1],
            self.0[1][0] + o.0[1][0],
            self.0[1][1] + o.0[1][1],
        )
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(-T::one())
    }
}

/// Generalized symmetric eigenproblem `K v = λ M v` for 2×2 matrices, with
/// `M` positive definite. Eigenvalues ascending; eigenvectors normalized so
/// that `vᵀ M v = 1`.
pub fn generalized_eigen<T: Scalar>(k: &Mat2<T>, m: &Mat2<T>) -> Option<([T; 2], [Vec2<T>; 2])> {
    // det(K - λM) = a λ² + b λ + c
    let a = m.det();
    let b = -(k.0[0][0] * m.0[1][1] + k.0[1][1] * m.0[0][0]
        - k.0[0][1] * m.0[1][0]
        - k.0[1][0] * m.0[0][1]);
    let c = k.det();
    if a <= T::zero() {
        return None;
    }
    let disc = (b * b - T::lit(4.0) * a * c).max(T::zero()).sqrt();
    let two_a = T::lit(2.0) * a;
    // Stable quadratic roots.
    let q = -(b + b.signum() * disc) / T::lit(2.0);
    let (mut l1, mut l2) = if q != T::zero() { (q / a, c / q) } else { (-b / two_a, -b / two_a) };
    if l1 > l2 {
        std::mem::swap(&mut l1, &mut l2);
    }
    let mut vecs = [Vec2::zero(); 2];
    for (slot, &lambda) in vecs.iter_mut().zip([l1, l2].iter()) {
        let s = *k - m.scale(lambda);
        // Null vector from the row with the larger norm.
        let r0 = Vec2::new(s.0[0][0], s.0[0][1]);
        let r1 = Vec2::new(s.0[1][0], s.0[1][1]);
        let row = if r0.norm() >= r1.norm() { r0 } else { r1 };
        let mut v = if row.norm() == T::zero() {
            Vec2::new(T::one(), T::zero())
        } else {
            Vec2::new(-row.y(), row.x())
        };
        let mn = m.quad(&v, &v).sqrt();
        v = v * (T::one() / mn);
        if v.x() < T::zero() || (v.x() == T::zero() && v.y() < T::zero()) {
            v = -v;
        }
        *slot = v;
    }
    // Re-orthogonalize the second vector against the first in the M inner product.
    let proj = m.quad(&vecs[0], &vecs[1]);
    if proj.abs() > T::zero() && (l2 - l1).abs() <= T::epsilon().sqrt() * l2.abs().max(T::one()) {
        let v = vecs[1] - vecs[0] * proj;
        vecs[1] = v * (T::one() / m.quad(&v, &v).sqrt());
    }
    Some(([l1, l2], vecs))
}

/// Dense row-major square matrix for the shooting Newton solves.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tiny = scale * T::epsilon() * T::from_count(n);
        for col in 0..n {
            let (piv, pmax) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -T::one()), |acc, v| if v.1 > acc.1 { v } else { acc });
            if pmax <= tiny || !pmax.is_finite() {
                return Err(Error::SolveFailure(format!("singular pivot in column {col}")));
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                x.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == T::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
                let xc = x[col];
                x[r] -= f * xc;
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for j in col + 1..n {
                s -= a[col * n + j] * x[j];
            }
            x[col] = s / a[col * n + col];
        }
        Ok(x)
    }
}

/// Thomas algorithm for a tridiagonal system with constant bands:
/// `lower·x[i-1] + diag·x[i] + upper·x[i+1] = rhs[i]`.
pub fn solve_tridiagonal<T: Scalar>(lower: T, diag: T, upper: T, rhs: &[T]) -> Result<Vec<T>> {
    let n = rhs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut denom = diag;
    if denom == T::zero() {
        return Err(Error::SolveFailure("zero pivot in tridiagonal solve".into()));
    }
    c[0] = upper / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag - lower * c[i - 1];
        if denom == T::zero() || !denom.is_finite() {
            return Err(Error::SolveFailure("zero pivot in tridiagonal solve".into()));
        }
        c[i] = upper / denom;
        d[i] = (rhs[i] - lower * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// Cyclic tridiagonal solve (corner entries `lower` at (0, n-1) and `upper`
/// at (n-1, 0)) via Sherman–Morrison.
pub fn solve_cyclic_tridiagonal<T: Scalar>(lower: T, diag: T, upper: T, rhs: &[T]) -> Result<Vec<T>> {
    let n = rhs.len();
    if n < 3 {
        return Err(Error::SolveFailure("cyclic system needs at least 3 unknowns".into()));
    }
    // A = B + u vᵀ with u = (γ, 0, …, 0, upper), v = (1, 0, …, 0, lower/γ).
    let gamma = -diag;
    let mut b = vec![diag; n];
    b[0] = diag - gamma;
    b[n - 1] = diag - upper * lower / gamma;
    let solve_b = |r: &[T]| -> Result<Vec<T>> {
        // Thomas with variable diagonal.
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let mut denom = b[0];
        c[0] = upper / denom;
        d[0] = r[0] / denom;
        for i in 1..n {
            denom = b[i] - lower * c[i - 1];
            if denom == T::zero() || !denom.is_finite() {
                return Err(Error::SolveFailure("zero pivot in cyclic tridiagonal solve".into()));
            }
            c[i] = upper / denom;
            d[i] = (r[i] - lower * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= c[i] * next;
        }
        Ok(x)
    };
    let y = solve_b(rhs)?;
    let mut u = vec![T::zero(); n];
    u[0] = gamma;
    u[n - 1] = upper;
    let z = solve_b(&u)?;
    let vy = y[0] + lower / gamma * y[n - 1];
    let vz = z[0] + lower / gamma * z[n - 1];
    let denom = T::one() + vz;
    if denom == T::zero() || !denom.is_finite() {
        return Err(Error::SolveFailure("singular Sherman-Morrison update".into()));
    }
    let f = vy / denom;
    Ok(y.iter().zip(&z).map(|(&yi, &zi)| yi - f * zi).collect())
}
