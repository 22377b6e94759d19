//! Dense complex matrices sized for small spin systems (dim = 2^N, N <= 3).
//!
//! Everything is row-major `Vec<Complex<T>>`; at these dimensions naive
//! O(n^3) products are more than fast enough and keep the code free of
//! external linear-algebra dependencies.

use crate::error::{Result, SpinSimError};
use crate::Real;
use num_complex::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex::new(T::one(), T::zero()));
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Build from nested rows; panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "ragged matrix");
        Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.dim + j] = v;
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in mul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|i| self.get(i, i)).fold(
            Complex::new(T::zero(), T::zero()),
            |acc, v| acc + v,
        )
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|v| v.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Frobenius inner product Re Tr(A† B).
    pub fn inner(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.conj() * b).re)
            .fold(T::zero(), |x, y| x + y)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        Self::from_fn(n * m, |i, j| {
            self.get(i / m, j / m) * other.get(i % m, j % m)
        })
    }

    pub fn max_abs_entry(&self) -> T {
        self.data
            .iter()
            .map(|v| v.norm())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.sub(&self.adjoint()).max_abs_entry() <= tol + tol
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.mul(&self.adjoint())
            .sub(&Self::identity(self.dim))
            .frobenius_norm()
            <= tol
    }

    pub fn is_diagonal(&self, tol: T) -> bool {
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j && self.get(i, j).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn diag(&self) -> Vec<Complex<T>> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// (A + A†)/2.
    pub fn symmetrize(&self) -> Self {
        let half = Complex::new(T::of(0.5), T::zero());
        self.add(&self.adjoint()).scale(half)
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Returns (eigenvalues, V) with A = V diag(w) V†.
    pub fn hermitian_eigen(&self) -> (Vec<T>, Self) {
        let n = self.dim;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let tol = T::epsilon() * T::of(16.0) * (self.frobenius_norm() + T::one());
        for _sweep in 0..100 {
            let mut off = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off + a.get(p, q).norm();
                }
            }
            if off <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    let mag = apq.norm();
                    if mag <= tol * T::of(1e-3) {
                        continue;
                    }
                    let phi = apq.arg();
                    let app = a.get(p, p).re;
                    let aqq = a.get(q, q).re;
                    let theta = T::of(0.5) * T::atan2(mag + mag, app - aqq);
                    let (c, s) = (theta.cos(), theta.sin());
                    let eip = Complex::from_polar(T::one(), phi);
                    let eim = eip.conj();
                    let cs = Complex::new(c, T::zero());
                    let sp = eip * s; // s e^{+i phi}
                    let sm = eim * s; // s e^{-i phi}

                    // A <- A R  (columns p, q)
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, akp * cs + akq * sm);
                        a.set(k, q, akq * cs - akp * sp);
                    }
                    // A <- R† A  (rows p, q)
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, apk * cs + aqk * sp);
                        a.set(q, k, aqk * cs - apk * sm);
                    }
                    // V <- V R
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, vkp * cs + vkq * sm);
                        v.set(k, q, vkq * cs - vkp * sp);
                    }
                }
            }
        }
        let w = (0..n).map(|i| a.get(i, i).re).collect();
        (w, v)
    }

    pub fn min_eigenvalue(&self) -> T {
        let (w, _) = self.hermitian_eigen();
        w.into_iter().fold(T::infinity(), |a, b| if b < a { b } else { a })
    }

    /// exp(-i H t) for Hermitian H. Diagonal H gets the exact closed form;
    /// otherwise the eigen-decomposition route is used.
    pub fn exp_minus_i_hermitian(&self, t: T) -> Self {
        let n = self.dim;
        let small = T::epsilon() * T::of(64.0) * (self.max_abs_entry() + T::one());
        if self.is_diagonal(small) {
            let entries: Vec<Complex<T>> = (0..n)
                .map(|i| Complex::from_polar(T::one(), -self.get(i, i).re * t))
                .collect();
            return Self::diagonal(&entries);
        }
        let (w, v) = self.hermitian_eigen();
        let phases: Vec<Complex<T>> =
            w.iter().map(|&l| Complex::from_polar(T::one(), -l * t)).collect();
        v.mul(&Self::diagonal(&phases)).mul(&v.adjoint())
    }

    pub fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(SpinSimError::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }
}

/// Phase-aligned Frobenius distance: min over theta of ||U - e^{i theta} V||_F,
/// with theta taken from the phase of the largest-magnitude entry of V†U.
pub fn phase_aligned_distance<T: Real>(u: &CMatrix<T>, v: &CMatrix<T>) -> T {
    let m = v.adjoint().mul(u);
    let mut best = Complex::new(T::one(), T::zero());
    let mut best_mag = T::neg_infinity();
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            let e = m.get(i, j);
            if e.norm() > best_mag {
                best_mag = e.norm();
                best = e;
            }
        }
    }
    let theta = best.arg();
    u.sub(&v.scale(Complex::from_polar(T::one(), theta)))
        .frobenius_norm()
}
