//! Small dense complex linear-algebra helpers shared across the crate.
//!
//! Vectorization is column-stacking throughout: `vec(rho)` stacks the columns
//! of `rho`, so `vec(A B C) = (C^T ⊗ A) vec(B)`. nalgebra stores matrices
//! column-major, which makes `vec`/`unvec` plain reshapes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint()
}

/// Hermitian part (A + A†)/2.
pub fn herm_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn trace(a: &CMat) -> C64 {
    a.diagonal().sum()
}

/// Hilbert-Schmidt inner product Tr[A† B].
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Hilbert-Schmidt (Frobenius) norm sqrt(Tr[A† A]).
pub fn hs_norm(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Max elementwise deviation from Hermiticity |A - A†|.
pub fn herm_deviation(a: &CMat) -> f64 {
    let d = a - a.adjoint();
    d.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Column-stacking vectorization.
pub fn vec_col(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

pub fn unvec(v: &CVec, n: usize) -> CMat {
    CMat::from_column_slice(n, n, v.as_slice())
}

/// Matrix exponential (scaling-and-squaring Padé, via nalgebra).
pub fn expm(a: &CMat) -> CMat {
    a.exp()
}

/// Choi matrix of a superoperator given in column-stacking convention.
///
/// J[(i n + k), (j n + l)] = <k| Phi(|i><j|) |l> = S[l n + k, j n + i].
pub fn choi(s: &CMat, n: usize) -> CMat {
    assert_eq!(s.nrows(), n * n);
    assert_eq!(s.ncols(), n * n);
    let mut j = CMat::zeros(n * n, n * n);
    for i in 0..n {
        for k in 0..n {
            for jj in 0..n {
                for l in 0..n {
                    j[(i * n + k, jj * n + l)] = s[(l * n + k, jj * n + i)];
                }
            }
        }
    }
    j
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn random_complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}
