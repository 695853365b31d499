//! Validated quantum-state and observable types with spectral tools.
//!
//! Units are natural: hbar = k_B = c = 1.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Default tolerance for state validation.
pub const STATE_TOL: f64 = 1e-10;

/// An n x n density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: CMat,
}

impl DensityMatrix {
    /// Validate with the default tolerance.
    pub fn new(m: CMat) -> Result<Self> {
        validate_state(m, STATE_TOL)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn into_matrix(self) -> CMat {
        self.data
    }

    /// Diagonal populations (real parts of the diagonal).
    pub fn populations(&self) -> Vec<f64> {
        self.data.diagonal().iter().map(|z| z.re).collect()
    }

    /// Sorted (ascending) eigenvalue multiset.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let sym = linalg::herm_part(&self.data);
        let dec = spectral_matrix(&sym)?;
        Ok(dec.values.iter().copied().collect())
    }
}

/// A Hermitian operator (observable, Hamiltonian, dipole, coupling).
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    data: CMat,
}

impl Observable {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "observable must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let dev = linalg::herm_deviation(&m);
        if dev > 1e-12 {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { data: m })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Real eigenvalues, ascending.
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: CMat,
}

impl EigenDecomposition {
    /// Spectral projector onto the eigenspace spanned by columns in `cols`.
    pub fn projector(&self, cols: &[usize]) -> CMat {
        let n = self.vectors.nrows();
        let mut p = CMat::zeros(n, n);
        for &c in cols {
            let v = self.vectors.column(c);
            p += &v * v.adjoint();
        }
        p
    }

    pub fn reconstruct(&self) -> CMat {
        let n = self.vectors.nrows();
        let mut a = CMat::zeros(n, n);
        for (i, &lam) in self.values.iter().enumerate() {
            let v = self.vectors.column(i);
            a += (&v * v.adjoint()) * C64::new(lam, 0.0);
        }
        a
    }
}

/// Bloch vector w = Tr[rho sigma] of a qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub w: [f64; 3],
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        self.w.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Validate a matrix as a density matrix.
///
/// Hermiticity and trace are checked against the raw input; the matrix is
/// symmetrized to (A + A†)/2 before the eigenvalue check.
pub fn validate_state(m: CMat, tol: f64) -> Result<DensityMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "state must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let herm_dev = linalg::herm_deviation(&m);
    if herm_dev > tol {
        return Err(Error::NotHermitian(herm_dev));
    }
    let trace_dev = (linalg::trace(&m) - C64::new(1.0, 0.0)).norm();
    if trace_dev > tol {
        return Err(Error::TraceDeviation(trace_dev));
    }
    let sym = linalg::herm_part(&m);
    let dec = spectral_matrix(&sym)?;
    let min_eig = dec.values.min();
    if min_eig < -tol {
        return Err(Error::NegativeEigenvalue(min_eig));
    }
    Ok(DensityMatrix { data: m })
}

/// Hilbert-Schmidt distance sqrt(Tr[(A-B)†(A-B)]).
pub fn hs_distance(a: &CMat, b: &CMat) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(linalg::hs_norm(&(a - b)))
}

pub fn sigma_x() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    )
}

pub fn sigma_y() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    )
}

pub fn sigma_z() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
        ],
    )
}

/// Bloch vector of a qubit state, w_i = Tr[rho sigma_i].
pub fn bloch_vector(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "Bloch vector requires a qubit, got n={}",
            rho.dim()
        )));
    }
    let r = rho.matrix();
    let w = [
        linalg::trace(&(r * sigma_x())).re,
        linalg::trace(&(r * sigma_y())).re,
        linalg::trace(&(r * sigma_z())).re,
    ];
    Ok(BlochVector { w })
}

/// Qubit state rho = (I + <w, sigma>)/2 from a Bloch vector with ||w|| <= 1.
pub fn bloch_state(w: &BlochVector) -> Result<DensityMatrix> {
    if w.norm() > 1.0 + 1e-10 {
        return Err(Error::NegativeEigenvalue(0.5 * (1.0 - w.norm())));
    }
    let half = C64::new(0.5, 0.0);
    let m = (linalg::identity(2)
        + sigma_x() * C64::new(w.w[0], 0.0)
        + sigma_y() * C64::new(w.w[1], 0.0)
        + sigma_z() * C64::new(w.w[2], 0.0))
        * half;
    validate_state(m, 1e-9)
}

/// Eigendecomposition of a Hermitian observable.
pub fn spectral(a: &Observable) -> Result<EigenDecomposition> {
    spectral_matrix(a.matrix())
}

/// Eigendecomposition of a Hermitian matrix (raw). Eigenvalues ascending;
/// near-degenerate groups are re-orthonormalized by Gram-Schmidt in sorted
/// order so the output is deterministic.
pub fn spectral_matrix(m: &CMat) -> Result<EigenDecomposition> {
    let n = m.nrows();
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMat::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    // Deterministic tie-break inside near-degenerate blocks.
    let scale = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[end - 1]).abs() <= 1e-9 * scale {
            end += 1;
        }
        if end - start > 1 {
            gram_schmidt_block(&mut vectors, start, end);
        }
        start = end;
    }
    // Fix a global phase per eigenvector: largest-magnitude entry made real positive.
    for c in 0..n {
        let col = vectors.column(c).clone_owned();
        let (mut idx, mut best) = (0, 0.0);
        for (i, z) in col.iter().enumerate() {
            if z.norm() > best {
                best = z.norm();
                idx = i;
            }
        }
        if best > 0.0 {
            let phase = col[idx] / C64::new(best, 0.0);
            vectors.set_column(c, &(col * phase.conj()));
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

fn gram_schmidt_block(vectors: &mut CMat, start: usize, end: usize) {
    for c in start..end {
        let mut v = vectors.column(c).clone_owned();
        for p in start..c {
            let u = vectors.column(p).clone_owned();
            let proj = u.adjoint() * &v;
            v -= u * proj[(0, 0)];
        }
        let norm = v.norm();
        if norm > 1e-14 {
            v /= C64::new(norm, 0.0);
        }
        vectors.set_column(c, &v);
    }
}

/// Random density matrix from the Ginibre ensemble: G G† / Tr[G G†].
pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix {
    let g = linalg::random_complex_matrix(n, n, rng);
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m);
    let rho = m / tr;
    // Symmetrize the round-off before validating.
    let rho = linalg::herm_part(&rho);
    validate_state(rho, 1e-9).expect("Ginibre state is valid by construction")
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = linalg::random_complex_matrix(n, n, rng);
    linalg::herm_part(&g)
}

/// Random pure state projector |psi><psi|.
pub fn random_pure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix {
    let mut v = nalgebra::DVector::from_fn(n, |_, _| linalg::complex_gaussian(rng));
    v /= C64::new(v.norm(), 0.0);
    let m = &v * v.adjoint();
    validate_state(m, 1e-9).expect("projector is valid")
}

/// Haar-like random unitary via QR of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = linalg::random_complex_matrix(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        let d = r[(c, c)];
        if d.norm() > 0.0 {
            let phase = d / C64::new(d.norm(), 0.0);
            let col = q.column(c) * phase;
            q.set_column(c, &col);
        }
    }
    q
}
