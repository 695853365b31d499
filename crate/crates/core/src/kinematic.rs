//! Kraus-map (kinematic-picture) machinery.
//!
//! A CP trace-preserving map with lambda Kraus operators is a point V on the
//! complex Stiefel manifold: the (lambda n) x n stack of the K_i with
//! V^dagger V = I. The objective Tr[(sum K_i rho K_i^dagger) O] is optimized
//! directly over this manifold with a projected gradient and QR retraction.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::qcore::{spectral_matrix, validate_state, DensityMatrix, Observable};

pub const STIEFEL_TOL: f64 = 1e-10;

/// A point on the Stiefel manifold: lambda stacked n x n Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausPoint {
    pub n: usize,
    pub lambda: usize,
    /// (lambda n) x n stacked matrix V.
    pub v: CMat,
}

impl KrausPoint {
    pub fn new(n: usize, lambda: usize, v: CMat) -> Result<Self> {
        if lambda == 0 || v.nrows() != lambda * n || v.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "stacked Kraus matrix is {}x{}, expected {}x{n}",
                v.nrows(),
                v.ncols(),
                lambda * n
            )));
        }
        Ok(Self { n, lambda, v })
    }

    pub fn from_operators(ops: &[CMat]) -> Result<Self> {
        let lambda = ops.len();
        if lambda == 0 {
            return Err(Error::DimensionMismatch("need at least one operator".into()));
        }
        let n = ops[0].nrows();
        let mut v = CMat::zeros(lambda * n, n);
        for (i, k) in ops.iter().enumerate() {
            if k.nrows() != n || k.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "operator {i} is {}x{}, expected {n}x{n}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            v.view_mut((i * n, 0), (n, n)).copy_from(k);
        }
        Self::new(n, lambda, v)
    }

    pub fn operator(&self, i: usize) -> CMat {
        self.v.view((i * self.n, 0), (self.n, self.n)).into()
    }

    pub fn operators(&self) -> Vec<CMat> {
        (0..self.lambda).map(|i| self.operator(i)).collect()
    }

    /// Frobenius deviation of V^dagger V from the identity.
    pub fn constraint_deviation(&self) -> f64 {
        let g = self.v.adjoint() * &self.v;
        linalg::hs_norm(&(g - linalg::identity(self.n)))
    }
}

/// Kind of critical point found by a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    MinCandidate,
    MaxCandidate,
    SaddleCandidate,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::MinCandidate => "min",
            Classification::MaxCandidate => "max",
            Classification::SaddleCandidate => "saddle",
        }
    }
}

/// Outcome of one optimization / saddle-seeking run.
#[derive(Debug, Clone)]
pub struct CriticalPointReport {
    pub value: f64,
    pub gradient_norm: f64,
    pub classification: Classification,
    pub point: KrausPoint,
    pub iterations: usize,
    /// False when the run hit the iteration cap before the stationarity
    /// tolerance; the best iterate is still reported.
    pub converged: bool,
}

/// Output state sum K_i rho K_i^dagger.
pub fn apply_kraus(k: &KrausPoint, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != k.n {
        return Err(Error::DimensionMismatch(format!(
            "state is {}-dimensional, Kraus operators are {}-dimensional",
            rho.dim(),
            k.n
        )));
    }
    let dev = k.constraint_deviation();
    if dev > 1e-8 {
        return Err(Error::ConstraintViolation(dev));
    }
    let mut out = CMat::zeros(k.n, k.n);
    for i in 0..k.lambda {
        let ki = k.operator(i);
        out += &ki * rho.matrix() * ki.adjoint();
    }
    validate_state(linalg::herm_part(&out), 1e-8)
}

/// All-to-one steering channel: n^2 operators K_ij = sqrt(p_i)|phi_i><chi_j|
/// built from the spectral decomposition of the target, sending every state
/// exactly to `rho_f`.
pub fn theorem1_kraus(rho_f: &DensityMatrix, basis: Option<&CMat>) -> Result<KrausPoint> {
    let n = rho_f.dim();
    let chi = match basis {
        Some(b) => {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "basis is {}x{}, expected {n}x{n}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            let g = b.adjoint() * b;
            let dev = linalg::hs_norm(&(g - linalg::identity(n)));
            if dev > 1e-10 {
                return Err(Error::BasisNotOrthonormal(dev));
            }
            b.clone()
        }
        None => linalg::identity(n),
    };
    let eig = spectral_matrix(rho_f.matrix())?;
    let mut ops = Vec::with_capacity(n * n);
    for i in 0..n {
        let p = eig.values[i].max(0.0); // clamp round-off negatives
        let sp = C64::new(p.sqrt(), 0.0);
        let phi = eig.vectors.column(i);
        for j in 0..n {
            let bra = chi.column(j).adjoint();
            ops.push((&phi * bra) * sp);
        }
    }
    KrausPoint::from_operators(&ops)
}

/// Uniform-ish random Stiefel point: complex Gaussian stack, orthonormalized.
pub fn random_stiefel<R: Rng + ?Sized>(n: usize, lambda: usize, rng: &mut R) -> KrausPoint {
    let g = linalg::random_complex_matrix(lambda * n, n, rng);
    KrausPoint {
        n,
        lambda,
        v: orthonormalize(&g),
    }
}

/// Thin-QR orthonormalization with the R-diagonal phase fixed real positive.
fn orthonormalize(a: &CMat) -> CMat {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..q.ncols() {
        let d = r[(c, c)];
        if d.norm() > 0.0 {
            let phase = d / C64::new(d.norm(), 0.0);
            let corr = phase.conj();
            for rr in 0..q.nrows() {
                q[(rr, c)] *= corr;
            }
        }
    }
    q
}

/// Block action of I_lambda (x) O on a stacked matrix.
fn apply_block_observable(o: &CMat, v: &CMat, lambda: usize, n: usize) -> CMat {
    let mut out = CMat::zeros(lambda * n, n);
    for i in 0..lambda {
        let block = o * v.view((i * n, 0), (n, n));
        out.view_mut((i * n, 0), (n, n)).copy_from(&block);
    }
    out
}

/// J1 = Tr[(sum K_i rho K_i^dagger) O] = Re tr[rho V^dagger (I (x) O) V].
pub fn kinematic_objective(k: &KrausPoint, rho: &DensityMatrix, o: &Observable) -> Result<f64> {
    if rho.dim() != k.n || o.dim() != k.n {
        return Err(Error::DimensionMismatch(
            "state, observable and Kraus dimensions must agree".into(),
        ));
    }
    let mv = apply_block_observable(o.matrix(), &k.v, k.lambda, k.n);
    Ok(linalg::trace(&(rho.matrix() * (k.v.adjoint() * mv))).re)
}

fn objective_raw(v: &CMat, rho: &CMat, o: &CMat, lambda: usize, n: usize) -> f64 {
    let mv = apply_block_observable(o, v, lambda, n);
    linalg::trace(&(rho * (v.adjoint() * mv))).re
}

/// Euclidean gradient G = 2 (I (x) O) V rho under the real inner product
/// Re tr(A^dagger B).
fn euclidean_grad(v: &CMat, rho: &CMat, o: &CMat, lambda: usize, n: usize) -> CMat {
    apply_block_observable(o, v, lambda, n) * rho * C64::new(2.0, 0.0)
}

/// Projection of an ambient matrix onto the tangent space at V:
/// A - V herm(V^dagger A).
fn tangent_project(v: &CMat, a: &CMat) -> CMat {
    let s = linalg::herm_part(&(v.adjoint() * a));
    a - v * s
}

/// Riemannian gradient of J1 at a point.
pub fn riemannian_grad(k: &KrausPoint, rho: &DensityMatrix, o: &Observable) -> Result<CMat> {
    if rho.dim() != k.n || o.dim() != k.n {
        return Err(Error::DimensionMismatch(
            "state, observable and Kraus dimensions must agree".into(),
        ));
    }
    let g = euclidean_grad(&k.v, rho.matrix(), o.matrix(), k.lambda, k.n);
    Ok(tangent_project(&k.v, &g))
}

fn rgrad_raw(v: &CMat, rho: &CMat, o: &CMat, lambda: usize, n: usize) -> CMat {
    tangent_project(v, &euclidean_grad(v, rho, o, lambda, n))
}

fn retract(v: &CMat, step: &CMat) -> CMat {
    orthonormalize(&(v + step))
}

#[derive(Debug, Clone, Copy)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeSettings {
    pub stat_tol: f64,
    pub max_iters: usize,
    pub initial_step: f64,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        Self {
            stat_tol: 1e-8,
            max_iters: 10_000,
            initial_step: 1.0,
        }
    }
}

/// Projected-gradient descent/ascent with QR retraction and backtracking.
pub fn optimize_stiefel(
    v0: &KrausPoint,
    rho: &DensityMatrix,
    o: &Observable,
    sense: Sense,
    settings: &OptimizeSettings,
) -> Result<CriticalPointReport> {
    let (lambda, n) = (v0.lambda, v0.n);
    let (r, om) = (rho.matrix(), o.matrix());
    let sign = match sense {
        Sense::Minimize => -1.0,
        Sense::Maximize => 1.0,
    };
    let mut v = orthonormalize(&v0.v);
    let mut value = objective_raw(&v, r, om, lambda, n);
    let mut step = settings.initial_step;
    let mut iterations = 0;
    let mut converged = false;
    let mut gnorm = 0.0;
    for it in 0..settings.max_iters {
        let grad = rgrad_raw(&v, r, om, lambda, n);
        gnorm = linalg::hs_norm(&grad);
        if gnorm <= settings.stat_tol {
            converged = true;
            iterations = it;
            break;
        }
        let dir = &grad * C64::new(sign, 0.0);
        // Armijo backtracking on the retracted step
        let mut t = step;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = retract(&v, &(&dir * C64::new(t, 0.0)));
            let cv = objective_raw(&cand, r, om, lambda, n);
            if sign * (cv - value) >= 1e-4 * t * gnorm * gnorm {
                v = cand;
                value = cv;
                step = (t * 2.0).min(settings.initial_step.max(1.0));
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // step underflow: treat current point as stationary at precision
            iterations = it;
            converged = gnorm <= settings.stat_tol * 100.0;
            break;
        }
        iterations = it + 1;
    }
    let point = KrausPoint { n, lambda, v };
    let classification = match sense {
        Sense::Minimize => Classification::MinCandidate,
        Sense::Maximize => Classification::MaxCandidate,
    };
    Ok(CriticalPointReport {
        value,
        gradient_norm: gnorm,
        classification,
        point,
        iterations,
        converged,
    })
}

/// Orthonormal basis of the tangent space at V under Re tr(A^dagger B).
fn tangent_basis(v: &CMat) -> Vec<CMat> {
    let (rows, cols) = v.shape();
    let mut basis: Vec<CMat> = Vec::new();
    for unit in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
        for rr in 0..rows {
            for cc in 0..cols {
                let mut e = CMat::zeros(rows, cols);
                e[(rr, cc)] = unit;
                let mut t = tangent_project(v, &e);
                for b in &basis {
                    let coeff = real_inner(b, &t);
                    t -= b * C64::new(coeff, 0.0);
                }
                let norm = linalg::hs_norm(&t);
                if norm > 1e-8 {
                    basis.push(t / C64::new(norm, 0.0));
                }
            }
        }
    }
    basis
}

fn real_inner(a: &CMat, b: &CMat) -> f64 {
    linalg::hs_inner(a, b).re
}

/// Squared Riemannian gradient norm, the quantity minimized by saddle seeking.
fn grad_norm_sq(v: &CMat, rho: &CMat, o: &CMat, lambda: usize, n: usize) -> f64 {
    let g = rgrad_raw(v, rho, o, lambda, n);
    real_inner(&g, &g)
}

/// Riemannian gradient of the squared gradient norm g(V) = ||Gamma||^2 with
/// Gamma = G - V herm(V^dagger G) and G = 2 (I (x) O) V rho.  The ambient
/// gradient is 4 M Gamma rho - 2 Gamma S where S = herm(V^dagger G); the
/// cross term through V^dagger Gamma drops out because it pairs an
/// anti-Hermitian factor with a Hermitian one.
fn grad_of_grad_norm_sq(v: &CMat, rho: &CMat, o: &CMat, lambda: usize, n: usize) -> CMat {
    let g = euclidean_grad(v, rho, o, lambda, n);
    let s = linalg::herm_part(&(v.adjoint() * &g));
    let gamma = &g - v * &s;
    let ambient = apply_block_observable(o, &gamma, lambda, n) * rho * C64::new(4.0, 0.0)
        - &gamma * s * C64::new(2.0, 0.0);
    tangent_project(v, &ambient)
}

/// Directional derivative of Gamma(V) = G - V herm(V^dagger G) along an
/// ambient direction B, with G = 2 M V rho.
fn dgamma(v: &CMat, b: &CMat, g: &CMat, s: &CMat, rho: &CMat, o: &CMat, lambda: usize, n: usize) -> CMat {
    let dg = apply_block_observable(o, b, lambda, n) * rho * C64::new(2.0, 0.0);
    let ds = linalg::herm_part(&(b.adjoint() * g + v.adjoint() * &dg));
    dg - b * s - v * ds
}

fn flatten_real(m: &CMat) -> nalgebra::DVector<f64> {
    let mut out = nalgebra::DVector::zeros(2 * m.len());
    for (i, z) in m.iter().enumerate() {
        out[2 * i] = z.re;
        out[2 * i + 1] = z.im;
    }
    out
}

/// Gauss-Newton step for the residual Gamma(V) = 0 over the tangent space at
/// V, solved by truncated-SVD least squares (the critical set is a manifold,
/// so the Jacobian is rank deficient along it).
fn gauss_newton_step(
    v: &CMat,
    gamma: &CMat,
    rho: &CMat,
    o: &CMat,
    lambda: usize,
    n: usize,
) -> Option<CMat> {
    let g = euclidean_grad(v, rho, o, lambda, n);
    let s = linalg::herm_part(&(v.adjoint() * &g));
    let basis = tangent_basis(v);
    if basis.is_empty() {
        return None;
    }
    let rows = 2 * gamma.len();
    let mut jac = nalgebra::DMatrix::zeros(rows, basis.len());
    for (k, b) in basis.iter().enumerate() {
        let col = flatten_real(&dgamma(v, b, &g, &s, rho, o, lambda, n));
        jac.set_column(k, &col);
    }
    let rhs = -flatten_real(gamma);
    let svd = jac.svd(true, true);
    let smax = svd.singular_values.max();
    let coeffs = svd.solve(&rhs, 1e-8 * smax.max(1e-300)).ok()?;
    let mut dir = CMat::zeros(v.nrows(), v.ncols());
    for (k, b) in basis.iter().enumerate() {
        dir += b * C64::new(coeffs[k], 0.0);
    }
    Some(dir)
}

/// Seek a stationary point (of any kind) by driving the Riemannian gradient
/// of J1 to zero: Gauss-Newton on the residual, with descent on the squared
/// gradient norm as a globalization fallback.
pub fn saddle_seek(
    v0: &KrausPoint,
    rho: &DensityMatrix,
    o: &Observable,
    stat_tol: f64,
    max_iters: usize,
) -> Result<CriticalPointReport> {
    let (lambda, n) = (v0.lambda, v0.n);
    let (r, om) = (rho.matrix(), o.matrix());
    let mut v = orthonormalize(&v0.v);
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..max_iters {
        let gamma = rgrad_raw(&v, r, om, lambda, n);
        let g = real_inner(&gamma, &gamma);
        if g.sqrt() <= stat_tol {
            converged = true;
            iterations = it;
            break;
        }
        let mut accepted = false;
        if let Some(dir) = gauss_newton_step(&v, &gamma, r, om, lambda, n) {
            let mut t = 1.0;
            for _ in 0..30 {
                let cand = retract(&v, &(&dir * C64::new(t, 0.0)));
                let cg = grad_norm_sq(&cand, r, om, lambda, n);
                if cg < g * (1.0 - 1e-4 * t) {
                    v = cand;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if !accepted {
            // fall back to a gradient step on ||Gamma||^2
            let descent = -grad_of_grad_norm_sq(&v, r, om, lambda, n);
            let dnorm = linalg::hs_norm(&descent);
            if dnorm < 1e-14 {
                iterations = it;
                break;
            }
            let mut t = 1.0;
            for _ in 0..50 {
                let cand = retract(&v, &(&descent * C64::new(t, 0.0)));
                let cg = grad_norm_sq(&cand, r, om, lambda, n);
                if cg < g - 1e-4 * t * dnorm * dnorm {
                    v = cand;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if !accepted {
            iterations = it;
            break;
        }
        iterations = it + 1;
    }
    let gnorm = grad_norm_sq(&v, r, om, lambda, n).sqrt();
    converged = converged || gnorm <= stat_tol;
    let value = objective_raw(&v, r, om, lambda, n);
    let point = KrausPoint { n, lambda, v };
    let classification = classify(&point, rho, o, 0xC0FFEE);
    Ok(CriticalPointReport {
        value,
        gradient_norm: gnorm,
        classification,
        point,
        iterations,
        converged,
    })
}

/// Classify a stationary point by sampling the second difference of J1 along
/// random tangent directions: mixed signs mean a saddle.
pub fn classify(k: &KrausPoint, rho: &DensityMatrix, o: &Observable, seed: u64) -> Classification {
    let (lambda, n) = (k.lambda, k.n);
    let (r, om) = (rho.matrix(), o.matrix());
    let j0 = objective_raw(&k.v, r, om, lambda, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-3;
    let thr = 1e-10 * (1.0 + j0.abs());
    let mut pos = 0usize;
    let mut neg = 0usize;
    for _ in 0..50 {
        let raw = linalg::random_complex_matrix(lambda * n, n, &mut rng);
        let mut xi = tangent_project(&k.v, &raw);
        let norm = linalg::hs_norm(&xi);
        if norm < 1e-12 {
            continue;
        }
        xi /= C64::new(norm, 0.0);
        let jp = objective_raw(&retract(&k.v, &(&xi * C64::new(h, 0.0))), r, om, lambda, n);
        let jm = objective_raw(&retract(&k.v, &(&xi * C64::new(-h, 0.0))), r, om, lambda, n);
        let second = jp - 2.0 * j0 + jm;
        if second > thr {
            pos += 1;
        } else if second < -thr {
            neg += 1;
        }
    }
    if pos > 0 && neg > 0 {
        Classification::SaddleCandidate
    } else if neg > 0 {
        Classification::MaxCandidate
    } else {
        Classification::MinCandidate
    }
}

/// Distinct stationary values found in a scan, clustered to a tolerance.
pub fn cluster_values(reports: &[CriticalPointReport], tol: f64) -> Vec<(f64, usize)> {
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for r in reports {
        if !r.converged {
            continue;
        }
        match clusters.iter_mut().find(|(c, _)| (*c - r.value).abs() <= tol) {
            Some((c, count)) => {
                // running mean keeps the representative centered
                *c = (*c * *count as f64 + r.value) / (*count as f64 + 1.0);
                *count += 1;
            }
            None => clusters.push((r.value, 1)),
        }
    }
    clusters.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    clusters
}

#[derive(Debug, Clone, Copy)]
pub struct ScanSettings {
    pub restarts: usize,
    pub saddle_runs: usize,
    pub lambda: usize,
    pub stat_tol: f64,
    pub saddle_stat_tol: f64,
    pub cluster_tol: f64,
    pub seed: u64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            restarts: 20,
            saddle_runs: 100,
            lambda: 4,
            stat_tol: 1e-8,
            saddle_stat_tol: 1e-6,
            cluster_tol: 1e-4,
            seed: 0,
        }
    }
}

/// Multi-start landscape scan: gradient descents, ascents and saddle-seeking
/// runs from random points. Runs are independent and execute in parallel.
pub fn landscape_scan(
    rho: &DensityMatrix,
    o: &Observable,
    settings: &ScanSettings,
) -> Result<Vec<CriticalPointReport>> {
    let n = rho.dim();
    if o.dim() != n {
        return Err(Error::DimensionMismatch(
            "state and observable dimensions must agree".into(),
        ));
    }
    let opt = OptimizeSettings {
        stat_tol: settings.stat_tol,
        ..OptimizeSettings::default()
    };
    let jobs: Vec<(usize, u8)> = (0..settings.restarts)
        .flat_map(|i| [(i, 0u8), (i, 1u8)])
        .chain((0..settings.saddle_runs).map(|i| (i, 2u8)))
        .collect();
    let reports: Result<Vec<CriticalPointReport>> = jobs
        .par_iter()
        .map(|&(i, kind)| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(settings.seed ^ (kind as u64) << 32 ^ i as u64);
            let v0 = random_stiefel(n, settings.lambda, &mut rng);
            match kind {
                0 => optimize_stiefel(&v0, rho, o, Sense::Minimize, &opt),
                1 => optimize_stiefel(&v0, rho, o, Sense::Maximize, &opt),
                _ => saddle_seek(&v0, rho, o, settings.saddle_stat_tol, 400),
            }
        })
        .collect();
    let mut reports = reports?;
    // re-classify the extremal runs by curvature sampling for reporting
    for r in reports.iter_mut() {
        if r.converged {
            r.classification = classify(&r.point, rho, o, settings.seed ^ 0x5EED);
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{self, bloch_state, random_density, random_pure, BlochVector};
    use nalgebra::DVector;

    fn obs01() -> Observable {
        Observable::new(CMat::from_diagonal(&DVector::from_iterator(
            2,
            [0.0, 1.0].iter().map(|&v| C64::new(v, 0.0)),
        )))
        .unwrap()
    }

    #[test]
    fn identity_channel() {
        let k = KrausPoint::from_operators(&[linalg::identity(2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(2, &mut rng);
        let out = apply_kraus(&k, &rho).unwrap();
        assert!(qcore::hs_distance(out.matrix(), rho.matrix()).unwrap() < 1e-14);
    }

    #[test]
    fn unitary_channel_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = qcore::random_unitary(3, &mut rng);
        let k = KrausPoint::from_operators(&[u.clone()]).unwrap();
        let rho = random_density(3, &mut rng);
        let out = apply_kraus(&k, &rho).unwrap();
        let expect = &u * rho.matrix() * u.adjoint();
        assert!(qcore::hs_distance(out.matrix(), &expect).unwrap() < 1e-12);
        let s0 = rho.spectrum().unwrap();
        let s1 = out.spectrum().unwrap();
        for (a, b) in s0.iter().zip(s1.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn random_channel_output_is_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let k = random_stiefel(3, 5, &mut rng);
            let rho = random_density(3, &mut rng);
            let out = apply_kraus(&k, &rho).unwrap();
            assert!(validate_state(out.matrix().clone(), 1e-10).is_ok());
        }
    }

    #[test]
    fn constraint_violation_detected() {
        let k = KrausPoint::from_operators(&[linalg::identity(2) * C64::new(0.9, 0.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(2, &mut rng);
        assert!(matches!(
            apply_kraus(&k, &rho),
            Err(Error::ConstraintViolation(_))
        ));
    }

    #[test]
    fn theorem1_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // rank-1 target
        let mut ket0 = CMat::zeros(2, 2);
        ket0[(0, 0)] = C64::new(1.0, 0.0);
        let target = DensityMatrix::new(ket0).unwrap();
        let k = theorem1_kraus(&target, None).unwrap();
        assert!(k.constraint_deviation() < 1e-12);
        let rho = random_density(2, &mut rng);
        let out = apply_kraus(&k, &rho).unwrap();
        assert!(qcore::hs_distance(out.matrix(), target.matrix()).unwrap() < 1e-13);

        // maximally mixed target from |+>
        let mixed = DensityMatrix::new(linalg::identity(2) * C64::new(0.5, 0.0)).unwrap();
        let k = theorem1_kraus(&mixed, None).unwrap();
        let plus = {
            let mut m = CMat::from_element(2, 2, C64::new(0.5, 0.0));
            m[(1, 1)] = C64::new(0.5, 0.0);
            DensityMatrix::new(m).unwrap()
        };
        let out = apply_kraus(&k, &plus).unwrap();
        assert!(qcore::hs_distance(out.matrix(), mixed.matrix()).unwrap() < 1e-13);
    }

    #[test]
    fn theorem1_dimension_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 2..=5 {
            let target = random_density(n, &mut rng);
            let k = theorem1_kraus(&target, None).unwrap();
            assert_eq!(k.lambda, n * n);
            for _ in 0..20 {
                let rho = random_density(n, &mut rng);
                let out = apply_kraus(&k, &rho).unwrap();
                assert!(
                    qcore::hs_distance(out.matrix(), target.matrix()).unwrap() <= 1e-12
                );
            }
        }
    }

    #[test]
    fn theorem1_rejects_bad_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let target = random_density(2, &mut rng);
        let skew = linalg::identity(2) * C64::new(1.1, 0.0);
        assert!(matches!(
            theorem1_kraus(&target, Some(&skew)),
            Err(Error::BasisNotOrthonormal(_))
        ));
        let u = qcore::random_unitary(2, &mut rng);
        assert!(theorem1_kraus(&target, Some(&u)).is_ok());
    }

    #[test]
    fn random_stiefel_contract() {
        let mut a = ChaCha8Rng::seed_from_u64(8);
        let mut b = ChaCha8Rng::seed_from_u64(8);
        let p = random_stiefel(3, 4, &mut a);
        let q = random_stiefel(3, 4, &mut b);
        assert!(p.constraint_deviation() < 1e-12);
        assert!(linalg::hs_norm(&(&p.v - &q.v)) == 0.0);
        // lambda = 1 gives a unitary
        let u = random_stiefel(2, 1, &mut a);
        let uu = u.v.adjoint() * &u.v;
        assert!(linalg::hs_norm(&(uu - linalg::identity(2))) < 1e-12);
    }

    #[test]
    fn objective_matches_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let k = random_stiefel(3, 4, &mut rng);
            let rho = random_density(3, &mut rng);
            let o = Observable::new(qcore::random_hermitian(3, &mut rng)).unwrap();
            let direct = kinematic_objective(&k, &rho, &o).unwrap();
            let via =
                crate::objectives::j1_observable(&apply_kraus(&k, &rho).unwrap(), &o).unwrap();
            assert!((direct - via).abs() < 1e-12);
        }
    }

    #[test]
    fn theorem1_point_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let target = random_density(2, &mut rng);
        let o = obs01();
        let k = theorem1_kraus(&target, None).unwrap();
        let expect = crate::objectives::j1_observable(&target, &o).unwrap();
        for _ in 0..5 {
            let rho = random_density(2, &mut rng);
            let val = kinematic_objective(&k, &rho, &o).unwrap();
            assert!((val - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..10 {
            let k = random_stiefel(2, 3, &mut rng);
            let rho = random_density(2, &mut rng);
            let o = Observable::new(qcore::random_hermitian(2, &mut rng)).unwrap();
            let grad = riemannian_grad(&k, &rho, &o).unwrap();
            // gradient lies in the tangent space
            let normal = linalg::herm_part(&(k.v.adjoint() * &grad));
            assert!(linalg::hs_norm(&normal) < 1e-10);
            for _ in 0..5 {
                let raw = linalg::random_complex_matrix(6, 2, &mut rng);
                let mut xi = tangent_project(&k.v, &raw);
                xi /= C64::new(linalg::hs_norm(&xi), 0.0);
                let jp = objective_raw(
                    &retract(&k.v, &(&xi * C64::new(h, 0.0))),
                    rho.matrix(),
                    o.matrix(),
                    3,
                    2,
                );
                let jm = objective_raw(
                    &retract(&k.v, &(&xi * C64::new(-h, 0.0))),
                    rho.matrix(),
                    o.matrix(),
                    3,
                    2,
                );
                let fd = (jp - jm) / (2.0 * h);
                let an = real_inner(&grad, &xi);
                let scale = an.abs().max(1.0);
                assert!(
                    (fd - an).abs() / scale <= 1e-5,
                    "fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn descent_reaches_global_min() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let o = obs01();
        for _ in 0..5 {
            let rho = random_density(2, &mut rng);
            let v0 = random_stiefel(2, 4, &mut rng);
            let rep = optimize_stiefel(&v0, &rho, &o, Sense::Minimize, &Default::default())
                .unwrap();
            assert!(rep.converged, "gnorm {}", rep.gradient_norm);
            assert!(rep.value <= 1e-6, "value {}", rep.value);
            assert!(rep.point.constraint_deviation() < 1e-10);
            let rep = optimize_stiefel(&v0, &rho, &o, Sense::Maximize, &Default::default())
                .unwrap();
            assert!(rep.converged && rep.value >= 1.0 - 1e-6, "value {}", rep.value);
        }
    }

    #[test]
    fn theorem1_start_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let o = obs01();
        // channel steering everything to the O ground state: global minimum
        let mut ground = CMat::zeros(2, 2);
        ground[(0, 0)] = C64::new(1.0, 0.0);
        let target = DensityMatrix::new(ground).unwrap();
        let k = theorem1_kraus(&target, None).unwrap();
        let rho = random_density(2, &mut rng);
        let rep = optimize_stiefel(&k, &rho, &o, Sense::Minimize, &Default::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged && rep.value.abs() < 1e-12);
    }

    #[test]
    fn lambda_monotone_under_dilation() {
        // splitting every operator into {sqrt(p) K, sqrt(1-p) K} leaves the
        // channel, and hence J1, unchanged
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let k = random_stiefel(2, 3, &mut rng);
        let rho = random_density(2, &mut rng);
        let o = Observable::new(qcore::random_hermitian(2, &mut rng)).unwrap();
        let p: f64 = 0.3;
        let mut ops = Vec::new();
        for op in k.operators() {
            ops.push(&op * C64::new(p.sqrt(), 0.0));
            ops.push(&op * C64::new((1.0 - p).sqrt(), 0.0));
        }
        let big = KrausPoint::from_operators(&ops).unwrap();
        assert!(big.constraint_deviation() < 1e-12);
        let a = kinematic_objective(&k, &rho, &o).unwrap();
        let b = kinematic_objective(&big, &rho, &o).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn saddle_seek_mixed_state() {
        let o = obs01();
        let rho = DensityMatrix::new(linalg::identity(2) * C64::new(0.5, 0.0)).unwrap();
        let mut found_half = false;
        for seed in 0..12u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let v0 = random_stiefel(2, 4, &mut rng);
            let rep = saddle_seek(&v0, &rho, &o, 1e-6, 400).unwrap();
            if rep.converged
                && (rep.value - 0.5).abs() <= 1e-4
                && rep.classification == Classification::SaddleCandidate
            {
                found_half = true;
                break;
            }
        }
        assert!(found_half, "no saddle at 1/2 found");
    }

    #[test]
    fn scan_pure_state_has_no_saddles() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let rho = random_pure(2, &mut rng);
        let o = obs01();
        let settings = ScanSettings {
            restarts: 6,
            saddle_runs: 12,
            seed: 7,
            ..Default::default()
        };
        let reports = landscape_scan(&rho, &o, &settings).unwrap();
        let clusters = cluster_values(&reports, settings.cluster_tol);
        for (value, _) in &clusters {
            assert!(
                value.abs() <= 1e-4 || (value - 1.0).abs() <= 1e-4,
                "unexpected cluster at {value}"
            );
        }
        for r in &reports {
            if r.converged {
                assert_ne!(r.classification, Classification::SaddleCandidate);
            }
        }
    }

    #[test]
    fn bloch_half_saddles() {
        let rho = bloch_state(&BlochVector { w: [0.0, 0.0, 0.5] }).unwrap();
        let o = obs01();
        let settings = ScanSettings {
            restarts: 4,
            saddle_runs: 30,
            seed: 21,
            ..Default::default()
        };
        let reports = landscape_scan(&rho, &o, &settings).unwrap();
        let saddles: Vec<f64> = reports
            .iter()
            .filter(|r| {
                r.converged && r.classification == Classification::SaddleCandidate
            })
            .map(|r| r.value)
            .collect();
        assert!(
            saddles.iter().any(|v| (v - 0.25).abs() <= 1e-4),
            "missing saddle at 0.25: {saddles:?}"
        );
        assert!(
            saddles.iter().any(|v| (v - 0.75).abs() <= 1e-4),
            "missing saddle at 0.75: {saddles:?}"
        );
    }
}
