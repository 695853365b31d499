//! Objective functionals and the control cost.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::generators::RadialDistribution;
use crate::linalg::{self, CMat};
use crate::propagator::{choi_matrix, ControlSchedule, EnvSchedule};
use crate::qcore::{spectral_matrix, DensityMatrix, Observable};

/// What the optimizer is asked to minimize.
#[derive(Debug, Clone)]
pub enum ObjectiveSpec {
    /// Expectation value of an observable at the final time.
    Observable(Observable),
    /// Hilbert-Schmidt distance to a target state.
    StateTransfer(DensityMatrix),
    /// Frobenius distance to a target CP trace-preserving superoperator.
    MapMatch(CMat),
}

impl ObjectiveSpec {
    /// Validate target data; map targets must be CP (Choi positivity to 1e-8)
    /// and trace preserving (to 1e-10).
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ObjectiveSpec::Observable(o) => {
                if o.dim() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "observable is {}-dimensional, system is {dim}-dimensional",
                        o.dim()
                    )));
                }
            }
            ObjectiveSpec::StateTransfer(t) => {
                if t.dim() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "target state is {}-dimensional, system is {dim}-dimensional",
                        t.dim()
                    )));
                }
            }
            ObjectiveSpec::MapMatch(p) => {
                if p.nrows() != dim * dim || p.ncols() != dim * dim {
                    return Err(Error::DimensionMismatch(format!(
                        "target map is {}x{}, expected {}x{} with n = {dim}",
                        p.nrows(),
                        p.ncols(),
                        dim * dim,
                        dim * dim
                    )));
                }
                let choi = linalg::herm_part(&choi_matrix(p, dim));
                let eig = spectral_matrix(&choi)?;
                if eig.values[0] < -1e-8 {
                    return Err(Error::NegativeEigenvalue(eig.values[0]));
                }
                // trace preservation: partial trace of the Choi matrix over
                // the output slot must be the identity
                let raw_choi = choi_matrix(p, dim);
                for j in 0..dim {
                    for l in 0..dim {
                        let mut s = C64::new(0.0, 0.0);
                        for k in 0..dim {
                            s += raw_choi[(j * dim + k, l * dim + k)];
                        }
                        let expect = if j == l { 1.0 } else { 0.0 };
                        if (s - C64::new(expect, 0.0)).norm() > 1e-10 {
                            return Err(Error::DimensionMismatch(
                                "target map is not trace preserving".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluate on a final state / final map pair.
    pub fn evaluate(&self, rho_t: &DensityMatrix, final_map: &CMat) -> Result<f64> {
        match self {
            ObjectiveSpec::Observable(o) => j1_observable(rho_t, o),
            ObjectiveSpec::StateTransfer(t) => j1_state(rho_t, t),
            ObjectiveSpec::MapMatch(p) => j1_map(final_map, p),
        }
    }
}

/// Weights of the control cost: per-channel alpha on the time grid, beta on
/// the radial grid.
#[derive(Debug, Clone)]
pub struct CostWeights {
    /// One value per interval per coherent channel.
    pub alpha: Vec<Vec<f64>>,
    /// One value per radial bin.
    pub beta: Vec<f64>,
}

impl CostWeights {
    pub fn zero() -> Self {
        Self {
            alpha: vec![],
            beta: vec![],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: &f64| v.is_finite() && *v >= 0.0;
        if self.alpha.iter().flatten().all(ok) && self.beta.iter().all(ok) {
            Ok(())
        } else {
            Err(Error::InvalidDistribution(
                "cost weights must be finite and non-negative".into(),
            ))
        }
    }
}

/// Tr[rho O].
pub fn j1_observable(rho_t: &DensityMatrix, o: &Observable) -> Result<f64> {
    if rho_t.dim() != o.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}-dimensional, observable is {}-dimensional",
            rho_t.dim(),
            o.dim()
        )));
    }
    Ok(linalg::trace(&(rho_t.matrix() * o.matrix())).re)
}

/// Hilbert-Schmidt distance to the target state.
pub fn j1_state(rho_t: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    crate::qcore::hs_distance(rho_t.matrix(), target.matrix())
}

/// Frobenius distance between superoperator matrices (same vectorization
/// convention assumed).
pub fn j1_map(p: &CMat, target: &CMat) -> Result<f64> {
    if p.shape() != target.shape() {
        return Err(Error::DimensionMismatch(format!(
            "maps have shapes {:?} and {:?}",
            p.shape(),
            target.shape()
        )));
    }
    Ok(linalg::hs_norm(&(p - target)))
}

/// Control cost: sum_l int alpha_l |u_l|^2 dt + max over intervals of the
/// beta-weighted radial density. Rectangle quadrature, exact for the
/// piecewise-constant model.
pub fn j2_cost(schedule: &ControlSchedule, w: &CostWeights) -> Result<f64> {
    w.validate()?;
    if !w.alpha.is_empty() && w.alpha.len() != schedule.coherent.len() {
        return Err(Error::GridMismatch(format!(
            "{} alpha channels for {} coherent channels",
            w.alpha.len(),
            schedule.coherent.len()
        )));
    }
    let mut energy = 0.0;
    for (a_ch, u_ch) in w.alpha.iter().zip(schedule.coherent.iter()) {
        if a_ch.len() != u_ch.len() {
            return Err(Error::GridMismatch(format!(
                "alpha has {} values for {} intervals",
                a_ch.len(),
                u_ch.len()
            )));
        }
        for i in 0..u_ch.len() {
            let dt = schedule.times[i + 1] - schedule.times[i];
            energy += a_ch[i] * u_ch[i] * u_ch[i] * dt;
        }
    }
    let weighted = |d: &RadialDistribution| -> Result<f64> {
        let density = d.density();
        if !w.beta.is_empty() && w.beta.len() != density.len() {
            return Err(Error::GridMismatch(format!(
                "beta has {} values for {} radial bins",
                w.beta.len(),
                density.len()
            )));
        }
        let widths = d.widths();
        let mut s = 0.0;
        for i in 0..density.len() {
            let b = if w.beta.is_empty() { 0.0 } else { w.beta[i] };
            s += b * density[i] * widths[i];
        }
        Ok(s)
    };
    let density_term = match &schedule.environment {
        EnvSchedule::None => 0.0,
        EnvSchedule::Static(d) => weighted(d)?,
        EnvSchedule::PerInterval(ds) => {
            let mut m = 0.0f64;
            for d in ds {
                m = m.max(weighted(d)?);
            }
            m
        }
    };
    Ok(energy + density_term)
}

/// J = J1 + J2, with components retained for reporting.
#[derive(Debug, Clone, Copy)]
pub struct PerformanceIndex {
    pub j1: f64,
    pub j2: f64,
    pub total: f64,
}

pub fn performance_index(j1: f64, j2: f64) -> PerformanceIndex {
    PerformanceIndex {
        j1,
        j2,
        total: j1 + j2,
    }
}

/// Superoperator of rho -> U rho U^dagger, handy for map targets.
pub fn unitary_superoperator(u: &CMat) -> CMat {
    linalg::kron(&u.conjugate(), u)
}
