//! Liouvillian assembly and piecewise-constant propagation.
//!
//! Controls are zero-order-hold on the time grid, so the per-interval step map
//! is an exact matrix exponential and the two-parameter composition property
//! holds to round-off.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::generators::{
    medium_generator, radiation_generator, AmplitudeTable, DissipatorSpec, FormFactor,
    RadialDistribution, TransitionDecomposition,
};
use crate::linalg::{self, CMat};
use crate::qcore::{validate_state, DensityMatrix, Observable};

/// Environment coupling of a system; the distribution itself lives in the
/// schedule so it can act as a control.
#[derive(Debug, Clone)]
pub enum Environment {
    Closed,
    Radiation {
        transitions: TransitionDecomposition,
        form_factor: FormFactor,
    },
    Medium {
        transitions: TransitionDecomposition,
        mass: f64,
        amplitudes: AmplitudeTable,
    },
}

/// System data entering the controlled master equation.
#[derive(Debug, Clone)]
pub struct System {
    pub h0: Observable,
    /// Lamb-shift-like effective Hamiltonian; defaults to zero.
    pub h_eff: CMat,
    /// Coherent control coupling operators Q_l.
    pub couplings: Vec<CMat>,
    pub environment: Environment,
}

impl System {
    pub fn closed(h0: Observable, couplings: Vec<CMat>) -> Self {
        let n = h0.dim();
        Self {
            h0,
            h_eff: CMat::zeros(n, n),
            couplings,
            environment: Environment::Closed,
        }
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// Dissipator for a given environment distribution.
    pub fn dissipator(&self, dist: Option<&RadialDistribution>) -> Result<DissipatorSpec> {
        match (&self.environment, dist) {
            (Environment::Closed, _) | (_, None) => Ok(DissipatorSpec::empty()),
            (
                Environment::Radiation {
                    transitions,
                    form_factor,
                },
                Some(n),
            ) => radiation_generator(transitions, n, form_factor),
            (
                Environment::Medium {
                    transitions,
                    mass,
                    amplitudes,
                },
                Some(n),
            ) => medium_generator(transitions, n, *mass, amplitudes),
        }
    }

    /// Hamiltonian on interval `i` of a schedule: H0 + H_eff + sum_l Q_l u_l.
    fn hamiltonian(&self, schedule: &ControlSchedule, interval: usize) -> CMat {
        let mut h = self.h0.matrix() + &self.h_eff;
        for (q, values) in self.couplings.iter().zip(schedule.coherent.iter()) {
            h += q * C64::new(values[interval], 0.0);
        }
        h
    }
}

/// Environment distribution over the schedule.
#[derive(Debug, Clone)]
pub enum EnvSchedule {
    /// No environment control (closed, or dissipator off).
    None,
    /// One static distribution for the whole horizon.
    Static(RadialDistribution),
    /// One distribution per interval.
    PerInterval(Vec<RadialDistribution>),
}

impl EnvSchedule {
    fn at(&self, interval: usize) -> Option<&RadialDistribution> {
        match self {
            EnvSchedule::None => None,
            EnvSchedule::Static(d) => Some(d),
            EnvSchedule::PerInterval(ds) => ds.get(interval),
        }
    }
}

/// Piecewise-constant controls on a strictly increasing time grid t_0 = 0..T.
#[derive(Debug, Clone)]
pub struct ControlSchedule {
    pub times: Vec<f64>,
    /// Per channel, one value per interval.
    pub coherent: Vec<Vec<f64>>,
    pub environment: EnvSchedule,
}

impl ControlSchedule {
    pub fn new(times: Vec<f64>, coherent: Vec<Vec<f64>>, environment: EnvSchedule) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidSchedule("need at least two instants".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidSchedule("grid must start at t = 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule(
                "grid must be strictly increasing".into(),
            ));
        }
        let m = times.len() - 1;
        for (l, ch) in coherent.iter().enumerate() {
            if ch.len() != m {
                return Err(Error::InvalidSchedule(format!(
                    "channel {l} has {} values for {m} intervals",
                    ch.len()
                )));
            }
        }
        if let EnvSchedule::PerInterval(ds) = &environment {
            if ds.len() != m {
                return Err(Error::InvalidSchedule(format!(
                    "{} environment distributions for {m} intervals",
                    ds.len()
                )));
            }
        }
        Ok(Self {
            times,
            coherent,
            environment,
        })
    }

    /// Uniform grid with `steps` intervals on [0, t_final].
    pub fn uniform_times(t_final: f64, steps: usize) -> Vec<f64> {
        (0..=steps)
            .map(|i| t_final * i as f64 / steps as f64)
            .collect()
    }

    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Sub-schedule covering grid intervals [from, to), shifted to start at 0.
    pub fn segment(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.intervals() {
            return Err(Error::InvalidSchedule(format!(
                "bad segment [{from}, {to})"
            )));
        }
        let t0 = self.times[from];
        let times = self.times[from..=to].iter().map(|t| t - t0).collect();
        let coherent = self
            .coherent
            .iter()
            .map(|ch| ch[from..to].to_vec())
            .collect();
        let environment = match &self.environment {
            EnvSchedule::PerInterval(ds) => EnvSchedule::PerInterval(ds[from..to].to_vec()),
            other => other.clone(),
        };
        Self::new(times, coherent, environment)
    }
}

/// A propagated trajectory with the accumulated final-time superoperator.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// n^2 x n^2 superoperator, column-stacking convention.
    pub final_map: CMat,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().unwrap()
    }
}

/// Matrix representation of rho -> -i[H, rho] + L(rho) under column stacking.
pub fn liouvillian(h: &CMat, dissipator: &DissipatorSpec) -> Result<CMat> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch("Hamiltonian must be square".into()));
    }
    let id = linalg::identity(n);
    let mi = C64::new(0.0, -1.0);
    let mut l = (linalg::kron(&id, h) - linalg::kron(&h.transpose(), &id)) * mi;
    for term in &dissipator.terms {
        if term.op.nrows() != n {
            return Err(Error::DimensionMismatch(
                "jump operator dimension differs from Hamiltonian".into(),
            ));
        }
        let ld = term.op.adjoint();
        let ldl = &ld * &term.op;
        let sandwich = linalg::kron(&term.op.conjugate(), &term.op);
        let left = linalg::kron(&id, &ldl);
        let right = linalg::kron(&ldl.transpose(), &id);
        let r = C64::new(term.rate, 0.0);
        match term.convention {
            crate::generators::Convention::Doubled => {
                l += (sandwich * C64::new(2.0, 0.0) - &left - &right) * r;
            }
            crate::generators::Convention::Halved => {
                l += (sandwich - (left + right) * C64::new(0.5, 0.0)) * r;
            }
        }
    }
    Ok(l)
}

/// Superoperator of the whole schedule (ordered product of step maps).
pub fn schedule_map(schedule: &ControlSchedule, system: &System) -> Result<CMat> {
    let n = system.dim();
    let mut map = linalg::identity(n * n);
    let mut cached: Option<(usize, CMat)> = None; // liouvillian cache for static env
    for i in 0..schedule.intervals() {
        let dt = schedule.times[i + 1] - schedule.times[i];
        let l = build_interval_liouvillian(schedule, system, i, &mut cached)?;
        let step = linalg::expm(&(l * C64::new(dt, 0.0)));
        if step.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::StepFailure(i, "matrix exponential diverged".into()));
        }
        map = step * map;
    }
    Ok(map)
}

fn build_interval_liouvillian(
    schedule: &ControlSchedule,
    system: &System,
    interval: usize,
    cached: &mut Option<(usize, CMat)>,
) -> Result<CMat> {
    // With a static environment and constant controls the Liouvillian is
    // reusable; cache keyed on a coherent-values fingerprint.
    let static_env = !matches!(schedule.environment, EnvSchedule::PerInterval(_));
    let same_controls = |a: usize, b: usize| {
        schedule
            .coherent
            .iter()
            .all(|ch| ch[a].to_bits() == ch[b].to_bits())
    };
    if static_env {
        if let Some((prev, l)) = cached {
            if same_controls(*prev, interval) {
                return Ok(l.clone());
            }
        }
    }
    let h = system.hamiltonian(schedule, interval);
    let d = system.dissipator(schedule.environment.at(interval))?;
    let l = liouvillian(&h, &d)?;
    if static_env {
        *cached = Some((interval, l.clone()));
    }
    Ok(l)
}

/// Evolve a state over the schedule, recording every grid instant.
pub fn propagate(
    rho0: &DensityMatrix,
    schedule: &ControlSchedule,
    system: &System,
) -> Result<Trajectory> {
    let n = system.dim();
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "state is {}-dimensional but system is {n}-dimensional",
            rho0.dim()
        )));
    }
    let mut states = Vec::with_capacity(schedule.times.len());
    states.push(rho0.clone());
    let mut v = linalg::vec_col(rho0.matrix());
    let mut map = linalg::identity(n * n);
    let mut cached = None;
    for i in 0..schedule.intervals() {
        let dt = schedule.times[i + 1] - schedule.times[i];
        let l = build_interval_liouvillian(schedule, system, i, &mut cached)?;
        let step = linalg::expm(&(l * C64::new(dt, 0.0)));
        v = &step * v;
        map = &step * map;
        let rho = linalg::unvec(&v, n);
        let state = validate_state(linalg::herm_part(&rho), 1e-8)
            .map_err(|e| Error::StepFailure(i, e.to_string()))?;
        states.push(state);
    }
    Ok(Trajectory {
        times: schedule.times.clone(),
        states,
        final_map: map,
    })
}

/// Two-parameter family composition: final_map(0->T) = final_map(tau->T) *
/// final_map(0->tau), checked to 1e-10 in Frobenius norm.
pub fn compose_check(schedule: &ControlSchedule, system: &System, split: usize) -> Result<bool> {
    let total = schedule_map(schedule, system)?;
    let m = schedule.intervals();
    if split == 0 || split == m {
        return Ok(true); // identity factor
    }
    let first = schedule_map(&schedule.segment(0, split)?, system)?;
    let second = schedule_map(&schedule.segment(split, m)?, system)?;
    let product = second * first;
    Ok(linalg::hs_norm(&(product - total)) <= 1e-10)
}

/// Choi matrix of a superoperator map (column-stacking reshuffle).
pub fn choi_matrix(map: &CMat, n: usize) -> CMat {
    linalg::choi(map, n)
}
