//! Versioned JSON scenario documents and the run entry points built on them.
//!
//! A scenario is one self-contained JSON file describing the system, its
//! environment, the control schedule, the objective and the optimizer
//! settings. Complex matrices are nested arrays of [re, im] pairs.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gaopt::{decode, evolve, GaHistory, GaSettings, Genome};
use crate::generators::{
    boltzmann, planck, transition_decomposition, AmplitudeTable, FormFactor, RadialDistribution,
};
use crate::kinematic::{
    cluster_values, landscape_scan, theorem1_kraus, KrausPoint, ScanSettings,
};
use crate::linalg::{self, CMat};
use crate::objectives::{j2_cost, performance_index, CostWeights, ObjectiveSpec, PerformanceIndex};
use crate::propagator::{propagate, ControlSchedule, EnvSchedule, Environment, System, Trajectory};
use crate::qcore::{random_density, validate_state, DensityMatrix, Observable};

pub const SCHEMA_VERSION: u32 = 1;

type JsonMatrix = Vec<Vec<[f64; 2]>>;

fn vfail<T>(path: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::ScenarioValidation {
        path: path.to_string(),
        message: message.into(),
    })
}

fn parse_matrix(m: &JsonMatrix, path: &str) -> Result<CMat> {
    let rows = m.len();
    if rows == 0 {
        return vfail(path, "matrix must not be empty");
    }
    let cols = m[0].len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            return vfail(
                &format!("{path}[{i}]"),
                format!("row has {} entries, expected {cols}", row.len()),
            );
        }
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        C64::new(m[i][j][0], m[i][j][1])
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    energies: Vec<f64>,
    #[serde(default)]
    h_eff: Option<JsonMatrix>,
    #[serde(default)]
    coupling: Option<JsonMatrix>,
    #[serde(default)]
    controls: Vec<JsonMatrix>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    k_min: f64,
    k_max: f64,
    bins: usize,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DistributionDoc {
    Zero,
    Planck { temperature: f64 },
    Boltzmann { beta: f64, n_total: f64 },
    Values { density: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmplitudeEntryDoc {
    omega: f64,
    value: [f64; 2],
    window: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum AmplitudesDoc {
    Constant { value: [f64; 2] },
    PerOmega { entries: Vec<AmplitudeEntryDoc> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentDoc {
    kind: String,
    #[serde(default)]
    grid: Option<GridDoc>,
    #[serde(default)]
    form_factor: Option<f64>,
    #[serde(default)]
    mass: Option<f64>,
    #[serde(default)]
    amplitudes: Option<AmplitudesDoc>,
    #[serde(default)]
    distribution: Option<DistributionDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlsDoc {
    #[serde(default)]
    times: Option<Vec<f64>>,
    #[serde(default)]
    t_final: Option<f64>,
    #[serde(default)]
    steps: Option<usize>,
    #[serde(default)]
    coherent: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ObjectiveDoc {
    Observable { matrix: JsonMatrix },
    StateTransfer { target: JsonMatrix },
    MapMatch { matrix: JsonMatrix },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostDoc {
    #[serde(default)]
    alpha: Vec<Vec<f64>>,
    #[serde(default)]
    beta: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaDoc {
    n_max: f64,
    #[serde(default = "default_pop")]
    pop_size: usize,
    #[serde(default = "default_gens")]
    generations: usize,
    #[serde(default = "default_mut_rate")]
    mutation_rate: f64,
    /// Absolute sigma; defaults to 0.1 * n_max when absent.
    #[serde(default)]
    mutation_sigma: Option<f64>,
    #[serde(default = "default_cx")]
    crossover_rate: f64,
    #[serde(default = "default_tk")]
    tournament_k: usize,
    #[serde(default = "default_elitism")]
    elitism: usize,
    #[serde(default)]
    stop_fitness: Option<f64>,
}

fn default_pop() -> usize {
    50
}
fn default_gens() -> usize {
    200
}
fn default_mut_rate() -> f64 {
    0.1
}
fn default_cx() -> f64 {
    0.7
}
fn default_tk() -> usize {
    3
}
fn default_elitism() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LandscapeDoc {
    #[serde(default = "default_lambda")]
    lambda: usize,
    #[serde(default = "default_restarts")]
    restarts: usize,
    #[serde(default = "default_saddle_runs")]
    saddle_runs: usize,
}

fn default_lambda() -> usize {
    4
}
fn default_restarts() -> usize {
    20
}
fn default_saddle_runs() -> usize {
    100
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Theorem1Doc {
    #[serde(default = "default_samples")]
    samples: usize,
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    schema_version: u32,
    #[serde(default)]
    seed: u64,
    system: SystemDoc,
    environment: EnvironmentDoc,
    controls: ControlsDoc,
    initial_state: JsonMatrix,
    objective: ObjectiveDoc,
    #[serde(default)]
    cost: Option<CostDoc>,
    #[serde(default)]
    ga: Option<GaDoc>,
    #[serde(default)]
    landscape: Option<LandscapeDoc>,
    #[serde(default)]
    theorem1: Option<Theorem1Doc>,
}

/// GA section resolved against the radial grid.
#[derive(Debug, Clone)]
pub struct GaConfig {
    pub n_max: f64,
    pub settings: GaSettings,
}

#[derive(Debug, Clone, Copy)]
pub struct LandscapeConfig {
    pub lambda: usize,
    pub restarts: usize,
    pub saddle_runs: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Theorem1Config {
    pub samples: usize,
}

/// A fully validated, ready-to-run scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub system: System,
    pub times: Vec<f64>,
    pub coherent: Vec<Vec<f64>>,
    /// Radial bin centers (empty for closed systems).
    pub grid: Vec<f64>,
    /// The environment distribution, when the scenario fixes one.
    pub distribution: Option<RadialDistribution>,
    pub rho0: DensityMatrix,
    pub objective: ObjectiveSpec,
    pub weights: CostWeights,
    pub ga: Option<GaConfig>,
    pub landscape: Option<LandscapeConfig>,
    pub theorem1: Option<Theorem1Config>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScenarioDoc =
            serde_json::from_str(text).map_err(|e| Error::ScenarioParse(e.to_string()))?;
        Self::resolve(doc)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ScenarioParse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Replace every embedded seed (GA settings included).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let Some(ga) = &mut self.ga {
            ga.settings.seed = seed;
        }
        self
    }

    fn resolve(doc: ScenarioDoc) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return vfail(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", doc.schema_version),
            );
        }
        let n = doc.system.energies.len();
        if n == 0 {
            return vfail("system.energies", "at least one level required");
        }
        if doc.system.energies.iter().any(|e| !e.is_finite()) {
            return vfail("system.energies", "levels must be finite");
        }
        let h0 = Observable::new(CMat::from_diagonal(&DVector::from_iterator(
            n,
            doc.system.energies.iter().map(|&e| C64::new(e, 0.0)),
        )))
        .expect("diagonal real matrix is Hermitian");

        let h_eff = match &doc.system.h_eff {
            Some(m) => {
                let m = parse_matrix(m, "system.h_eff")?;
                if m.nrows() != n || m.ncols() != n {
                    return vfail("system.h_eff", format!("must be {n}x{n}"));
                }
                if linalg::herm_deviation(&m) > 1e-12 {
                    return vfail("system.h_eff", "must be Hermitian");
                }
                m
            }
            None => CMat::zeros(n, n),
        };

        let mut couplings = Vec::new();
        for (l, q) in doc.system.controls.iter().enumerate() {
            let path = format!("system.controls[{l}]");
            let m = parse_matrix(q, &path)?;
            if m.nrows() != n || m.ncols() != n {
                return vfail(&path, format!("must be {n}x{n}"));
            }
            if linalg::herm_deviation(&m) > 1e-12 {
                return vfail(&path, "must be Hermitian");
            }
            couplings.push(m);
        }

        let coupling_op = match &doc.system.coupling {
            Some(m) => {
                let m = parse_matrix(m, "system.coupling")?;
                if m.nrows() != n || m.ncols() != n {
                    return vfail("system.coupling", format!("must be {n}x{n}"));
                }
                let obs = Observable::new(m)
                    .map_err(|_| Error::ScenarioValidation {
                        path: "system.coupling".into(),
                        message: "must be Hermitian".into(),
                    })?;
                Some(obs)
            }
            None => None,
        };

        // environment
        let (environment, grid, distribution) = match doc.environment.kind.as_str() {
            "none" => {
                if doc.environment.grid.is_some() || doc.environment.distribution.is_some() {
                    return vfail(
                        "environment",
                        "closed systems take neither a grid nor a distribution",
                    );
                }
                (Environment::Closed, Vec::new(), None)
            }
            kind @ ("radiation" | "medium") => {
                let g = match &doc.environment.grid {
                    Some(g) => g,
                    None => return vfail("environment.grid", "required for open systems"),
                };
                if g.bins < 2 {
                    return vfail("environment.grid.bins", "need at least two bins");
                }
                if !(g.k_min >= 0.0 && g.k_max > g.k_min && g.k_max.is_finite()) {
                    return vfail("environment.grid", "need 0 <= k_min < k_max < inf");
                }
                let centers = RadialDistribution::uniform_grid(g.k_min, g.k_max, g.bins);
                let dist = match &doc.environment.distribution {
                    None => None,
                    Some(DistributionDoc::Zero) => {
                        Some(RadialDistribution::zero(centers.clone())?)
                    }
                    Some(DistributionDoc::Planck { temperature }) => {
                        Some(planck(*temperature, centers.clone())?)
                    }
                    Some(DistributionDoc::Boltzmann { beta, n_total }) => {
                        let mass = doc.environment.mass.unwrap_or(1.0);
                        Some(boltzmann(*beta, mass, *n_total, centers.clone())?)
                    }
                    Some(DistributionDoc::Values { density }) => {
                        if density.len() != g.bins {
                            return vfail(
                                "environment.distribution.density",
                                format!("has {} values for {} bins", density.len(), g.bins),
                            );
                        }
                        Some(RadialDistribution::new(centers.clone(), density.clone())?)
                    }
                };
                let mu = match &coupling_op {
                    Some(m) => m,
                    None => {
                        return vfail("system.coupling", "required for open systems");
                    }
                };
                let transitions = transition_decomposition(&h0, mu)?;
                let env = if kind == "radiation" {
                    let g0 = match doc.environment.form_factor {
                        Some(g0) if g0.is_finite() => g0,
                        _ => return vfail("environment.form_factor", "required for radiation"),
                    };
                    Environment::Radiation {
                        transitions,
                        form_factor: FormFactor::Constant(g0),
                    }
                } else {
                    let mass = match doc.environment.mass {
                        Some(m) if m > 0.0 => m,
                        _ => return vfail("environment.mass", "positive mass required"),
                    };
                    let amps = match &doc.environment.amplitudes {
                        None => AmplitudeTable::Constant(C64::new(1.0, 0.0)),
                        Some(AmplitudesDoc::Constant { value }) => {
                            AmplitudeTable::Constant(C64::new(value[0], value[1]))
                        }
                        Some(AmplitudesDoc::PerOmega { entries }) => AmplitudeTable::PerOmega(
                            entries
                                .iter()
                                .map(|e| {
                                    (
                                        e.omega,
                                        C64::new(e.value[0], e.value[1]),
                                        (e.window[0], e.window[1]),
                                    )
                                })
                                .collect(),
                        ),
                    };
                    Environment::Medium {
                        transitions,
                        mass,
                        amplitudes: amps,
                    }
                };
                (env, centers, dist)
            }
            other => {
                return vfail(
                    "environment.kind",
                    format!("unknown kind '{other}', expected none | radiation | medium"),
                );
            }
        };

        // schedule grid
        let times = match (&doc.controls.times, doc.controls.t_final, doc.controls.steps) {
            (Some(t), None, None) => t.clone(),
            (None, Some(tf), steps) => {
                if !(tf > 0.0 && tf.is_finite()) {
                    return vfail("controls.t_final", "must be positive and finite");
                }
                ControlSchedule::uniform_times(tf, steps.unwrap_or(1).max(1))
            }
            _ => {
                return vfail(
                    "controls",
                    "give either an explicit times array or t_final (+ steps)",
                );
            }
        };
        if doc.controls.coherent.len() != couplings.len() {
            return vfail(
                "controls.coherent",
                format!(
                    "{} channels for {} control operators",
                    doc.controls.coherent.len(),
                    couplings.len()
                ),
            );
        }
        // dry-run schedule validation for early field-path errors
        ControlSchedule::new(times.clone(), doc.controls.coherent.clone(), EnvSchedule::None)
            .map_err(|e| Error::ScenarioValidation {
                path: "controls".into(),
                message: e.to_string(),
            })?;

        let rho0_m = parse_matrix(&doc.initial_state, "initial_state")?;
        if rho0_m.nrows() != n || rho0_m.ncols() != n {
            return vfail("initial_state", format!("must be {n}x{n}"));
        }
        let rho0 = validate_state(rho0_m, 1e-10).map_err(|e| Error::ScenarioValidation {
            path: "initial_state".into(),
            message: e.to_string(),
        })?;

        let objective = match &doc.objective {
            ObjectiveDoc::Observable { matrix } => {
                let m = parse_matrix(matrix, "objective.matrix")?;
                ObjectiveSpec::Observable(Observable::new(m).map_err(|e| {
                    Error::ScenarioValidation {
                        path: "objective.matrix".into(),
                        message: e.to_string(),
                    }
                })?)
            }
            ObjectiveDoc::StateTransfer { target } => {
                let m = parse_matrix(target, "objective.target")?;
                ObjectiveSpec::StateTransfer(validate_state(m, 1e-10).map_err(|e| {
                    Error::ScenarioValidation {
                        path: "objective.target".into(),
                        message: e.to_string(),
                    }
                })?)
            }
            ObjectiveDoc::MapMatch { matrix } => {
                ObjectiveSpec::MapMatch(parse_matrix(matrix, "objective.matrix")?)
            }
        };
        objective.validate(n).map_err(|e| Error::ScenarioValidation {
            path: "objective".into(),
            message: e.to_string(),
        })?;

        let weights = match &doc.cost {
            Some(c) => {
                let w = CostWeights {
                    alpha: c.alpha.clone(),
                    beta: c.beta.clone(),
                };
                w.validate().map_err(|e| Error::ScenarioValidation {
                    path: "cost".into(),
                    message: e.to_string(),
                })?;
                w
            }
            None => CostWeights::zero(),
        };

        let ga = match &doc.ga {
            Some(g) => {
                if !(g.n_max > 0.0 && g.n_max.is_finite()) {
                    return vfail("ga.n_max", "must be positive and finite");
                }
                if grid.is_empty() {
                    return vfail("ga", "requires an open-system environment grid");
                }
                Some(GaConfig {
                    n_max: g.n_max,
                    settings: GaSettings {
                        pop_size: g.pop_size,
                        generations: g.generations,
                        mutation_rate: g.mutation_rate,
                        mutation_sigma: g.mutation_sigma.unwrap_or(0.1 * g.n_max),
                        crossover_rate: g.crossover_rate,
                        tournament_k: g.tournament_k,
                        elitism: g.elitism,
                        seed: doc.seed,
                        stop_fitness: g.stop_fitness,
                    },
                })
            }
            None => None,
        };

        let landscape = doc.landscape.as_ref().map(|l| LandscapeConfig {
            lambda: l.lambda,
            restarts: l.restarts,
            saddle_runs: l.saddle_runs,
        });
        if let Some(l) = &landscape {
            if l.lambda == 0 {
                return vfail("landscape.lambda", "need at least one Kraus operator");
            }
        }
        let theorem1 = doc.theorem1.as_ref().map(|t| Theorem1Config { samples: t.samples });

        let system = System {
            h0,
            h_eff,
            couplings,
            environment,
        };
        Ok(Scenario {
            seed: doc.seed,
            system,
            times,
            coherent: doc.controls.coherent,
            grid,
            distribution,
            rho0,
            objective,
            weights,
            ga,
            landscape,
            theorem1,
        })
    }

    /// Schedule carrying a given environment distribution.
    pub fn schedule_with(&self, dist: Option<RadialDistribution>) -> Result<ControlSchedule> {
        let env = match dist {
            Some(d) => EnvSchedule::Static(d),
            None => EnvSchedule::None,
        };
        ControlSchedule::new(self.times.clone(), self.coherent.clone(), env)
    }

    pub fn schedule(&self) -> Result<ControlSchedule> {
        self.schedule_with(self.distribution.clone())
    }
}

/// Result of a single propagation run.
#[derive(Debug, Clone)]
pub struct PropagateResult {
    pub trajectory: Trajectory,
    pub index: PerformanceIndex,
}

pub fn run_propagate(sc: &Scenario) -> Result<PropagateResult> {
    let schedule = sc.schedule()?;
    let trajectory = propagate(&sc.rho0, &schedule, &sc.system)?;
    let j1 = sc
        .objective
        .evaluate(trajectory.final_state(), &trajectory.final_map)?;
    let j2 = j2_cost(&schedule, &sc.weights)?;
    Ok(PropagateResult {
        trajectory,
        index: performance_index(j1, j2),
    })
}

/// Result of a GA optimization over the environment distribution.
#[derive(Debug, Clone)]
pub struct GaRunResult {
    pub history: GaHistory,
    pub best: Genome,
    pub best_distribution: RadialDistribution,
    pub best_fitness: f64,
    pub trajectory: Trajectory,
}

pub fn run_ga(sc: &Scenario) -> Result<GaRunResult> {
    let ga = match &sc.ga {
        Some(g) => g,
        None => return vfail("ga", "scenario has no GA section"),
    };
    let bounds = vec![(0.0, ga.n_max); sc.grid.len()];
    let fitness = |genome: &Genome| -> Result<f64> {
        let dist = decode(genome, &sc.grid)?;
        let schedule = sc.schedule_with(Some(dist))?;
        let traj = propagate(&sc.rho0, &schedule, &sc.system)?;
        let j1 = sc.objective.evaluate(traj.final_state(), &traj.final_map)?;
        let j2 = j2_cost(&schedule, &sc.weights)?;
        Ok(j1 + j2)
    };
    let (best, history) = evolve(&bounds, &ga.settings, fitness)?;
    let best_fitness = fitness(&best)?;
    let best_distribution = decode(&best, &sc.grid)?;
    let schedule = sc.schedule_with(Some(best_distribution.clone()))?;
    let trajectory = propagate(&sc.rho0, &schedule, &sc.system)?;
    Ok(GaRunResult {
        history,
        best,
        best_distribution,
        best_fitness,
        trajectory,
    })
}

/// Result of a kinematic landscape scan.
#[derive(Debug)]
pub struct LandscapeResult {
    pub reports: Vec<crate::kinematic::CriticalPointReport>,
    /// (cluster value, member count), ascending.
    pub clusters: Vec<(f64, usize)>,
}

pub fn run_landscape(sc: &Scenario) -> Result<LandscapeResult> {
    let cfg = match &sc.landscape {
        Some(l) => l,
        None => return vfail("landscape", "scenario has no landscape section"),
    };
    let o = match &sc.objective {
        ObjectiveSpec::Observable(o) => o.clone(),
        _ => {
            return vfail(
                "objective",
                "landscape scans require an observable objective",
            );
        }
    };
    let settings = ScanSettings {
        restarts: cfg.restarts,
        saddle_runs: cfg.saddle_runs,
        lambda: cfg.lambda,
        seed: sc.seed,
        ..ScanSettings::default()
    };
    let reports = landscape_scan(&sc.rho0, &o, &settings)?;
    let clusters = cluster_values(&reports, settings.cluster_tol);
    Ok(LandscapeResult { reports, clusters })
}

/// Result of a Theorem-1 steering verification.
#[derive(Debug)]
pub struct Theorem1Result {
    pub samples: usize,
    pub lambda: usize,
    pub max_deviation: f64,
    pub point: KrausPoint,
}

pub fn run_theorem1(sc: &Scenario) -> Result<Theorem1Result> {
    let cfg = match &sc.theorem1 {
        Some(t) => t,
        None => return vfail("theorem1", "scenario has no theorem1 section"),
    };
    let target = match &sc.objective {
        ObjectiveSpec::StateTransfer(t) => t,
        _ => {
            return vfail(
                "objective",
                "theorem1 verification requires a state_transfer objective",
            );
        }
    };
    let point = theorem1_kraus(target, None)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(sc.seed);
    let mut max_dev: f64 = 0.0;
    for _ in 0..cfg.samples {
        let rho = random_density(target.dim(), &mut rng);
        let out = crate::kinematic::apply_kraus(&point, &rho)?;
        let d = crate::qcore::hs_distance(out.matrix(), target.matrix())?;
        max_dev = max_dev.max(d);
    }
    Ok(Theorem1Result {
        samples: cfg.samples,
        lambda: point.lambda,
        max_deviation: max_dev,
        point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level_planck_json() -> String {
        r#"{
            "schema_version": 1,
            "seed": 3,
            "system": {
                "energies": [0.0, 1.0],
                "coupling": [[[0,0],[1,0]],[[1,0],[0,0]]]
            },
            "environment": {
                "kind": "radiation",
                "grid": {"k_min": 0.0, "k_max": 4.0, "bins": 50},
                "form_factor": 0.1,
                "distribution": {"kind": "planck", "temperature": 1.0}
            },
            "controls": {"t_final": 200.0, "steps": 4},
            "initial_state": [[[0,0],[0,0]],[[0,0],[1,0]]],
            "objective": {"kind": "state_transfer",
                          "target": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}
        }"#
        .to_string()
    }

    #[test]
    fn planck_scenario_relaxes_to_gibbs() {
        let sc = Scenario::from_json(&two_level_planck_json()).unwrap();
        let out = run_propagate(&sc).unwrap();
        // Gibbs state for T = 1, omega = 1
        let z = 1.0 + (-1.0f64).exp();
        let gibbs = CMat::from_diagonal(&DVector::from_iterator(
            2,
            [1.0 / z, (-1.0f64).exp() / z].iter().map(|&p| C64::new(p, 0.0)),
        ));
        let d = crate::qcore::hs_distance(out.trajectory.final_state().matrix(), &gibbs).unwrap();
        assert!(d < 1e-6, "distance to Gibbs {d}");
    }

    #[test]
    fn parse_error_is_flagged() {
        let e = Scenario::from_json("{not json").unwrap_err();
        assert!(matches!(e, Error::ScenarioParse(_)));
        assert!(e.is_validation());
    }

    #[test]
    fn validation_names_field_paths() {
        let bad = two_level_planck_json().replace("\"bins\": 50", "\"bins\": 1");
        let e = Scenario::from_json(&bad).unwrap_err();
        match e {
            Error::ScenarioValidation { path, .. } => assert_eq!(path, "environment.grid.bins"),
            other => panic!("unexpected error {other:?}"),
        }
        let bad = two_level_planck_json().replace(
            "\"energies\": [0.0, 1.0]",
            "\"energies\": []",
        );
        let e = Scenario::from_json(&bad).unwrap_err();
        match e {
            Error::ScenarioValidation { path, .. } => assert_eq!(path, "system.energies"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn closed_scenario_keeps_commuting_state() {
        let json = r#"{
            "schema_version": 1,
            "system": {"energies": [0.0, 1.0]},
            "environment": {"kind": "none"},
            "controls": {"t_final": 5.0, "steps": 10},
            "initial_state": [[[0.7,0],[0,0]],[[0,0],[0.3,0]]],
            "objective": {"kind": "state_transfer",
                          "target": [[[0.7,0],[0,0]],[[0,0],[0.3,0]]]}
        }"#;
        let sc = Scenario::from_json(json).unwrap();
        let out = run_propagate(&sc).unwrap();
        assert!(out.index.j1 < 1e-12);
        assert!(out.index.j2 == 0.0);
    }

    #[test]
    fn ga_do_nothing_optimum() {
        // target equals the unitarily evolved initial state (here: stationary
        // diagonal state), so the zero distribution is optimal
        let json = r#"{
            "schema_version": 1,
            "seed": 5,
            "system": {
                "energies": [0.0, 1.0],
                "coupling": [[[0,0],[1,0]],[[1,0],[0,0]]]
            },
            "environment": {
                "kind": "medium",
                "grid": {"k_min": 0.0, "k_max": 4.0, "bins": 8},
                "mass": 1.0
            },
            "controls": {"t_final": 5.0, "steps": 1},
            "initial_state": [[[0.6,0],[0,0]],[[0,0],[0.4,0]]],
            "objective": {"kind": "state_transfer",
                          "target": [[[0.6,0],[0,0]],[[0,0],[0.4,0]]]},
            "ga": {"n_max": 1.0, "generations": 120, "stop_fitness": 1e-7}
        }"#;
        let sc = Scenario::from_json(json).unwrap();
        let out = run_ga(&sc).unwrap();
        assert!(out.best_fitness <= 1e-6, "fitness {}", out.best_fitness);
    }

    #[test]
    fn medium_zero_density_is_unitary() {
        let json = r#"{
            "schema_version": 1,
            "system": {
                "energies": [0.0, 1.0],
                "coupling": [[[0,0],[1,0]],[[1,0],[0,0]]]
            },
            "environment": {
                "kind": "medium",
                "grid": {"k_min": 0.0, "k_max": 4.0, "bins": 8},
                "mass": 1.0,
                "distribution": {"kind": "zero"}
            },
            "controls": {"t_final": 3.0, "steps": 6},
            "initial_state": [[[1,0],[0,0]],[[0,0],[0,0]]],
            "objective": {"kind": "state_transfer",
                          "target": [[[1,0],[0,0]],[[0,0],[0,0]]]}
        }"#;
        let sc = Scenario::from_json(json).unwrap();
        let out = run_propagate(&sc).unwrap();
        // diagonal initial state commutes with H0: unitary evolution is trivial
        assert!(out.index.j1 < 1e-10);
    }

    #[test]
    fn theorem1_run() {
        let json = r#"{
            "schema_version": 1,
            "seed": 11,
            "system": {"energies": [0.0, 1.0, 2.0]},
            "environment": {"kind": "none"},
            "controls": {"t_final": 1.0, "steps": 1},
            "initial_state": [[[1,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]]],
            "objective": {"kind": "state_transfer",
                          "target": [[[0.5,0],[0,0],[0,0]],[[0,0],[0.3,0],[0,0]],[[0,0],[0,0],[0.2,0]]]},
            "theorem1": {"samples": 50}
        }"#;
        let sc = Scenario::from_json(json).unwrap();
        let out = run_theorem1(&sc).unwrap();
        assert_eq!(out.lambda, 9);
        assert!(out.max_deviation <= 1e-12);
    }

    #[test]
    fn landscape_run_mixed_qubit() {
        let json = r#"{
            "schema_version": 1,
            "seed": 2,
            "system": {"energies": [0.0, 1.0]},
            "environment": {"kind": "none"},
            "controls": {"t_final": 1.0, "steps": 1},
            "initial_state": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]],
            "objective": {"kind": "observable",
                          "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]]},
            "landscape": {"restarts": 3, "saddle_runs": 8}
        }"#;
        let sc = Scenario::from_json(json).unwrap();
        let out = run_landscape(&sc).unwrap();
        assert!(out
            .clusters
            .iter()
            .any(|(v, _)| (v - 0.5).abs() <= 1e-4 || v.abs() <= 1e-4));
    }

    #[test]
    fn unknown_field_rejected() {
        let bad = two_level_planck_json().replace("\"seed\": 3", "\"seed\": 3, \"bogus\": 1");
        assert!(Scenario::from_json(&bad).is_err());
    }
}
