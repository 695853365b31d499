//! GKSL dissipator construction for the two environment models: incoherent
//! radiation and a dilute gaseous medium, plus equilibrium distributions.
//!
//! Both models are isotropic: everything depends on |k| only and angular
//! integrals are done analytically (a 4 pi solid angle). Energy deltas are
//! resolved by analytic shell collapse, never by numerical mollification, so
//! the rates are exact for piecewise-constant distributions.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::qcore::{spectral, Observable};

/// Non-negative particle density over a radial momentum grid, isotropic.
/// Piecewise-constant between grid midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDistribution {
    grid: Vec<f64>,
    density: Vec<f64>,
}

impl RadialDistribution {
    pub fn new(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() != density.len() {
            return Err(Error::InvalidDistribution(format!(
                "grid has {} points but density has {}",
                grid.len(),
                density.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidDistribution(
                "grid needs at least two points".into(),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] < 0.0 {
            return Err(Error::InvalidDistribution(
                "grid must be non-negative and strictly increasing".into(),
            ));
        }
        if density.iter().any(|&d| d < 0.0 || !d.is_finite()) {
            return Err(Error::InvalidDistribution(
                "densities must be finite and non-negative".into(),
            ));
        }
        Ok(Self { grid, density })
    }

    /// Uniform grid of `bins` bin centers covering [k_min, k_max].
    pub fn uniform_grid(k_min: f64, k_max: f64, bins: usize) -> Vec<f64> {
        let width = (k_max - k_min) / bins as f64;
        (0..bins)
            .map(|b| k_min + (b as f64 + 0.5) * width)
            .collect()
    }

    pub fn zero(grid: Vec<f64>) -> Result<Self> {
        let density = vec![0.0; grid.len()];
        Self::new(grid, density)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn bins(&self) -> usize {
        self.grid.len()
    }

    /// Bin edges at grid midpoints; end bins extend half a step, clipped at 0.
    pub fn edges(&self) -> Vec<f64> {
        let g = &self.grid;
        let b = g.len();
        let mut e = Vec::with_capacity(b + 1);
        e.push((g[0] - 0.5 * (g[1] - g[0])).max(0.0));
        for i in 1..b {
            e.push(0.5 * (g[i - 1] + g[i]));
        }
        e.push(g[b - 1] + 0.5 * (g[b - 1] - g[b - 2]));
        e
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges().windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Piecewise-constant density at radius k; zero outside the band.
    pub fn value_at(&self, k: f64) -> f64 {
        let e = self.edges();
        if k < e[0] || k > e[e.len() - 1] {
            return 0.0;
        }
        let idx = e[1..e.len() - 1].partition_point(|&edge| edge <= k);
        self.density[idx.min(self.density.len() - 1)]
    }

    /// Largest momentum covered by the band.
    pub fn k_max(&self) -> f64 {
        *self.edges().last().unwrap()
    }

    /// Total density: integral dk n_k = 4 pi sum_b k_b^2 n_b dk_b.
    pub fn total_density(&self) -> f64 {
        let w = self.widths();
        4.0 * std::f64::consts::PI
            * self
                .grid
                .iter()
                .zip(self.density.iter())
                .zip(w.iter())
                .map(|((k, n), dk)| k * k * n * dk)
                .sum::<f64>()
    }
}

/// Decomposition of a coupling operator over system transition frequencies:
/// mu_omega = sum over (eps_n - eps_m = omega) of P_m mu P_n.
#[derive(Debug, Clone)]
pub struct TransitionDecomposition {
    /// Distinct transition frequencies, ascending (negative, zero, positive).
    pub frequencies: Vec<f64>,
    /// omega -> operator block, aligned with `frequencies`.
    pub operators: Vec<CMat>,
}

impl TransitionDecomposition {
    pub fn operator_for(&self, omega: f64, tol: f64) -> Option<&CMat> {
        self.frequencies
            .iter()
            .position(|&w| (w - omega).abs() <= tol)
            .map(|i| &self.operators[i])
    }

    pub fn dim(&self) -> usize {
        self.operators.first().map_or(0, |m| m.nrows())
    }
}

/// Per-term convention for the GKSL sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// rate * (2 L rho L† - L†L rho - rho L†L)
    Doubled,
    /// rate * (L rho L† - {L†L, rho}/2)
    Halved,
}

/// One jump channel.
#[derive(Debug, Clone)]
pub struct DissipatorTerm {
    pub op: CMat,
    pub rate: f64,
    pub convention: Convention,
}

/// A GKSL generator as a set of (jump operator, rate, convention) triples.
#[derive(Debug, Clone, Default)]
pub struct DissipatorSpec {
    pub terms: Vec<DissipatorTerm>,
}

impl DissipatorSpec {
    pub fn empty() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Direct elementwise action L(rho).
    pub fn apply(&self, rho: &CMat) -> CMat {
        let n = rho.nrows();
        let mut out = CMat::zeros(n, n);
        for term in &self.terms {
            let l = &term.op;
            let ld = l.adjoint();
            let ldl = &ld * l;
            let sandwich = l * rho * &ld;
            let anti = &ldl * rho + rho * &ldl;
            let r = C64::new(term.rate, 0.0);
            match term.convention {
                Convention::Doubled => {
                    out += (sandwich * C64::new(2.0, 0.0) - anti) * r;
                }
                Convention::Halved => {
                    out += (sandwich - anti * C64::new(0.5, 0.0)) * r;
                }
            }
        }
        out
    }
}

/// Radiation form factor g(|k|).
#[derive(Debug, Clone)]
pub enum FormFactor {
    Constant(f64),
    /// (k, g) pairs; piecewise-constant lookup by nearest band.
    Table(Vec<(f64, f64)>),
}

impl FormFactor {
    pub fn value(&self, k: f64) -> f64 {
        match self {
            FormFactor::Constant(g0) => *g0,
            FormFactor::Table(table) => {
                let mut best = (f64::INFINITY, 0.0);
                for &(kk, g) in table {
                    let d = (kk - k).abs();
                    if d < best.0 {
                        best = (d, g);
                    }
                }
                best.1
            }
        }
    }
}

/// Scattering amplitude t(omega, |k_out|, |k_in|) for the medium model.
#[derive(Debug, Clone)]
pub enum AmplitudeTable {
    Constant(C64),
    /// Per-frequency amplitude restricted to an incoming-momentum window;
    /// zero outside every window. Entries: (omega, amplitude, k_in window).
    PerOmega(Vec<(f64, C64, (f64, f64))>),
    /// Explicit (omega, k_out, k_in) entries with a lookup tolerance.
    /// A required entry that is absent is an error.
    Table {
        entries: Vec<((f64, f64, f64), C64)>,
        tol: f64,
    },
}

impl AmplitudeTable {
    pub fn value(&self, omega: f64, k_out: f64, k_in: f64) -> Result<C64> {
        match self {
            AmplitudeTable::Constant(t) => Ok(*t),
            AmplitudeTable::PerOmega(rules) => {
                for &(w, t, (lo, hi)) in rules {
                    if (w - omega).abs() <= 1e-9 * (1.0 + omega.abs()) && k_in >= lo && k_in <= hi
                    {
                        return Ok(t);
                    }
                }
                Ok(C64::new(0.0, 0.0))
            }
            AmplitudeTable::Table { entries, tol } => {
                for &((w, ko, ki), t) in entries {
                    if (w - omega).abs() <= *tol
                        && (ko - k_out).abs() <= *tol
                        && (ki - k_in).abs() <= *tol
                    {
                        return Ok(t);
                    }
                }
                Err(Error::MissingAmplitude(omega, k_out, k_in))
            }
        }
    }
}

/// Decompose a coupling operator over the transition frequencies of `h0`.
///
/// Frequencies closer than 1e-9 * max|eps| are coalesced into one block.
pub fn transition_decomposition(h0: &Observable, mu: &Observable) -> Result<TransitionDecomposition> {
    if h0.dim() != mu.dim() {
        return Err(Error::DimensionMismatch(format!(
            "H0 is {}x{0} but coupling is {1}x{1}",
            h0.dim(),
            mu.dim()
        )));
    }
    let dec = spectral(h0)?;
    let n = h0.dim();
    let scale = dec.values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let merge_tol = 1e-9 * scale;

    // Group eigenvalues into degenerate levels first.
    let mut levels: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in 0..n {
        match levels.last_mut() {
            Some((e, cols)) if (dec.values[i] - *e).abs() <= merge_tol => cols.push(i),
            _ => levels.push((dec.values[i], vec![i])),
        }
    }
    let projectors: Vec<CMat> = levels.iter().map(|(_, cols)| dec.projector(cols)).collect();

    let mut frequencies: Vec<f64> = Vec::new();
    let mut operators: Vec<CMat> = Vec::new();
    for (m_idx, (em, _)) in levels.iter().enumerate() {
        for (n_idx, (en, _)) in levels.iter().enumerate() {
            let omega = en - em; // eps_n - eps_m, block P_m mu P_n
            let block = &projectors[m_idx] * mu.matrix() * &projectors[n_idx];
            match frequencies
                .iter()
                .position(|&w| (w - omega).abs() <= merge_tol)
            {
                Some(i) => operators[i] += block,
                None => {
                    frequencies.push(omega);
                    operators.push(block);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..frequencies.len()).collect();
    order.sort_by(|&a, &b| frequencies[a].total_cmp(&frequencies[b]));
    Ok(TransitionDecomposition {
        frequencies: order.iter().map(|&i| frequencies[i]).collect(),
        operators: order.iter().map(|&i| operators[i].clone()).collect(),
    })
}

/// Radiation transition rates at frequency omega > 0:
/// gamma±(omega) = 4 pi^2 omega^2 |g(omega)|^2 [n(omega) + (1±1)/2].
pub fn radiation_rates(
    n: &RadialDistribution,
    g: &FormFactor,
    omega: f64,
) -> Result<(f64, f64)> {
    if omega > n.k_max() {
        return Err(Error::FrequencyOutOfBand(omega, n.k_max()));
    }
    if omega <= 0.0 {
        // the shell |k| = omega has zero measure
        return Ok((0.0, 0.0));
    }
    let pi = std::f64::consts::PI;
    let g2 = g.value(omega).powi(2);
    let base = 4.0 * pi * pi * omega * omega * g2;
    let nk = n.value_at(omega);
    Ok((base * (nk + 1.0), base * nk))
}

/// GKSL generator induced by incoherent radiation: one doubled-convention
/// term per transition frequency with rate gamma+(omega) + gamma-(-omega).
pub fn radiation_generator(
    td: &TransitionDecomposition,
    n: &RadialDistribution,
    g: &FormFactor,
) -> Result<DissipatorSpec> {
    let mut spec = DissipatorSpec::empty();
    for (&omega, op) in td.frequencies.iter().zip(td.operators.iter()) {
        if linalg::hs_norm(op) < 1e-14 {
            continue;
        }
        let rate = if omega > 0.0 {
            radiation_rates(n, g, omega)?.0
        } else if omega < 0.0 {
            radiation_rates(n, g, -omega)?.1
        } else {
            0.0 // zero-measure shell, no omega = 0 radiation channel
        };
        if rate > 0.0 {
            spec.terms.push(DissipatorTerm {
                op: op.clone(),
                rate,
                convention: Convention::Doubled,
            });
        }
    }
    Ok(spec)
}

/// GKSL generator for a dilute medium of particles with mass m.
///
/// Energy conservation fixes the outgoing shell. A block at decomposition
/// frequency omega lowers the system by omega, so the scattered particle
/// leaves with |k'| = sqrt(k^2 + 2 m omega) — equivalently sqrt(k^2 - 2 m w)
/// with w = -omega the energy absorbed by the system. Channels with
/// k^2 + 2 m omega < 0 are closed and contribute exactly zero. Per incoming
/// bin the rate is 2 pi * (4 pi k^2 n dk) * (4 pi m |k'|) and the jump
/// operator is t(omega, k', k) * T_omega, halved convention.
pub fn medium_generator(
    td: &TransitionDecomposition,
    n: &RadialDistribution,
    mass: f64,
    amplitudes: &AmplitudeTable,
) -> Result<DissipatorSpec> {
    if mass <= 0.0 {
        return Err(Error::InvalidDistribution(format!(
            "medium mass must be positive, got {mass}"
        )));
    }
    let pi = std::f64::consts::PI;
    let widths = n.widths();
    let mut spec = DissipatorSpec::empty();
    for (&omega, block) in td.frequencies.iter().zip(td.operators.iter()) {
        if linalg::hs_norm(block) < 1e-14 {
            continue;
        }
        for ((&k, &dens), &dk) in n.grid().iter().zip(n.density().iter()).zip(widths.iter()) {
            if dens <= 0.0 {
                continue;
            }
            let kp2 = k * k + 2.0 * mass * omega;
            if kp2 <= 0.0 {
                continue; // closed channel
            }
            let kp = kp2.sqrt();
            let amp = amplitudes.value(omega, kp, k)?;
            if amp.norm() < 1e-14 {
                continue;
            }
            let rate = 2.0 * pi * (4.0 * pi * k * k * dens * dk) * (4.0 * pi * mass * kp);
            if rate > 0.0 {
                spec.terms.push(DissipatorTerm {
                    op: block * amp,
                    rate,
                    convention: Convention::Halved,
                });
            }
        }
    }
    Ok(spec)
}

/// Planck distribution n(k) = 1/(e^{k/T} - 1) sampled on the grid.
pub fn planck(temperature: f64, grid: Vec<f64>) -> Result<RadialDistribution> {
    if temperature <= 0.0 {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    let density: Vec<f64> = grid
        .iter()
        .map(|&k| 1.0 / ((k / temperature).exp() - 1.0))
        .collect();
    RadialDistribution::new(grid, density)
}

/// Boltzmann distribution n(k) = C e^{-beta k^2 / 2m}, with C rescaled so the
/// grid quadrature integrates to `n_total` exactly.
pub fn boltzmann(
    beta: f64,
    mass: f64,
    n_total: f64,
    grid: Vec<f64>,
) -> Result<RadialDistribution> {
    if beta <= 0.0 || mass <= 0.0 || n_total <= 0.0 {
        return Err(Error::InvalidDistribution(format!(
            "beta, mass and total density must be positive (got {beta}, {mass}, {n_total})"
        )));
    }
    let pi = std::f64::consts::PI;
    let unnormalized: Vec<f64> = grid
        .iter()
        .map(|&k| (-beta * k * k / (2.0 * mass)).exp())
        .collect();
    let probe = RadialDistribution::new(grid.clone(), unnormalized.clone())?;
    let quad = probe.total_density();
    let analytic = (2.0 * pi * mass / beta).powf(1.5);
    let coverage = quad / analytic;
    if coverage < 0.999 {
        return Err(Error::GridTooNarrow(coverage));
    }
    let scale = n_total / quad;
    let density = unnormalized.into_iter().map(|u| u * scale).collect();
    RadialDistribution::new(grid, density)
}
