//! Generational genetic algorithm over environment-distribution genomes.
//!
//! Fitness maps are pure, so evaluation is parallel per generation; selection
//! happens after a full-generation barrier, which keeps runs bitwise
//! deterministic for a fixed seed regardless of thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generators::RadialDistribution;

/// One candidate: gene values inside the declared per-gene bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    pub genes: Vec<f64>,
}

/// Per-generation record of the optimization.
#[derive(Debug, Clone)]
pub struct GaHistory {
    pub best: Vec<f64>,
    pub mean: Vec<f64>,
    pub best_genomes: Vec<Genome>,
}

#[derive(Debug, Clone)]
pub struct GaSettings {
    pub pop_size: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    pub crossover_rate: f64,
    pub tournament_k: usize,
    pub elitism: usize,
    pub seed: u64,
    /// Stop as soon as the best objective drops to this value.
    pub stop_fitness: Option<f64>,
}

impl GaSettings {
    /// Conventional defaults for density-distribution searches.
    pub fn defaults_for(n_max: f64, seed: u64) -> Self {
        Self {
            pop_size: 50,
            generations: 200,
            mutation_rate: 0.1,
            mutation_sigma: 0.1 * n_max,
            crossover_rate: 0.7,
            tournament_k: 3,
            elitism: 1,
            seed,
            stop_fitness: None,
        }
    }

    fn validate(&self, genes: usize) -> Result<()> {
        if self.pop_size < 2 || self.tournament_k == 0 || self.elitism >= self.pop_size {
            return Err(Error::InvalidDistribution(
                "population must hold at least two individuals with elitism < pop_size".into(),
            ));
        }
        if genes == 0 {
            return Err(Error::LengthMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(())
    }
}

fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

fn random_genome<R: Rng + ?Sized>(bounds: &[(f64, f64)], rng: &mut R) -> Genome {
    Genome {
        genes: bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect(),
    }
}

fn tournament<'a, R: Rng + ?Sized>(
    pop: &'a [Genome],
    fit: &[f64],
    k: usize,
    rng: &mut R,
) -> &'a Genome {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..k {
        let c = rng.gen_range(0..pop.len());
        if fit[c] < fit[best] {
            best = c;
        }
    }
    &pop[best]
}

/// Minimize a fitness over box-bounded genomes with a generational GA.
///
/// Selection is tournament (lower fitness wins), crossover is uniform,
/// mutation is per-gene Gaussian clipped to bounds; the `elitism` best
/// individuals carry over unchanged.
pub fn evolve<F>(
    bounds: &[(f64, f64)],
    settings: &GaSettings,
    fitness: F,
) -> Result<(Genome, GaHistory)>
where
    F: Fn(&Genome) -> Result<f64> + Sync,
{
    settings.validate(bounds.len())?;
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidDistribution(format!(
                "gene {i} has invalid bounds [{lo}, {hi}]"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut pop: Vec<Genome> = (0..settings.pop_size)
        .map(|_| random_genome(bounds, &mut rng))
        .collect();
    let mut history = GaHistory {
        best: Vec::new(),
        mean: Vec::new(),
        best_genomes: Vec::new(),
    };
    let mut champion: Option<(Genome, f64)> = None;
    for _gen in 0..=settings.generations {
        let fit: Result<Vec<f64>> = pop.par_iter().map(|g| fitness(g)).collect();
        let fit = fit?;
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[a].partial_cmp(&fit[b]).unwrap_or(std::cmp::Ordering::Equal));
        let best_i = order[0];
        let best_f = fit[best_i];
        history.best.push(best_f);
        history.mean.push(fit.iter().sum::<f64>() / fit.len() as f64);
        history.best_genomes.push(pop[best_i].clone());
        if champion.as_ref().map_or(true, |(_, f)| best_f < *f) {
            champion = Some((pop[best_i].clone(), best_f));
        }
        if settings.stop_fitness.map_or(false, |s| best_f <= s) {
            break;
        }
        if _gen == settings.generations {
            break;
        }
        let mut next: Vec<Genome> = order[..settings.elitism]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();
        while next.len() < settings.pop_size {
            let a = tournament(&pop, &fit, settings.tournament_k, &mut rng).clone();
            let b = tournament(&pop, &fit, settings.tournament_k, &mut rng).clone();
            let mut child = if rng.gen::<f64>() < settings.crossover_rate {
                Genome {
                    genes: a
                        .genes
                        .iter()
                        .zip(b.genes.iter())
                        .map(|(&x, &y)| if rng.gen::<bool>() { x } else { y })
                        .collect(),
                }
            } else {
                a
            };
            for (g, &(lo, hi)) in child.genes.iter_mut().zip(bounds.iter()) {
                if rng.gen::<f64>() < settings.mutation_rate {
                    let step: f64 = rng.sample(StandardNormal);
                    *g = clip(*g + step * settings.mutation_sigma, lo, hi);
                }
            }
            next.push(child);
        }
        pop = next;
    }
    let (best, _) = champion.expect("at least one generation evaluated");
    Ok((best, history))
}

/// Genome -> piecewise-constant radial distribution on a grid.
pub fn decode(genome: &Genome, grid: &[f64]) -> Result<RadialDistribution> {
    if genome.genes.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: genome.genes.len(),
        });
    }
    RadialDistribution::new(grid.to_vec(), genome.genes.clone())
}

/// Inverse of [`decode`] on the same grid.
pub fn encode(dist: &RadialDistribution) -> Genome {
    Genome {
        genes: dist.density().to_vec(),
    }
}
