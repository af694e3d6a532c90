//! Generational GA over either encoding.
//!
//! Binary tournament selection, two-point crossover with probability `p_r`,
//! one mutation per offspring with probability `p_m`, and generational
//! replacement that keeps the best `elitism` individuals. Initial population
//! evaluations count toward the budget; the last generation is allowed to
//! finish, so a run may overshoot the budget by less than one population.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::encoding::{random_genome, Genome};
use crate::error::{Error, Result};
use crate::fitness::{Encoding, Evaluator, FitnessMode, TvdEvaluator};
use crate::operators::{nreo_crossover, nreo_mutate, reo_crossover, reo_mutate, VariationConfig};
use crate::profile::GeneratorPool;
use crate::rng::{seeded, substream, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub eval_budget: usize,
    pub variation: VariationConfig,
    pub encoding: Encoding,
    pub fitness: FitnessMode,
    pub tournament_size: usize,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 100,
            eval_budget: 10_000,
            variation: VariationConfig::default(),
            encoding: Encoding::Reo(4),
            fitness: FitnessMode::Sampled(50_000),
            tournament_size: 2,
            elitism: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".into()));
        }
        if self.eval_budget < self.population_size {
            return Err(Error::Config(format!(
                "eval_budget {} is smaller than population_size {}",
                self.eval_budget, self.population_size
            )));
        }
        if self.elitism >= self.population_size {
            return Err(Error::Config("elitism must be below population_size".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::Config("tournament_size must be positive".into()));
        }
        VariationConfig::new(self.variation.crossover_prob, self.variation.mutation_prob)?;
        Ok(())
    }
}

/// Best-so-far fitness after `evaluations` fitness calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub evaluations: usize,
    pub best: f64,
}

/// Outcome of one independent run of any searcher.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub best_genome: Genome,
    pub best_fitness: f64,
    pub trace: Vec<TracePoint>,
    pub evaluations_used: usize,
    pub seed: u64,
    pub wall_time: f64,
}

impl RunRecord {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        self.best_genome == other.best_genome
            && self.best_fitness.to_bits() == other.best_fitness.to_bits()
            && self.trace == other.trace
            && self.evaluations_used == other.evaluations_used
            && self.seed == other.seed
    }
}

struct Individual {
    genome: Genome,
    fitness: f64,
}

fn evaluate_all<E: Evaluator>(
    genomes: Vec<Genome>,
    evaluator: &E,
    seed: u64,
    generation: u64,
) -> Result<Vec<Individual>> {
    genomes
        .into_iter()
        .enumerate()
        .map(|(i, genome)| {
            let mut rng = substream(seed, generation, i as u64);
            let fitness = evaluator.evaluate(&genome.decode()?, &mut rng)?;
            Ok(Individual { genome, fitness })
        })
        .collect()
}

fn tournament<'p>(pop: &'p [Individual], size: usize, rng: &mut SeededRng) -> &'p Genome {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..size {
        let other = rng.random_range(0..pop.len());
        if pop[other].fitness < pop[best].fitness {
            best = other;
        }
    }
    &pop[best].genome
}

fn crossover(a: &Genome, b: &Genome, rng: &mut SeededRng) -> Result<(Genome, Genome)> {
    match (a, b) {
        (Genome::Reo(a), Genome::Reo(b)) => {
            reo_crossover(a, b, rng).map(|(x, y)| (Genome::Reo(x), Genome::Reo(y)))
        }
        (Genome::Nreo(a), Genome::Nreo(b)) => {
            nreo_crossover(a, b, rng).map(|(x, y)| (Genome::Nreo(x), Genome::Nreo(y)))
        }
        _ => Err(Error::Operator("parents use different encodings".into())),
    }
}

fn mutate(g: &Genome, n: usize, rng: &mut SeededRng) -> Genome {
    match g {
        Genome::Reo(g) => Genome::Reo(reo_mutate(g, n, rng)),
        Genome::Nreo(g) => Genome::Nreo(nreo_mutate(g, rng)),
    }
}

/// Runs the GA on `pool` with TVD fitness as configured.
pub fn run_ga(config: &GaConfig, pool: &GeneratorPool) -> Result<RunRecord> {
    let evaluator = TvdEvaluator::new(pool, config.fitness);
    run_ga_with(config, pool.len(), &evaluator)
}

/// Runs the GA over `n` generators with an arbitrary evaluator. The
/// evaluator is called exactly once per counted evaluation.
pub fn run_ga_with<E: Evaluator>(config: &GaConfig, n: usize, evaluator: &E) -> Result<RunRecord> {
    config.validate()?;
    config.encoding.check_feasible(n)?;
    let start = Instant::now();
    let seed = config.seed;
    let mut rng = seeded(seed);

    let initial = (0..config.population_size)
        .map(|_| random_genome(config.encoding, n, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mut population = evaluate_all(initial, evaluator, seed, 0)?;
    let mut evaluations = population.len();

    let mut best = population
        .iter()
        .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
        .map(|ind| (ind.genome.clone(), ind.fitness))
        .expect("population is nonempty");
    let mut trace = vec![TracePoint {
        evaluations,
        best: best.1,
    }];

    let brood = config.population_size - config.elitism;
    let mut generation = 1u64;
    while evaluations < config.eval_budget {
        let mut offspring = Vec::with_capacity(brood + 1);
        while offspring.len() < brood {
            let a = tournament(&population, config.tournament_size, &mut rng);
            let b = tournament(&population, config.tournament_size, &mut rng);
            let (x, y) = if rng.random_bool(config.variation.crossover_prob) {
                crossover(a, b, &mut rng)?
            } else {
                (a.clone(), b.clone())
            };
            for child in [x, y] {
                if offspring.len() == brood {
                    break;
                }
                let child = if rng.random_bool(config.variation.mutation_prob) {
                    mutate(&child, n, &mut rng)
                } else {
                    child
                };
                offspring.push(child);
            }
        }
        let offspring = evaluate_all(offspring, evaluator, seed, generation)?;
        evaluations += offspring.len();

        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&i, &j| population[i].fitness.total_cmp(&population[j].fitness).then(i.cmp(&j)));
        let mut slots: Vec<Option<Individual>> = population.into_iter().map(Some).collect();
        let mut next: Vec<Individual> = order[..config.elitism]
            .iter()
            .map(|&i| slots[i].take().expect("elite indices are distinct"))
            .collect();
        next.extend(offspring);
        population = next;

        if let Some(ind) = population
            .iter()
            .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
            .filter(|ind| ind.fitness < best.1)
        {
            best = (ind.genome.clone(), ind.fitness);
        }
        trace.push(TracePoint {
            evaluations,
            best: best.1,
        });
        generation += 1;
    }

    Ok(RunRecord {
        best_genome: best.0,
        best_fitness: best.1,
        trace,
        evaluations_used: evaluations,
        seed,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// `n_runs` independent runs, run `i` seeded with `seed_base + i`. Runs
/// execute in parallel; output is ordered by `i`.
pub fn run_batch(
    config: &GaConfig,
    pool: &GeneratorPool,
    n_runs: usize,
    seed_base: u64,
) -> Result<Vec<RunRecord>> {
    if n_runs == 0 {
        return Err(Error::Config("n_runs must be at least 1".into()));
    }
    (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let cfg = GaConfig {
                seed: seed_base.wrapping_add(i as u64),
                ..config.clone()
            };
            run_ga(&cfg, pool)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{synth_pool, GeneratorProfile};

    fn small_config(encoding: Encoding) -> GaConfig {
        GaConfig {
            population_size: 20,
            eval_budget: 500,
            encoding,
            fitness: FitnessMode::Exact,
            seed: 3,
            ..GaConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        let mut c = GaConfig::default();
        assert!(c.validate().is_ok());
        c.population_size = 1;
        assert!(c.validate().is_err());
        c = GaConfig {
            eval_budget: 50,
            ..GaConfig::default()
        };
        assert!(c.validate().is_err());
        c = GaConfig {
            elitism: 100,
            ..GaConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn uniform_generator_is_found() {
        let mut profiles: Vec<GeneratorProfile> = synth_pool(9, 10, 0.5, (30.0, 40.0), &mut seeded(1))
            .unwrap()
            .profiles()
            .to_vec();
        profiles.push(GeneratorProfile::new(9, vec![0.1; 10], 35.0).unwrap());
        let pool = GeneratorPool::with_uniform_target(profiles).unwrap();
        let rec = run_ga(&small_config(Encoding::Reo(1)), &pool).unwrap();
        assert!(rec.best_fitness < 1e-12);
        assert_eq!(rec.best_genome.decode().unwrap().entries(), &[(9, 100)]);
    }

    #[test]
    fn infeasible_encoding_is_an_instance_error() {
        let pool = synth_pool(3, 4, 1.0, (30.0, 40.0), &mut seeded(1)).unwrap();
        let err = run_ga(&small_config(Encoding::Nreo(4)), &pool).unwrap_err();
        assert!(matches!(err, Error::Instance(_)));
    }

    #[test]
    fn trace_is_monotone_and_budget_respected() {
        let pool = synth_pool(12, 10, 0.5, (30.0, 40.0), &mut seeded(2)).unwrap();
        for enc in [Encoding::Reo(3), Encoding::Nreo(5)] {
            let cfg = small_config(enc);
            let rec = run_ga(&cfg, &pool).unwrap();
            assert!(rec.trace.windows(2).all(|w| w[1].best <= w[0].best));
            assert!(rec.evaluations_used >= cfg.eval_budget);
            assert!(rec.evaluations_used <= cfg.eval_budget + cfg.population_size);
            assert_eq!(rec.trace.last().unwrap().evaluations, rec.evaluations_used);
            assert_eq!(rec.trace.last().unwrap().best, rec.best_fitness);
            rec.best_genome.validate(12).unwrap();
        }
    }

    #[test]
    fn batch_seeds_are_consecutive() {
        let pool = synth_pool(8, 5, 1.0, (30.0, 40.0), &mut seeded(2)).unwrap();
        let cfg = small_config(Encoding::Reo(2));
        let recs = run_batch(&cfg, &pool, 4, 100).unwrap();
        assert_eq!(recs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![100, 101, 102, 103]);
        assert!(run_batch(&cfg, &pool, 0, 0).is_err());
    }
}
