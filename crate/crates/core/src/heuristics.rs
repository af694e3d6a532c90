//! Baseline searchers: Iterative Greedy, Random Greedy and random search.

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::encoding::{random_genome, Genome, ReoGenome};
use crate::error::{Error, Result};
use crate::fitness::{Encoding, Evaluator};
use crate::ga::{RunRecord, TracePoint};
use crate::profile::{GeneratorPool, Mixture};
use crate::rng::{seeded, substream};

/// Candidate weights (in percent) for the greedy enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightGrid {
    steps: Vec<u32>,
}

impl WeightGrid {
    pub fn new(mut steps: Vec<u32>) -> Result<Self> {
        steps.sort_unstable();
        steps.dedup();
        if steps.is_empty() || steps.iter().any(|&w| w > 100) {
            return Err(Error::Config(format!("bad weight grid {steps:?}")));
        }
        Ok(WeightGrid { steps })
    }

    pub fn steps(&self) -> &[u32] {
        &self.steps
    }
}

impl Default for WeightGrid {
    /// Tenths 0.0 through 0.9.
    fn default() -> Self {
        WeightGrid {
            steps: (0..10).map(|t| t * 10).collect(),
        }
    }
}

/// All ordered `k`-vectors over the grid that sum to 100, in lexicographic
/// order. Entries may be zero.
pub fn weight_compositions(k: usize, grid: &WeightGrid) -> Vec<Vec<u32>> {
    fn extend(prefix: &mut Vec<u32>, left: usize, rest: u32, grid: &[u32], out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            if rest == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for &w in grid {
            if w > rest {
                break;
            }
            prefix.push(w);
            extend(prefix, left - 1, rest - w, grid, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        extend(&mut Vec::with_capacity(k), k, 100, grid.steps(), &mut out);
    }
    out
}

/// Outcome of a greedy construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicRecord {
    pub mixture: Mixture,
    pub best_fitness: f64,
    pub evaluations: usize,
    pub trace: Vec<TracePoint>,
    /// Generators tried for inclusion, in order.
    pub considered: Vec<usize>,
    /// Candidates ran out before the ensemble reached the requested size.
    pub exhausted: bool,
    pub seed: u64,
    pub wall_time: f64,
}

impl HeuristicRecord {
    pub fn into_run_record(self) -> RunRecord {
        RunRecord {
            best_genome: Genome::Reo(ReoGenome::from_mixture(&self.mixture)),
            best_fitness: self.best_fitness,
            trace: self.trace,
            evaluations_used: self.evaluations,
            seed: self.seed,
            wall_time: self.wall_time,
        }
    }
}

/// Generator ids ordered by FID (best first, ties by id).
pub fn fid_order(pool: &GeneratorPool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        pool.profiles()[a]
            .fid
            .total_cmp(&pool.profiles()[b].fid)
            .then(a.cmp(&b))
    });
    order
}

struct Greedy<'e, E> {
    evaluator: &'e E,
    seed: u64,
    evaluations: usize,
    trace: Vec<TracePoint>,
}

impl<E: Evaluator> Greedy<'_, E> {
    fn evaluate(&mut self, ids: &[usize], weights: &[u32]) -> Result<f64> {
        let entries = ids
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0)
            .map(|(&id, &w)| (id, w))
            .collect();
        let mixture = Mixture::new(entries)?;
        let mut rng = substream(self.seed, 0, self.evaluations as u64);
        self.evaluations += 1;
        self.evaluator.evaluate(&mixture, &mut rng)
    }

    /// Algorithm body shared by IG and RG. `first` seeds the ensemble and
    /// `candidates` are tried in order.
    fn run(
        mut self,
        s: usize,
        first: usize,
        candidates: impl IntoIterator<Item = usize>,
        grid: &WeightGrid,
    ) -> Result<HeuristicRecord> {
        let start = Instant::now();
        let mut ids = vec![first];
        let mut weights = vec![100u32];
        let mut best = self.evaluate(&ids, &weights)?;
        self.trace.push(TracePoint {
            evaluations: self.evaluations,
            best,
        });

        let mut considered = Vec::new();
        let mut candidates = candidates.into_iter();
        while ids.len() < s {
            let Some(g) = candidates.next() else { break };
            considered.push(g);
            let mut trial = ids.clone();
            trial.push(g);
            for w in weight_compositions(trial.len(), grid) {
                let tvd = self.evaluate(&trial, &w)?;
                if tvd < best {
                    best = tvd;
                    ids = trial.clone();
                    weights = w;
                    self.trace.push(TracePoint {
                        evaluations: self.evaluations,
                        best,
                    });
                }
            }
            // drop zero-weight generators
            let kept: Vec<(usize, u32)> = ids
                .iter()
                .zip(&weights)
                .filter(|(_, &w)| w > 0)
                .map(|(&id, &w)| (id, w))
                .collect();
            (ids, weights) = kept.into_iter().unzip();
        }
        if self.trace.last().map(|t| t.evaluations) != Some(self.evaluations) {
            self.trace.push(TracePoint {
                evaluations: self.evaluations,
                best,
            });
        }
        let exhausted = ids.len() < s;
        if exhausted {
            log::warn!(
                "greedy search ran out of candidates at size {} (requested {s})",
                ids.len()
            );
        }
        Ok(HeuristicRecord {
            mixture: Mixture::new(ids.into_iter().zip(weights).collect())?,
            best_fitness: best,
            evaluations: self.evaluations,
            trace: self.trace,
            considered,
            exhausted,
            seed: self.seed,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }
}

fn check_size(s: usize, n: usize) -> Result<()> {
    if s == 0 || s > n || s > 100 {
        return Err(Error::Instance(format!(
            "ensemble size {s} infeasible for {n} generators"
        )));
    }
    Ok(())
}

/// Iterative Greedy: start from the best-FID generator at weight 100, then
/// try the remaining generators in FID order, enumerating every grid weight
/// vector for the tentative ensemble and keeping strict improvements.
pub fn iterative_greedy<E: Evaluator>(
    pool: &GeneratorPool,
    s: usize,
    evaluator: &E,
    seed: u64,
) -> Result<(Mixture, HeuristicRecord)> {
    iterative_greedy_with_grid(pool, s, evaluator, seed, &WeightGrid::default())
}

pub fn iterative_greedy_with_grid<E: Evaluator>(
    pool: &GeneratorPool,
    s: usize,
    evaluator: &E,
    seed: u64,
    grid: &WeightGrid,
) -> Result<(Mixture, HeuristicRecord)> {
    check_size(s, pool.len())?;
    let order = fid_order(pool);
    let greedy = Greedy {
        evaluator,
        seed,
        evaluations: 0,
        trace: Vec::new(),
    };
    let rec = greedy.run(s, order[0], order[1..].iter().copied(), grid)?;
    Ok((rec.mixture.clone(), rec))
}

/// Random Greedy: like [`iterative_greedy`] but candidates are drawn
/// uniformly without replacement instead of in FID order.
pub fn random_greedy<E: Evaluator>(
    pool: &GeneratorPool,
    s: usize,
    evaluator: &E,
    seed: u64,
) -> Result<(Mixture, HeuristicRecord)> {
    check_size(s, pool.len())?;
    let order = fid_order(pool);
    let mut rest = order[1..].to_vec();
    rest.shuffle(&mut substream(seed, u64::MAX, 0));
    let greedy = Greedy {
        evaluator,
        seed,
        evaluations: 0,
        trace: Vec::new(),
    };
    let rec = greedy.run(s, order[0], rest, &WeightGrid::default())?;
    Ok((rec.mixture.clone(), rec))
}

/// Random search: `eval_budget` random genomes, best one wins (earliest on
/// ties).
pub fn random_search<E: Evaluator>(
    pool: &GeneratorPool,
    encoding: Encoding,
    eval_budget: usize,
    evaluator: &E,
    seed: u64,
) -> Result<(Genome, RunRecord)> {
    random_search_n(pool.len(), encoding, eval_budget, evaluator, seed)
}

pub fn random_search_n<E: Evaluator>(
    n: usize,
    encoding: Encoding,
    eval_budget: usize,
    evaluator: &E,
    seed: u64,
) -> Result<(Genome, RunRecord)> {
    if eval_budget == 0 {
        return Err(Error::Config("eval_budget must be at least 1".into()));
    }
    encoding.check_feasible(n)?;
    let start = Instant::now();
    let mut rng = seeded(seed);
    let mut best: Option<(Genome, f64)> = None;
    let mut trace = Vec::new();
    for i in 0..eval_budget {
        let genome = random_genome(encoding, n, &mut rng)?;
        let tvd = evaluator.evaluate(&genome.decode()?, &mut substream(seed, 0, i as u64))?;
        if best.as_ref().is_none_or(|(_, b)| tvd < *b) {
            best = Some((genome, tvd));
            trace.push(TracePoint {
                evaluations: i + 1,
                best: tvd,
            });
        }
    }
    let (genome, fitness) = best.expect("budget is positive");
    if trace.last().map(|t| t.evaluations) != Some(eval_budget) {
        trace.push(TracePoint {
            evaluations: eval_budget,
            best: fitness,
        });
    }
    let record = RunRecord {
        best_genome: genome.clone(),
        best_fitness: fitness,
        trace,
        evaluations_used: eval_budget,
        seed,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((genome, record))
}

/// Fewest evaluations IG or RG can spend reaching size `s` (every iteration
/// accepted and no generator dropped).
pub fn greedy_min_evaluations(s: usize, grid: &WeightGrid) -> usize {
    1 + (2..=s).map(|k| weight_compositions(k, grid).len()).sum::<usize>()
}
