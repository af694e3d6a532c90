//! Experiment harness: method × size × seed batches with persisted records.
//!
//! Configuration is a flat `key = value` file (`#` starts a comment):
//!
//! ```text
//! # pool: either a CSV file or synthetic parameters
//! pool_file = pool.csv
//! # synth_n = 220
//! # synth_classes = 10
//! # synth_concentration = 0.5
//! # synth_seed = 7
//! # synth_fid_min = 30
//! # synth_fid_max = 40
//! target = uniform
//! methods = GA-REO, GA-NREO, IG, RG, RRS, RNRS
//! sizes = 3, 4, 5
//! runs = 30
//! fitness = sampled:50000
//! population_size = 100
//! eval_budget = 10000
//! p_r = 0.5
//! p_m = 0.1
//! tournament_size = 2
//! elitism = 1
//! matched_budget = off        # off | pooled | ig | rg
//! greedy_eval_ceiling = 20000
//! alternative = two-sided     # two-sided | less | greater
//! out_dir = results
//! seed_base = 0
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fitness::{Encoding, FitnessMode, TvdEvaluator};
use crate::ga::{run_ga, GaConfig};
use crate::heuristics::{
    greedy_min_evaluations, iterative_greedy, random_greedy, random_search, WeightGrid,
};
use crate::operators::VariationConfig;
use crate::profile::{load_pool, synth_pool_from, GeneratorPool, SynthSpec, TargetDistribution};
use crate::records::{clear_records, write_record, StoredRecord};
use crate::report::{render_reports, summaries};
use crate::stats::{Alternative, MethodSummary};

/// Marker appended to methods run under the greedy-matched budget.
pub const MATCHED_MARK: &str = "▼";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    GaReo,
    GaNreo,
    Ig,
    Rg,
    Rrs,
    Rnrs,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::GaReo,
        Method::GaNreo,
        Method::Ig,
        Method::Rg,
        Method::Rrs,
        Method::Rnrs,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::GaReo => "GA-REO",
            Method::GaNreo => "GA-NREO",
            Method::Ig => "IG",
            Method::Rg => "RG",
            Method::Rrs => "RRS",
            Method::Rnrs => "RNRS",
        }
    }

    pub fn encoding(&self, size: usize) -> Encoding {
        match self {
            Method::GaNreo | Method::Rnrs => Encoding::Nreo(size),
            _ => Encoding::Reo(size),
        }
    }

    pub fn is_greedy(&self) -> bool {
        matches!(self, Method::Ig | Method::Rg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Method::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// How the matched budget is derived from the greedy runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchedBudget {
    #[default]
    Off,
    /// Mean over all IG and RG runs of a size.
    Pooled,
    Ig,
    Rg,
}

impl FromStr for MatchedBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "off" | "false" | "no" => Ok(MatchedBudget::Off),
            "pooled" | "true" | "yes" => Ok(MatchedBudget::Pooled),
            "ig" => Ok(MatchedBudget::Ig),
            "rg" => Ok(MatchedBudget::Rg),
            other => Err(Error::Config(format!(
                "matched_budget must be off, pooled, ig or rg, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PoolSource {
    File(PathBuf),
    Synth(SynthSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub pool: PoolSource,
    /// `None` means uniform.
    pub target: Option<Vec<f64>>,
    pub methods: Vec<Method>,
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub fitness: FitnessMode,
    /// Template for GA runs; encoding and seed are set per cell.
    pub ga: GaConfig,
    pub matched_budget: MatchedBudget,
    /// Greedy cells whose minimum possible cost exceeds this are skipped.
    pub greedy_eval_ceiling: Option<usize>,
    pub alternative: Alternative,
    pub out_dir: PathBuf,
    pub seed_base: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pool: PoolSource::Synth(SynthSpec::default()),
            target: None,
            methods: Method::ALL.to_vec(),
            sizes: vec![3, 4, 5],
            runs: 30,
            fitness: FitnessMode::Sampled(50_000),
            ga: GaConfig::default(),
            matched_budget: MatchedBudget::Off,
            greedy_eval_ceiling: Some(20_000),
            alternative: Alternative::TwoSided,
            out_dir: PathBuf::from("results"),
            seed_base: 0,
        }
    }
}

fn list<T: FromStr>(v: &str, key: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Config(format!("bad entry {t:?} for {key}")))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        ExperimentConfig::parse(&text, base, path)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path, source: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut synth = SynthSpec::default();
        let mut pool_file = None;
        let mut any_synth = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source, i + 1, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse()
                    .map_err(|_| Error::parse(source, i + 1, format!("bad value {v:?} for {key}")))
            };
            let int = |v: &str| -> Result<u64> {
                v.parse()
                    .map_err(|_| Error::parse(source, i + 1, format!("bad value {v:?} for {key}")))
            };
            let count = |v: &str| int(v).map(|x| x as usize);
            if key.starts_with("synth_") {
                any_synth = true;
            }
            match key {
                "pool_file" => pool_file = Some(base.join(value)),
                "synth_n" => synth.generators = count(value)?,
                "synth_classes" => synth.classes = count(value)?,
                "synth_concentration" => synth.concentration = num(value)?,
                "synth_seed" => synth.seed = int(value)?,
                "synth_fid_min" => synth.fid_range.0 = num(value)?,
                "synth_fid_max" => synth.fid_range.1 = num(value)?,
                "target" => {
                    cfg.target = if value.eq_ignore_ascii_case("uniform") {
                        None
                    } else {
                        Some(list(value, key)?)
                    }
                }
                "methods" => cfg.methods = list(value, key)?,
                "sizes" => cfg.sizes = list(value, key)?,
                "runs" => cfg.runs = count(value)?,
                "fitness" => cfg.fitness = value.parse()?,
                "population_size" => cfg.ga.population_size = count(value)?,
                "eval_budget" => cfg.ga.eval_budget = count(value)?,
                "p_r" => cfg.ga.variation.crossover_prob = num(value)?,
                "p_m" => cfg.ga.variation.mutation_prob = num(value)?,
                "tournament_size" => cfg.ga.tournament_size = count(value)?,
                "elitism" => cfg.ga.elitism = count(value)?,
                "matched_budget" => cfg.matched_budget = value.parse()?,
                "greedy_eval_ceiling" => {
                    cfg.greedy_eval_ceiling = if value.eq_ignore_ascii_case("none") {
                        None
                    } else {
                        Some(count(value)?)
                    }
                }
                "alternative" => cfg.alternative = value.parse()?,
                "out_dir" => cfg.out_dir = base.join(value),
                "seed_base" => cfg.seed_base = int(value)?,
                other => {
                    return Err(Error::parse(source, i + 1, format!("unknown key {other:?}")));
                }
            }
        }
        cfg.pool = match (pool_file, any_synth) {
            (Some(_), true) => {
                return Err(Error::Config("set either pool_file or synth_* keys, not both".into()))
            }
            (Some(p), false) => PoolSource::File(p),
            (None, _) => PoolSource::Synth(synth),
        };
        cfg.ga.fitness = cfg.fitness;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::Config("sizes must be a nonempty list of positive integers".into()));
        }
        if let PoolSource::File(p) = &self.pool {
            if !p.is_file() {
                return Err(Error::Config(format!("pool file {} does not exist", p.display())));
            }
        }
        VariationConfig::new(self.ga.variation.crossover_prob, self.ga.variation.mutation_prob)?;
        self.ga.validate()
    }

    pub fn load_pool(&self) -> Result<GeneratorPool> {
        let pool = match &self.pool {
            PoolSource::File(p) => load_pool(p)?,
            PoolSource::Synth(spec) => synth_pool_from(spec)?,
        };
        match &self.target {
            Some(t) => pool.with_target(TargetDistribution::new(t.clone())?),
            None => Ok(pool),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<StoredRecord>,
    pub summaries: Vec<MethodSummary>,
    /// Cells that were not run, with the reason.
    pub skipped: Vec<String>,
    /// Matched budget per size, when that mode is on.
    pub matched_budgets: BTreeMap<usize, usize>,
    pub files: Vec<PathBuf>,
}

struct Cell {
    label: String,
    method: Method,
    size: usize,
    budget: usize,
}

fn run_cell(cfg: &ExperimentConfig, pool: &GeneratorPool, cell: &Cell) -> Result<Vec<StoredRecord>> {
    let evaluator = TvdEvaluator::new(pool, cfg.fitness);
    let encoding = cell.method.encoding(cell.size);
    (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let seed = cfg.seed_base.wrapping_add(run as u64);
            let (record, exhausted) = match cell.method {
                Method::GaReo | Method::GaNreo => {
                    let population_size = cfg.ga.population_size.min(cell.budget);
                    let ga = GaConfig {
                        encoding,
                        seed,
                        fitness: cfg.fitness,
                        eval_budget: cell.budget,
                        population_size,
                        elitism: cfg.ga.elitism.min(population_size - 1),
                        ..cfg.ga.clone()
                    };
                    (run_ga(&ga, pool)?, false)
                }
                Method::Ig | Method::Rg => {
                    let (_, rec) = if cell.method == Method::Ig {
                        iterative_greedy(pool, cell.size, &evaluator, seed)?
                    } else {
                        random_greedy(pool, cell.size, &evaluator, seed)?
                    };
                    let exhausted = rec.exhausted;
                    (rec.into_run_record(), exhausted)
                }
                Method::Rrs | Method::Rnrs => {
                    let (_, rec) = random_search(pool, encoding, cell.budget, &evaluator, seed)?;
                    (rec, false)
                }
            };
            Ok(StoredRecord::from_run(
                &cell.label,
                cell.size,
                run,
                encoding,
                record,
                exhausted,
            ))
        })
        .collect()
}

/// Runs every configured cell, writes one record per run under
/// `out_dir/records`, and renders the report tables into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pool = cfg.load_pool()?;
    let n = pool.len();
    fs::create_dir_all(&cfg.out_dir)?;
    clear_records(&cfg.out_dir)?;

    let mut methods = cfg.methods.clone();
    if cfg.matched_budget != MatchedBudget::Off {
        for m in [Method::Ig, Method::Rg] {
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
    }
    // greedy methods first so matched budgets are known before GA/RRS
    methods.sort_by_key(|m| !m.is_greedy());
    methods.dedup();

    let grid = WeightGrid::default();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut greedy_evals: BTreeMap<(Method, usize), Vec<usize>> = BTreeMap::new();

    let mut cells = Vec::new();
    for &method in &methods {
        for &size in &cfg.sizes {
            if size > n {
                let why = format!("{method}({size}): size exceeds the {n} available generators");
                log::warn!("skipping {why}");
                skipped.push(why);
                continue;
            }
            if method.is_greedy() {
                let floor = greedy_min_evaluations(size, &grid);
                if let Some(ceiling) = cfg.greedy_eval_ceiling.filter(|&c| floor > c) {
                    let why = format!(
                        "{method}({size}): needs at least {floor} evaluations, ceiling is {ceiling}"
                    );
                    log::warn!("skipping {why}");
                    skipped.push(why);
                    continue;
                }
            }
            cells.push(Cell {
                label: method.label().to_string(),
                method,
                size,
                budget: cfg.ga.eval_budget,
            });
        }
    }

    for cell in &cells {
        log::info!("running {}({}) x {}", cell.label, cell.size, cfg.runs);
        let recs = run_cell(cfg, &pool, cell)?;
        if cell.method.is_greedy() {
            greedy_evals
                .entry((cell.method, cell.size))
                .or_default()
                .extend(recs.iter().map(|r| r.evaluations));
        }
        records.extend(recs);
    }

    let mut matched_budgets = BTreeMap::new();
    if cfg.matched_budget != MatchedBudget::Off {
        for &size in &cfg.sizes {
            let sources: &[Method] = match cfg.matched_budget {
                MatchedBudget::Ig => &[Method::Ig],
                MatchedBudget::Rg => &[Method::Rg],
                _ => &[Method::Ig, Method::Rg],
            };
            let evals: Vec<usize> = sources
                .iter()
                .filter_map(|m| greedy_evals.get(&(*m, size)))
                .flatten()
                .copied()
                .collect();
            if evals.is_empty() {
                continue;
            }
            let budget = (evals.iter().sum::<usize>() as f64 / evals.len() as f64).round() as usize;
            matched_budgets.insert(size, budget);
            for method in [Method::GaReo, Method::Rrs] {
                if !cfg.methods.contains(&method) {
                    continue;
                }
                let label = format!("{}{MATCHED_MARK}", method.label());
                if method == Method::GaReo && budget < 2 {
                    let why = format!("{label}({size}): matched budget {budget} is below 2");
                    log::warn!("skipping {why}");
                    skipped.push(why);
                    continue;
                }
                let cell = Cell {
                    label,
                    method,
                    size,
                    budget,
                };
                log::info!("running {}({}) with budget {budget}", cell.label, size);
                records.extend(run_cell(cfg, &pool, &cell)?);
            }
        }
    }

    for r in &records {
        write_record(&cfg.out_dir, r)?;
    }
    let files = render_reports(&records, &cfg.out_dir, cfg.alternative)?;
    Ok(ExperimentReport {
        summaries: summaries(&records)?,
        records,
        skipped,
        matched_budgets,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "\
            # comment\n\
            synth_n = 12\n\
            synth_classes = 4\n\
            synth_concentration = 0.7\n\
            synth_seed = 3\n\
            methods = GA-REO, rrs, IG\n\
            sizes = 2,3\n\
            runs = 5\n\
            fitness = sampled:1000\n\
            population_size = 10\n\
            eval_budget = 200 # trailing comment\n\
            p_r = 0.75\n\
            p_m = 0.05\n\
            matched_budget = pooled\n\
            greedy_eval_ceiling = none\n\
            alternative = less\n\
            out_dir = out\n\
            seed_base = 9\n";
        let cfg = ExperimentConfig::parse(text, Path::new("/tmp/x"), Path::new("cfg")).unwrap();
        assert_eq!(cfg.methods, vec![Method::GaReo, Method::Rrs, Method::Ig]);
        assert_eq!(cfg.sizes, vec![2, 3]);
        assert_eq!(cfg.fitness, FitnessMode::Sampled(1000));
        assert_eq!(cfg.ga.fitness, FitnessMode::Sampled(1000));
        assert_eq!(cfg.ga.variation.crossover_prob, 0.75);
        assert_eq!(cfg.matched_budget, MatchedBudget::Pooled);
        assert_eq!(cfg.greedy_eval_ceiling, None);
        assert_eq!(cfg.alternative, Alternative::Less);
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/x/out"));
        match cfg.pool {
            PoolSource::Synth(s) => assert_eq!((s.generators, s.classes, s.seed), (12, 4, 3)),
            _ => panic!("expected synthetic pool"),
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let p = Path::new("cfg");
        let base = Path::new(".");
        assert!(ExperimentConfig::parse("runs = 0\n", base, p).is_err());
        assert!(ExperimentConfig::parse("methods = GA\n", base, p).is_err());
        assert!(ExperimentConfig::parse("colour = blue\n", base, p).is_err());
        assert!(ExperimentConfig::parse("just words\n", base, p).is_err());
        assert!(ExperimentConfig::parse("p_r = 2\n", base, p).is_err());
        assert!(ExperimentConfig::parse("pool_file = /no/such/file.csv\n", base, p).is_err());
        assert!(ExperimentConfig::parse("sizes = 0\n", base, p).is_err());
    }

    #[test]
    fn single_random_search_cell() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            pool: PoolSource::Synth(SynthSpec {
                generators: 10,
                classes: 10,
                seed: 1,
                ..SynthSpec::default()
            }),
            methods: vec![Method::Rrs],
            sizes: vec![3],
            runs: 1,
            fitness: FitnessMode::Exact,
            ga: GaConfig {
                eval_budget: 200,
                population_size: 20,
                fitness: FitnessMode::Exact,
                ..GaConfig::default()
            },
            out_dir: dir.path().to_path_buf(),
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.summaries.len(), 1);
        assert_eq!(report.summaries[0].method, "RRS");
    }

    #[test]
    fn oversized_and_expensive_cells_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            pool: PoolSource::Synth(SynthSpec {
                generators: 8,
                classes: 4,
                seed: 1,
                ..SynthSpec::default()
            }),
            methods: vec![Method::Ig, Method::Rrs],
            sizes: vec![3, 9],
            runs: 2,
            fitness: FitnessMode::Exact,
            ga: GaConfig {
                eval_budget: 50,
                population_size: 10,
                fitness: FitnessMode::Exact,
                ..GaConfig::default()
            },
            greedy_eval_ceiling: Some(50),
            out_dir: dir.path().to_path_buf(),
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        // IG(3) needs >= 73 evaluations, IG(9) and RRS(9) exceed n
        assert_eq!(report.skipped.len(), 3, "{:?}", report.skipped);
        assert_eq!(report.records.len(), 2);
    }
}
