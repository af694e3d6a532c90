//! Fitness evaluation shared by the GA and the baseline searchers.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::profile::{exact_tvd, sampled_tvd, GeneratorPool, Mixture};
use crate::rng::SeededRng;

/// Which genome encoding a search uses, with its size parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Encoding {
    /// Exactly `s` generators.
    Reo(usize),
    /// At most `s_max` generators.
    Nreo(usize),
}

impl Encoding {
    pub fn size(&self) -> usize {
        match *self {
            Encoding::Reo(s) | Encoding::Nreo(s) => s,
        }
    }

    pub fn check_feasible(&self, n: usize) -> Result<()> {
        let s = self.size();
        if s == 0 || s > n || s > 100 {
            let what = match self {
                Encoding::Reo(_) => "ensemble size",
                Encoding::Nreo(_) => "maximum ensemble size",
            };
            return Err(Error::Instance(format!("{what} {s} infeasible for {n} generators")));
        }
        Ok(())
    }
}

/// How a mixture's TVD is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitnessMode {
    Exact,
    Sampled(usize),
}

impl fmt::Display for FitnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitnessMode::Exact => f.write_str("exact"),
            FitnessMode::Sampled(n) => write!(f, "sampled:{n}"),
        }
    }
}

/// `exact` or `sampled:<n>`.
impl FromStr for FitnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("exact") {
            return Ok(FitnessMode::Exact);
        }
        let n = s
            .strip_prefix("sampled:")
            .and_then(|n| n.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("fitness must be `exact` or `sampled:<n>`, got {s:?}")))?;
        Ok(FitnessMode::Sampled(n))
    }
}

/// Scores a mixture; lower is better. Each call receives its own stream.
pub trait Evaluator: Sync {
    fn evaluate(&self, mixture: &Mixture, rng: &mut SeededRng) -> Result<f64>;
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, mixture: &Mixture, rng: &mut SeededRng) -> Result<f64> {
        (**self).evaluate(mixture, rng)
    }
}

/// TVD against the pool's target, exact or sampled.
#[derive(Debug, Clone, Copy)]
pub struct TvdEvaluator<'a> {
    pool: &'a GeneratorPool,
    mode: FitnessMode,
}

impl<'a> TvdEvaluator<'a> {
    pub fn new(pool: &'a GeneratorPool, mode: FitnessMode) -> Self {
        TvdEvaluator { pool, mode }
    }

    pub fn pool(&self) -> &'a GeneratorPool {
        self.pool
    }
}

impl Evaluator for TvdEvaluator<'_> {
    fn evaluate(&self, mixture: &Mixture, rng: &mut SeededRng) -> Result<f64> {
        match self.mode {
            FitnessMode::Exact => exact_tvd(mixture, self.pool),
            FitnessMode::Sampled(n) => sampled_tvd(mixture, self.pool, n, rng),
        }
    }
}
