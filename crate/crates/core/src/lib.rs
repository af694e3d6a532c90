//! Evolutionary construction of generator ensembles.
//!
//! A pool of pre-trained generators is reduced to per-generator class
//! frequency profiles. Ensembles are mixtures over those generators, and the
//! search minimizes the total variation distance (TVD) between the mixture's
//! class frequencies and a target distribution.
//!
//! Two genome encodings are provided: [`encoding::ReoGenome`] for ensembles
//! of exactly `s` generators and [`encoding::NreoGenome`] for ensembles of at
//! most `s_max` generators. Both are driven by the generational GA in
//! [`ga`], and compared against the greedy and random baselines in
//! [`heuristics`] using the nonparametric tooling in [`stats`].

pub mod encoding;
pub mod error;
pub mod experiment;
pub mod fitness;
pub mod ga;
pub mod heuristics;
pub mod operators;
pub mod profile;
pub mod records;
pub mod report;
pub mod rng;
pub mod stats;

pub use encoding::{Genome, NreoGenome, ReoGenome};
pub use error::{Error, Result};
pub use fitness::{Encoding, Evaluator, FitnessMode, TvdEvaluator};
pub use ga::{run_batch, run_ga, GaConfig, RunRecord, TracePoint};
pub use profile::{
    exact_tvd, load_pool, sampled_tvd, synth_pool, GeneratorPool, GeneratorProfile, Mixture,
    TargetDistribution,
};
pub use rng::SeededRng;
