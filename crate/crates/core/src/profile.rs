//! Generator profiles, target distributions, mixtures and the two TVD
//! evaluators.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

const SUM_TOLERANCE: f64 = 1e-9;

fn check_probability_vector(probs: &[f64], what: &str) -> Result<()> {
    if probs.len() < 2 {
        return Err(Error::InvalidProfile(format!(
            "{what} needs at least 2 classes, got {}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidProfile(format!(
            "{what} has a negative or non-finite entry {p}"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidProfile(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// One pre-trained generator, reduced to its class-frequency vector and FID.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorProfile {
    pub id: usize,
    pub class_probs: Vec<f64>,
    pub fid: f64,
}

impl GeneratorProfile {
    pub fn new(id: usize, class_probs: Vec<f64>, fid: f64) -> Result<Self> {
        check_probability_vector(&class_probs, "class_probs")?;
        if !fid.is_finite() || fid < 0.0 {
            return Err(Error::InvalidProfile(format!("fid must be non-negative, got {fid}")));
        }
        Ok(GeneratorProfile {
            id,
            class_probs,
            fid,
        })
    }

    /// Profile from raw per-class label counts.
    pub fn from_counts(id: usize, counts: &[f64], fid: f64) -> Result<Self> {
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidProfile("negative count".into()));
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidProfile("total count is zero".into()));
        }
        GeneratorProfile::new(id, counts.iter().map(|c| c / total).collect(), fid)
    }
}

/// Class distribution of the real data.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution {
    real_freqs: Vec<f64>,
}

impl TargetDistribution {
    pub fn new(real_freqs: Vec<f64>) -> Result<Self> {
        check_probability_vector(&real_freqs, "target")?;
        Ok(TargetDistribution { real_freqs })
    }

    pub fn uniform(class_count: usize) -> Self {
        TargetDistribution {
            real_freqs: vec![1.0 / class_count as f64; class_count],
        }
    }

    pub fn freqs(&self) -> &[f64] {
        &self.real_freqs
    }

    pub fn class_count(&self) -> usize {
        self.real_freqs.len()
    }
}

/// Immutable set of generator profiles sharing one class count and target.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPool {
    profiles: Vec<GeneratorProfile>,
    class_count: usize,
    target: TargetDistribution,
}

impl GeneratorPool {
    /// Profiles must carry ids `0..n` in order.
    pub fn new(profiles: Vec<GeneratorProfile>, target: TargetDistribution) -> Result<Self> {
        let first = profiles
            .first()
            .ok_or_else(|| Error::InvalidProfile("pool has no generators".into()))?;
        let class_count = first.class_probs.len();
        for (i, p) in profiles.iter().enumerate() {
            if p.id != i {
                return Err(Error::InvalidProfile(format!(
                    "generator at position {i} has id {}",
                    p.id
                )));
            }
            if p.class_probs.len() != class_count {
                return Err(Error::InvalidProfile(format!(
                    "generator {i} has {} classes, expected {class_count}",
                    p.class_probs.len()
                )));
            }
        }
        if target.class_count() != class_count {
            return Err(Error::InvalidProfile(format!(
                "target has {} classes, pool has {class_count}",
                target.class_count()
            )));
        }
        Ok(GeneratorPool {
            profiles,
            class_count,
            target,
        })
    }

    pub fn with_uniform_target(profiles: Vec<GeneratorProfile>) -> Result<Self> {
        let c = profiles
            .first()
            .map(|p| p.class_probs.len())
            .unwrap_or_default();
        GeneratorPool::new(profiles, TargetDistribution::uniform(c.max(2)))
    }

    pub fn with_target(mut self, target: TargetDistribution) -> Result<Self> {
        if target.class_count() != self.class_count {
            return Err(Error::InvalidProfile(format!(
                "target has {} classes, pool has {}",
                target.class_count(),
                self.class_count
            )));
        }
        self.target = target;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn profiles(&self) -> &[GeneratorProfile] {
        &self.profiles
    }

    pub fn profile(&self, id: usize) -> Option<&GeneratorProfile> {
        self.profiles.get(id)
    }

    pub fn target(&self) -> &TargetDistribution {
        &self.target
    }

    /// Exact TVD of every generator used on its own.
    pub fn single_generator_tvds(&self) -> Vec<f64> {
        self.profiles
            .iter()
            .map(|p| tvd_between(self.target.freqs(), &p.class_probs))
            .collect()
    }
}

/// Decoded ensemble: distinct generator ids with integer percent weights
/// summing to exactly 100.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mixture {
    entries: Vec<(usize, u32)>,
}

impl Mixture {
    pub fn new(entries: Vec<(usize, u32)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidMixture("no entries".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(entries.len());
        for &(id, w) in &entries {
            if !seen.insert(id) {
                return Err(Error::InvalidMixture(format!("generator {id} appears twice")));
            }
            if w == 0 || w > 100 {
                return Err(Error::InvalidMixture(format!(
                    "generator {id} has weight {w}, expected 1..=100"
                )));
            }
        }
        let total: u32 = entries.iter().map(|(_, w)| w).sum();
        if total != 100 {
            return Err(Error::InvalidMixture(format!("weights sum to {total}, expected 100")));
        }
        Ok(Mixture { entries })
    }

    pub fn single(id: usize) -> Self {
        Mixture {
            entries: vec![(id, 100)],
        }
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    fn check_pool(&self, pool: &GeneratorPool) -> Result<()> {
        match self.ids().find(|&id| id >= pool.len()) {
            Some(id) => Err(Error::InvalidMixture(format!(
                "generator {id} is not in a pool of {}",
                pool.len()
            ))),
            None => Ok(()),
        }
    }

    /// Expected class frequencies of the mixture.
    pub fn expected_freqs(&self, pool: &GeneratorPool) -> Result<Vec<f64>> {
        self.check_pool(pool)?;
        let mut freqs = vec![0.0; pool.class_count()];
        for &(id, w) in &self.entries {
            let share = w as f64 / 100.0;
            for (f, p) in freqs.iter_mut().zip(&pool.profiles[id].class_probs) {
                *f += share * p;
            }
        }
        Ok(freqs)
    }
}

impl fmt::Display for Mixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (id, w)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{id}:{w}")?;
        }
        Ok(())
    }
}

/// Parses `id:weight` pairs separated by commas, e.g. `5:13,2:15,0:72`.
impl FromStr for Mixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .map(|tok| {
                let (id, w) = tok
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidMixture(format!("expected id:weight, got {tok:?}")))?;
                let id = id
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidMixture(format!("bad generator id {id:?}")))?;
                let w = w
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidMixture(format!("bad weight {w:?}")))?;
                Ok((id, w))
            })
            .collect::<Result<Vec<_>>>()?;
        Mixture::new(entries)
    }
}

fn tvd_between(target: &[f64], freqs: &[f64]) -> f64 {
    let l1: f64 = target.iter().zip(freqs).map(|(t, f)| (t - f).abs()).sum();
    (0.5 * l1).min(1.0)
}

/// TVD between the target and the mixture's expected class frequencies.
pub fn exact_tvd(mixture: &Mixture, pool: &GeneratorPool) -> Result<f64> {
    let freqs = mixture.expected_freqs(pool)?;
    Ok(tvd_between(pool.target.freqs(), &freqs))
}

/// Adds a multinomial(`n`, `probs`) draw into `out` using conditional
/// binomials. `probs` need not be exactly normalized; the last bucket takes
/// whatever is left.
fn add_multinomial(n: u64, probs: &[f64], rng: &mut SeededRng, out: &mut [u64]) {
    let mut remaining = n;
    let mut mass: f64 = probs.iter().sum();
    let last = probs.len() - 1;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            return;
        }
        if i == last {
            out[i] += remaining;
            return;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .expect("probability is in (0, 1)")
                .sample(rng)
        };
        out[i] += k;
        remaining -= k;
        mass -= p;
    }
}

/// TVD of `n_samples` labels drawn i.i.d. from the mixture.
///
/// Each label picks generator `i` with probability `w_i / 100` and then a
/// class from that generator's profile. The empirical class counts of that
/// process are multinomial, so they are drawn directly: first the number of
/// samples per generator, then the class counts within each generator.
pub fn sampled_tvd(
    mixture: &Mixture,
    pool: &GeneratorPool,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    mixture.check_pool(pool)?;
    if n_samples == 0 {
        return Err(Error::InvalidMixture("n_samples must be positive".into()));
    }
    let weights: Vec<f64> = mixture.entries.iter().map(|(_, w)| *w as f64).collect();
    let mut per_generator = vec![0u64; weights.len()];
    add_multinomial(n_samples as u64, &weights, rng, &mut per_generator);

    let mut counts = vec![0u64; pool.class_count()];
    for (&(id, _), &k) in mixture.entries.iter().zip(&per_generator) {
        if k > 0 {
            add_multinomial(k, &pool.profiles[id].class_probs, rng, &mut counts);
        }
    }
    let n = n_samples as f64;
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(tvd_between(pool.target.freqs(), &freqs))
}

/// Reads a pool from `generator_id,fid,count_0,...,count_{C-1}` CSV.
/// Row order defines ids; the `generator_id` column is kept only as a label.
pub fn load_pool(path: impl AsRef<Path>) -> Result<GeneratorPool> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_pool(BufReader::new(file), path)
}

pub fn read_pool(reader: impl BufRead, source: &Path) -> Result<GeneratorPool> {
    let mut lines = reader.lines().enumerate();
    let class_count = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::parse(source, 1, "missing header"));
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim().trim_start_matches('\u{feff}').split(',').collect();
        if cols.len() < 4 || cols[0].trim() != "generator_id" || cols[1].trim() != "fid" {
            return Err(Error::parse(
                source,
                i + 1,
                "header must be generator_id,fid,count_0,...,count_{C-1} with C >= 2",
            ));
        }
        for (c, col) in cols[2..].iter().enumerate() {
            if col.trim() != format!("count_{c}") {
                return Err(Error::parse(source, i + 1, format!("expected count_{c}, got {col:?}")));
            }
        }
        break cols.len() - 2;
    };

    let mut profiles = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != class_count + 2 {
            return Err(Error::parse(
                source,
                lineno,
                format!("expected {} columns, got {}", class_count + 2, cols.len()),
            ));
        }
        let fid: f64 = cols[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(source, lineno, format!("bad fid {:?}", cols[1])))?;
        let counts = cols[2..]
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(source, lineno, format!("bad count {c:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let profile = GeneratorProfile::from_counts(profiles.len(), &counts, fid)
            .map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        profiles.push(profile);
    }
    if profiles.is_empty() {
        return Err(Error::parse(source, 1, "no generator rows"));
    }
    GeneratorPool::with_uniform_target(profiles)
}

/// Writes the pool as label counts, scaling each profile to
/// `samples_per_generator` labels and rounding.
pub fn write_pool(
    pool: &GeneratorPool,
    samples_per_generator: u64,
    mut out: impl Write,
) -> Result<()> {
    write!(out, "generator_id,fid")?;
    for c in 0..pool.class_count() {
        write!(out, ",count_{c}")?;
    }
    writeln!(out)?;
    for p in &pool.profiles {
        write!(out, "g{},{}", p.id, p.fid)?;
        for prob in &p.class_probs {
            write!(out, ",{}", (prob * samples_per_generator as f64).round() as u64)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Parameters for [`synth_pool`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub generators: usize,
    pub classes: usize,
    pub concentration: f64,
    pub fid_range: (f64, f64),
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            generators: 220,
            classes: 10,
            concentration: 0.5,
            fid_range: (30.0, 40.0),
            seed: 0,
        }
    }
}

/// Random pool whose profiles follow a symmetric Dirichlet with the given
/// concentration (normalized Gamma draws) and whose FIDs are uniform in
/// `fid_range`.
pub fn synth_pool(
    n: usize,
    classes: usize,
    concentration: f64,
    fid_range: (f64, f64),
    rng: &mut SeededRng,
) -> Result<GeneratorPool> {
    if n == 0 {
        return Err(Error::Instance("pool needs at least one generator".into()));
    }
    if classes < 2 {
        return Err(Error::Instance("pool needs at least two classes".into()));
    }
    if !(concentration.is_finite() && concentration > 0.0) {
        return Err(Error::Instance(format!("concentration must be positive, got {concentration}")));
    }
    let (lo, hi) = fid_range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(Error::Instance(format!("bad fid range ({lo}, {hi})")));
    }
    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::Instance(e.to_string()))?;
    let mut profiles = Vec::with_capacity(n);
    for id in 0..n {
        let draws: Vec<f64> = (0..classes).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        let mut probs: Vec<f64> = if total > 0.0 {
            draws.iter().map(|d| d / total).collect()
        } else {
            vec![1.0 / classes as f64; classes]
        };
        // fold rounding residue into the largest entry
        let residue = 1.0 - probs.iter().sum::<f64>();
        let argmax = (0..classes)
            .max_by(|&a, &b| probs[a].total_cmp(&probs[b]))
            .unwrap_or(0);
        probs[argmax] += residue;
        let fid = if hi > lo { rng.random_range(lo..hi) } else { lo };
        profiles.push(GeneratorProfile::new(id, probs, fid)?);
    }
    GeneratorPool::with_uniform_target(profiles)
}

pub fn synth_pool_from(spec: &SynthSpec) -> Result<GeneratorPool> {
    let mut rng = crate::rng::seeded(spec.seed);
    synth_pool(
        spec.generators,
        spec.classes,
        spec.concentration,
        spec.fid_range,
        &mut rng,
    )
}
