//! Genome encodings for fixed-size (REO) and bounded-size (NREO) ensembles.
//!
//! Weights are integer percent points. Every active weight is at least 1 and
//! the active weights of a genome sum to exactly 100.

use std::collections::HashSet;
use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::fitness::Encoding;
use crate::profile::Mixture;
use crate::rng::SeededRng;

/// Shares are quantized to parts per billion before apportioning so that
/// rescaling the raw values cannot flip a floor or a remainder ordering.
const SHARE_UNITS: f64 = 1e9;

/// Apportions 100 percent points over `raw` by the largest-remainder method.
///
/// Raw values are scaled to sum 100 and floored; the leftover points go to
/// the largest fractional parts (lowest index on ties). Entries that end up
/// at zero are then lifted to 1 by taking a point from the current largest
/// entry (lowest index on ties). Output order follows input order.
pub fn renormalize_weights(raw: &[f64]) -> Result<Vec<u32>> {
    let k = raw.len();
    if k == 0 {
        return Err(Error::DegenerateWeights("no weights".into()));
    }
    if k > 100 {
        return Err(Error::DegenerateWeights(format!(
            "{k} entries cannot each hold at least 1 of 100 points"
        )));
    }
    if raw.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::DegenerateWeights("negative or non-finite weight".into()));
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights("all weights are zero".into()));
    }

    let units: Vec<u128> = raw
        .iter()
        .map(|r| ((r / total) * SHARE_UNITS).round() as u128)
        .collect();
    let unit_total: u128 = units.iter().sum();
    if unit_total == 0 {
        return Err(Error::DegenerateWeights("all weights are zero".into()));
    }

    let mut out: Vec<u32> = units.iter().map(|u| (u * 100 / unit_total) as u32).collect();
    let remainders: Vec<u128> = units.iter().map(|u| u * 100 % unit_total).collect();
    let assigned: u32 = out.iter().sum();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
    for &i in order.iter().take((100 - assigned) as usize) {
        out[i] += 1;
    }

    for i in 0..k {
        if out[i] == 0 {
            let donor = largest_index(&out);
            out[donor] -= 1;
            out[i] = 1;
        }
    }
    Ok(out)
}

fn largest_index(w: &[u32]) -> usize {
    let mut best = 0;
    for (i, &v) in w.iter().enumerate() {
        if v > w[best] {
            best = i;
        }
    }
    best
}

fn check_weights(weights: &[u32]) -> Result<()> {
    if let Some(pos) = weights.iter().position(|&w| w == 0) {
        return Err(Error::InvalidGenome(format!("active weight at {pos} is zero")));
    }
    let sum: u32 = weights.iter().sum();
    if sum != 100 {
        return Err(Error::InvalidGenome(format!("active weights sum to {sum}")));
    }
    Ok(())
}

/// One `(generator id, weight percent)` locus of a REO genome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gene {
    pub id: usize,
    pub weight: u32,
}

/// Fixed-size ensemble: exactly `s` distinct generators, all weighted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReoGenome {
    genes: Vec<Gene>,
}

impl ReoGenome {
    pub fn new(genes: Vec<Gene>) -> Result<Self> {
        let g = ReoGenome { genes };
        g.check_shape()?;
        Ok(g)
    }

    pub fn from_pairs(pairs: &[(usize, u32)]) -> Result<Self> {
        ReoGenome::new(pairs.iter().map(|&(id, weight)| Gene { id, weight }).collect())
    }

    pub(crate) fn from_genes_unchecked(genes: Vec<Gene>) -> Self {
        ReoGenome { genes }
    }

    fn check_shape(&self) -> Result<()> {
        if self.genes.is_empty() {
            return Err(Error::InvalidGenome("REO genome has no genes".into()));
        }
        let mut seen = HashSet::with_capacity(self.genes.len());
        for g in &self.genes {
            if !seen.insert(g.id) {
                return Err(Error::InvalidGenome(format!("generator {} repeated", g.id)));
            }
        }
        check_weights(&self.weights())
    }

    /// Full invariant check against a pool of `n` generators.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.check_shape()?;
        if let Some(g) = self.genes.iter().find(|g| g.id >= n) {
            return Err(Error::InvalidGenome(format!(
                "generator {} outside pool of {n}",
                g.id
            )));
        }
        Ok(())
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    pub fn size(&self) -> usize {
        self.genes.len()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.genes.iter().map(|g| g.id).collect()
    }

    pub fn weights(&self) -> Vec<u32> {
        self.genes.iter().map(|g| g.weight).collect()
    }

    pub fn decode(&self) -> Result<Mixture> {
        self.check_shape()?;
        Mixture::new(self.genes.iter().map(|g| (g.id, g.weight)).collect())
    }

    /// A mixture is already a valid REO genome of size `mixture.len()`.
    pub fn from_mixture(mixture: &Mixture) -> Self {
        ReoGenome {
            genes: mixture
                .entries()
                .iter()
                .map(|&(id, weight)| Gene { id, weight })
                .collect(),
        }
    }

    /// Parses the `id.ww` token form, e.g. `5.13 2.15 0.72`.
    pub fn parse_text(s: &str) -> Result<Self> {
        let genes = s
            .split_whitespace()
            .map(|tok| {
                let (id, w) = tok
                    .split_once('.')
                    .ok_or_else(|| Error::InvalidGenome(format!("bad gene token {tok:?}")))?;
                let id = id
                    .parse()
                    .map_err(|_| Error::InvalidGenome(format!("bad gene token {tok:?}")))?;
                let weight = w
                    .parse()
                    .map_err(|_| Error::InvalidGenome(format!("bad gene token {tok:?}")))?;
                Ok(Gene { id, weight })
            })
            .collect::<Result<Vec<_>>>()?;
        ReoGenome::new(genes)
    }
}

impl fmt::Display for ReoGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.genes.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}.{:02}", g.id, g.weight)?;
        }
        Ok(())
    }
}

/// Bounded-size ensemble: a size, a permutation of every generator id, and a
/// weight per permutation slot. Only the first `size` slots are active.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NreoGenome {
    size: usize,
    ids: Vec<usize>,
    weights: Vec<u32>,
    max_size: usize,
}

impl NreoGenome {
    pub fn new(size: usize, ids: Vec<usize>, weights: Vec<u32>, max_size: usize) -> Result<Self> {
        let g = NreoGenome {
            size,
            ids,
            weights,
            max_size,
        };
        g.check()?;
        Ok(g)
    }

    pub(crate) fn from_parts_unchecked(
        size: usize,
        ids: Vec<usize>,
        weights: Vec<u32>,
        max_size: usize,
    ) -> Self {
        NreoGenome {
            size,
            ids,
            weights,
            max_size,
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.ids.len();
        if self.weights.len() != n {
            return Err(Error::InvalidGenome(format!(
                "{} ids but {} weights",
                n,
                self.weights.len()
            )));
        }
        if self.max_size == 0 || self.max_size > n {
            return Err(Error::InvalidGenome(format!(
                "max size {} outside 1..={n}",
                self.max_size
            )));
        }
        if self.size == 0 || self.size > self.max_size {
            return Err(Error::InvalidGenome(format!(
                "size {} outside 1..={}",
                self.size, self.max_size
            )));
        }
        let mut seen = vec![false; n];
        for &id in &self.ids {
            if id >= n || seen[id] {
                return Err(Error::InvalidGenome(format!(
                    "id segment is not a permutation of 0..{n}"
                )));
            }
            seen[id] = true;
        }
        check_weights(&self.weights[..self.size])?;
        if self.weights[self.size..].iter().any(|&w| w != 0) {
            return Err(Error::InvalidGenome("inactive weights must be zero".into()));
        }
        Ok(())
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.check()?;
        if self.ids.len() != n {
            return Err(Error::InvalidGenome(format!(
                "genome covers {} generators, pool has {n}",
                self.ids.len()
            )));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn generator_count(&self) -> usize {
        self.ids.len()
    }

    pub fn decode(&self) -> Result<Mixture> {
        self.check()?;
        Mixture::new(
            self.ids[..self.size]
                .iter()
                .copied()
                .zip(self.weights[..self.size].iter().copied())
                .collect(),
        )
    }

    /// Parses the `size | ids | weights` form.
    pub fn parse_text(s: &str, max_size: usize) -> Result<Self> {
        let parts: Vec<&str> = s.split('|').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidGenome(format!(
                "expected `size | ids | weights`, got {s:?}"
            )));
        }
        let bad = |what: &str| Error::InvalidGenome(format!("bad {what} segment in {s:?}"));
        let size = parts[0].trim().parse().map_err(|_| bad("size"))?;
        let ids = parts[1]
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("id")))
            .collect::<Result<Vec<usize>>>()?;
        let weights = parts[2]
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("weight")))
            .collect::<Result<Vec<u32>>>()?;
        NreoGenome::new(size, ids, weights, max_size)
    }
}

impl fmt::Display for NreoGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |", self.size)?;
        for id in &self.ids {
            write!(f, " {id}")?;
        }
        f.write_str(" |")?;
        for w in &self.weights {
            write!(f, " {w}")?;
        }
        Ok(())
    }
}

/// Either encoding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Genome {
    Reo(ReoGenome),
    Nreo(NreoGenome),
}

impl Genome {
    pub fn decode(&self) -> Result<Mixture> {
        match self {
            Genome::Reo(g) => g.decode(),
            Genome::Nreo(g) => g.decode(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Genome::Reo(g) => g.validate(n),
            Genome::Nreo(g) => g.validate(n),
        }
    }

    pub fn parse_text(s: &str, encoding: Encoding) -> Result<Self> {
        match encoding {
            Encoding::Reo(_) => ReoGenome::parse_text(s).map(Genome::Reo),
            Encoding::Nreo(max) => NreoGenome::parse_text(s, max).map(Genome::Nreo),
        }
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Genome::Reo(g) => g.fmt(f),
            Genome::Nreo(g) => g.fmt(f),
        }
    }
}

/// Raw weights in (0, 1].
fn random_raws(k: usize, rng: &mut SeededRng) -> Vec<f64> {
    (0..k).map(|_| 1.0 - rng.random::<f64>()).collect()
}

/// Random REO genome over `n` generators: `s` ids without replacement and
/// renormalized uniform weights.
pub fn random_reo(s: usize, n: usize, rng: &mut SeededRng) -> Result<ReoGenome> {
    if s == 0 || s > n || s > 100 {
        return Err(Error::Instance(format!(
            "ensemble size {s} infeasible for {n} generators"
        )));
    }
    let ids = index::sample(rng, n, s).into_vec();
    let weights = renormalize_weights(&random_raws(s, rng))?;
    Ok(ReoGenome::from_genes_unchecked(
        ids.into_iter()
            .zip(weights)
            .map(|(id, weight)| Gene { id, weight })
            .collect(),
    ))
}

/// Random NREO genome over `n` generators: a shuffled id segment, a size
/// uniform in `1..=max_size`, and renormalized uniform active weights.
pub fn random_nreo(max_size: usize, n: usize, rng: &mut SeededRng) -> Result<NreoGenome> {
    if max_size == 0 || max_size > n || max_size > 100 {
        return Err(Error::Instance(format!(
            "maximum ensemble size {max_size} infeasible for {n} generators"
        )));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let size = rng.random_range(1..=max_size);
    let mut weights = vec![0u32; n];
    weights[..size].copy_from_slice(&renormalize_weights(&random_raws(size, rng))?);
    Ok(NreoGenome::from_parts_unchecked(size, ids, weights, max_size))
}

pub fn random_genome(encoding: Encoding, n: usize, rng: &mut SeededRng) -> Result<Genome> {
    match encoding {
        Encoding::Reo(s) => random_reo(s, n, rng).map(Genome::Reo),
        Encoding::Nreo(max) => random_nreo(max, n, rng).map(Genome::Nreo),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::rng::seeded;

    #[test]
    fn renormalize_examples() {
        assert_eq!(renormalize_weights(&[1.0, 1.0]).unwrap(), vec![50, 50]);
        assert_eq!(renormalize_weights(&[1.0, 1.0, 1.0]).unwrap(), vec![34, 33, 33]);
        assert_eq!(
            renormalize_weights(&[97.0, 1.0, 1.0, 1.0]).unwrap(),
            vec![97, 1, 1, 1]
        );
        // 1000:1:1 floors to (99, 0, 0) + 1 leftover on index 0, then both
        // zeros borrow from the largest.
        assert_eq!(
            renormalize_weights(&[1000.0, 1.0, 1.0]).unwrap(),
            vec![98, 1, 1]
        );
        assert_eq!(renormalize_weights(&[0.0, 3.0]).unwrap(), vec![1, 99]);
    }

    #[test]
    fn renormalize_rejects_degenerate_input() {
        assert!(renormalize_weights(&[]).is_err());
        assert!(renormalize_weights(&[0.0, 0.0]).is_err());
        assert!(renormalize_weights(&[1.0, -1.0]).is_err());
        assert!(renormalize_weights(&[f64::NAN]).is_err());
        assert!(renormalize_weights(&vec![1.0; 101]).is_err());
        assert_eq!(renormalize_weights(&vec![1.0; 100]).unwrap(), vec![1; 100]);
    }

    #[test]
    fn decode_examples() {
        let reo = ReoGenome::from_pairs(&[(5, 13), (2, 15), (0, 72)]).unwrap();
        assert_eq!(reo.decode().unwrap().entries(), &[(5, 13), (2, 15), (0, 72)]);
        assert_eq!(reo.to_string(), "5.13 2.15 0.72");

        let nreo = NreoGenome::new(4, vec![4, 1, 2, 5, 0, 3], vec![22, 16, 43, 19, 0, 0], 6).unwrap();
        assert_eq!(
            nreo.decode().unwrap().entries(),
            &[(4, 22), (1, 16), (2, 43), (5, 19)]
        );
        assert_eq!(nreo.to_string(), "4 | 4 1 2 5 0 3 | 22 16 43 19 0 0");

        let single = ReoGenome::from_pairs(&[(0, 100)]).unwrap();
        assert_eq!(single.decode().unwrap().entries(), &[(0, 100)]);
        assert_eq!(single.to_string(), "0.100");
    }

    #[test]
    fn invalid_genomes_are_rejected() {
        assert!(ReoGenome::from_pairs(&[(1, 50), (1, 50)]).is_err());
        assert!(ReoGenome::from_pairs(&[(1, 0), (2, 100)]).is_err());
        // the REO figure's second example sums to 79
        assert!(ReoGenome::from_pairs(&[(4, 22), (1, 16), (2, 22), (5, 19)]).is_err());
        assert!(ReoGenome::from_pairs(&[(9, 100)]).unwrap().validate(5).is_err());

        assert!(NreoGenome::new(2, vec![0, 0, 1], vec![50, 50, 0], 3).is_err());
        assert!(NreoGenome::new(2, vec![0, 1, 2], vec![50, 50, 1], 3).is_err());
        assert!(NreoGenome::new(3, vec![0, 1, 2], vec![50, 49, 1], 2).is_err());
        assert!(NreoGenome::new(1, vec![0, 1, 2], vec![100, 0, 0], 4).is_err());
    }

    #[test]
    fn text_forms_parse_back() {
        let reo = ReoGenome::parse_text("5.13 2.15 0.72").unwrap();
        assert_eq!(reo.ids(), vec![5, 2, 0]);
        let g = Genome::parse_text("3 | 2 0 1 | 20 30 50", Encoding::Nreo(3)).unwrap();
        assert_eq!(g.to_string(), "3 | 2 0 1 | 20 30 50");
        assert!(ReoGenome::parse_text("5-13").is_err());
    }

    #[test]
    fn random_genomes_respect_shape() {
        let g = random_reo(6, 6, &mut seeded(1)).unwrap();
        let mut ids = g.ids();
        ids.sort();
        assert_eq!(ids, (0..6).collect::<Vec<_>>());
        assert_eq!(random_reo(3, 9, &mut seeded(5)).unwrap(), random_reo(3, 9, &mut seeded(5)).unwrap());
        assert!(random_reo(7, 6, &mut seeded(1)).is_err());
        assert!(random_nreo(7, 6, &mut seeded(1)).is_err());
        assert_eq!(
            random_nreo(4, 9, &mut seeded(5)).unwrap(),
            random_nreo(4, 9, &mut seeded(5)).unwrap()
        );
    }

    #[test]
    fn ten_thousand_random_genomes_are_valid() {
        let mut rng = seeded(42);
        for _ in 0..10_000 {
            let reo = random_reo(5, 20, &mut rng).unwrap();
            reo.validate(20).unwrap();
            reo.decode().unwrap();
            let nreo = random_nreo(5, 20, &mut rng).unwrap();
            nreo.validate(20).unwrap();
            nreo.decode().unwrap();
        }
    }

    proptest! {
        #[test]
        fn renormalize_is_scale_invariant(
            raw in prop::collection::vec(0.0f64..1000.0, 1..30),
            scale in 1e-3f64..1e3,
        ) {
            prop_assume!(raw.iter().sum::<f64>() > 0.0);
            let scaled: Vec<f64> = raw.iter().map(|r| r * scale).collect();
            prop_assert_eq!(renormalize_weights(&raw).unwrap(), renormalize_weights(&scaled).unwrap());
        }

        #[test]
        fn renormalize_output_is_feasible_and_ordered(
            raw in prop::collection::vec(0.0f64..10.0, 1..40),
        ) {
            prop_assume!(raw.iter().sum::<f64>() > 0.0);
            let w = renormalize_weights(&raw).unwrap();
            prop_assert_eq!(w.len(), raw.len());
            prop_assert_eq!(w.iter().sum::<u32>(), 100);
            prop_assert!(w.iter().all(|&x| x >= 1));
            // order is preserved: a strictly larger raw never gets fewer
            // points, apart from the +1 lift of zero entries
            for i in 0..raw.len() {
                for j in 0..raw.len() {
                    if raw[i] > raw[j] && w[j] > 1 {
                        prop_assert!(w[i] + 1 >= w[j], "{:?} -> {:?}", raw, w);
                    }
                }
            }
        }
    }
}
