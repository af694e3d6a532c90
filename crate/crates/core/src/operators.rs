//! Variation operators for both encodings.
//!
//! All operators take their inputs by reference and return fresh genomes.
//! Every output satisfies the invariants of its encoding.

use rand::seq::index;
use rand::Rng;

use crate::encoding::{renormalize_weights, Gene, NreoGenome, ReoGenome};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Crossover and mutation probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationConfig {
    pub crossover_prob: f64,
    pub mutation_prob: f64,
}

impl VariationConfig {
    pub fn new(crossover_prob: f64, mutation_prob: f64) -> Result<Self> {
        for (name, p) in [("p_r", crossover_prob), ("p_m", mutation_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        Ok(VariationConfig {
            crossover_prob,
            mutation_prob,
        })
    }
}

impl Default for VariationConfig {
    fn default() -> Self {
        VariationConfig {
            crossover_prob: 0.5,
            mutation_prob: 0.1,
        }
    }
}

/// Two cut points `p1 < p2` drawn uniformly from `0..=len`.
fn cut_points(len: usize, rng: &mut SeededRng) -> (usize, usize) {
    let picks = index::sample(rng, len + 1, 2);
    let (x, y) = (picks.index(0), picks.index(1));
    (x.min(y), x.max(y))
}

/// Weight exchange between loci `c` and a random `d != c`: moves a random
/// amount in `1..w_c` from `c` to `d`. No-op with one locus or `w_c == 1`.
fn shift_weight(weights: &mut [u32], c: usize, rng: &mut SeededRng) {
    let k = weights.len();
    if k < 2 || weights[c] <= 1 {
        return;
    }
    let mut d = rng.random_range(0..k - 1);
    if d >= c {
        d += 1;
    }
    let delta = rng.random_range(1..weights[c]);
    weights[c] -= delta;
    weights[d] += delta;
}

/// Deterministic part of [`reo_crossover`] for a given segment `[p1, p2)`.
///
/// Ids in the segment are exchanged and both children take the mean of the
/// parents' weights there. A duplicate created by an incoming id is resolved
/// by keeping the incoming occurrence and renaming the old one to the id the
/// child's own parent held at the incoming locus (repeated until unique).
/// Weights are then renormalized to 100.
pub fn reo_crossover_at(
    a: &ReoGenome,
    b: &ReoGenome,
    p1: usize,
    p2: usize,
) -> Result<(ReoGenome, ReoGenome)> {
    let s = a.size();
    if b.size() != s {
        return Err(Error::Operator(format!(
            "REO parents differ in size: {s} vs {}",
            b.size()
        )));
    }
    if p1 > p2 || p2 > s {
        return Err(Error::Operator(format!("cut points {p1}..{p2} outside 0..={s}")));
    }
    if p1 == p2 {
        return Ok((a.clone(), b.clone()));
    }
    Ok((reo_child(a, b, p1, p2)?, reo_child(b, a, p1, p2)?))
}

fn reo_child(own: &ReoGenome, other: &ReoGenome, p1: usize, p2: usize) -> Result<ReoGenome> {
    let own_ids = own.ids();
    let other_ids = other.ids();
    let mut ids = own_ids.clone();
    let mut raws: Vec<f64> = own.weights().iter().map(|&w| w as f64).collect();
    for c in p1..p2 {
        ids[c] = other_ids[c];
        raws[c] = (own.genes()[c].weight + other.genes()[c].weight) as f64 / 2.0;
    }
    let segment = &other_ids[p1..p2];
    for pos in (0..p1).chain(p2..ids.len()) {
        let mut id = ids[pos];
        while let Some(offset) = segment.iter().position(|&x| x == id) {
            id = own_ids[p1 + offset];
        }
        ids[pos] = id;
    }
    let weights = renormalize_weights(&raws)?;
    Ok(ReoGenome::from_genes_unchecked(
        ids.into_iter()
            .zip(weights)
            .map(|(id, weight)| Gene { id, weight })
            .collect(),
    ))
}

/// Two-point crossover for REO genomes. Size-1 genomes pass through.
pub fn reo_crossover(
    a: &ReoGenome,
    b: &ReoGenome,
    rng: &mut SeededRng,
) -> Result<(ReoGenome, ReoGenome)> {
    if a.size() != b.size() {
        return Err(Error::Operator(format!(
            "REO parents differ in size: {} vs {}",
            a.size(),
            b.size()
        )));
    }
    if a.size() < 2 {
        return Ok((a.clone(), b.clone()));
    }
    let (p1, p2) = cut_points(a.size(), rng);
    reo_crossover_at(a, b, p1, p2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReoMutation {
    Generator,
    Weights,
    Both,
}

/// Applies one of the three REO mutations, chosen uniformly, at a uniform
/// locus.
pub fn reo_mutate(g: &ReoGenome, n: usize, rng: &mut SeededRng) -> ReoGenome {
    let variant = match rng.random_range(0..3) {
        0 => ReoMutation::Generator,
        1 => ReoMutation::Weights,
        _ => ReoMutation::Both,
    };
    let locus = rng.random_range(0..g.size());
    reo_mutate_with(g, n, variant, locus, rng)
}

pub fn reo_mutate_with(
    g: &ReoGenome,
    n: usize,
    variant: ReoMutation,
    locus: usize,
    rng: &mut SeededRng,
) -> ReoGenome {
    let mut ids = g.ids();
    let mut weights = g.weights();
    if matches!(variant, ReoMutation::Generator | ReoMutation::Both) {
        replace_with_unused(&mut ids, locus, n, rng);
    }
    if matches!(variant, ReoMutation::Weights | ReoMutation::Both) {
        shift_weight(&mut weights, locus, rng);
    }
    ReoGenome::from_genes_unchecked(
        ids.into_iter()
            .zip(weights)
            .map(|(id, weight)| Gene { id, weight })
            .collect(),
    )
}

/// Replaces `ids[locus]` with a uniform draw from ids in `0..n` not used.
fn replace_with_unused(ids: &mut [usize], locus: usize, n: usize, rng: &mut SeededRng) {
    if ids.len() >= n {
        return;
    }
    let mut used = vec![false; n];
    for &id in ids.iter() {
        used[id] = true;
    }
    let k = rng.random_range(0..n - ids.len());
    let fresh = (0..n)
        .filter(|&id| !used[id])
        .nth(k)
        .expect("k is below the number of unused ids");
    ids[locus] = fresh;
}

/// Deterministic part of [`nreo_crossover`] for a segment `[p1, p2)` inside
/// the smaller ensemble.
///
/// Ids and weights in the segment are swapped. Old occurrences of incoming
/// ids are relabelled with the smallest ids missing from the permutation,
/// in position order. Sizes come from each child's own parent and the active
/// weights are renormalized to 100.
pub fn nreo_crossover_at(
    a: &NreoGenome,
    b: &NreoGenome,
    p1: usize,
    p2: usize,
) -> Result<(NreoGenome, NreoGenome)> {
    if a.generator_count() != b.generator_count() {
        return Err(Error::Operator(format!(
            "NREO parents come from pools of {} and {} generators",
            a.generator_count(),
            b.generator_count()
        )));
    }
    if a.max_size() != b.max_size() {
        return Err(Error::Operator(format!(
            "NREO parents differ in maximum size: {} vs {}",
            a.max_size(),
            b.max_size()
        )));
    }
    let m = a.size().min(b.size());
    if p1 > p2 || p2 > m {
        return Err(Error::Operator(format!("cut points {p1}..{p2} outside 0..={m}")));
    }
    if p1 == p2 {
        return Ok((a.clone(), b.clone()));
    }
    Ok((nreo_child(a, b, p1, p2)?, nreo_child(b, a, p1, p2)?))
}

fn nreo_child(own: &NreoGenome, other: &NreoGenome, p1: usize, p2: usize) -> Result<NreoGenome> {
    let n = own.generator_count();
    let mut ids = own.ids().to_vec();
    let mut weights = own.weights().to_vec();
    ids[p1..p2].copy_from_slice(&other.ids()[p1..p2]);
    weights[p1..p2].copy_from_slice(&other.weights()[p1..p2]);

    let mut in_segment = vec![false; n];
    for &id in &ids[p1..p2] {
        in_segment[id] = true;
    }
    let mut present = vec![false; n];
    for &id in &ids {
        present[id] = true;
    }
    let mut missing = (0..n).filter(|&id| !present[id]);
    for pos in (0..p1).chain(p2..n) {
        if in_segment[ids[pos]] {
            ids[pos] = missing
                .next()
                .expect("each duplicate leaves exactly one id missing");
        }
    }

    let size = own.size();
    let raws: Vec<f64> = weights[..size].iter().map(|&w| w as f64).collect();
    weights[..size].copy_from_slice(&renormalize_weights(&raws)?);
    Ok(NreoGenome::from_parts_unchecked(size, ids, weights, own.max_size()))
}

/// Two-point crossover for NREO genomes with cut points inside the smaller
/// of the two ensembles.
pub fn nreo_crossover(
    a: &NreoGenome,
    b: &NreoGenome,
    rng: &mut SeededRng,
) -> Result<(NreoGenome, NreoGenome)> {
    let m = a.size().min(b.size());
    let (p1, p2) = cut_points(m, rng);
    nreo_crossover_at(a, b, p1, p2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NreoMutation {
    Generator,
    Weights,
    Both,
    Size,
}

/// Applies one of the four NREO mutations, chosen uniformly.
pub fn nreo_mutate(g: &NreoGenome, rng: &mut SeededRng) -> NreoGenome {
    let variant = match rng.random_range(0..4) {
        0 => NreoMutation::Generator,
        1 => NreoMutation::Weights,
        2 => NreoMutation::Both,
        _ => NreoMutation::Size,
    };
    nreo_mutate_with(g, variant, rng)
}

pub fn nreo_mutate_with(g: &NreoGenome, variant: NreoMutation, rng: &mut SeededRng) -> NreoGenome {
    let n = g.generator_count();
    let mut size = g.size();
    let mut ids = g.ids().to_vec();
    let mut weights = g.weights().to_vec();
    match variant {
        NreoMutation::Generator | NreoMutation::Weights | NreoMutation::Both => {
            let locus = rng.random_range(0..size);
            if variant != NreoMutation::Weights && size < n {
                let inactive = rng.random_range(size..n);
                ids.swap(locus, inactive);
            }
            if variant != NreoMutation::Generator {
                shift_weight(&mut weights[..size], locus, rng);
            }
        }
        NreoMutation::Size => {
            let max = g.max_size();
            if max > 1 {
                let mut new_size = rng.random_range(1..max);
                if new_size >= size {
                    new_size += 1;
                }
                let mut raws: Vec<f64> = weights[..size.min(new_size)]
                    .iter()
                    .map(|&w| w as f64)
                    .collect();
                if new_size > size {
                    let mean = 100.0 / size as f64;
                    raws.resize(new_size, mean);
                }
                let fresh = renormalize_weights(&raws).expect("raw weights are positive");
                weights.iter_mut().for_each(|w| *w = 0);
                weights[..new_size].copy_from_slice(&fresh);
                size = new_size;
            }
        }
    }
    NreoGenome::from_parts_unchecked(size, ids, weights, g.max_size())
}
