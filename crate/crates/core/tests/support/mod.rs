//! Independent reference implementations used as test oracles. Nothing here
//! calls into the search or statistics code under test.
#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};

use ensemble_forge::profile::SynthSpec;
use ensemble_forge::{Evaluator, GeneratorPool, Mixture, Result, SeededRng};
use rand::Rng;

pub fn synth(generators: usize, classes: usize, seed: u64) -> GeneratorPool {
    ensemble_forge::profile::synth_pool_from(&SynthSpec {
        generators,
        classes,
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

pub fn profiles(pool: &GeneratorPool) -> Vec<Vec<f64>> {
    pool.profiles().iter().map(|p| p.class_probs.clone()).collect()
}

/// Half the L1 distance between the target and the weighted profile mix.
/// Accumulates in entry order, the same order the library uses, so exact
/// ties resolve identically.
pub fn tvd(target: &[f64], profiles: &[Vec<f64>], entries: &[(usize, u32)]) -> f64 {
    let mut freqs = vec![0.0; target.len()];
    for &(id, w) in entries {
        let share = w as f64 / 100.0;
        for (c, f) in freqs.iter_mut().enumerate() {
            *f += share * profiles[id][c];
        }
    }
    let mut l1 = 0.0;
    for c in 0..target.len() {
        l1 += (target[c] - freqs[c]).abs();
    }
    (0.5 * l1).min(1.0)
}

/// Weight vectors of length `k` over multiples of ten in `0..=90` summing
/// to 100, lexicographic, generated with an odometer rather than recursion.
pub fn tenth_vectors(k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut digits = vec![0u32; k];
    loop {
        if digits.iter().sum::<u32>() == 10 {
            out.push(digits.iter().map(|d| d * 10).collect());
        }
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if digits[i] < 9 {
                digits[i] += 1;
                for d in &mut digits[i + 1..] {
                    *d = 0;
                }
                break;
            }
        }
    }
}

/// Straight transcription of the greedy construction: returns the final
/// mixture entries and how many evaluations were spent.
pub fn greedy_oracle(
    target: &[f64],
    profiles: &[Vec<f64>],
    first: usize,
    candidates: &[usize],
    s: usize,
) -> (Vec<(usize, u32)>, usize) {
    let mut ens: Vec<(usize, u32)> = vec![(first, 100)];
    let mut best = tvd(target, profiles, &ens);
    let mut evals = 1;
    for &g in candidates {
        if ens.len() >= s {
            break;
        }
        let mut ids: Vec<usize> = ens.iter().map(|e| e.0).collect();
        ids.push(g);
        for w in tenth_vectors(ids.len()) {
            let trial: Vec<(usize, u32)> = ids
                .iter()
                .zip(&w)
                .filter(|(_, &x)| x > 0)
                .map(|(&i, &x)| (i, x))
                .collect();
            let t = tvd(target, profiles, &trial);
            evals += 1;
            if t < best {
                best = t;
                ens = ids.iter().copied().zip(w.iter().copied()).collect();
            }
        }
        ens.retain(|e| e.1 > 0);
    }
    (ens, evals)
}

/// Ids sorted by FID then id.
pub fn fid_sorted(pool: &GeneratorPool) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..pool.len()).collect();
    ids.sort_by(|&a, &b| {
        let (fa, fb) = (pool.profiles()[a].fid, pool.profiles()[b].fid);
        fa.partial_cmp(&fb).unwrap().then(a.cmp(&b))
    });
    ids
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Positive weight vectors of length `k` in multiples of `step` summing
/// to 100.
pub fn positive_vectors(k: usize, step: u32) -> Vec<Vec<u32>> {
    fn go(left: usize, rest: u32, step: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 1 {
            cur.push(rest);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        let mut w = step;
        while w + step * (left as u32 - 1) <= rest {
            cur.push(w);
            go(left - 1, rest - w, step, cur, out);
            cur.pop();
            w += step;
        }
    }
    let mut out = Vec::new();
    go(k, 100, step, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive minimum TVD over every `s`-subset of generators and every
/// positive weight vector in `step`-point increments.
pub fn brute_force_optimum(pool: &GeneratorPool, s: usize, step: u32) -> (f64, usize) {
    let profiles = profiles(pool);
    let target = pool.target().freqs();
    let weights = positive_vectors(s, step);
    let mut best = f64::INFINITY;
    let mut count = 0;
    for ids in combinations(pool.len(), s) {
        for w in &weights {
            let entries: Vec<(usize, u32)> = ids.iter().copied().zip(w.iter().copied()).collect();
            best = best.min(tvd(target, &profiles, &entries));
            count += 1;
        }
    }
    (best, count)
}

/// TVD of `n` labels drawn one at a time: generator by weight, then class
/// by that generator's profile.
pub fn per_draw_sampled_tvd(
    mixture: &Mixture,
    pool: &GeneratorPool,
    n: usize,
    rng: &mut impl Rng,
) -> f64 {
    let classes = pool.class_count();
    let mut counts = vec![0usize; classes];
    let entries = mixture.entries();
    for _ in 0..n {
        let mut r = rng.random_range(0..100u32);
        let mut id = entries[entries.len() - 1].0;
        for &(g, w) in entries {
            if r < w {
                id = g;
                break;
            }
            r -= w;
        }
        let probs = &pool.profiles()[id].class_probs;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut class = classes - 1;
        for (c, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                class = c;
                break;
            }
        }
        counts[class] += 1;
    }
    let target = pool.target().freqs();
    0.5 * (0..classes)
        .map(|c| (target[c] - counts[c] as f64 / n as f64).abs())
        .sum::<f64>()
}

/// Average ranks, computed by pairwise comparison.
pub fn naive_midranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let below = values.iter().filter(|&&x| x < v).count() as f64;
            let equal = values.iter().filter(|&&x| x == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided, less and greater p-values of the rank-sum statistic by
/// listing every assignment of the pooled ranks to the first sample.
pub fn enumerated_rank_sum_p(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = naive_midranks(&pooled);
    let observed: f64 = ranks[..a.len()].iter().sum();
    let (mut le, mut ge, mut total) = (0usize, 0usize, 0usize);
    for subset in combinations(pooled.len(), a.len()) {
        let sum: f64 = subset.iter().map(|&i| ranks[i]).sum();
        total += 1;
        if sum <= observed + 1e-9 {
            le += 1;
        }
        if sum >= observed - 1e-9 {
            ge += 1;
        }
    }
    let lower = le as f64 / total as f64;
    let upper = ge as f64 / total as f64;
    ((2.0 * lower.min(upper)).min(1.0), lower, upper)
}

/// Wraps an evaluator and counts calls.
pub struct Counting<E> {
    pub inner: E,
    pub calls: AtomicUsize,
}

impl<E> Counting<E> {
    pub fn new(inner: E) -> Self {
        Counting {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<E: Evaluator> Evaluator for Counting<E> {
    fn evaluate(&self, mixture: &Mixture, rng: &mut SeededRng) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.evaluate(mixture, rng)
    }
}
