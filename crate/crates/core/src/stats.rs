//! Summaries and nonparametric comparisons of run results.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::profile::Mixture;

/// Five-number style summary of best fitness values over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub iqr: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

/// A [`Summary`] labelled with its method and ensemble size (or bound).
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub ensemble_size: usize,
    pub summary: Summary,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Inclusive linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyInput("summary needs at least one value"));
    }
    let v = sorted(values);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(Summary {
        count: v.len(),
        min: v[0],
        median: quantile_sorted(&v, 0.5),
        iqr: quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25),
        max: v[v.len() - 1],
        mean,
        std,
    })
}

pub fn summarize_method(method: &str, ensemble_size: usize, values: &[f64]) -> Result<MethodSummary> {
    Ok(MethodSummary {
        method: method.to_string(),
        ensemble_size,
        summary: summarize(values)?,
    })
}

/// Midranks (1-based) of `values`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alternative {
    #[default]
    TwoSided,
    /// `a` tends to be smaller than `b`.
    Less,
    /// `a` tends to be larger than `b`.
    Greater,
}

impl FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "two-sided" => Ok(Alternative::TwoSided),
            "less" => Ok(Alternative::Less),
            "greater" => Ok(Alternative::Greater),
            other => Err(Error::Config(format!(
                "alternative must be two-sided, less or greater, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Less => "less",
            Alternative::Greater => "greater",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumResult {
    /// Mann-Whitney U of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Combined sizes up to this use the exact null distribution.
pub const EXACT_LIMIT: usize = 16;

/// Two-sided Mann-Whitney U (Wilcoxon rank-sum) test.
pub fn rank_sum_test(a: &[f64], b: &[f64]) -> Result<RankSumResult> {
    rank_sum_test_with(a, b, Alternative::TwoSided)
}

/// Mann-Whitney U test with midranks for ties. For `|a| + |b| <= 16` the
/// p-value comes from the exact permutation distribution of the rank sum
/// (ties included); above that, from the normal approximation with tie and
/// continuity corrections.
pub fn rank_sum_test_with(a: &[f64], b: &[f64], alternative: Alternative) -> Result<RankSumResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("rank-sum test needs two nonempty samples"));
    }
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..n].iter().sum();
    let u = rank_sum_a - (n * (n + 1)) as f64 / 2.0;

    if n + m <= EXACT_LIMIT {
        let p_value = exact_p(&ranks, n, alternative);
        return Ok(RankSumResult {
            u,
            p_value,
            exact: true,
        });
    }

    let (nf, mf) = (n as f64, m as f64);
    let total = nf + mf;
    let mean = nf * mf / 2.0;
    let tie_term: f64 = tie_groups(&pooled)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = nf * mf / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if var <= 0.0 {
        return Ok(RankSumResult {
            u,
            p_value: 1.0,
            exact: false,
        });
    }
    let sd = var.sqrt();
    let normal = Normal::standard();
    let p_value = match alternative {
        Alternative::TwoSided => {
            let z = ((u - mean).abs() - 0.5).max(0.0) / sd;
            (2.0 * normal.sf(z)).min(1.0)
        }
        Alternative::Less => normal.cdf((u - mean + 0.5) / sd),
        Alternative::Greater => normal.sf((u - mean - 0.5) / sd),
    };
    Ok(RankSumResult {
        u,
        p_value,
        exact: false,
    })
}

fn tie_groups(values: &[f64]) -> Vec<usize> {
    let v = sorted(values);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        groups.push(j - i + 1);
        i = j + 1;
    }
    groups
}

/// Exact p-value from the distribution of the first sample's rank sum over
/// all `C(N, n)` equally likely assignments. Midranks are doubled so the
/// sums are integers; the distribution is built by subset-sum counting.
fn exact_p(ranks: &[f64], n: usize, alternative: Alternative) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0f64; max_sum + 1]; n + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=n).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let (prev, cur) = (&lower[k - 1], &mut upper[0]);
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let dist = &ways[n];
    let total: f64 = dist.iter().sum();
    let observed: usize = doubled[..n].iter().sum();
    let lower: f64 = dist[..=observed].iter().sum::<f64>() / total;
    let upper: f64 = dist[observed..].iter().sum::<f64>() / total;
    match alternative {
        Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
        Alternative::Less => lower,
        Alternative::Greater => upper,
    }
}

/// Percentage improvement of method A's TVD over method B's:
/// `100 * (tvd_b - tvd_a) / tvd_b`. Positive means A is better.
pub fn delta(tvd_a: f64, tvd_b: f64) -> Result<f64> {
    if tvd_b == 0.0 {
        return Err(Error::UndefinedDelta);
    }
    Ok(100.0 * (tvd_b - tvd_a) / tvd_b)
}

/// Spearman rank correlation (Pearson correlation of midranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput("spearman needs at least two pairs"));
    }
    let (rx, ry) = (midranks(x), midranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Percentage of solutions per ensemble size.
pub fn shape_report<'a>(mixtures: impl IntoIterator<Item = &'a Mixture>) -> BTreeMap<usize, f64> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut total = 0usize;
    for m in mixtures {
        *counts.entry(m.len()).or_default() += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|(size, c)| (size, 100.0 * c as f64 / total as f64))
        .collect()
}

/// For each generator id, the percentage of solutions that contain it.
pub fn generator_frequency<'a>(
    mixtures: impl IntoIterator<Item = &'a Mixture>,
) -> BTreeMap<usize, f64> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut total = 0usize;
    for m in mixtures {
        for id in m.ids() {
            *counts.entry(id).or_default() += 1;
        }
        total += 1;
    }
    counts
        .into_iter()
        .map(|(id, c)| (id, 100.0 * c as f64 / total as f64))
        .collect()
}

/// Generators used by at least this share of solutions are reported.
pub const FREQUENCY_THRESHOLD_PCT: f64 = 2.0;

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn summary_examples() {
        let s = summarize(&[0.05]).unwrap();
        assert_eq!((s.min, s.median, s.max, s.iqr), (0.05, 0.05, 0.05, 0.0));
        let s = summarize(&[0.4, 0.1, 0.3, 0.2]).unwrap();
        assert!((s.median - 0.25).abs() < 1e-15);
        // inclusive quartiles of 0.1..0.4: 0.175 and 0.325
        assert!((s.iqr - 0.15).abs() < 1e-12);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(midranks(&[3.0, 3.0, 3.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn rank_sum_small_exact() {
        let r = rank_sum_test(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.exact);
        assert!((r.p_value - 0.1).abs() < 1e-12);
        let r = rank_sum_test_with(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0], Alternative::Less).unwrap();
        assert!((r.p_value - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rank_sum_identical_samples() {
        let a = [0.3, 0.1, 0.2, 0.5];
        assert!(rank_sum_test(&a, &a).unwrap().p_value >= 0.99);
        let big: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = rank_sum_test(&big, &big).unwrap();
        assert!(!r.exact);
        assert!(r.p_value >= 0.99);
        assert_eq!(rank_sum_test(&[1.0; 20], &[1.0; 20]).unwrap().p_value, 1.0);
        assert!(rank_sum_test(&[], &[1.0]).is_err());
    }

    #[test]
    fn delta_examples() {
        assert!((delta(0.05, 0.10).unwrap() - 50.0).abs() < 1e-12);
        assert_eq!(delta(0.10, 0.10).unwrap(), 0.0);
        assert!(matches!(delta(0.1, 0.0), Err(Error::UndefinedDelta)));
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 5.0, 2.0, 8.0, 3.0];
        assert_eq!(spearman(&x, &x).unwrap(), 1.0);
        let rev: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(spearman(&x, &rev).unwrap(), -1.0);
        assert!(matches!(spearman(&x, &[2.0; 5]), Err(Error::ConstantInput)));
        assert!(spearman(&x, &x[..3]).is_err());
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_hand_ranked_fixture() {
        // ranks x: 3 1 4 2 6 5 9 8 10 7 ; ranks y: 2 1 5 3 4 6 8 9 7 10
        // d^2: 1 0 1 1 4 1 1 1 9 9 = 28 ; rho = 1 - 6*28/(10*99)
        let x = [3.1, 1.2, 4.4, 2.0, 6.7, 5.5, 9.9, 8.1, 10.3, 7.0];
        let y = [20.0, 10.0, 50.0, 30.0, 40.0, 60.0, 80.0, 90.0, 70.0, 100.0];
        let expected = 1.0 - 6.0 * 28.0 / 990.0;
        assert!((spearman(&x, &y).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn shapes_and_frequencies() {
        let m4 = Mixture::new(vec![(0, 25), (1, 25), (2, 25), (3, 25)]).unwrap();
        let shapes = shape_report(std::iter::repeat_n(&m4, 30));
        assert_eq!(shapes.into_iter().collect::<Vec<_>>(), vec![(4, 100.0)]);

        let a = Mixture::new(vec![(0, 50), (1, 50)]).unwrap();
        let b = Mixture::new(vec![(1, 100)]).unwrap();
        let f = generator_frequency([&a, &b]);
        assert_eq!(f[&0], 50.0);
        assert_eq!(f[&1], 100.0);
    }

    proptest! {
        #[test]
        fn rank_sum_is_symmetric(
            a in prop::collection::vec(0u8..20, 1..25),
            b in prop::collection::vec(0u8..20, 1..25),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = rank_sum_test(&a, &b).unwrap();
            let ba = rank_sum_test(&b, &a).unwrap();
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!((ab.u + ba.u - (a.len() * b.len()) as f64).abs() < 1e-9);
        }

        #[test]
        fn delta_antisymmetry(a in 1e-4f64..1.0, b in 1e-4f64..1.0) {
            let lhs = delta(a, b).unwrap();
            let rhs = -delta(b, a).unwrap() * a / b;
            prop_assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }

        #[test]
        fn spearman_rank_invariance(
            x in prop::collection::vec(-100.0f64..100.0, 3..30),
            y in prop::collection::vec(-100.0f64..100.0, 3..30),
        ) {
            let k = x.len().min(y.len());
            let (x, y) = (&x[..k], &y[..k]);
            if let Ok(rho) = spearman(x, y) {
                let tx: Vec<f64> = x.iter().map(|v| v.powi(3) + 7.0).collect();
                let ty: Vec<f64> = y.iter().map(|v| (v / 50.0).exp()).collect();
                prop_assert_eq!(spearman(&tx, &ty).unwrap(), rho);
            }
        }

        #[test]
        fn shape_percentages_sum_to_100(sizes in prop::collection::vec(1usize..9, 1..60)) {
            let mixtures: Vec<Mixture> = sizes
                .iter()
                .map(|&k| {
                    let mut w = vec![100 / k as u32; k];
                    w[0] += 100 - w.iter().sum::<u32>();
                    Mixture::new((0..k).zip(w).collect()).unwrap()
                })
                .collect();
            let total: f64 = shape_report(&mixtures).values().sum();
            prop_assert!((total - 100.0).abs() < 1e-9);
        }
    }
}
