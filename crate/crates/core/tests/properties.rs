//! Property tests over genomes, operators and fitness.

mod support;

use ensemble_forge::encoding::{random_genome, renormalize_weights};
use ensemble_forge::operators::{nreo_crossover, nreo_mutate, reo_crossover, reo_mutate};
use ensemble_forge::rng::seeded;
use ensemble_forge::{exact_tvd, Encoding, Genome, Mixture};
use proptest::prelude::*;

fn encoding() -> impl Strategy<Value = (Encoding, usize)> {
    (1usize..30).prop_flat_map(|n| {
        (1..=n.min(10)).prop_flat_map(move |s| {
            prop_oneof![Just((Encoding::Reo(s), n)), Just((Encoding::Nreo(s), n))]
        })
    })
}

fn step(g: &Genome, other: &Genome, n: usize, rng: &mut ensemble_forge::SeededRng) -> Genome {
    match (g, other) {
        (Genome::Reo(a), Genome::Reo(b)) => {
            let (x, _) = reo_crossover(a, b, rng).unwrap();
            Genome::Reo(reo_mutate(&x, n, rng))
        }
        (Genome::Nreo(a), Genome::Nreo(b)) => {
            let (_, y) = nreo_crossover(a, b, rng).unwrap();
            Genome::Nreo(nreo_mutate(&y, rng))
        }
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn operator_chains_stay_feasible((enc, n) in encoding(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let mut a = random_genome(enc, n, &mut rng).unwrap();
        let mut b = random_genome(enc, n, &mut rng).unwrap();
        for _ in 0..50 {
            let next = step(&a, &b, n, &mut rng);
            prop_assert!(next.validate(n).is_ok(), "{next}");
            b = a;
            a = next;
        }
    }

    #[test]
    fn genome_text_round_trips((enc, n) in encoding(), seed in any::<u64>()) {
        let g = random_genome(enc, n, &mut seeded(seed)).unwrap();
        let back = Genome::parse_text(&g.to_string(), enc).unwrap();
        prop_assert_eq!(&back, &g);
        let m = g.decode().unwrap();
        prop_assert_eq!(m.to_string().parse::<Mixture>().unwrap(), m);
    }

    #[test]
    fn mixture_tvd_is_bounded_by_weighted_singles(
        seed in 0u64..500,
        (enc, n) in encoding(),
        gseed in any::<u64>(),
    ) {
        let pool = support::synth(n, 6, seed);
        let m = random_genome(enc, n, &mut seeded(gseed)).unwrap().decode().unwrap();
        let t = exact_tvd(&m, &pool).unwrap();
        let singles = pool.single_generator_tvds();
        let bound: f64 = m.entries().iter().map(|&(id, w)| w as f64 / 100.0 * singles[id]).sum();
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert!(t <= bound + 1e-12);
    }

    #[test]
    fn renormalize_keeps_order_of_raw_weights(raw in prop::collection::vec(0.01f64..50.0, 1..40)) {
        let w = renormalize_weights(&raw).unwrap();
        prop_assert_eq!(w.iter().sum::<u32>(), 100);
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                // one point of slack for the remainder hand-out and the lift
                if raw[i] > raw[j] {
                    prop_assert!(w[i] + 1 >= w[j], "{raw:?} -> {w:?}");
                }
            }
        }
    }
}
