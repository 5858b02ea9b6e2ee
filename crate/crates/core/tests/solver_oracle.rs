mod common;

use common::*;
use liftrack::solver::{
    is_feasible, objective, partition_objective, partition_to_labeling, solve_bruteforce, solve_gaec,
    solve_gaec_traced, solve_kl,
};
use liftrack::{labeling_to_partition, Partition};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn heuristics_against_bruteforce() {
    let mut optimal = 0;
    let trials = 200;
    for seed in 0..trials {
        let n = 3 + (seed as usize % 8);
        let g = random_instance(seed, n, 0.6);
        let bf = solve_bruteforce(&g).unwrap();
        let gaec = solve_gaec(&g);
        let kl = solve_kl(&g, &gaec.partition);
        assert!(is_feasible(&g, &partition_to_labeling(&g, &kl.partition)).is_feasible());
        assert!(kl.objective >= bf.objective - 1e-9, "seed {seed}: beat the optimum");
        assert!(kl.objective <= gaec.objective + 1e-12);
        if (kl.objective - bf.objective).abs() <= 1e-9 {
            optimal += 1;
        }
    }
    eprintln!("optimal in {optimal}/{trials}");
    assert!(optimal as f64 >= 0.9 * trials as f64);
}

#[test]
fn kl_from_singletons_never_beats_optimum() {
    for seed in 500..560 {
        let g = random_instance(seed, 8, 0.5);
        let bf = solve_bruteforce(&g).unwrap();
        let kl = solve_kl(&g, &Partition::singletons(8));
        assert!(kl.objective >= bf.objective - 1e-9);
    }
}

#[test]
fn bruteforce_beats_random_feasible_labelings() {
    let g = random_instance(7, 9, 0.5);
    let bf = solve_bruteforce(&g).unwrap();
    let mut r = rng(11);
    for _ in 0..1000 {
        // random partition, then the feasible labeling it induces
        let labels: Vec<usize> = (0..9).map(|_| r.gen_range(0..4)).collect();
        let lab = partition_to_labeling(&g, &Partition::from_labels(&labels));
        let p = labeling_to_partition(&g, &lab);
        let feasible = partition_to_labeling(&g, &p);
        assert!(is_feasible(&g, &feasible).is_feasible());
        assert!(bf.objective <= objective(&g, &feasible) + 1e-12);
    }
}

#[test]
fn flipping_lifted_cost_keeps_feasibility() {
    let g = random_instance(3, 8, 0.6);
    let flipped = g
        .with_costs(
            &g.edges().iter().map(|e| e.cost).collect::<Vec<_>>(),
            &g.lifted_edges().iter().map(|e| -e.cost).collect::<Vec<_>>(),
        )
        .unwrap();
    let mut r = rng(5);
    for _ in 0..500 {
        let lab = random_labeling(&mut r, &g, 0.4);
        assert_eq!(
            is_feasible(&g, &lab).is_feasible(),
            is_feasible(&flipped, &lab).is_feasible()
        );
    }
}

proptest! {
    #[test]
    fn partition_labeling_roundtrip(seed in 0u64..10_000, labels in proptest::collection::vec(0usize..4, 6)) {
        let g = random_instance(seed, 6, 0.7);
        // only partitions with connected blocks survive the roundtrip unchanged
        let p = labeling_to_partition(&g, &partition_to_labeling(&g, &Partition::from_labels(&labels)));
        let back = labeling_to_partition(&g, &partition_to_labeling(&g, &p));
        prop_assert_eq!(back, p.clone());
        prop_assert!((partition_objective(&g, &p) - objective(&g, &partition_to_labeling(&g, &p))).abs() < 1e-12);
    }

    #[test]
    fn solver_outputs_are_feasible(seed in 0u64..10_000, n in 2usize..9) {
        let g = random_instance(seed, n, 0.5);
        let (gaec, trace) = solve_gaec_traced(&g);
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(is_feasible(&g, &partition_to_labeling(&g, &gaec.partition)).is_feasible());
        let kl = solve_kl(&g, &gaec.partition);
        prop_assert!(is_feasible(&g, &partition_to_labeling(&g, &kl.partition)).is_feasible());
        prop_assert!(kl.objective <= gaec.objective + 1e-12);
    }
}
