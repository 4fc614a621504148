use golay_noma::analysis::{coherence_by_rank, coherence_floor, recovery_bounds, RecoveryBounds};
use golay_noma::search::exact_rank_pmf;
use golay_noma::tables::{permutation_set_for, rank_probabilities, PERMUTATION_SETS};

#[test]
fn exact_enumeration_agrees_with_reference_probabilities() {
    for m in 5..=7 {
        let exact = exact_rank_pmf(m).unwrap();
        for (r, p) in rank_probabilities(m) {
            assert!(
                (exact.prob(r) - p).abs() < 2e-3,
                "m={m} r={r}: {} vs {p}",
                exact.prob(r)
            );
        }
    }
}

#[test]
fn every_prefix_meets_the_listed_coherence() {
    for set in PERMUTATION_SETS {
        let gamma = set.parse();
        assert_eq!(gamma.len(), set.l_max);
        assert!(set.coherence >= coherence_floor(set.m));
        for l in set.l_min..=set.l_max {
            let mu = coherence_by_rank(&gamma[..l]).unwrap().mu;
            assert!(mu <= set.coherence, "m={} L={l}: {mu}", set.m);
            let found = permutation_set_for(set.m, l).unwrap();
            assert_eq!((found.l_min, found.coherence), (set.l_min, set.coherence));
        }
    }
}

#[test]
fn listed_sets_support_the_expected_sparsity() {
    let set = permutation_set_for(8, 4).unwrap();
    match recovery_bounds(set.coherence, 7).unwrap() {
        RecoveryBounds::Coherent {
            spark_min,
            k_max_smv,
            k_max_mmv,
            ..
        } => {
            assert_eq!(spark_min, 17);
            assert_eq!(k_max_smv, 8);
            assert_eq!(k_max_mmv, 11);
        }
        RecoveryBounds::Orthogonal => panic!("coherent set expected"),
    }
}
