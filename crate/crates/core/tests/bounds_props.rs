use privsearch::bounds::{
    best_sequence, converse_bound, pir_capacity, EntropyModel, IndependentModel, PatternFamilyModel, Strategy as Search,
};
use privsearch::constructions::{circular_family, exact_search_family};
use privsearch::patterns::PatternFamily;
use proptest::prelude::*;

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn distinct_family() -> impl Strategy<Value = PatternFamily> {
    (3usize..=12).prop_flat_map(|k| {
        let set = proptest::collection::btree_set(1..=k as u32, 1..k);
        proptest::collection::btree_set(set, 2..=5).prop_map(move |sets| {
            PatternFamily::new(k, sets.into_iter().map(|s| s.into_iter().collect()).collect(), "random").unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exhaustive_matches_brute_force(f in distinct_family(), n in 2usize..=4) {
        let model = PatternFamilyModel::new(f.clone());
        let ids: Vec<usize> = (1..=f.mu()).collect();
        let best = permutations(&ids)
            .iter()
            .map(|p| converse_bound(&model, n, p).unwrap().per_record_bound)
            .fold(f64::NEG_INFINITY, f64::max);
        let ex = best_sequence(&model, n, Search::Exhaustive, None).unwrap();
        prop_assert!((ex.per_record_bound - best).abs() < 1e-12);
        let greedy = best_sequence(&model, n, Search::Greedy, None).unwrap();
        prop_assert!(greedy.per_record_bound <= ex.per_record_bound + 1e-12);
    }

    #[test]
    fn conditioning_never_increases_entropy(f in distinct_family()) {
        let model = PatternFamilyModel::new(f.clone());
        let ids: Vec<usize> = (1..=f.mu()).collect();
        let terms = model.sequence_conditional_entropies(&ids);
        for (i, t) in terms.iter().enumerate() {
            prop_assert!(*t <= model.entropy(ids[i]) + 1e-12);
            prop_assert!((*t - model.conditional_entropy(ids[i], &ids[..i])).abs() < 1e-12);
        }
        let cands: Vec<usize> = ids[1..].to_vec();
        let fast = model.candidate_conditional_entropies(&ids[..1], &cands);
        for (k, h) in cands.iter().zip(fast) {
            prop_assert!((h - model.conditional_entropy(*k, &ids[..1])).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_bound_is_pir_capacity(mu in 1usize..=10, n in 2usize..=6, h in 0.1f64..4.0) {
        let model = IndependentModel::uniform(mu, h).unwrap();
        let seq: Vec<usize> = (1..=mu).rev().collect();
        let r = converse_bound(&model, n, &seq).unwrap();
        prop_assert!((r.normalized_bound - 1.0 / pir_capacity(mu, n).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn exact_search_stays_below_asymptote() {
    for k in 2..=40 {
        let model = PatternFamilyModel::new(exact_search_family(k).unwrap());
        for n in 2..=6 {
            let r = best_sequence(&model, n, Search::Greedy, None).unwrap();
            assert!(r.normalized_bound < r.asymptote, "K={k} N={n}");
            assert!(r.gap > 0.0);
        }
    }
}

#[test]
fn truncated_greedy_on_large_family() {
    let model = PatternFamilyModel::new(circular_family(64).unwrap());
    let r = best_sequence(&model, 2, Search::Greedy, Some(4)).unwrap();
    assert_eq!(r.sequence.len(), 4);
    assert_eq!(r.truncated_at, Some(4));
    assert!(r.terms.iter().all(|&t| (0.0..=1.0).contains(&t)));
}
