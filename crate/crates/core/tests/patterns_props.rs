use std::collections::BTreeMap;

use privsearch::infotheory::{conditional_entropy, entropy, mutual_information, EntropySplit};
use privsearch::patterns::{PatternFamily, Signature};
use proptest::prelude::*;

/// Random family over `[1, K]` with `K <= 16`; duplicates allowed so any draw is valid.
fn family() -> impl Strategy<Value = PatternFamily> {
    (2usize..=16).prop_flat_map(|k| {
        let set = proptest::collection::btree_set(1..=k as u32, 1..=k);
        proptest::collection::vec(set, 1..=6).prop_map(move |sets| {
            let sets = sets.into_iter().map(|s| s.into_iter().collect()).collect();
            PatternFamily::new_allowing_duplicates(k, sets, "random").unwrap()
        })
    })
}

fn family_and_order() -> impl Strategy<Value = (PatternFamily, Vec<usize>)> {
    family().prop_flat_map(|f| {
        let order = Just((1..=f.mu()).collect::<Vec<_>>()).prop_shuffle();
        (Just(f), order)
    })
}

fn brute_force(family: &PatternFamily, order: &[usize]) -> BTreeMap<Signature, u64> {
    let mut counts = BTreeMap::new();
    for v in 1..=family.k() as u32 {
        let sig = Signature(order.iter().map(|&m| family.set(m).contains(&v)).collect());
        *counts.entry(sig).or_insert(0) += 1;
    }
    counts
}

proptest! {
    #[test]
    fn atoms_match_record_enumeration((f, order) in family_and_order()) {
        let d = f.joint_distribution(&order).unwrap();
        let oracle = brute_force(&f, &order);
        prop_assert_eq!(d.denominator(), f.k() as u64);
        prop_assert_eq!(d.iter().count(), oracle.len());
        for (sig, count) in &oracle {
            prop_assert_eq!(d.count(sig), *count);
        }
        let atoms = f.atoms(&order).unwrap();
        prop_assert_eq!(atoms.total(), f.k() as u64);
    }

    #[test]
    fn permuting_indices_permutes_signatures((f, order) in family_and_order()) {
        let identity: Vec<usize> = (1..=f.mu()).collect();
        let base = f.joint_distribution(&identity).unwrap();
        let permuted = f.joint_distribution(&order).unwrap();
        for (sig, count) in base.iter() {
            let moved = Signature(order.iter().map(|&m| sig.0[m - 1]).collect());
            prop_assert_eq!(permuted.count(&moved), count);
        }
        prop_assert!((entropy(&base) - entropy(&permuted)).abs() < 1e-12);
    }

    #[test]
    fn chain_rule_and_monotonicity((f, order) in family_and_order()) {
        let d = f.joint_distribution(&order).unwrap();
        let t = order.len();
        let mut sum = 0.0;
        let mut previous_target = f64::INFINITY;
        for i in 0..t {
            let prefix: Vec<usize> = (0..=i).collect();
            let step = conditional_entropy(&d.marginal(&prefix).unwrap(), EntropySplit::new(i)).unwrap();
            prop_assert!(step >= 0.0);
            sum += step;
            if i + 1 == t {
                // conditioning the last coordinate on longer prefixes never raises its entropy
                for c in 0..t {
                    let mut coords: Vec<usize> = (0..c).collect();
                    coords.push(t - 1);
                    let h = conditional_entropy(&d.marginal(&coords).unwrap(), EntropySplit::new(c)).unwrap();
                    prop_assert!(h <= previous_target + 1e-12);
                    previous_target = h;
                }
            }
        }
        prop_assert!((sum - entropy(&d)).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_is_bounded((f, order) in family_and_order()) {
        prop_assume!(order.len() >= 2);
        let d = f.joint_distribution(&order).unwrap();
        let c = order.len() - 1;
        let i = mutual_information(&d, EntropySplit::new(c)).unwrap();
        let h_target = entropy(&d.marginal(&[c]).unwrap());
        prop_assert!(i >= 0.0 && i <= h_target + 1e-12);
    }

    #[test]
    fn documents_round_trip(f in family()) {
        let back = PatternFamily::from_document(&f.to_document());
        // the parser rejects duplicate sets, which random draws may contain
        match back {
            Ok(g) => prop_assert_eq!(g, f),
            Err(e) => prop_assert_eq!(e.kind(), "DuplicatePattern"),
        }
    }
}
