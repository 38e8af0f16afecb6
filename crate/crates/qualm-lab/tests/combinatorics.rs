//! Permutation and pairing machinery against brute-force index sums.

use proptest::prelude::*;

use qualm_lab::linalg::{ComplexMatrix, C64};
use qualm_lab::perm::{
    count_by_nontrivial_length, enumerate_pair_partitions, enumerate_permutations, pair_partition_trace,
    permutation_trace, Flavor, PairPartition, Permutation,
};
use qualm_lab::sampling::canonical_j;

fn matrices(d: usize, k: usize) -> impl Strategy<Value = Vec<ComplexMatrix>> {
    prop::collection::vec(prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d), k).prop_map(move |ms| {
        ms.into_iter()
            .map(|m| ComplexMatrix::new(d, d, m.into_iter().map(|(re, im)| C64::new(re, im)).collect()).unwrap())
            .collect()
    })
}

fn permutation(k: usize) -> impl Strategy<Value = Permutation> {
    Just((0..k).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| Permutation::new(v).unwrap())
}

fn pairing(k: usize) -> impl Strategy<Value = PairPartition> {
    let all = enumerate_pair_partitions(k).unwrap();
    (0..all.len()).prop_map(move |i| all[i].clone())
}

/// Every index assignment of `n` slots over `d` values.
fn assignments(d: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..d.pow(n as u32)).map(move |mut x| {
        let mut v = vec![0; n];
        for slot in v.iter_mut().rev() {
            *slot = x % d;
            x /= d;
        }
        v
    })
}

fn brute_permutation_trace(mats: &[ComplexMatrix], sigma: &Permutation) -> C64 {
    let d = mats[0].rows();
    assignments(d, mats.len())
        .map(|j| {
            mats.iter().enumerate().fold(C64::new(1.0, 0.0), |acc, (s, a)| acc * a.row(j[s])[j[sigma.apply(s)]])
        })
        .sum()
}

fn brute_pairing_trace(mats: &[ComplexMatrix], m: &PairPartition, j: Option<&ComplexMatrix>) -> C64 {
    let d = mats[0].rows();
    assignments(d, 2 * mats.len())
        .map(|x| {
            let mut w = C64::new(1.0, 0.0);
            for &(p, q) in m.pairs() {
                let (p, q) = (p.min(q), p.max(q));
                w *= match j {
                    Some(j) => j.row(x[p])[x[q]],
                    None if x[p] == x[q] => C64::new(1.0, 0.0),
                    None => C64::new(0.0, 0.0),
                };
            }
            mats.iter().enumerate().fold(w, |acc, (s, a)| acc * a.row(x[2 * s])[x[2 * s + 1]])
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_laws(a in permutation(6), b in permutation(6)) {
        prop_assert!(a.compose(&a.inverse()).is_identity());
        prop_assert_eq!(a.compose(&b).sign(), a.sign() * b.sign());
        prop_assert_eq!(a.cycle_type().total(), 6);
        prop_assert_eq!(a.inverse().cycle_type(), a.cycle_type());
        // conjugation preserves the cycle type
        prop_assert_eq!(b.compose(&a).compose(&b.inverse()).cycle_type(), a.cycle_type());
    }

    #[test]
    fn permutation_trace_matches_index_sum(
        (mats, sigma) in (1usize..=3, 2usize..=3).prop_flat_map(|(k, d)| (matrices(d, k), permutation(k)))
    ) {
        let fast = permutation_trace(&mats, &sigma).unwrap();
        let slow = brute_permutation_trace(&mats, &sigma);
        prop_assert!((fast - slow).norm() < 1e-10, "{fast} vs {slow}");
    }

    #[test]
    fn pairing_traces_match_index_sums(
        (mats, m) in (1usize..=3).prop_flat_map(|k| (matrices(2, k), pairing(k)))
    ) {
        let o = pair_partition_trace(&mats, &m, Flavor::Orthogonal, None).unwrap();
        prop_assert!((o - brute_pairing_trace(&mats, &m, None)).norm() < 1e-10);
        let j = canonical_j(1);
        let s = pair_partition_trace(&mats, &m, Flavor::Symplectic, Some(&j)).unwrap();
        prop_assert!((s - brute_pairing_trace(&mats, &m, Some(&j))).norm() < 1e-10);
    }

    #[test]
    fn coset_type_is_symmetric(k in 1usize..=4, a in 0usize..105, b in 0usize..105) {
        let all = enumerate_pair_partitions(k).unwrap();
        let (m, n) = (&all[a % all.len()], &all[b % all.len()]);
        prop_assert_eq!(qualm_lab::perm::loop_type(m, n), qualm_lab::perm::loop_type(n, m));
        prop_assert_eq!(qualm_lab::perm::loop_type(m, n).total(), k);
    }
}

#[test]
fn enumeration_sizes() {
    for k in 1..=5 {
        let n_perm: usize = (1..=k).product();
        let n_pair: usize = (1..=k).map(|i| 2 * i - 1).product();
        assert_eq!(enumerate_permutations(k).unwrap().len(), n_perm);
        let pairs = enumerate_pair_partitions(k).unwrap();
        assert_eq!(pairs.len(), n_pair);
        let mut seen: Vec<String> = pairs.iter().map(|p| p.to_string()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), n_pair, "duplicate pairings at k={k}");
    }
}

#[test]
fn nontrivial_length_counts_match_enumeration() {
    for k in 1..=6 {
        let perms = enumerate_permutations(k).unwrap();
        let pairs = if k <= 5 { Some(enumerate_pair_partitions(k).unwrap()) } else { None };
        let mut total = (0u128, 0u128);
        for l in 0..=k {
            let (n, np) = count_by_nontrivial_length(k, l);
            let direct = perms.iter().filter(|p| p.cycle_type().nontrivial_length() == l).count() as u128;
            assert_eq!(n, direct, "permutations k={k} L={l}");
            if let Some(pairs) = &pairs {
                let ones = |m: &PairPartition| m.coset_type().parts().iter().filter(|&&x| x == 1).count();
                let direct = pairs.iter().filter(|m| ones(m) == k - l).count() as u128;
                assert_eq!(np, direct, "pairings k={k} L={l}");
            }
            total.0 += n;
            total.1 += np;
        }
        assert_eq!(total.0, (1..=k as u128).product::<u128>());
        assert_eq!(total.1, (1..=k as u128).map(|i| 2 * i - 1).product::<u128>());
    }
    assert_eq!(count_by_nontrivial_length(3, 4), (0, 0));
}

#[test]
fn one_based_display_round_trip() {
    let p = Permutation::from_one_based(&[2, 3, 1]).unwrap();
    assert_eq!(p.apply(0), 1);
    assert_eq!(p.num_cycles(), 1);
    let m = PairPartition::from_one_based(&[(1, 3), (2, 4)]).unwrap();
    assert_eq!(PairPartition::from_permutation(&m.sigma()).unwrap(), m);
    assert!(Permutation::new(vec![0, 0]).is_err());
}
