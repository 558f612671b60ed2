//! Heuristic bucketings checked against exhaustive search on small random populations.

use proptest::prelude::*;
use reuseplan::merging::{
    rtma, rtma_with, single_balance, single_balance_unpruned, trtma, trtma_with, RtmaOptions, SmallSelection,
    TreeBucket, TrtmaOptions,
};
use reuseplan::partition::{
    min_cut_2, min_cut_value_exhaustive, naive_buckets, oracle_min_makespan, oracle_min_total_cost,
    path_union_cost, sca_buckets,
};
use reuseplan::population::{Bucket, Population};

/// Each instance picks a value per depth from a small alphabet, so prefixes collide often.
/// Rows are distinct, as instances that survive stage merging always are.
fn population() -> impl Strategy<Value = Population> {
    (1usize..=4).prop_flat_map(|k| {
        let most = 8.min(3usize.pow(k as u32));
        prop::collection::btree_set(prop::collection::vec(0u8..3, k), 1..=most)
            .prop_map(|rows| rows.into_iter().collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(move |rows| {
            let keys: Vec<Vec<String>> = rows
                .iter()
                .map(|r| r.iter().enumerate().map(|(d, v)| format!("d{d}={v}")).collect())
                .collect();
            let labels: Vec<String> = (0..rows.len()).map(|i| format!("s{i}")).collect();
            let borrowed: Vec<Vec<&str>> = keys.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
            let table: Vec<(&str, &[&str])> = labels.iter().map(String::as_str).zip(borrowed.iter().map(Vec::as_slice)).collect();
            Population::from_keys(&table).unwrap()
        })
    })
}

fn check_buckets(pop: &Population, buckets: &[Bucket], max_size: Option<usize>) -> Result<usize, TestCaseError> {
    pop.check_partition(buckets).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for b in buckets {
        prop_assert_eq!(b.task_cost, path_union_cost(pop, &b.members));
        if let Some(max) = max_size {
            prop_assert!(b.members.len() <= max);
        }
    }
    Ok(buckets.iter().map(|b| b.task_cost).sum())
}

fn makespan(buckets: &[Bucket]) -> usize {
    buckets.iter().map(|b| b.task_cost).max().unwrap_or(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn size_bounded_heuristics_never_beat_the_optimum(pop in population(), b in 1usize..=5) {
        let (_, best) = oracle_min_total_cost(&pop, b).unwrap();
        for buckets in [
            naive_buckets(&pop, b).unwrap(),
            sca_buckets(&pop, b).unwrap(),
            rtma(&pop, b).unwrap(),
            rtma_with(&pop, b, RtmaOptions { coalesce_leftovers: true }).unwrap(),
        ] {
            let total = check_buckets(&pop, &buckets, Some(b))?;
            prop_assert!(total >= best);
            prop_assert!(total <= pop.len() * pop.k());
        }
    }

    #[test]
    fn rtma_full_buckets_share_deepest_parents(pop in population(), b in 2usize..=4) {
        // Every bucket is either exactly `b` stages or a leftover singleton.
        for bucket in rtma(&pop, b).unwrap() {
            prop_assert!(bucket.members.len() == b || bucket.members.len() == 1);
        }
    }

    #[test]
    fn trtma_uses_all_buckets_and_respects_the_optimum(pop in population(), mb in 1usize..=4) {
        for small in [SmallSelection::LastBucket, SmallSelection::GreatestReuse] {
            let out = trtma_with(&pop, mb, TrtmaOptions { small }).unwrap();
            check_buckets(&pop, &out.buckets, None)?;
            prop_assert_eq!(out.buckets.len(), mb.min(pop.len()));
            let (_, best) = oracle_min_makespan(&pop, mb).unwrap();
            prop_assert!(makespan(&out.buckets) >= best);
            // Applied balance steps strictly lower the pair they touch.
            for step in out.steps.iter().filter(|s| s.applied) {
                let imp = step.improvement.as_ref().unwrap();
                prop_assert!(imp.new_big.max(imp.new_small) < step.big_cost);
            }
        }
        // A single bucket reaches the whole level's reuse.
        let one = trtma(&pop, 1).unwrap();
        prop_assert_eq!(one[0].task_cost, pop.unique_tasks());
    }

    #[test]
    fn pruned_single_balance_finds_an_equally_good_move(pop in population(), split in 1usize..8) {
        prop_assume!(pop.len() >= 2);
        let split = split.min(pop.len() - 1);
        let (mut a, mut b) = (
            TreeBucket::new(&pop, (0..split).collect()).unwrap(),
            TreeBucket::new(&pop, (split..pop.len()).collect()).unwrap(),
        );
        if a.cost() < b.cost() {
            std::mem::swap(&mut a, &mut b);
        }
        let imbal = a.cost() - b.cost();
        let rank = |i: &reuseplan::merging::Improvement| (i.imbalance(), i.makespan(), i.new_big);
        let pruned = single_balance(&a.tree, &b.tree, imbal);
        let full = single_balance_unpruned(&a.tree, &b.tree, imbal);
        prop_assert_eq!(pruned.as_ref().map(rank), full.as_ref().map(rank));
        if let Some(imp) = pruned {
            prop_assert!(imp.imbalance() < imbal);
            let moved: Vec<usize> = imp.stages.clone();
            let kept: Vec<usize> = a.members.iter().copied().filter(|m| !moved.contains(m)).collect();
            let gained: Vec<usize> = b.members.iter().copied().chain(moved).collect();
            prop_assert_eq!(imp.new_big, path_union_cost(&pop, &kept));
            prop_assert_eq!(imp.new_small, path_union_cost(&pop, &gained));
        }
    }

    #[test]
    fn stoer_wagner_matches_exhaustive_cut(n in 2usize..=8, weights in prop::collection::vec(0u64..6, 28)) {
        let mut w = vec![vec![0u64; n]; n];
        let mut it = weights.into_iter();
        for i in 0..n {
            for j in i + 1..n {
                let x = it.next().unwrap();
                w[i][j] = x;
                w[j][i] = x;
            }
        }
        let cut = min_cut_2(&w).unwrap();
        prop_assert_eq!(cut.value, min_cut_value_exhaustive(&w));
        prop_assert_eq!(cut.side1.len() + cut.side2.len(), n);
        prop_assert!(!cut.side1.is_empty() && !cut.side2.is_empty());
        prop_assert!(cut.side1.len() <= cut.side2.len());
        let crossing: u64 = cut.side1.iter().flat_map(|&i| cut.side2.iter().map(move |&j| (i, j))).map(|(i, j)| w[i][j]).sum();
        prop_assert_eq!(crossing, cut.value);
    }
}
