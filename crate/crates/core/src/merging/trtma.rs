//! Reuse-tree merging with a bucket count limit: a top-down split into at least `MaxBuckets`
//! groups, a fold that merges the cheapest extras back, then pairwise task balancing.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use serde::Serialize;

use super::single::{shared_nodes, single_balance, Improvement};
use crate::error::{Error, Result};
use crate::population::{Bucket, Population};
use crate::reuse_tree::{NodeId, ReuseTree, ROOT};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallSelection {
    /// The last bucket of the ledger: minimum cost, most recently inserted.
    #[default]
    LastBucket,
    /// Among the minimum-cost buckets, the one sharing most task nodes with the big bucket.
    GreatestReuse,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrtmaOptions {
    pub small: SmallSelection,
}

/// A bucket together with its own reuse tree.
#[derive(Debug, Clone)]
pub struct TreeBucket {
    pub members: Vec<usize>,
    pub tree: ReuseTree,
}

impl TreeBucket {
    pub fn new(pop: &Population, members: Vec<usize>) -> Result<Self> {
        let mut tree = ReuseTree::new(pop.k());
        tree.add_stages(pop.instances(), &members)?;
        Ok(TreeBucket { members, tree })
    }

    pub fn cost(&self) -> usize {
        self.tree.task_cost()
    }

    fn absorb(&mut self, pop: &Population, stages: &[usize]) -> Result<()> {
        self.tree.add_stages(pop.instances(), stages)?;
        self.members.extend_from_slice(stages);
        Ok(())
    }

    fn release(&mut self, stages: &[usize]) -> Result<()> {
        self.tree.remove_stages(stages)?;
        self.members.retain(|m| !stages.contains(m));
        Ok(())
    }
}

/// One step of the balance loop, for replay and inspection.
#[derive(Debug, Clone, Serialize)]
pub struct BalanceStep {
    pub big_cost: usize,
    pub small_cost: usize,
    pub improvement: Option<Improvement>,
    pub applied: bool,
}

/// Buckets ordered by descending cost; equal costs keep insertion order.
#[derive(Debug, Clone)]
pub struct BucketLedger {
    order: BTreeSet<(Reverse<usize>, u64, usize)>,
    slots: Vec<TreeBucket>,
    seq: Vec<u64>,
    next_seq: u64,
}

impl BucketLedger {
    pub fn new(buckets: Vec<TreeBucket>) -> Self {
        let mut ledger = BucketLedger {
            order: BTreeSet::new(),
            seq: vec![0; buckets.len()],
            slots: buckets,
            next_seq: 0,
        };
        for slot in 0..ledger.slots.len() {
            ledger.insert(slot);
        }
        ledger
    }

    fn insert(&mut self, slot: usize) {
        self.seq[slot] = self.next_seq;
        self.next_seq += 1;
        self.order.insert((Reverse(self.slots[slot].cost()), self.seq[slot], slot));
    }

    fn remove(&mut self, slot: usize) {
        let removed = self.order.remove(&(Reverse(self.slots[slot].cost()), self.seq[slot], slot));
        debug_assert!(removed);
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.order.first().map(|e| e.2)
    }

    pub fn last(&self) -> Option<usize> {
        self.order.last().map(|e| e.2)
    }

    pub fn bucket(&self, slot: usize) -> &TreeBucket {
        &self.slots[slot]
    }

    pub fn makespan(&self) -> usize {
        self.first().map_or(0, |s| self.slots[s].cost())
    }

    /// Slots from highest to lowest cost.
    pub fn sorted(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().map(|e| e.2)
    }

    fn select_small(&self, big: usize, how: SmallSelection) -> Option<usize> {
        let last = self.last().filter(|&s| s != big)?;
        match how {
            SmallSelection::LastBucket => Some(last),
            SmallSelection::GreatestReuse => {
                let min = self.slots[last].cost();
                let mut best = last;
                let mut best_shared = shared_nodes(&self.slots[big].tree, &self.slots[last].tree);
                for &(Reverse(cost), _, slot) in self.order.iter().rev().skip(1) {
                    if cost != min || slot == big {
                        break;
                    }
                    let shared = shared_nodes(&self.slots[big].tree, &self.slots[slot].tree);
                    if shared > best_shared {
                        best = slot;
                        best_shared = shared;
                    }
                }
                Some(best)
            }
        }
    }

    /// Moves improvements from the costliest bucket to a cheap one until no move lowers the
    /// pair's maximum cost.
    pub fn balance(&mut self, pop: &Population, how: SmallSelection) -> Result<Vec<BalanceStep>> {
        let mut steps = Vec::new();
        let cap = self.slots.iter().map(TreeBucket::cost).sum::<usize>() + 1;
        for _ in 0..cap {
            let Some(big) = self.first() else { break };
            let Some(small) = self.select_small(big, how) else { break };
            let (big_cost, small_cost) = (self.slots[big].cost(), self.slots[small].cost());
            let imp = single_balance(&self.slots[big].tree, &self.slots[small].tree, big_cost - small_cost);
            let applied = imp.as_ref().is_some_and(|i| i.makespan() < big_cost);
            steps.push(BalanceStep {
                big_cost,
                small_cost,
                improvement: imp.clone(),
                applied,
            });
            let Some(imp) = imp.filter(|_| applied) else { break };
            let before = self.makespan();
            self.remove(small);
            self.remove(big);
            self.slots[small].absorb(pop, &imp.stages)?;
            self.slots[big].release(&imp.stages)?;
            self.insert(small);
            self.insert(big);
            debug_assert!(self.makespan() <= before);
            debug_assert!(self.slots[big].cost().max(self.slots[small].cost()) < big_cost);
        }
        Ok(steps)
    }

    pub fn into_buckets(self, pop: &Population) -> Vec<Bucket> {
        let order: Vec<usize> = self.sorted().collect();
        let mut slots: Vec<Option<TreeBucket>> = self.slots.into_iter().map(Some).collect();
        order
            .into_iter()
            .map(|s| {
                let b = slots[s].take().expect("each slot listed once");
                debug_assert_eq!(b.cost(), pop.cost(&b.members));
                Bucket {
                    task_cost: b.cost(),
                    members: b.members,
                }
            })
            .collect()
    }
}

fn check_count(max_buckets: usize) -> Result<()> {
    if max_buckets < 1 {
        return Err(Error::InvalidConfig("MaxBuckets must be >= 1".into()));
    }
    Ok(())
}

/// Expands the frontier top-down, always splitting the node holding the most stages (then the
/// one with more children, then the earliest), until it has at least `max_buckets` nodes.
pub fn full_merge_frontier(tree: &ReuseTree, max_buckets: usize) -> Vec<NodeId> {
    let counts = tree.leaf_counts();
    let mut frontier: Vec<NodeId> = tree.children(ROOT).collect();
    while frontier.len() < max_buckets {
        let pick = frontier
            .iter()
            .enumerate()
            .filter(|(_, &n)| !tree.node(n).children.is_empty())
            .max_by_key(|(i, &n)| (counts[n], tree.node(n).children.len(), Reverse(*i)))
            .map(|(i, _)| i);
        let Some(i) = pick else { break };
        let node = frontier[i];
        frontier.splice(i..=i, tree.children(node));
    }
    frontier
}

/// One group of stages per frontier node.
pub fn full_merge(pop: &Population, max_buckets: usize) -> Result<Vec<Vec<usize>>> {
    check_count(max_buckets)?;
    let tree = pop.tree();
    Ok(full_merge_frontier(tree, max_buckets)
        .into_iter()
        .map(|n| tree.stages_under(n))
        .collect())
}

/// Sorted-position targets of a fold: with `b` buckets sorted by descending cost, position
/// `p >= max_buckets` merges into the returned position, folding back and forth.
pub fn fold_target(p: usize, max_buckets: usize) -> usize {
    let q = p - max_buckets;
    let (seg, off) = (q / max_buckets, q % max_buckets);
    if seg % 2 == 0 {
        max_buckets - 1 - off
    } else {
        off
    }
}

/// Reduces `buckets` to `max_buckets` by folding the cheapest ones onto the rest.
pub fn fold_merge(pop: &Population, mut buckets: Vec<TreeBucket>, max_buckets: usize) -> Result<Vec<TreeBucket>> {
    check_count(max_buckets)?;
    buckets.sort_by_key(|b| Reverse(b.cost()));
    if buckets.len() <= max_buckets {
        return Ok(buckets);
    }
    let extra = buckets.split_off(max_buckets);
    for (j, b) in extra.into_iter().enumerate() {
        let target = fold_target(max_buckets + j, max_buckets);
        buckets[target].absorb(pop, &b.members)?;
    }
    Ok(buckets)
}

pub struct TrtmaOutcome {
    pub buckets: Vec<Bucket>,
    pub steps: Vec<BalanceStep>,
}

pub fn trtma(pop: &Population, max_buckets: usize) -> Result<Vec<Bucket>> {
    Ok(trtma_with(pop, max_buckets, TrtmaOptions::default())?.buckets)
}

pub fn trtma_with(pop: &Population, max_buckets: usize, opts: TrtmaOptions) -> Result<TrtmaOutcome> {
    check_count(max_buckets)?;
    let groups = full_merge(pop, max_buckets)?;
    let buckets = groups
        .into_iter()
        .map(|g| TreeBucket::new(pop, g))
        .collect::<Result<Vec<_>>>()?;
    let folded = fold_merge(pop, buckets, max_buckets)?;
    let mut ledger = BucketLedger::new(folded);
    let steps = ledger.balance(pop, opts.small)?;
    Ok(TrtmaOutcome {
        buckets: ledger.into_buckets(pop),
        steps,
    })
}
