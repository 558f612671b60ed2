//! Search for a subtree of the heavier bucket whose stages, moved to the lighter bucket,
//! shrink the cost gap between the two.

use std::collections::HashSet;

use serde::Serialize;

use crate::reuse_tree::{NodeId, ReuseTree, ROOT};
use crate::workflow::TaskKey;

/// A candidate move: all stages under `node` of the big tree go to the small tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Improvement {
    pub node: NodeId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub stages: Vec<usize>,
    pub new_big: usize,
    pub new_small: usize,
}

impl Improvement {
    pub fn imbalance(&self) -> usize {
        self.new_big.abs_diff(self.new_small)
    }

    pub fn makespan(&self) -> usize {
        self.new_big.max(self.new_small)
    }

    fn rank(&self) -> (usize, usize, usize) {
        (self.imbalance(), self.makespan(), self.new_big)
    }
}

/// Cost of `big` once the subtree at `node` is removed: the subtree plus every ancestor
/// left without children.
pub fn cost_without(big: &ReuseTree, node: NodeId) -> usize {
    let subtree = big.subtree(node).len();
    let mut lost = subtree;
    let mut cur = node;
    while let Some(p) = big.parent(cur) {
        if p == ROOT || big.node(p).children.len() != 1 {
            break;
        }
        lost += 1;
        cur = p;
    }
    big.task_cost() - lost
}

fn key_path(big: &ReuseTree, node: NodeId) -> Vec<&TaskKey> {
    let mut path = Vec::new();
    let mut cur = node;
    while cur != ROOT {
        path.push(big.node(cur).key.as_ref().expect("non-root node has a key"));
        cur = big.parent(cur).expect("non-root node has a parent");
    }
    path.reverse();
    path
}

/// Number of nodes `small` would gain by taking the subtree at `node` of `big`.
pub fn added_to(small: &ReuseTree, big: &ReuseTree, node: NodeId) -> usize {
    let mut added = 0;
    let mut at = Some(ROOT);
    for key in key_path(big, node) {
        at = at.and_then(|s| small.node(s).children.get(key).copied());
        if at.is_none() {
            added += 1;
        }
    }
    let mut stack = vec![(node, at)];
    while let Some((b, s)) = stack.pop() {
        for (key, &child) in &big.node(b).children {
            let paired = s.and_then(|s| small.node(s).children.get(key).copied());
            if paired.is_none() {
                added += 1;
            }
            stack.push((child, paired));
        }
    }
    added
}

/// Number of nodes of `small` whose key path also exists in `big`.
pub fn shared_nodes(big: &ReuseTree, small: &ReuseTree) -> usize {
    let mut shared = 0;
    let mut stack = vec![(ROOT, ROOT)];
    while let Some((s, b)) = stack.pop() {
        for (key, &sc) in &small.node(s).children {
            if let Some(&bc) = big.node(b).children.get(key) {
                shared += 1;
                stack.push((sc, bc));
            }
        }
    }
    shared
}

pub fn project(big: &ReuseTree, small: &ReuseTree, node: NodeId) -> Improvement {
    Improvement {
        node,
        key: big.node(node).key.as_deref().map(str::to_string),
        stages: big.stages_under(node),
        new_big: cost_without(big, node),
        new_small: small.task_cost() + added_to(small, big, node),
    }
}

struct Search<'a> {
    big: &'a ReuseTree,
    small: &'a ReuseTree,
    prune: bool,
    threshold: usize,
    best: Option<Improvement>,
    trace: Option<&'a mut Vec<Improvement>>,
}

impl Search<'_> {
    fn children(&self, n: NodeId) -> Vec<NodeId> {
        self.big.children(n).collect()
    }

    fn visit(&mut self, mut curr: Vec<NodeId>) {
        if self.prune {
            // A unary chain moves the same stages at every node; only its lowest node matters.
            while curr.len() == 1 && !self.big.node(curr[0]).children.is_empty() {
                curr = self.children(curr[0]);
            }
        }
        let mut seen = HashSet::new();
        let mut unique = Vec::with_capacity(curr.len());
        for &c in &curr {
            self.visit(self.children(c));
            if !self.prune {
                unique.push(project(self.big, self.small, c));
                continue;
            }
            let cand = project(self.big, self.small, c);
            // Siblings agreeing on subtree cost, fan-out and growth of the small tree are
            // interchangeable candidates.
            let key = (self.big.subtree(c).len(), self.big.node(c).children.len(), cand.new_small);
            if seen.insert(key) {
                unique.push(cand);
            }
        }
        for cand in unique {
            self.consider(cand);
        }
    }

    fn consider(&mut self, cand: Improvement) {
        if let Some(t) = self.trace.as_deref_mut() {
            t.push(cand.clone());
        }
        if cand.imbalance() >= self.threshold {
            return;
        }
        if self.best.as_ref().is_none_or(|b| cand.rank() < b.rank()) {
            self.best = Some(cand);
        }
    }
}

/// Best candidate whose imbalance is below `imbal`, searching children before parents.
/// Ties on imbalance prefer the lower resulting makespan, then the lighter big bucket,
/// then traversal order.
pub fn single_balance(big: &ReuseTree, small: &ReuseTree, imbal: usize) -> Option<Improvement> {
    run(big, small, imbal, true, None)
}

/// Same search with single-child and sibling pruning disabled.
pub fn single_balance_unpruned(big: &ReuseTree, small: &ReuseTree, imbal: usize) -> Option<Improvement> {
    run(big, small, imbal, false, None)
}

/// Pruned search that also records every evaluated candidate in order.
pub fn single_balance_traced(
    big: &ReuseTree,
    small: &ReuseTree,
    imbal: usize,
    trace: &mut Vec<Improvement>,
) -> Option<Improvement> {
    run(big, small, imbal, true, Some(trace))
}

fn run(
    big: &ReuseTree,
    small: &ReuseTree,
    imbal: usize,
    prune: bool,
    trace: Option<&mut Vec<Improvement>>,
) -> Option<Improvement> {
    let mut s = Search {
        big,
        small,
        prune,
        threshold: imbal,
        best: None,
        trace,
    };
    let roots = s.children(ROOT);
    s.visit(roots);
    s.best
}
