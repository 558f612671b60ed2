//! Replays of the hand-built examples: each run recomputes the example with the library and
//! compares the outcome with the known answer.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::compact::CompactGraph;
use crate::error::{Error, Result};
use crate::examples;
use crate::merging::{
    fold_merge, fold_target, full_merge, full_merge_frontier, rtma, single_balance, single_balance_traced,
    BucketLedger, SmallSelection, TreeBucket,
};
use crate::plan::{plan, Algorithm, Constraints, PlanOptions};
use crate::population::{Bucket, Population};
use crate::reference;
use crate::reuse_tree::{reuse_degree, ReuseTree};
use crate::sim::{simulate, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    Diamond,
    Insertion,
    TwelveStages,
    Frontier,
    Overshoot,
    Balance,
    MixedDepth,
    SmallSelection,
    SiblingPruning,
}

impl Example {
    pub const ALL: [Example; 9] = [
        Example::Diamond,
        Example::Insertion,
        Example::TwelveStages,
        Example::Frontier,
        Example::Overshoot,
        Example::Balance,
        Example::MixedDepth,
        Example::SmallSelection,
        Example::SiblingPruning,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Example::Diamond => "diamond",
            Example::Insertion => "insertion",
            Example::TwelveStages => "twelve-stages",
            Example::Frontier => "frontier",
            Example::Overshoot => "overshoot",
            Example::Balance => "balance",
            Example::MixedDepth => "mixed-depth",
            Example::SmallSelection => "small-selection",
            Example::SiblingPruning => "sibling-pruning",
        }
    }

    fn summary(self) -> &'static str {
        match self {
            Example::Diamond => "stage-level merge of three sets over a diamond workflow",
            Example::Insertion => "inserting one stage into a reuse tree",
            Example::TwelveStages => "RTMA with bucket size 3 over twelve 3-task stages",
            Example::Frontier => "top-down split of a reuse tree into three groups",
            Example::Overshoot => "split that overshoots three groups, then the fold back",
            Example::Balance => "balancing buckets of cost 8, 9 and 5",
            Example::MixedDepth => "single-bucket makespans of two groups with equal task counts",
            Example::SmallSelection => "choice of the small bucket and a rejected false improvement",
            Example::SiblingPruning => "sibling pruning in the balance search",
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Example::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown example `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: Value,
    pub actual: Value,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replay {
    pub example: String,
    pub summary: String,
    pub checks: Vec<Check>,
    pub detail: Value,
}

impl Replay {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

struct Builder {
    checks: Vec<Check>,
}

impl Builder {
    fn eq<A: Serialize, B: Serialize>(&mut self, name: &str, expected: A, actual: B) {
        let (expected, actual) = (json!(expected), json!(actual));
        self.checks.push(Check {
            name: name.to_string(),
            pass: expected == actual,
            expected,
            actual,
        });
    }

    fn close(&mut self, name: &str, expected: f64, actual: f64, tol: f64) {
        self.checks.push(Check {
            name: format!("{name} (tolerance {tol})"),
            expected: json!(expected),
            actual: json!(actual),
            pass: (expected - actual).abs() <= tol,
        });
    }
}

fn labels(pop: &Population, members: &[usize]) -> String {
    members.iter().map(|&m| pop.label(m)).collect::<Vec<_>>().join(",")
}

fn bucket_labels(pop: &Population, buckets: &[Bucket]) -> Vec<String> {
    buckets.iter().map(|b| labels(pop, &b.members)).collect()
}

fn ledger(pop: &Population, groups: &[Vec<usize>]) -> Result<BucketLedger> {
    let buckets = groups
        .iter()
        .map(|g| TreeBucket::new(pop, g.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(BucketLedger::new(buckets))
}

fn slot_costs(l: &BucketLedger) -> Vec<usize> {
    (0..l.len()).map(|s| l.bucket(s).cost()).collect()
}

pub fn replay(example: Example) -> Result<Replay> {
    let mut b = Builder { checks: Vec::new() };
    let detail = match example {
        Example::Diamond => {
            let (w, sets) = examples::diamond();
            let g = CompactGraph::build(&w, &sets)?;
            b.eq("replica instances", 12, sets.len() * w.stages.len());
            b.eq("compact graph vertices", 7, g.vertex_count());
            b.close("stage reuse", 5.0 / 12.0, g.stage_reuse_ratio(), 1e-12);
            let per_level: Vec<usize> = g.distinct_instances().iter().map(Vec::len).collect();
            b.eq("vertices per stage", [1, 1, 2, 3], &per_level);
            json!({ "graph": g.export() })
        }
        Example::Insertion => {
            let all = examples::insertion();
            let names = ["a", "b", "c", "d", "x"];
            let mut t = ReuseTree::generate(&all[..4])?;
            let before = t.dump_with(|s| names[s].into());
            let cost = t.task_cost();
            let shared = t.parent(t.node(t.leaf(3).expect("d is present")).parent.expect("leaf has a parent"));
            t.add_stages(&all, &[4])?;
            let mid = t.parent(t.leaf(4).expect("x was inserted"));
            b.eq("nodes added", 2, t.task_cost() - cost);
            b.eq("new internal node hangs from the shared depth-1 node", true, mid.and_then(|m| t.parent(m)) == shared);
            b.eq("depth of the new internal node", 2, mid.map(|m| t.node(m).depth));
            b.eq("reuse degree of d and x", 1, reuse_degree(&all[3], &all[4])?);
            json!({ "before": before, "after": t.dump_with(|s| names[s].into()) })
        }
        Example::TwelveStages => {
            let pop = examples::twelve_stages();
            let buckets = rtma(&pop, 3)?;
            let got = bucket_labels(&pop, &buckets);
            b.eq("first bucket", "a,b,c", &got[0]);
            let second_in_defg = buckets[1].members.len() == 3
                && buckets[1].members.iter().all(|&m| "defg".contains(pop.label(m)));
            b.eq("second bucket is a 3-subset of d..g", true, second_in_defg);
            b.eq("every stage placed once", true, pop.check_partition(&buckets).is_ok());
            let sizes_ok = buckets.iter().all(|x| x.members.len() == 1 || x.members.len() == 3);
            b.eq("multi-stage buckets hold exactly 3", true, sizes_ok);
            json!({ "buckets": got })
        }
        Example::Frontier => {
            let pop = examples::frontier();
            let tree = pop.tree();
            let keys: Vec<&str> = full_merge_frontier(tree, 3)
                .into_iter()
                .map(|n| tree.node(n).key.as_deref().unwrap_or(""))
                .collect();
            b.eq("frontier size", 3, keys.len());
            b.eq("frontier nodes", ["4", "5", "2"], &keys);
            let groups: Vec<String> = full_merge(&pop, 3)?.iter().map(|g| labels(&pop, g)).collect();
            json!({ "frontier": keys, "groups": groups })
        }
        Example::Overshoot => {
            let pop = examples::overshoot();
            let groups = full_merge(&pop, 3)?;
            b.eq("groups after the split", 4, groups.len());
            let split: Vec<String> = groups.iter().map(|g| labels(&pop, g)).collect();
            let buckets = groups
                .into_iter()
                .map(|g| TreeBucket::new(&pop, g))
                .collect::<Result<Vec<_>>>()?;
            let folded: Vec<String> = fold_merge(&pop, buckets, 3)?.iter().map(|t| labels(&pop, &t.members)).collect();
            b.eq("buckets after the fold", ["c,d", "a", "b,e"], &folded);
            // 1-based positions in cost order, six buckets folded down to four.
            let pairs: Vec<[usize; 2]> = (4..6).map(|p| [p + 1, fold_target(p, 4) + 1]).collect();
            b.eq("six into four merges", [[5, 4], [6, 3]], &pairs);
            json!({ "split": split, "folded": folded })
        }
        Example::Balance => {
            let (pop, groups) = examples::unbalanced_triple();
            let mut l = ledger(&pop, &groups)?;
            b.eq("initial costs", [8, 9, 5], slot_costs(&l));
            let (big, small) = (l.first().expect("three buckets"), l.last().expect("three buckets"));
            let mut trace = Vec::new();
            single_balance_traced(&l.bucket(big).tree, &l.bucket(small).tree, 4, &mut trace);
            let by_key = |k: &str| trace.iter().find(|c| c.key.as_deref() == Some(k)).cloned();
            let node6 = by_key("6");
            let node7 = by_key("7");
            b.eq("node 6 projected imbalance", Some(7), node6.as_ref().map(|c| c.imbalance()));
            b.eq(
                "node 7 imbalance and pair maximum",
                Some((3, 9)),
                node7.as_ref().map(|c| (c.imbalance(), c.makespan())),
            );
            let steps = l.balance(&pop, SmallSelection::LastBucket)?;
            let mut end = slot_costs(&l);
            end.sort();
            b.eq("final costs", [8, 8, 8], &end);
            json!({ "candidates": trace, "steps": steps })
        }
        Example::MixedDepth => {
            let (w, first, second) = examples::mixed_depth_pair();
            let costs = reference::costs::<f64>()?;
            let one = PlanOptions::new(Algorithm::Trtma, Constraints::count(1));
            let run = |sets: &[crate::workflow::ParameterSet]| -> Result<(usize, f64)> {
                let p = plan(&w, sets, &one)?;
                let r = simulate(&p, &costs, &SimConfig::new(1, 1))?;
                Ok((p.metrics.task_cost, r.makespan))
            };
            let (_, single) = run(&first[..1])?;
            let (tasks_a, a) = run(&first)?;
            let (tasks_b, bb) = run(&second)?;
            b.close("single set, one worker, one core", 9.51, single, 1e-9);
            b.eq("equal unique task counts", tasks_a, tasks_b);
            b.close("makespan ratio", 1.25, bb / a, 0.01);
            json!({ "single": single, "late_split": a, "early_split": bb, "unique_tasks": tasks_a })
        }
        Example::SmallSelection => {
            let (pop, groups) = examples::greedy_pairing();
            let mut last = ledger(&pop, &groups)?;
            let steps = last.balance(&pop, SmallSelection::LastBucket)?;
            b.eq("last bucket: first step applied", false, steps.first().is_some_and(|s| s.applied));
            b.eq("last bucket: makespan", 6, last.makespan());
            let mut reuse = ledger(&pop, &groups)?;
            reuse.balance(&pop, SmallSelection::GreatestReuse)?;
            b.eq("greatest reuse: makespan", 5, reuse.makespan());

            let (pop, groups) = examples::false_improvement();
            let mut l = ledger(&pop, &groups)?;
            b.eq("costs", [6, 8, 5], slot_costs(&l));
            let steps = l.balance(&pop, SmallSelection::LastBucket)?;
            let first = steps.first().and_then(|s| s.improvement.as_ref());
            b.eq("candidate imbalance and pair maximum", Some((1, 8)), first.map(|i| (i.imbalance(), i.makespan())));
            b.eq("candidate rejected", false, steps.first().is_some_and(|s| s.applied));
            let alt = single_balance(&l.bucket(1).tree, &l.bucket(0).tree, 2);
            b.eq("pairing with the sharing bucket", Some((0, 7)), alt.map(|i| (i.imbalance(), i.makespan())));
            json!({ "false_improvement_steps": steps })
        }
        Example::SiblingPruning => {
            let pop = examples::interchangeable_siblings();
            let big = pop.tree();
            let small = ReuseTree::new(big.k());
            let mut trace = Vec::new();
            single_balance_traced(big, &small, big.task_cost(), &mut trace);
            let mut seen: Vec<&str> = trace.iter().filter_map(|c| c.key.as_deref()).collect();
            seen.sort_by_key(|k| k.parse::<u32>().unwrap_or(u32::MAX));
            let kept = ["1", "2", "3", "4", "7", "9", "10", "12", "15", "19", "21"];
            let pruned = ["5", "6", "8", "11", "16", "18", "20"];
            b.eq("representatives evaluated", true, kept.iter().all(|k| seen.contains(k)));
            let skipped: Vec<&str> = pruned.iter().copied().filter(|k| !seen.contains(k)).collect();
            b.eq("interchangeable nodes skipped", pruned, &skipped);
            json!({ "evaluated": seen })
        }
    };
    Ok(Replay {
        example: example.name().to_string(),
        summary: example.summary().to_string(),
        checks: b.checks,
        detail,
    })
}
