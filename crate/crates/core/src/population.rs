//! The distinct stage instances of one stage level, their shared reuse tree, and buckets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::reuse_tree::ReuseTree;
use crate::workflow::StageInstance;

/// A group of stage instances executed together; `task_cost` counts their unique tasks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bucket {
    pub members: Vec<usize>,
    pub task_cost: usize,
}

#[derive(Debug, Clone)]
pub struct Population {
    instances: Vec<StageInstance>,
    tree: ReuseTree,
}

impl Population {
    /// All instances must come from one stage template.
    pub fn new(instances: Vec<StageInstance>) -> Result<Self> {
        let tree = ReuseTree::generate(&instances)?;
        Ok(Population { instances, tree })
    }

    /// Synthetic population from hand-written task keys.
    pub fn from_keys(rows: &[(&str, &[&str])]) -> Result<Self> {
        Self::new(rows.iter().map(|(label, keys)| StageInstance::synthetic("s", label, keys)).collect())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Tasks per instance.
    pub fn k(&self) -> usize {
        self.tree.k()
    }

    pub fn instances(&self) -> &[StageInstance] {
        &self.instances
    }

    pub fn instance(&self, i: usize) -> &StageInstance {
        &self.instances[i]
    }

    pub fn tree(&self) -> &ReuseTree {
        &self.tree
    }

    pub fn label(&self, i: usize) -> &str {
        self.instances[i].signature.as_str()
    }

    /// Unique task count when everything runs in one bucket.
    pub fn unique_tasks(&self) -> usize {
        self.tree.task_cost()
    }

    pub fn cost(&self, members: &[usize]) -> usize {
        self.tree.cost_of(members.iter().copied())
    }

    pub fn bucket(&self, members: Vec<usize>) -> Bucket {
        let task_cost = self.cost(&members);
        Bucket { members, task_cost }
    }

    /// Fraction of tasks saved by running `buckets` instead of every instance separately.
    pub fn reuse(&self, buckets: &[Bucket]) -> f64 {
        let total = self.len() * self.k();
        if total == 0 {
            return 0.0;
        }
        1.0 - buckets.iter().map(|b| b.task_cost).sum::<usize>() as f64 / total as f64
    }

    /// Reuse of the single all-in-one bucket, the upper bound for any partition.
    pub fn max_reuse(&self) -> f64 {
        let total = self.len() * self.k();
        if total == 0 {
            return 0.0;
        }
        1.0 - self.unique_tasks() as f64 / total as f64
    }

    /// Checks that `buckets` is a partition of this population with correct costs.
    pub fn check_partition(&self, buckets: &[Bucket]) -> Result<()> {
        let mut seen = vec![false; self.len()];
        for b in buckets {
            if b.members.is_empty() {
                return Err(Error::InvalidPlan("empty bucket".into()));
            }
            for &m in &b.members {
                if m >= self.len() || std::mem::replace(&mut seen[m], true) {
                    return Err(Error::InvalidPlan(format!("instance {m} missing or repeated")));
                }
            }
            if b.task_cost != self.cost(&b.members) {
                return Err(Error::InvalidPlan("bucket cost does not match its members".into()));
            }
        }
        if let Some(m) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPlan(format!("instance {m} not assigned")));
        }
        Ok(())
    }
}
