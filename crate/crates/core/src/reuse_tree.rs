//! Per-stage-level prefix trees of task signatures. Each root-to-leaf path is the task
//! chain of one stage instance; shared prefixes are tasks that run once for several stages.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::workflow::{StageInstance, TaskKey};

pub type NodeId = usize;
pub const ROOT: NodeId = 0;

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub depth: usize,
    pub key: Option<TaskKey>,
    pub parent: Option<NodeId>,
    pub children: IndexMap<TaskKey, NodeId>,
    /// Stage instances ending here; only non-empty at depth `k`.
    pub stages: Vec<usize>,
    alive: bool,
}

#[derive(Debug, Clone)]
pub struct ReuseTree {
    nodes: Vec<TreeNode>,
    k: usize,
    leaf_of: HashMap<usize, NodeId>,
    live: usize,
    stage_count: usize,
}

fn same_template(a: &StageInstance, b: &StageInstance) -> Result<()> {
    if a.stage != b.stage || a.template != b.template || a.level != b.level || a.k() != b.k() {
        return Err(Error::MixedTemplates(format!(
            "`{}` (level {}, {} tasks) vs `{}` (level {}, {} tasks)",
            a.stage,
            a.level,
            a.k(),
            b.stage,
            b.level,
            b.k()
        )));
    }
    Ok(())
}

/// Number of leading tasks two instances of the same template share.
pub fn reuse_degree(a: &StageInstance, b: &StageInstance) -> Result<usize> {
    same_template(a, b)?;
    Ok(a.keys().zip(b.keys()).take_while(|(x, y)| x == y).count())
}

impl ReuseTree {
    pub fn new(k: usize) -> Self {
        ReuseTree {
            nodes: vec![TreeNode {
                depth: 0,
                key: None,
                parent: None,
                children: IndexMap::new(),
                stages: Vec::new(),
                alive: true,
            }],
            k,
            leaf_of: HashMap::new(),
            live: 0,
            stage_count: 0,
        }
    }

    /// Inserts every instance; stage refs are positions in `instances`.
    pub fn generate(instances: &[StageInstance]) -> Result<Self> {
        let k = instances.first().map_or(0, StageInstance::k);
        let mut tree = ReuseTree::new(k);
        for (i, inst) in instances.iter().enumerate() {
            same_template(&instances[0], inst)?;
            tree.insert(i, inst.keys())?;
        }
        Ok(tree)
    }

    /// Walks the key path from the root, creating missing nodes, and records `stage` at the leaf.
    pub fn insert<'a, I>(&mut self, stage: usize, keys: I) -> Result<NodeId>
    where
        I: IntoIterator<Item = &'a TaskKey>,
    {
        if self.leaf(stage).is_some() {
            return Err(Error::DuplicateStage(stage));
        }
        let keys: Vec<&TaskKey> = keys.into_iter().collect();
        if keys.len() != self.k {
            return Err(Error::MixedTemplates(format!(
                "stage {stage} has {} tasks, tree depth is {}",
                keys.len(),
                self.k
            )));
        }
        let mut node = ROOT;
        for (d, key) in keys.into_iter().enumerate() {
            node = match self.nodes[node].children.get(key) {
                Some(&child) => child,
                None => {
                    let id = self.nodes.len();
                    self.nodes.push(TreeNode {
                        depth: d + 1,
                        key: Some(key.clone()),
                        parent: Some(node),
                        children: IndexMap::new(),
                        stages: Vec::new(),
                        alive: true,
                    });
                    self.nodes[node].children.insert(key.clone(), id);
                    self.live += 1;
                    id
                }
            };
        }
        self.nodes[node].stages.push(stage);
        self.leaf_of.insert(stage, node);
        self.stage_count += 1;
        Ok(node)
    }

    pub fn add_stages(&mut self, instances: &[StageInstance], stages: &[usize]) -> Result<()> {
        if let Some(&s) = stages.iter().find(|&&s| self.leaf(s).is_some()) {
            return Err(Error::DuplicateStage(s));
        }
        for &s in stages {
            self.insert(s, instances[s].keys())?;
        }
        Ok(())
    }

    /// Detaches stages from their leaves and prunes every node left without descendants.
    pub fn remove_stages(&mut self, stages: &[usize]) -> Result<()> {
        if let Some(&s) = stages.iter().find(|&&s| self.leaf(s).is_none()) {
            return Err(Error::AbsentStage(s));
        }
        for &s in stages {
            let leaf = self.leaf_of.remove(&s).ok_or(Error::AbsentStage(s))?;
            self.nodes[leaf].stages.retain(|&x| x != s);
            self.stage_count -= 1;
            let mut node = leaf;
            while node != ROOT && self.nodes[node].stages.is_empty() && self.nodes[node].children.is_empty() {
                let parent = self.nodes[node].parent.expect("non-root node has a parent");
                let key = self.nodes[node].key.clone().expect("non-root node has a key");
                self.nodes[parent].children.shift_remove(&key);
                self.nodes[node].alive = false;
                self.live -= 1;
                node = parent;
            }
        }
        Ok(())
    }

    /// Unique task nodes, excluding the root.
    pub fn task_cost(&self) -> usize {
        self.live
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn stage_count(&self) -> usize {
        self.stage_count
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.nodes[id].alive
    }

    /// Arena size; node ids are below this bound.
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[id].children.values().copied()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn leaf(&self, stage: usize) -> Option<NodeId> {
        self.leaf_of.get(&stage).copied()
    }

    /// Stages under `id` in depth-first insertion order.
    pub fn stages_under(&self, id: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.extend(&self.nodes[n].stages);
            stack.extend(self.nodes[n].children.values().rev());
        }
        out
    }

    /// Live nodes in the subtree rooted at `id`, `id` included.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.values().rev());
        }
        out
    }

    /// Number of stages under every node, indexed by node id.
    pub fn leaf_counts(&self) -> Vec<usize> {
        let mut counts: Vec<usize> = self.nodes.iter().map(|n| n.stages.len()).collect();
        // Children always have larger ids than their parent.
        for id in (1..self.nodes.len()).rev() {
            if self.nodes[id].alive {
                let p = self.nodes[id].parent.expect("non-root node has a parent");
                counts[p] += counts[id];
            }
        }
        counts
    }

    /// Task cost of a bucket holding `stages`: the size of the union of their root paths.
    pub fn cost_of<I: IntoIterator<Item = usize>>(&self, stages: I) -> usize {
        let mut seen = HashSet::new();
        for s in stages {
            let mut node = self.leaf(s).expect("stage is in the tree");
            while node != ROOT && seen.insert(node) {
                node = self.nodes[node].parent.expect("non-root node has a parent");
            }
        }
        seen.len()
    }

    /// Indented text rendering: one line per node with its key, leaves followed by their labels.
    pub fn dump_with<F: Fn(usize) -> String>(&self, label: F) -> String {
        let mut out = String::from("root\n");
        let mut stack: Vec<NodeId> = self.nodes[ROOT].children.values().rev().copied().collect();
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let _ = write!(out, "{}{}", "  ".repeat(node.depth), node.key.as_deref().unwrap_or(""));
            if !node.stages.is_empty() {
                let labels: Vec<String> = node.stages.iter().map(|&s| label(s)).collect();
                let _ = write!(out, " [{}]", labels.join(", "));
            }
            out.push('\n');
            stack.extend(node.children.values().rev());
        }
        out
    }

    pub fn dump(&self) -> String {
        self.dump_with(|s| s.to_string())
    }
}
