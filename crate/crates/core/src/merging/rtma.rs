//! Reuse-tree merging with a bucket size limit: buckets are cut from sibling leaves, and the
//! leftovers climb one level per iteration to meet cousins that share a shorter prefix.

use crate::error::Result;
use crate::partition::check_size;
use crate::population::{Bucket, Population};
use crate::reuse_tree::{NodeId, ROOT};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RtmaOptions {
    /// Group the stages still hanging from the root into full buckets instead of singletons.
    pub coalesce_leftovers: bool,
}

pub fn rtma(pop: &Population, max_bucket_size: usize) -> Result<Vec<Bucket>> {
    rtma_with(pop, max_bucket_size, RtmaOptions::default())
}

pub fn rtma_with(pop: &Population, max_bucket_size: usize, opts: RtmaOptions) -> Result<Vec<Bucket>> {
    check_size(max_bucket_size)?;
    let tree = pop.tree();
    let k = tree.k();
    if pop.is_empty() {
        return Ok(Vec::new());
    }

    // Nodes of each depth in depth-first insertion order.
    let mut by_depth: Vec<Vec<NodeId>> = vec![Vec::new(); k + 1];
    for n in tree.subtree(ROOT) {
        by_depth[tree.node(n).depth].push(n);
    }

    // Pending stages per node, starting at the parents of the leaves.
    let mut items: Vec<Vec<usize>> = vec![Vec::new(); tree.capacity()];
    let leaf_parent_depth = k.saturating_sub(1);
    for &n in &by_depth[leaf_parent_depth] {
        items[n] = tree.stages_under(n);
    }

    let mut out = Vec::new();
    for depth in (1..=leaf_parent_depth).rev() {
        for &n in &by_depth[depth] {
            let pending = &mut items[n];
            let full = pending.len() / max_bucket_size * max_bucket_size;
            for chunk in pending.drain(..full).collect::<Vec<_>>().chunks(max_bucket_size) {
                out.push(pop.bucket(chunk.to_vec()));
            }
        }
        for &n in &by_depth[depth] {
            let moved = std::mem::take(&mut items[n]);
            let parent = tree.parent(n).expect("non-root node has a parent");
            items[parent].extend(moved);
        }
    }

    let rest = std::mem::take(&mut items[ROOT]);
    let size = if opts.coalesce_leftovers { max_bucket_size } else { 1 };
    out.extend(rest.chunks(size).map(|c| pop.bucket(c.to_vec())));
    Ok(out)
}
