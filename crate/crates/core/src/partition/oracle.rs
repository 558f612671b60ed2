//! Exhaustive partition search, used to check the heuristics on small populations.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::population::Population;

pub const ORACLE_LIMIT: usize = 12;

/// Unique task count of `members`, computed from the set of distinct key prefixes.
pub fn path_union_cost(pop: &Population, members: &[usize]) -> usize {
    let mut prefixes: HashSet<Vec<&str>> = HashSet::new();
    for &m in members {
        let keys: Vec<&str> = pop.instance(m).keys().map(|k| &**k).collect();
        for d in 1..=keys.len() {
            prefixes.insert(keys[..d].to_vec());
        }
    }
    prefixes.len()
}

/// Calls `visit` with every set partition of `0..n` into at most `max_blocks` blocks
/// (restricted growth strings).
fn for_each_partition<F: FnMut(&[Vec<usize>])>(n: usize, max_blocks: usize, mut visit: F) {
    fn rec<F: FnMut(&[Vec<usize>])>(i: usize, n: usize, max: usize, blocks: &mut Vec<Vec<usize>>, visit: &mut F) {
        if i == n {
            visit(blocks);
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(i);
            rec(i + 1, n, max, blocks, visit);
            blocks[b].pop();
        }
        if blocks.len() < max {
            blocks.push(vec![i]);
            rec(i + 1, n, max, blocks, visit);
            blocks.pop();
        }
    }
    let mut blocks = Vec::new();
    rec(0, n, max_blocks, &mut blocks, &mut visit);
}

fn guard(n: usize) -> Result<()> {
    if n > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge { n, limit: ORACLE_LIMIT });
    }
    Ok(())
}

/// Partition minimising total unique tasks with every block of at most `max_bucket_size`.
pub fn oracle_min_total_cost(pop: &Population, max_bucket_size: usize) -> Result<(Vec<Vec<usize>>, usize)> {
    guard(pop.len())?;
    let mut best: Option<(Vec<Vec<usize>>, usize)> = None;
    for_each_partition(pop.len(), pop.len(), |blocks| {
        if blocks.iter().any(|b| b.len() > max_bucket_size) {
            return;
        }
        let total = blocks.iter().map(|b| path_union_cost(pop, b)).sum();
        if best.as_ref().is_none_or(|(_, c)| total < *c) {
            best = Some((blocks.to_vec(), total));
        }
    });
    best.ok_or_else(|| Error::InvalidConfig("no admissible partition".into()))
}

/// Partition into at most `max_buckets` blocks minimising the largest block cost.
pub fn oracle_min_makespan(pop: &Population, max_buckets: usize) -> Result<(Vec<Vec<usize>>, usize)> {
    guard(pop.len())?;
    let mut best: Option<(Vec<Vec<usize>>, usize)> = None;
    for_each_partition(pop.len(), max_buckets, |blocks| {
        let worst = blocks.iter().map(|b| path_union_cost(pop, b)).max().unwrap_or(0);
        if best.as_ref().is_none_or(|(_, c)| worst < *c) {
            best = Some((blocks.to_vec(), worst));
        }
    });
    best.ok_or_else(|| Error::InvalidConfig("no admissible partition".into()))
}
