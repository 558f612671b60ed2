//! Global minimum 2-cut of a dense weighted graph (Stoer–Wagner).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub value: u64,
    /// The smaller side; on equal sizes, the side holding vertex 0.
    pub side1: Vec<usize>,
    pub side2: Vec<usize>,
}

/// Minimum cut of the symmetric weight matrix `w`. Ties between cuts of equal value keep
/// the first one found; within a phase the most tightly connected vertex wins, lowest index first.
pub fn min_cut_2(w: &[Vec<u64>]) -> Result<Cut> {
    let n = w.len();
    if n < 2 {
        return Err(Error::TooFewVertices(n));
    }
    let mut g: Vec<Vec<u64>> = w.to_vec();
    let mut groups: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut best: Option<(u64, Vec<usize>)> = None;

    let mut in_a = vec![false; n];
    let mut key = vec![0u64; n];
    while active.len() > 1 {
        for &v in &active {
            in_a[v] = false;
            key[v] = 0;
        }
        let mut heap = BinaryHeap::with_capacity(active.len() * 2);
        let start = active[0];
        in_a[start] = true;
        for &v in &active[1..] {
            key[v] = g[start][v];
            heap.push((key[v], Reverse(v)));
        }
        let (mut prev, mut last) = (start, start);
        for _ in 1..active.len() {
            let v = loop {
                let (k, Reverse(v)) = heap.pop().expect("an unadded vertex remains");
                if !in_a[v] && k == key[v] {
                    break v;
                }
            };
            in_a[v] = true;
            prev = last;
            last = v;
            for &u in &active {
                if !in_a[u] && g[v][u] > 0 {
                    key[u] += g[v][u];
                    heap.push((key[u], Reverse(u)));
                }
            }
        }
        let phase_cut = key[last];
        if best.as_ref().is_none_or(|(b, _)| phase_cut < *b) {
            best = Some((phase_cut, groups[last].clone()));
        }
        let moved = std::mem::take(&mut groups[last]);
        groups[prev].extend(moved);
        for &u in &active {
            let add = g[last][u];
            g[prev][u] += add;
            g[u][prev] = g[prev][u];
        }
        g[prev][prev] = 0;
        active.retain(|&v| v != last);
    }

    let (value, mut side) = best.expect("at least one phase ran");
    side.sort_unstable();
    let mut in_side = vec![false; n];
    for &v in &side {
        in_side[v] = true;
    }
    let other: Vec<usize> = (0..n).filter(|&v| !in_side[v]).collect();
    let side_first = side.len() < other.len() || (side.len() == other.len() && in_side[0]);
    let (side1, side2) = if side_first { (side, other) } else { (other, side) };
    Ok(Cut { value, side1, side2 })
}

/// Exhaustive minimum cut value over all `2^(n-1) - 1` bipartitions; for tests.
pub fn min_cut_value_exhaustive(w: &[Vec<u64>]) -> u64 {
    let n = w.len();
    assert!((2..=20).contains(&n));
    let mut best = u64::MAX;
    // Vertex n-1 always sits on the unmarked side.
    for mask in 1u32..(1 << (n - 1)) {
        let mut value = 0;
        for a in 0..n {
            for b in 0..n {
                if mask >> a & 1 == 1 && (b == n - 1 || mask >> b & 1 == 0) {
                    value += w[a][b];
                }
            }
        }
        best = best.min(value);
    }
    best
}
