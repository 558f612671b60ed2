//! Naive sequential bucketing and the Smart Cut Algorithm.

use super::mincut::min_cut_2;
use crate::error::{Error, Result};
use crate::population::{Bucket, Population};

pub(crate) fn check_size(max_bucket_size: usize) -> Result<()> {
    if max_bucket_size < 1 {
        return Err(Error::InvalidConfig("MaxBucketSize must be >= 1".into()));
    }
    Ok(())
}

/// Consecutive runs of `max_bucket_size` instances in input order.
pub fn naive_buckets(pop: &Population, max_bucket_size: usize) -> Result<Vec<Bucket>> {
    check_size(max_bucket_size)?;
    let all: Vec<usize> = (0..pop.len()).collect();
    Ok(all.chunks(max_bucket_size).map(|c| pop.bucket(c.to_vec())).collect())
}

fn lcp(pop: &Population, a: usize, b: usize) -> u64 {
    pop.instance(a)
        .keys()
        .zip(pop.instance(b).keys())
        .take_while(|(x, y)| x == y)
        .count() as u64
}

/// Reuse-degree matrix over all instance pairs.
pub fn reuse_graph(pop: &Population) -> Vec<Vec<u64>> {
    let n = pop.len();
    let mut w = vec![vec![0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let d = lcp(pop, a, b);
            w[a][b] = d;
            w[b][a] = d;
        }
    }
    w
}

/// Repeatedly 2-cuts the reuse graph, following the larger side until it fits in a bucket,
/// then emits it and starts over on whatever is left.
pub fn sca_buckets(pop: &Population, max_bucket_size: usize) -> Result<Vec<Bucket>> {
    check_size(max_bucket_size)?;
    let full = reuse_graph(pop);
    let mut remaining: Vec<usize> = (0..pop.len()).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        if remaining.len() <= max_bucket_size {
            out.push(pop.bucket(std::mem::take(&mut remaining)));
            break;
        }
        let mut current = remaining.clone();
        while current.len() > max_bucket_size {
            let sub: Vec<Vec<u64>> =
                current.iter().map(|&a| current.iter().map(|&b| full[a][b]).collect()).collect();
            let cut = min_cut_2(&sub)?;
            // side1 is the smaller side, or the one with the lowest index when sizes tie.
            let larger = if cut.side2.len() > cut.side1.len() { cut.side2 } else { cut.side1 };
            current = larger.into_iter().map(|i| current[i]).collect();
        }
        let before = remaining.len();
        remaining.retain(|m| !current.contains(m));
        assert!(remaining.len() < before, "each emission removes at least one instance");
        out.push(pop.bucket(current));
    }
    Ok(out)
}
