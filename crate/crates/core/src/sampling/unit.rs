//! Point generators on the unit hypercube.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Largest value strictly below one for `T`, used to keep rounded draws inside [0, 1).
fn below_one<T: Scalar>(v: f64) -> T {
    let x = T::of(v);
    if x >= T::one() {
        T::one() - T::epsilon()
    } else {
        x
    }
}

/// Radical inverse of `index` in `base`.
pub fn halton<T: Scalar>(index: u64, base: u32) -> T {
    let b = u64::from(base);
    let mut i = index;
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    below_one(r)
}

/// The first `k` primes.
pub fn primes(k: usize) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::with_capacity(k);
    let mut c = 2u32;
    while out.len() < k {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Halton points with indices `first..first+n`, one prime base per dimension.
pub fn halton_points<T: Scalar>(first: u64, n: usize, k: usize) -> Vec<Vec<T>> {
    let bases = primes(k);
    (0..n as u64)
        .map(|i| bases.iter().map(|&b| halton(first + i, b)).collect())
        .collect()
}

/// Halton points whose digits are passed through a random permutation per dimension
/// (zero stays fixed so finite expansions stay finite), which breaks up the linear patterns
/// that plain Halton shows between high-base dimensions.
pub fn scrambled_halton_points<T: Scalar, R: Rng + ?Sized>(first: u64, n: usize, k: usize, rng: &mut R) -> Vec<Vec<T>> {
    let bases = primes(k);
    let perms: Vec<Vec<u64>> = bases
        .iter()
        .map(|&b| {
            let mut digits: Vec<u64> = (1..u64::from(b)).collect();
            digits.shuffle(rng);
            std::iter::once(0).chain(digits).collect()
        })
        .collect();
    (0..n as u64)
        .map(|i| {
            bases
                .iter()
                .zip(&perms)
                .map(|(&b, perm)| {
                    let b = u64::from(b);
                    let (mut idx, mut f, mut r) = (first + i, 1.0, 0.0);
                    while idx > 0 {
                        f /= b as f64;
                        r += f * perm[(idx % b) as usize] as f64;
                        idx /= b;
                    }
                    below_one(r)
                })
                .collect()
        })
        .collect()
}

fn check_shape(n: usize, k: usize) -> Result<()> {
    if n < 1 || k < 1 {
        return Err(Error::InvalidConfig(format!("need n >= 1 and k >= 1, got n = {n}, k = {k}")));
    }
    Ok(())
}

/// `n` i.i.d. uniform points in `k` dimensions.
pub fn mc<T: Scalar, R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<Vec<T>>> {
    check_shape(n, k)?;
    Ok((0..n)
        .map(|_| (0..k).map(|_| below_one(rng.random::<f64>())).collect())
        .collect())
}

/// Latin hypercube: every column has exactly one point in each stratum `[j/n, (j+1)/n)`.
pub fn lhs<T: Scalar, R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<Vec<T>>> {
    check_shape(n, k)?;
    let mut points = vec![Vec::with_capacity(k); n];
    let mut strata: Vec<usize> = (0..n).collect();
    for _ in 0..k {
        strata.shuffle(rng);
        for (row, &s) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            row.push(below_one((s as f64 + u) / n as f64));
        }
    }
    Ok(points)
}
