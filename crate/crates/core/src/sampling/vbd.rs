//! Radial (Saltelli) designs for variance-based decomposition.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::unit::{lhs, mc, scrambled_halton_points};
use crate::error::{Error, Result};
use crate::workflow::{ParameterSet, ParameterSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Mc,
    Lhs,
    Qmc,
}

impl Generator {
    /// Name of the algorithm that produces the base points, recorded in batch metadata.
    pub fn algorithm(self) -> &'static str {
        match self {
            Generator::Mc => "ChaCha8 uniform",
            Generator::Lhs => "ChaCha8 latin hypercube",
            Generator::Qmc => "Halton over 2k dimensions with seeded digit permutations, indices from 1",
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(Generator::Mc),
            "lhs" => Ok(Generator::Lhs),
            "qmc" => Ok(Generator::Qmc),
            other => Err(Error::InvalidConfig(format!("unknown generator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VbdConfig {
    /// Base sample size `n`.
    pub sample_size: usize,
    pub generator: Generator,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct VbdDesign {
    pub k: usize,
    /// Unit coordinates: `A` rows, then `B` rows, then `k` cross blocks.
    pub points: Vec<Vec<f64>>,
    pub sets: Vec<ParameterSet>,
}

/// Produces `n (k + 2)` sets over the varying parameters of `space`.
pub fn vbd_sample(space: &ParameterSpace, cfg: &VbdConfig) -> Result<VbdDesign> {
    let k = space.varying().count();
    let n = cfg.sample_size;
    if k < 1 {
        return Err(Error::InvalidConfig("space has no varying parameter".into()));
    }
    if n < 1 {
        return Err(Error::InvalidConfig("sample size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (a, b): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match cfg.generator {
        Generator::Mc => (mc(n, k, &mut rng)?, mc(n, k, &mut rng)?),
        Generator::Lhs => (lhs(n, k, &mut rng)?, lhs(n, k, &mut rng)?),
        Generator::Qmc => {
            // One 2k-dimensional sequence: A takes the first k coordinates, B the rest.
            let pts: Vec<Vec<f64>> = scrambled_halton_points(1, n, 2 * k, &mut rng);
            pts.into_iter()
                .map(|mut a| {
                    let b = a.split_off(k);
                    (a, b)
                })
                .unzip()
        }
    };
    let mut points = Vec::with_capacity(n * (k + 2));
    points.extend(a.iter().cloned());
    points.extend(b.iter().cloned());
    for j in 0..k {
        for (ra, rb) in a.iter().zip(&b) {
            let mut row = rb.clone();
            row[j] = ra[j];
            points.push(row);
        }
    }
    let sets = points.iter().map(|pt| space.set_from_unit(pt)).collect();
    Ok(VbdDesign { k, points, sets })
}
