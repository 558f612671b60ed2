//! Sensitivity-analysis designs: MOAT trajectories, radial VBD batches and the point
//! generators behind them.

mod moat;
mod unit;
mod vbd;

use serde::{Deserialize, Serialize};

pub use moat::{elementary_effect, moat_sample, ElementaryEffect, MoatConfig, MoatDesign, MoatStep};
pub use unit::{halton, halton_points, lhs, mc, primes, scrambled_halton_points};
pub use vbd::{vbd_sample, Generator, VbdConfig, VbdDesign};

use crate::error::{Error, Result};
use crate::workflow::{canonical_decimal, ParameterSet, ParameterSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Moat,
    Vbd,
}

/// A sampled batch as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Batch {
    pub method: Method,
    pub config: serde_json::Value,
    #[serde(default)]
    pub metadata: serde_json::Value,
    pub sets: Vec<ParameterSet>,
}

impl Batch {
    pub fn moat(space: &ParameterSpace, cfg: &MoatConfig) -> Result<Self> {
        let design = moat_sample(space, cfg)?;
        let delta: f64 = cfg.delta();
        let per_param: serde_json::Map<String, serde_json::Value> = space
            .varying()
            .map(|p| (p.name.clone(), canonical_decimal(delta * p.span()).into()))
            .collect();
        Ok(Batch {
            method: Method::Moat,
            config: serde_json::json!({
                "k": design.k,
                "levels": cfg.levels,
                "trajectories": cfg.trajectories,
                "seed": cfg.seed,
            }),
            metadata: serde_json::json!({
                "generator": "ChaCha8",
                "delta_unit": canonical_decimal(delta),
                "delta": per_param,
                "note": "delta applied in unit-hypercube coordinates, then rescaled to each range",
            }),
            sets: design.sets,
        })
    }

    pub fn vbd(space: &ParameterSpace, cfg: &VbdConfig) -> Result<Self> {
        let design = vbd_sample(space, cfg)?;
        Ok(Batch {
            method: Method::Vbd,
            config: serde_json::json!({
                "k": design.k,
                "sample_size": cfg.sample_size,
                "generator": cfg.generator,
                "seed": cfg.seed,
            }),
            metadata: serde_json::json!({
                "generator": cfg.generator.algorithm(),
                "layout": "A, B, then one block per parameter with that coordinate taken from A",
            }),
            sets: design.sets,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
    }
}
