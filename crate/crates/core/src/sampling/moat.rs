//! Morris one-at-a-time trajectories and elementary effects.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::workflow::{ParameterSet, ParameterSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoatConfig {
    /// Grid levels per parameter, `p`.
    pub levels: usize,
    /// Trajectory count, `r`.
    pub trajectories: usize,
    pub seed: u64,
}

impl MoatConfig {
    /// Step in unit-hypercube coordinates.
    pub fn delta<T: Scalar>(&self) -> T {
        let p = T::of(self.levels as f64);
        p / (T::of(2.0) * (p - T::one()))
    }
}

/// One row of a trajectory after the base point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoatStep {
    /// Index into the space's varying parameters.
    pub param: usize,
    /// `+1` when the coordinate moved up by delta, `-1` when it moved down.
    pub direction: i8,
}

#[derive(Debug, Clone)]
pub struct MoatDesign {
    pub k: usize,
    pub config: MoatConfig,
    /// Unit coordinates of every row, trajectory-major.
    pub points: Vec<Vec<f64>>,
    /// `steps[t][j]` describes row `j + 1` of trajectory `t`.
    pub steps: Vec<Vec<MoatStep>>,
    pub sets: Vec<ParameterSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ElementaryEffect<T: Scalar> {
    pub parameter: String,
    pub value: T,
    pub trajectory: usize,
}

pub fn elementary_effect<T: Scalar>(y_before: T, y_after: T, delta: T) -> Result<T> {
    if delta == T::zero() {
        return Err(Error::ZeroDelta);
    }
    Ok((y_after - y_before) / delta)
}

/// Builds `r` trajectories of `k + 1` points over the varying parameters of `space`.
pub fn moat_sample(space: &ParameterSpace, cfg: &MoatConfig) -> Result<MoatDesign> {
    let p = cfg.levels;
    if p < 2 || p % 2 == 1 {
        return Err(Error::InvalidConfig(format!("levels must be even and >= 2, got {p}")));
    }
    if cfg.trajectories < 1 {
        return Err(Error::InvalidConfig("need at least one trajectory".into()));
    }
    let varying: Vec<_> = space.varying().collect();
    let k = varying.len();
    if k == 0 {
        return Err(Error::InvalidConfig("space has no varying parameter".into()));
    }
    let half = p / 2;
    let unit = |level: usize| level as f64 / (p - 1) as f64;
    for spec in &varying {
        let too_coarse = match spec.kind {
            crate::workflow::ParamKind::Grid { .. } => spec.level_count() < p,
            // Categoricals must still change under every half-range jump.
            crate::workflow::ParamKind::Categorical { .. } => {
                (0..half).any(|l| spec.value_from_unit(unit(l)) == spec.value_from_unit(unit(l + half)))
            }
        };
        if too_coarse {
            return Err(Error::InvalidConfig(format!(
                "parameter `{}` has {} values, too coarse for {p} levels",
                spec.name,
                spec.level_count()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::with_capacity(cfg.trajectories * (k + 1));
    let mut steps = Vec::with_capacity(cfg.trajectories);
    let mut order: Vec<usize> = (0..k).collect();
    for _ in 0..cfg.trajectories {
        let mut levels: Vec<usize> = (0..k).map(|_| rng.random_range(0..p)).collect();
        order.shuffle(&mut rng);
        points.push(levels.iter().map(|&l| unit(l)).collect::<Vec<_>>());
        let mut traj = Vec::with_capacity(k);
        for &i in &order {
            let direction = if levels[i] < half {
                levels[i] += half;
                1
            } else {
                levels[i] -= half;
                -1
            };
            traj.push(MoatStep { param: i, direction });
            points.push(levels.iter().map(|&l| unit(l)).collect());
        }
        steps.push(traj);
    }
    let sets = points.iter().map(|pt| space.set_from_unit(pt)).collect();
    Ok(MoatDesign {
        k,
        config: *cfg,
        points,
        steps,
        sets,
    })
}

impl MoatDesign {
    /// Elementary effects from model outputs `y`, one per batch row, in unit-step units.
    pub fn effects<T: Scalar>(&self, space: &ParameterSpace, y: &[T]) -> Result<Vec<ElementaryEffect<T>>> {
        if y.len() != self.points.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} outputs, got {}",
                self.points.len(),
                y.len()
            )));
        }
        let names: Vec<&str> = space.varying().map(|p| p.name.as_str()).collect();
        let delta = self.config.delta::<T>();
        let mut out = Vec::with_capacity(self.steps.len() * self.k);
        for (t, traj) in self.steps.iter().enumerate() {
            let base = t * (self.k + 1);
            for (j, step) in traj.iter().enumerate() {
                let (before, after) = (y[base + j], y[base + j + 1]);
                let value = if step.direction > 0 {
                    elementary_effect(before, after, delta)?
                } else {
                    elementary_effect(after, before, delta)?
                };
                out.push(ElementaryEffect {
                    parameter: names[step.param].to_string(),
                    value,
                    trajectory: t,
                });
            }
        }
        Ok(out)
    }
}
