//! Parameter spaces, sampled parameter sets and canonical value encoding.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest round-trip decimal text of `v`, with negative zero folded to `0`.
pub fn canonical_decimal(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    format!("{v}")
}

fn fraction_digits(v: f64) -> usize {
    let text = canonical_decimal(v);
    match text.split_once('.') {
        Some((_, frac)) => frac.len().min(15),
        None => 0,
    }
}

/// Domain of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    Grid { min: f64, max: f64, step: f64 },
    Categorical { values: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawSpec", into = "RawSpec")]
pub struct ParameterSpec {
    pub name: String,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<String>>,
}

impl From<RawSpec> for ParameterSpec {
    fn from(raw: RawSpec) -> Self {
        // Shape errors surface from `ParameterSpace::validate`; keep the raw pieces around.
        let kind = match raw.kind.as_str() {
            "categorical" => ParamKind::Categorical {
                values: raw.values.unwrap_or_default(),
            },
            "grid" => ParamKind::Grid {
                min: raw.min.unwrap_or(f64::NAN),
                max: raw.max.unwrap_or(f64::NAN),
                step: raw.step.unwrap_or(f64::NAN),
            },
            other => ParamKind::Categorical {
                values: vec![format!("\u{0}unknown kind {other}")],
            },
        };
        ParameterSpec {
            name: raw.name,
            kind,
        }
    }
}

impl From<ParameterSpec> for RawSpec {
    fn from(spec: ParameterSpec) -> Self {
        match spec.kind {
            ParamKind::Grid { min, max, step } => RawSpec {
                name: spec.name,
                kind: "grid".into(),
                min: Some(min),
                max: Some(max),
                step: Some(step),
                values: None,
            },
            ParamKind::Categorical { values } => RawSpec {
                name: spec.name,
                kind: "categorical".into(),
                min: None,
                max: None,
                step: None,
                values: Some(values),
            },
        }
    }
}

impl ParameterSpec {
    pub fn grid(name: &str, min: f64, max: f64, step: f64) -> Self {
        ParameterSpec {
            name: name.to_string(),
            kind: ParamKind::Grid { min, max, step },
        }
    }

    pub fn categorical(name: &str, values: &[&str]) -> Self {
        ParameterSpec {
            name: name.to_string(),
            kind: ParamKind::Categorical {
                values: values.iter().map(|v| v.to_string()).collect(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            ParamKind::Grid { min, max, step } => {
                if !(min.is_finite() && max.is_finite() && step.is_finite()) {
                    return Err(Error::InvalidSpace(format!(
                        "grid parameter `{}` needs finite min, max and step",
                        self.name
                    )));
                }
                if *step <= 0.0 {
                    return Err(Error::InvalidSpace(format!("`{}`: step must be > 0", self.name)));
                }
                if min > max {
                    return Err(Error::InvalidSpace(format!("`{}`: min exceeds max", self.name)));
                }
            }
            ParamKind::Categorical { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidSpace(format!("`{}`: no categorical values", self.name)));
                }
                if let Some(bad) = values.iter().find(|v| v.starts_with('\u{0}')) {
                    return Err(Error::InvalidSpace(format!("`{}`: {}", self.name, &bad[1..])));
                }
                let mut seen = std::collections::HashSet::new();
                for v in values {
                    if !seen.insert(v) {
                        return Err(Error::InvalidSpace(format!(
                            "`{}`: duplicate categorical value `{v}`",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of distinct admissible values.
    pub fn level_count(&self) -> usize {
        match &self.kind {
            ParamKind::Grid { min, max, step } => ((max - min) / step + 1e-9).floor() as usize + 1,
            ParamKind::Categorical { values } => values.len(),
        }
    }

    /// Canonical text of the `index`-th admissible value (clamped to the last one).
    pub fn value_at(&self, index: usize) -> String {
        let index = index.min(self.level_count() - 1);
        match &self.kind {
            ParamKind::Grid { min, step, .. } => {
                let digits = fraction_digits(*min).max(fraction_digits(*step));
                let scale = 10f64.powi(digits as i32);
                let raw = min + index as f64 * step;
                canonical_decimal((raw * scale).round() / scale)
            }
            ParamKind::Categorical { values } => values[index].clone(),
        }
    }

    /// Value selected by a unit-interval coordinate: nearest grid point (ties toward min) for
    /// grids, `floor(u * |values|)` for categoricals.
    pub fn value_from_unit(&self, u: f64) -> String {
        let u = u.clamp(0.0, 1.0);
        let levels = self.level_count();
        let index = match &self.kind {
            ParamKind::Grid { .. } => {
                let pos = u * (levels - 1) as f64;
                let lower = pos.floor();
                if pos - lower > 0.5 {
                    lower as usize + 1
                } else {
                    lower as usize
                }
            }
            ParamKind::Categorical { .. } => (u * levels as f64).floor() as usize,
        };
        self.value_at(index)
    }

    /// Whether `value` is the canonical text of an admissible value.
    pub fn contains(&self, value: &str) -> bool {
        match &self.kind {
            ParamKind::Categorical { values } => values.iter().any(|v| v == value),
            ParamKind::Grid { min, step, .. } => {
                let Ok(v) = value.parse::<f64>() else {
                    return false;
                };
                let index = ((v - min) / step).round();
                if index < 0.0 || index as usize >= self.level_count() {
                    return false;
                }
                self.value_at(index as usize) == value
            }
        }
    }

    /// Width of the range in the parameter's own units (level count for categoricals).
    pub fn span(&self) -> f64 {
        match &self.kind {
            ParamKind::Grid { min, max, .. } => max - min,
            ParamKind::Categorical { values } => values.len() as f64,
        }
    }

    /// A parameter with a single admissible value is held fixed by the samplers.
    pub fn is_fixed(&self) -> bool {
        self.level_count() == 1
    }
}

/// The search grid of a sensitivity-analysis study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpace {
    pub params: Vec<ParameterSpec>,
}

impl ParameterSpace {
    pub fn new(params: Vec<ParameterSpec>) -> Result<Self> {
        let space = ParameterSpace { params };
        space.validate()?;
        Ok(space)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let space: ParameterSpace =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = std::collections::HashSet::new();
        for p in &self.params {
            p.validate()?;
            if !names.insert(p.name.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate parameter `{}`", p.name)));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ParameterSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Parameters that take more than one value.
    pub fn varying(&self) -> impl Iterator<Item = &ParameterSpec> {
        self.params.iter().filter(|p| !p.is_fixed())
    }

    /// Number of points in the full grid, as a float since it overflows quickly.
    pub fn cardinality(&self) -> f64 {
        self.params.iter().map(|p| p.level_count() as f64).product()
    }

    /// Builds a set from per-parameter unit coordinates for the varying parameters, in
    /// `varying()` order; fixed parameters take their only value.
    pub fn set_from_unit(&self, coords: &[f64]) -> ParameterSet {
        let mut set = ParameterSet::default();
        let mut it = coords.iter();
        for p in &self.params {
            let value = if p.is_fixed() {
                p.value_at(0)
            } else {
                p.value_from_unit(*it.next().expect("one coordinate per varying parameter"))
            };
            set.insert(&p.name, value);
        }
        set
    }

    /// Checks that every value of `set` is an admissible canonical value of a known parameter.
    pub fn check(&self, set: &ParameterSet) -> Result<()> {
        for (name, value) in set.iter() {
            let spec = self
                .get(name)
                .ok_or_else(|| Error::InvalidValue { name: name.clone(), value: value.clone() })?;
            if !spec.contains(value) {
                return Err(Error::InvalidValue { name: name.clone(), value: value.clone() });
            }
        }
        Ok(())
    }
}

/// One sampled point: parameter name to canonical value text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterSet {
    values: IndexMap<String, String>,
}

impl ParameterSet {
    pub fn insert(&mut self, name: &str, value: impl Into<String>) {
        self.values.insert(name.to_string(), value.into());
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Canonical byte encoding; two sets are equal iff their encodings are equal.
    pub fn encode(&self) -> String {
        let mut pairs: Vec<_> = self.values.iter().collect();
        pairs.sort();
        serde_json::to_string(&pairs).expect("string pairs serialize")
    }
}

impl<const N: usize> From<[(&str, &str); N]> for ParameterSet {
    fn from(pairs: [(&str, &str); N]) -> Self {
        let mut set = ParameterSet::default();
        for (k, v) in pairs {
            set.insert(k, v);
        }
        set
    }
}
