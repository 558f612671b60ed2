//! The bundled nuclear-segmentation workflow: normalization, a seven-task segmentation stage
//! and a comparison stage, with its 15-parameter space and a task cost profile.
//!
//! Which parameters feed which segmentation task is an illustrative choice; real pipelines
//! ship their own descriptors.

use crate::error::{Error, Result};
use crate::sim::CostModel;
use crate::workflow::{ParameterSpace, WorkflowTemplate};
use crate::Scalar;

pub const WORKFLOW: &str = include_str!("../fixtures/workflow.json");
pub const NORMALIZATION: &str = include_str!("../fixtures/normalization.json");
pub const SEGMENTATION: &str = include_str!("../fixtures/segmentation.json");
pub const COMPARISON: &str = include_str!("../fixtures/comparison.json");
/// All 15 parameters varying over their full grids.
pub const SPACE: &str = include_str!("../fixtures/space.json");
/// The eight parameters kept for variance-based studies vary; the rest are pinned.
pub const SPACE_VBD: &str = include_str!("../fixtures/space_vbd.json");
pub const COSTS: &str = include_str!("../fixtures/costs.json");

/// Descriptor files by the name the workflow document uses for them.
pub const FILES: [(&str, &str); 7] = [
    ("workflow.json", WORKFLOW),
    ("normalization.json", NORMALIZATION),
    ("segmentation.json", SEGMENTATION),
    ("comparison.json", COMPARISON),
    ("space.json", SPACE),
    ("space_vbd.json", SPACE_VBD),
    ("costs.json", COSTS),
];

pub fn workflow() -> Result<WorkflowTemplate> {
    WorkflowTemplate::parse_with(WORKFLOW, |name| {
        FILES
            .iter()
            .find(|(f, _)| *f == name)
            .map(|(_, text)| text.to_string())
            .ok_or_else(|| format!("no bundled descriptor `{name}`"))
    })
}

pub fn space() -> Result<ParameterSpace> {
    ParameterSpace::parse(SPACE)
}

pub fn vbd_space() -> Result<ParameterSpace> {
    ParameterSpace::parse(SPACE_VBD)
}

pub fn costs<T: Scalar>() -> Result<CostModel<T>> {
    CostModel::parse(COSTS)
}

/// Writes the bundled files into `dir`.
pub fn export(dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, text) in FILES {
        std::fs::write(dir.join(name), text).map_err(Error::from)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_files_load() {
        let w = workflow().unwrap();
        let ids: Vec<&str> = w.stages.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["normalization", "segmentation", "comparison"]);
        assert_eq!(w.stages[1].template.depth(), 7);
        assert_eq!(w.consumed_params().len(), 15);
        let s = space().unwrap();
        assert_eq!(s.varying().count(), 15);
        assert!((s.cardinality() - 2.14e13).abs() / 2.14e13 < 0.01);
        assert_eq!(vbd_space().unwrap().varying().count(), 8);
        let c = costs::<f64>().unwrap();
        assert!((c.stage_duration("segmentation", 7) - 9.51).abs() < 1e-9);
    }
}
