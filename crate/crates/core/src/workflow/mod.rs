//! Workflow model: parameter spaces, stage and workflow templates, replica instantiation.

mod instance;
mod params;
mod template;

pub use instance::{instantiate, Signature, StageInstance, TaskKey, TaskSignature};
pub use params::{canonical_decimal, ParamKind, ParameterSet, ParameterSpace, ParameterSpec};
pub use template::{StageTemplate, TaskTemplate, WorkflowStage, WorkflowTemplate};
