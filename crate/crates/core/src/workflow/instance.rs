//! Workflow replicas: stage instances and their task signatures.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::params::ParameterSet;
use super::template::WorkflowTemplate;
use crate::error::{Error, Result};

/// Identity of a stage instance. Equal signatures mean interchangeable instances.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature(Arc<str>);

impl Signature {
    pub fn new(text: impl Into<Arc<str>>) -> Self {
        Signature(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Hashable key of a task node in a reuse tree; two tasks at the same depth match iff keys match.
pub type TaskKey = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSignature {
    pub level: usize,
    /// 1-based position of the task in the stage chain.
    pub depth: usize,
    pub call: String,
    pub args: Vec<(String, String)>,
    pub key: TaskKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageInstance {
    /// Workflow stage id.
    pub stage: String,
    /// Name of the stage template the instance was built from.
    pub template: String,
    /// Topological position of the stage in the workflow.
    pub level: usize,
    pub params: Vec<(String, String)>,
    pub upstream: Vec<Signature>,
    /// Index of the parameter set that generated this instance.
    pub origin: usize,
    pub tasks: Vec<TaskSignature>,
    pub signature: Signature,
}

fn json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

impl StageInstance {
    /// Number of tasks in the stage chain.
    pub fn k(&self) -> usize {
        self.tasks.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &TaskKey> {
        self.tasks.iter().map(|t| &t.key)
    }

    /// Instance with hand-written task keys, for fixtures and tests. `label` doubles as signature.
    pub fn synthetic(stage: &str, label: &str, keys: &[&str]) -> Self {
        StageInstance {
            stage: stage.to_string(),
            template: stage.to_string(),
            level: 0,
            params: Vec::new(),
            upstream: Vec::new(),
            origin: 0,
            tasks: keys
                .iter()
                .enumerate()
                .map(|(i, key)| TaskSignature {
                    level: 0,
                    depth: i + 1,
                    call: String::new(),
                    args: Vec::new(),
                    key: Arc::from(*key),
                })
                .collect(),
            signature: Signature::new(label),
        }
    }
}

/// Instantiates one replica of `workflow` bound to `set`, in topological order.
pub fn instantiate(workflow: &WorkflowTemplate, set: &ParameterSet, origin: usize) -> Result<Vec<StageInstance>> {
    let mut out: Vec<StageInstance> = Vec::with_capacity(workflow.stages.len());
    for (level, stage) in workflow.stages.iter().enumerate() {
        let lookup = |name: &str| -> Result<(String, String)> {
            set.get(name)
                .map(|v| (name.to_string(), v.to_string()))
                .ok_or_else(|| Error::MissingParameter(name.to_string()))
        };
        let params = stage
            .template
            .consumed_params()
            .into_iter()
            .map(lookup)
            .collect::<Result<Vec<_>>>()?;
        let upstream: Vec<Signature> = workflow
            .predecessors(level)
            .iter()
            .map(|&p| out[p].signature.clone())
            .collect();
        let upstream_json = format!(
            "[{}]",
            upstream.iter().map(Signature::as_str).collect::<Vec<_>>().join(",")
        );
        let signature = Signature::new(format!("[{},{},{}]", json(&stage.id), json(&params), upstream_json));

        let mut tasks = Vec::with_capacity(stage.template.tasks.len());
        for (i, task) in stage.template.tasks.iter().enumerate() {
            let args = task
                .args
                .iter()
                .map(|a| lookup(a))
                .collect::<Result<Vec<_>>>()?;
            let body = format!("{},{},{}", json(&task.lib), json(&task.call), json(&args));
            // The first task also depends on the data flowing in from upstream stages.
            let key = if i == 0 {
                format!("[{upstream_json},{body}]")
            } else {
                format!("[{body}]")
            };
            tasks.push(TaskSignature {
                level,
                depth: i + 1,
                call: task.call.clone(),
                args,
                key: Arc::from(key),
            });
        }
        out.push(StageInstance {
            stage: stage.id.clone(),
            template: stage.template.name.clone(),
            level,
            params,
            upstream,
            origin,
            tasks,
            signature,
        });
    }
    Ok(out)
}
