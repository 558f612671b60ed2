//! Stage descriptors and workflow documents.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTemplate {
    pub id: String,
    pub call: String,
    pub lib: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub intertask_in: Vec<String>,
    #[serde(default)]
    pub intertask_out: Vec<String>,
}

/// A stage: a linear chain of tasks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageTemplate {
    pub name: String,
    #[serde(default)]
    pub inputs_rt: Vec<String>,
    pub tasks: Vec<TaskTemplate>,
}

impl StageTemplate {
    pub fn parse(text: &str) -> Result<Self> {
        let stage: StageTemplate =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        stage.validate()?;
        Ok(stage)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::EmptyStage(self.name.clone()));
        }
        let mut ids = HashSet::new();
        let mut produced: HashSet<&str> = HashSet::new();
        for task in &self.tasks {
            if !ids.insert(task.id.as_str()) {
                return Err(Error::DuplicateTask {
                    stage: self.name.clone(),
                    task: task.id.clone(),
                });
            }
            if let Some(label) = task.intertask_in.iter().find(|l| !produced.contains(l.as_str())) {
                return Err(Error::DanglingIntertask {
                    stage: self.name.clone(),
                    task: task.id.clone(),
                    label: label.clone(),
                });
            }
            produced.extend(task.intertask_out.iter().map(String::as_str));
        }
        Ok(())
    }

    /// Number of tasks, i.e. the depth of this stage's reuse tree.
    pub fn depth(&self) -> usize {
        self.tasks.len()
    }

    /// Union of the tasks' args in first-use order.
    pub fn consumed_params(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.tasks
            .iter()
            .flat_map(|t| t.args.iter())
            .filter(|a| seen.insert(a.as_str()))
            .map(String::as_str)
            .collect()
    }

    /// Labels the stage hands to downstream stages.
    pub fn products(&self) -> impl Iterator<Item = &str> {
        self.tasks.iter().flat_map(|t| t.intertask_out.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStageRef {
    id: String,
    descriptor: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkflow {
    name: String,
    stages: Vec<RawStageRef>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default)]
    inputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowStage {
    pub id: String,
    pub template: StageTemplate,
}

/// A validated DAG of stages. `stages` is kept in topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowTemplate {
    pub name: String,
    pub stages: Vec<WorkflowStage>,
    pub edges: Vec<(String, String)>,
    pub inputs: Vec<String>,
    preds: Vec<Vec<usize>>,
}

impl WorkflowTemplate {
    /// Builds and validates a workflow; stages are reordered topologically, keeping declaration
    /// order among independent stages.
    pub fn new(
        name: &str,
        stages: Vec<WorkflowStage>,
        edges: Vec<(String, String)>,
        inputs: Vec<String>,
    ) -> Result<Self> {
        let index: HashMap<&str, usize> =
            stages.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        if index.len() != stages.len() {
            let mut seen = HashSet::new();
            let dup = stages.iter().find(|s| !seen.insert(&s.id)).expect("a duplicate exists");
            return Err(Error::Malformed(format!("duplicate stage id `{}`", dup.id)));
        }
        let n = stages.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for (a, b) in &edges {
            let ia = *index.get(a.as_str()).ok_or_else(|| Error::UnknownStage(a.clone()))?;
            let ib = *index.get(b.as_str()).ok_or_else(|| Error::UnknownStage(b.clone()))?;
            if !preds[ib].contains(&ia) {
                preds[ib].push(ia);
                succs[ia].push(ib);
            }
        }

        // Kahn's algorithm, always releasing the earliest-declared ready stage.
        let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &j in &succs[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).expect("a stage is left");
            return Err(Error::Cycle(stages[stuck].id.clone()));
        }

        let mut position = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            position[i] = pos;
        }
        let mut sorted_preds = vec![Vec::new(); n];
        for (i, ps) in preds.iter().enumerate() {
            let mut ps: Vec<usize> = ps.iter().map(|&p| position[p]).collect();
            ps.sort_unstable();
            sorted_preds[position[i]] = ps;
        }
        let mut slots: Vec<Option<WorkflowStage>> = stages.into_iter().map(Some).collect();
        let stages: Vec<WorkflowStage> =
            order.iter().map(|&i| slots[i].take().expect("each stage moved once")).collect();

        let workflow = WorkflowTemplate {
            name: name.to_string(),
            stages,
            edges,
            inputs,
            preds: sorted_preds,
        };
        workflow.check_inputs()?;
        Ok(workflow)
    }

    fn check_inputs(&self) -> Result<()> {
        let external: HashSet<&str> = self.inputs.iter().map(String::as_str).collect();
        for (i, stage) in self.stages.iter().enumerate() {
            if self.preds[i].is_empty() {
                continue;
            }
            let mut available: HashSet<&str> = external.clone();
            for a in self.ancestors(i) {
                available.extend(self.stages[a].template.products());
            }
            if let Some(label) = stage.template.inputs_rt.iter().find(|l| !available.contains(l.as_str())) {
                return Err(Error::UnproducedInput {
                    stage: stage.id.clone(),
                    label: label.clone(),
                });
            }
        }
        Ok(())
    }

    fn ancestors(&self, i: usize) -> Vec<usize> {
        let mut seen = vec![false; self.stages.len()];
        let mut stack = self.preds[i].clone();
        let mut out = Vec::new();
        while let Some(p) = stack.pop() {
            if !seen[p] {
                seen[p] = true;
                out.push(p);
                stack.extend(&self.preds[p]);
            }
        }
        out
    }

    /// Parses a workflow document, loading each stage descriptor through `resolve`.
    pub fn parse_with<F>(text: &str, mut resolve: F) -> Result<Self>
    where
        F: FnMut(&str) -> std::result::Result<String, String>,
    {
        let raw: RawWorkflow = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let mut stages = Vec::with_capacity(raw.stages.len());
        for s in raw.stages {
            let doc = resolve(&s.descriptor).map_err(|reason| Error::MissingDescriptor {
                stage: s.id.clone(),
                reason,
            })?;
            let template = StageTemplate::parse(&doc)?;
            stages.push(WorkflowStage { id: s.id, template });
        }
        Self::new(&raw.name, stages, raw.edges, raw.inputs)
    }

    /// Reads a workflow file; descriptor paths are relative to the workflow's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse_with(&text, |rel| {
            std::fs::read_to_string(base.join(rel)).map_err(|e| format!("{rel}: {e}"))
        })
    }

    /// Direct predecessors of the stage at topological position `i`, in topological order.
    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.stages.iter().position(|s| s.id == id)
    }

    /// Every parameter consumed anywhere in the workflow, first-use order.
    pub fn consumed_params(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.stages
            .iter()
            .flat_map(|s| s.template.consumed_params())
            .filter(|p| seen.insert(*p))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stage(name: &str, inputs: &[&str], tasks: &[(&str, &[&str], &[&str], &[&str])]) -> StageTemplate {
        StageTemplate {
            name: name.into(),
            inputs_rt: inputs.iter().map(|s| s.to_string()).collect(),
            tasks: tasks
                .iter()
                .map(|(id, args, tin, tout)| TaskTemplate {
                    id: id.to_string(),
                    call: format!("{id}_call"),
                    lib: "lib".into(),
                    args: args.iter().map(|s| s.to_string()).collect(),
                    intertask_in: tin.iter().map(|s| s.to_string()).collect(),
                    intertask_out: tout.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
        }
    }

    fn ws(id: &str, template: StageTemplate) -> WorkflowStage {
        WorkflowStage { id: id.into(), template }
    }

    fn e(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    #[test]
    fn descriptor_with_chain_parses() {
        let text = r#"{"name":"seg","inputs_rt":["img"],"tasks":[
            {"id":"t1","call":"segmentNucleiStg1","lib":"nscale","args":["B","G"],"intertask_out":["m"]},
            {"id":"t2","call":"segmentNucleiStg2","lib":"nscale","args":["T1"],"intertask_in":["m"]}]}"#;
        let s = StageTemplate::parse(text).unwrap();
        assert_eq!(s.tasks[0].call, "segmentNucleiStg1");
        assert_eq!(s.tasks[0].lib, "nscale");
        assert_eq!(s.consumed_params(), vec!["B", "G", "T1"]);
    }

    #[test]
    fn descriptor_errors() {
        let dangling = r#"{"name":"s","tasks":[{"id":"a","call":"c","lib":"l"},
            {"id":"b","call":"c","lib":"l","intertask_in":["x"]}]}"#;
        assert!(matches!(StageTemplate::parse(dangling), Err(Error::DanglingIntertask { .. })));
        let dup = r#"{"name":"s","tasks":[{"id":"a","call":"c","lib":"l"},{"id":"a","call":"c","lib":"l"}]}"#;
        assert!(matches!(StageTemplate::parse(dup), Err(Error::DuplicateTask { .. })));
        let unknown = r#"{"name":"s","tasks":[{"id":"a","call":"c","lib":"l","extra":1}]}"#;
        assert!(matches!(StageTemplate::parse(unknown), Err(Error::Malformed(_))));
        assert!(matches!(StageTemplate::parse(r#"{"name":"s","tasks":[]}"#), Err(Error::EmptyStage(_))));
        // A task may not consume its own output.
        let own = r#"{"name":"s","tasks":[{"id":"a","call":"c","lib":"l","intertask_in":["x"],"intertask_out":["x"]}]}"#;
        assert!(StageTemplate::parse(own).is_err());
    }

    #[test]
    fn diamond_is_valid_and_sorted() {
        let w = WorkflowTemplate::new(
            "diamond",
            vec![
                ws("D", stage("D", &["b", "c"], &[("d", &[], &[], &[])])),
                ws("B", stage("B", &["a"], &[("b", &[], &[], &["b"])])),
                ws("A", stage("A", &[], &[("a", &[], &[], &["a"])])),
                ws("C", stage("C", &["a"], &[("c", &[], &[], &["c"])])),
            ],
            vec![e("A", "B"), e("A", "C"), e("B", "D"), e("C", "D")],
            vec![],
        )
        .unwrap();
        let ids: Vec<_> = w.stages.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["A", "B", "C", "D"]);
        assert_eq!(w.predecessors(3).len(), 2);
    }

    #[test]
    fn cycles_and_missing_inputs_are_rejected() {
        let one = || stage("x", &[], &[("t", &[], &[], &["o"])]);
        let r = WorkflowTemplate::new("c", vec![ws("X", one()), ws("Y", one())], vec![e("X", "Y"), e("Y", "X")], vec![]);
        assert!(matches!(r, Err(Error::Cycle(_))));
        let r = WorkflowTemplate::new(
            "m",
            vec![ws("X", one()), ws("Y", stage("y", &["nope"], &[("t", &[], &[], &[])]))],
            vec![e("X", "Y")],
            vec![],
        );
        assert!(matches!(r, Err(Error::UnproducedInput { .. })));
        let r = WorkflowTemplate::new(
            "m",
            vec![ws("X", one()), ws("Y", stage("y", &["nope"], &[("t", &[], &[], &[])]))],
            vec![e("X", "Y")],
            vec!["nope".into()],
        );
        assert!(r.is_ok());
        let r = WorkflowTemplate::new("u", vec![ws("X", one())], vec![e("X", "Z")], vec![]);
        assert!(matches!(r, Err(Error::UnknownStage(_))));
    }

    #[test]
    fn parse_with_reports_missing_descriptor() {
        let doc = r#"{"name":"w","stages":[{"id":"a","descriptor":"a.json"}],"edges":[]}"#;
        let r = WorkflowTemplate::parse_with(doc, |_| Err("not found".into()));
        assert!(matches!(r, Err(Error::MissingDescriptor { .. })));
        let r = WorkflowTemplate::parse_with(doc, |_| {
            Ok(r#"{"name":"a","tasks":[{"id":"t","call":"c","lib":"l"}]}"#.into())
        });
        assert_eq!(r.unwrap().stages.len(), 1);
    }
}
