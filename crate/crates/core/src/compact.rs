//! Stage-level merging: collapses identical stage instances across all replicas into one DAG.

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::Result;
use crate::workflow::{instantiate, ParameterSet, Signature, StageInstance, WorkflowTemplate};

pub type VertexId = usize;

/// Signature of the synthetic root every source stage hangs from.
pub const ROOT_SIGNATURE: &str = "\u{0}root";

#[derive(Debug, Clone)]
pub struct Vertex {
    pub signature: Signature,
    /// Representative instance (from the first set that produced this vertex); `None` at the root.
    pub instance: Option<StageInstance>,
    pub children: IndexMap<Signature, VertexId>,
    pub parents: Vec<VertexId>,
    pub deps: usize,
    pub deps_solved: usize,
    /// Number of parameter sets whose replica contains this vertex.
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct CompactGraph {
    vertices: Vec<Vertex>,
    pending: IndexMap<Signature, VertexId>,
    stage_count: usize,
    /// `replicas[s][i]` is the vertex of stage `i` in the replica of set `s`.
    replicas: Vec<Vec<VertexId>>,
}

impl CompactGraph {
    pub fn new(stage_count: usize) -> Self {
        CompactGraph {
            vertices: vec![Vertex {
                signature: Signature::new(ROOT_SIGNATURE),
                instance: None,
                children: IndexMap::new(),
                parents: Vec::new(),
                deps: 0,
                deps_solved: 0,
                multiplicity: 0,
            }],
            pending: IndexMap::new(),
            stage_count,
            replicas: Vec::new(),
        }
    }

    /// Merges the replica of one set: walks each replica edge from the root, reusing a
    /// matching child when present and parking multi-dependency vertices until every
    /// incoming edge has been linked.
    pub fn insert(&mut self, workflow: &WorkflowTemplate, set: &ParameterSet) -> Result<()> {
        let origin = self.replicas.len();
        let replica = instantiate(workflow, set, origin)?;
        let mut mapped: Vec<VertexId> = Vec::with_capacity(replica.len());
        for (i, inst) in replica.into_iter().enumerate() {
            let parents: Vec<VertexId> = if workflow.predecessors(i).is_empty() {
                vec![0]
            } else {
                workflow.predecessors(i).iter().map(|&p| mapped[p]).collect()
            };
            let deps = parents.len();
            let sig = inst.signature.clone();
            let mut inst = Some(inst);
            let mut id = None;
            for &p in &parents {
                if let Some(&found) = self.vertices[p].children.get(&sig) {
                    id = Some(found);
                    continue;
                }
                let v = if deps > 1 {
                    match self.pending.get(&sig).copied() {
                        Some(v) => {
                            let vert = &mut self.vertices[v];
                            vert.deps_solved += 1;
                            if vert.deps_solved == vert.deps {
                                self.pending.shift_remove(&sig);
                            }
                            v
                        }
                        None => {
                            let v = self.push(inst.take().expect("fresh vertex has its instance"), deps);
                            self.pending.insert(sig.clone(), v);
                            v
                        }
                    }
                } else {
                    self.push(inst.take().expect("fresh vertex has its instance"), deps)
                };
                self.vertices[p].children.insert(sig.clone(), v);
                self.vertices[v].parents.push(p);
                id = Some(v);
            }
            let id = id.expect("every stage has a parent");
            self.vertices[id].multiplicity += 1;
            mapped.push(id);
        }
        self.replicas.push(mapped);
        Ok(())
    }

    fn push(&mut self, inst: StageInstance, deps: usize) -> VertexId {
        self.vertices.push(Vertex {
            signature: inst.signature.clone(),
            instance: Some(inst),
            children: IndexMap::new(),
            parents: Vec::new(),
            deps,
            deps_solved: 1,
            multiplicity: 0,
        });
        self.vertices.len() - 1
    }

    pub fn build(workflow: &WorkflowTemplate, sets: &[ParameterSet]) -> Result<Self> {
        let mut g = CompactGraph::new(workflow.stages.len());
        for set in sets {
            g.insert(workflow, set)?;
        }
        debug_assert!(g.pending.is_empty());
        Ok(g)
    }

    /// Vertices excluding the root.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertex(&self, id: VertexId) -> &Vertex {
        &self.vertices[id]
    }

    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, &Vertex)> {
        self.vertices.iter().enumerate().skip(1)
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn set_count(&self) -> usize {
        self.replicas.len()
    }

    pub fn stage_count(&self) -> usize {
        self.stage_count
    }

    pub fn replica(&self, set: usize) -> &[VertexId] {
        &self.replicas[set]
    }

    /// Fraction of replica stage instances removed by the merge.
    pub fn stage_reuse_ratio(&self) -> f64 {
        let total = self.set_count() * self.stage_count;
        if total == 0 {
            return 0.0;
        }
        1.0 - self.vertex_count() as f64 / total as f64
    }

    /// Distinct vertices grouped by stage level, in creation order.
    pub fn distinct_instances(&self) -> Vec<Vec<VertexId>> {
        let mut levels = vec![Vec::new(); self.stage_count];
        for (id, v) in self.vertices() {
            let level = v.instance.as_ref().expect("non-root vertex").level;
            levels[level].push(id);
        }
        levels
    }

    /// Serializable view: vertices with signature, level, multiplicity and edges.
    pub fn export(&self) -> GraphExport {
        GraphExport {
            vertices: self
                .vertices()
                .map(|(id, v)| ExportVertex {
                    id,
                    stage: v.instance.as_ref().map(|i| i.stage.clone()).unwrap_or_default(),
                    signature: v.signature.clone(),
                    multiplicity: v.multiplicity,
                })
                .collect(),
            edges: self
                .vertices()
                .flat_map(|(id, v)| v.parents.iter().filter(|&&p| p != 0).map(move |&p| (p, id)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExportVertex {
    pub id: VertexId,
    pub stage: String,
    pub signature: Signature,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphExport {
    pub vertices: Vec<ExportVertex>,
    pub edges: Vec<(VertexId, VertexId)>,
}
