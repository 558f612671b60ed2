//! End-to-end planning: merge replicas into the compact graph, then group each stage level's
//! distinct instances into buckets with the chosen algorithm.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compact::CompactGraph;
use crate::error::{Error, Result};
use crate::merging::{rtma_with, trtma_with, RtmaOptions, SmallSelection, TrtmaOptions};
use crate::partition::{naive_buckets, sca_buckets};
use crate::population::{Bucket, Population};
use crate::workflow::{ParameterSet, StageInstance, WorkflowTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Every replica instance runs on its own.
    None,
    /// Identical stage instances run once; no task-level merging.
    Stage,
    Naive,
    Sca,
    Rtma,
    Trtma,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::None,
        Algorithm::Stage,
        Algorithm::Naive,
        Algorithm::Sca,
        Algorithm::Rtma,
        Algorithm::Trtma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::None => "none",
            Algorithm::Stage => "stage",
            Algorithm::Naive => "naive",
            Algorithm::Sca => "sca",
            Algorithm::Rtma => "rtma",
            Algorithm::Trtma => "trtma",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bucket_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_buckets: Option<usize>,
}

impl Constraints {
    pub fn size(b: usize) -> Self {
        Constraints {
            max_bucket_size: Some(b),
            max_buckets: None,
        }
    }

    pub fn count(mb: usize) -> Self {
        Constraints {
            max_bucket_size: None,
            max_buckets: Some(mb),
        }
    }

    /// Checks that exactly the constraint `algorithm` needs is present.
    pub fn validate(&self, algorithm: Algorithm) -> Result<()> {
        let (size, count) = (self.max_bucket_size.is_some(), self.max_buckets.is_some());
        let ok = match algorithm {
            Algorithm::None | Algorithm::Stage => !size && !count,
            Algorithm::Naive | Algorithm::Sca | Algorithm::Rtma => size && !count,
            Algorithm::Trtma => count && !size,
        };
        if !ok {
            let want = match algorithm {
                Algorithm::None | Algorithm::Stage => "no bucket constraint",
                Algorithm::Trtma => "--max-buckets only",
                _ => "--max-bucket-size only",
            };
            return Err(Error::InvalidConfig(format!("algorithm `{algorithm}` takes {want}")));
        }
        if self.max_bucket_size == Some(0) || self.max_buckets == Some(0) {
            return Err(Error::InvalidConfig("bucket constraints must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanOptions {
    pub algorithm: Algorithm,
    pub constraints: Constraints,
    pub rtma: RtmaOptions,
    pub small_selection: SmallSelection,
}

impl PlanOptions {
    pub fn new(algorithm: Algorithm, constraints: Constraints) -> Self {
        PlanOptions {
            algorithm,
            constraints,
            rtma: RtmaOptions::default(),
            small_selection: SmallSelection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelInfo {
    pub level: usize,
    pub stage: String,
    /// Tasks per instance.
    pub k: usize,
    pub instances: usize,
    pub unique_tasks: usize,
    pub buckets: usize,
    pub task_cost: usize,
    pub fine_grain_reuse: f64,
    pub max_fine_grain_reuse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanInstance {
    pub id: usize,
    pub level: usize,
    pub stage: String,
    pub signature: String,
    pub upstream: Vec<usize>,
    pub tasks: Vec<String>,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanBucket {
    pub level: usize,
    pub members: Vec<usize>,
    pub task_cost: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanMetrics {
    pub sets: usize,
    pub stages: usize,
    pub replica_instances: usize,
    pub distinct_instances: usize,
    pub stage_reuse: f64,
    /// Task reuse inside buckets, over levels with more than one task per instance.
    pub fine_grain_reuse: f64,
    /// The same ratio for one bucket per level.
    pub max_fine_grain_reuse: f64,
    /// Tasks saved against running every replica task, over all levels.
    pub total_reuse: f64,
    pub buckets: usize,
    pub task_cost: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub algorithm: Algorithm,
    pub constraints: Constraints,
    pub levels: Vec<LevelInfo>,
    pub instances: Vec<PlanInstance>,
    pub buckets: Vec<PlanBucket>,
    pub metrics: PlanMetrics,
}

fn run_algorithm(pop: &Population, opts: &PlanOptions) -> Result<Vec<Bucket>> {
    let singles = || (0..pop.len()).map(|i| pop.bucket(vec![i])).collect();
    if pop.k() < 2 {
        return Ok(singles());
    }
    let c = &opts.constraints;
    let size = || c.max_bucket_size.expect("validated constraint");
    Ok(match opts.algorithm {
        Algorithm::None | Algorithm::Stage => singles(),
        Algorithm::Naive => naive_buckets(pop, size())?,
        Algorithm::Sca => sca_buckets(pop, size())?,
        Algorithm::Rtma => rtma_with(pop, size(), opts.rtma)?,
        Algorithm::Trtma => {
            let mb = c.max_buckets.expect("validated constraint");
            trtma_with(pop, mb, TrtmaOptions { small: opts.small_selection })?.buckets
        }
    })
}

fn plan_instance(id: usize, inst: &StageInstance, upstream: Vec<usize>, multiplicity: usize) -> PlanInstance {
    PlanInstance {
        id,
        level: inst.level,
        stage: inst.stage.clone(),
        signature: inst.signature.to_string(),
        upstream,
        tasks: inst.keys().map(|k| k.to_string()).collect(),
        multiplicity,
    }
}

/// Plans `sets` over `workflow`.
pub fn plan(workflow: &WorkflowTemplate, sets: &[ParameterSet], opts: &PlanOptions) -> Result<Plan> {
    opts.constraints.validate(opts.algorithm)?;
    if sets.is_empty() {
        return Err(Error::InvalidConfig("no parameter sets".into()));
    }
    let graph = CompactGraph::build(workflow, sets)?;
    let stages = workflow.stages.len();

    // Per level: the instances to schedule, with upstream references as plan instance ids.
    let mut per_level: Vec<Vec<(StageInstance, Vec<usize>, usize)>> = vec![Vec::new(); stages];
    if opts.algorithm == Algorithm::None {
        let ids: Vec<Vec<usize>> = (0..stages)
            .map(|level| (0..sets.len()).map(|s| level * sets.len() + s).collect())
            .collect();
        for level in 0..stages {
            for s in 0..sets.len() {
                let v = graph.replica(s)[level];
                let mut inst = graph.vertex(v).instance.clone().expect("non-root vertex");
                inst.origin = s;
                let upstream = workflow.predecessors(level).iter().map(|&p| ids[p][s]).collect();
                per_level[level].push((inst, upstream, 1));
            }
        }
    } else {
        let mut id_of: HashMap<usize, usize> = HashMap::new();
        let mut next = 0;
        for group in graph.distinct_instances() {
            for v in group {
                id_of.insert(v, next);
                next += 1;
            }
        }
        for (level, group) in graph.distinct_instances().into_iter().enumerate() {
            for v in group {
                let vert = graph.vertex(v);
                let inst = vert.instance.clone().expect("non-root vertex");
                // Parents follow the order of the instance's upstream signatures.
                let upstream = inst
                    .upstream
                    .iter()
                    .map(|sig| {
                        let p = vert
                            .parents
                            .iter()
                            .copied()
                            .find(|&p| &graph.vertex(p).signature == sig)
                            .expect("every upstream signature is a parent");
                        id_of[&p]
                    })
                    .collect();
                per_level[level].push((inst, upstream, vert.multiplicity));
            }
        }
    }

    let mut instances = Vec::new();
    let mut buckets = Vec::new();
    let mut levels = Vec::with_capacity(stages);
    for (level, rows) in per_level.into_iter().enumerate() {
        let base = instances.len();
        let mut pop_rows = Vec::with_capacity(rows.len());
        for (i, (inst, upstream, mult)) in rows.into_iter().enumerate() {
            instances.push(plan_instance(base + i, &inst, upstream, mult));
            pop_rows.push(inst);
        }
        let pop = Population::new(pop_rows)?;
        let level_buckets = run_algorithm(&pop, opts)?;
        debug_assert!(pop.check_partition(&level_buckets).is_ok());
        let task_cost: usize = level_buckets.iter().map(|b| b.task_cost).sum();
        levels.push(LevelInfo {
            level,
            stage: workflow.stages[level].id.clone(),
            k: pop.k(),
            instances: pop.len(),
            unique_tasks: pop.unique_tasks(),
            buckets: level_buckets.len(),
            task_cost,
            fine_grain_reuse: pop.reuse(&level_buckets),
            max_fine_grain_reuse: pop.max_reuse(),
        });
        buckets.extend(level_buckets.into_iter().map(|b| PlanBucket {
            level,
            members: b.members.into_iter().map(|m| base + m).collect(),
            task_cost: b.task_cost,
        }));
    }

    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { 1.0 - num as f64 / den as f64 };
    let multi: Vec<&LevelInfo> = levels.iter().filter(|l| l.k >= 2).collect();
    let multi_tasks: usize = multi.iter().map(|l| l.k * l.instances).sum();
    let task_cost: usize = levels.iter().map(|l| l.task_cost).sum();
    let replica_tasks: usize = workflow.stages.iter().map(|s| s.template.depth()).sum::<usize>() * sets.len();
    let metrics = PlanMetrics {
        sets: sets.len(),
        stages,
        replica_instances: sets.len() * stages,
        distinct_instances: graph.vertex_count(),
        stage_reuse: graph.stage_reuse_ratio(),
        fine_grain_reuse: ratio(multi.iter().map(|l| l.task_cost).sum(), multi_tasks),
        max_fine_grain_reuse: ratio(multi.iter().map(|l| l.unique_tasks).sum(), multi_tasks),
        total_reuse: ratio(task_cost, replica_tasks),
        buckets: buckets.len(),
        task_cost,
    };
    Ok(Plan {
        algorithm: opts.algorithm,
        constraints: opts.constraints,
        levels,
        instances,
        buckets,
        metrics,
    })
}

impl Plan {
    pub fn parse(text: &str) -> Result<Self> {
        let plan: Plan = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    /// Structural checks: ids are positions, buckets partition the instances within one level.
    pub fn validate(&self) -> Result<()> {
        let mut owner = vec![false; self.instances.len()];
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.id != i {
                return Err(Error::InvalidPlan(format!("instance {i} carries id {}", inst.id)));
            }
            if let Some(&u) = inst.upstream.iter().find(|&&u| u >= i) {
                return Err(Error::InvalidPlan(format!("instance {i} depends on later instance {u}")));
            }
        }
        for b in &self.buckets {
            if b.members.is_empty() {
                return Err(Error::InvalidPlan("empty bucket".into()));
            }
            for &m in &b.members {
                let inst = self
                    .instances
                    .get(m)
                    .ok_or_else(|| Error::InvalidPlan(format!("unknown instance {m}")))?;
                if inst.level != b.level {
                    return Err(Error::InvalidPlan(format!("instance {m} is not on level {}", b.level)));
                }
                if std::mem::replace(&mut owner[m], true) {
                    return Err(Error::InvalidPlan(format!("instance {m} in two buckets")));
                }
            }
        }
        if let Some(m) = owner.iter().position(|o| !o) {
            return Err(Error::InvalidPlan(format!("instance {m} has no bucket")));
        }
        Ok(())
    }
}
