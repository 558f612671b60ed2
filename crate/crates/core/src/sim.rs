//! Discrete-event Manager-Worker simulation of a plan.
//!
//! Workers pull ready buckets on demand. Inside a bucket the shared task prefixes form a tree,
//! and each node runs once on one of the worker's cores after its parent has finished.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::plan::{Algorithm, Plan};

/// Mean task durations of the segmentation stage of the reference workflow, by task depth.
pub const SEGMENTATION_PROFILE: [f64; 7] = [1.144053, 1.98759, 0.658092, 0.331899, 0.762702, 3.765009, 0.860655];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
pub struct CostModel<T: Scalar> {
    /// Duration of tasks of stages absent from `stages`, or beyond a stage's list.
    pub default: T,
    /// Per stage, duration of the task at each depth.
    #[serde(default)]
    pub stages: IndexMap<String, Vec<T>>,
    /// Sigma of a lognormal multiplier applied to every task execution; zero disables noise.
    #[serde(default)]
    pub noise_sigma: T,
}

impl<T: Scalar> CostModel<T> {
    pub fn uniform(default: T) -> Result<Self> {
        let m = CostModel {
            default,
            stages: IndexMap::new(),
            noise_sigma: T::zero(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_stage(mut self, stage: &str, durations: Vec<T>) -> Result<Self> {
        self.stages.insert(stage.to_string(), durations);
        self.validate()?;
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.default) {
            return Err(Error::InvalidConfig("default duration must be > 0".into()));
        }
        for (stage, ds) in &self.stages {
            if let Some(d) = ds.iter().find(|&&d| !positive(d)) {
                return Err(Error::InvalidConfig(format!("stage `{stage}` has duration {d}, must be > 0")));
            }
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < T::zero() {
            return Err(Error::InvalidConfig("noise sigma must be >= 0".into()));
        }
        Ok(())
    }

    /// Mean duration of the task at 1-based `depth` of `stage`.
    pub fn duration(&self, stage: &str, depth: usize) -> T {
        self.stages
            .get(stage)
            .and_then(|ds| ds.get(depth.wrapping_sub(1)).copied())
            .unwrap_or(self.default)
    }

    /// Duration of one full instance of `stage` with `k` tasks.
    pub fn stage_duration(&self, stage: &str, k: usize) -> T {
        (1..=k).fold(T::zero(), |acc, d| acc + self.duration(stage, d))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dispatch {
    /// Buckets are handed out in plan order.
    #[default]
    Plan,
    /// Heaviest ready bucket first.
    Lpt,
}

impl fmt::Display for Dispatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dispatch::Plan => "plan",
            Dispatch::Lpt => "lpt",
        })
    }
}

impl FromStr for Dispatch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plan" => Ok(Dispatch::Plan),
            "lpt" => Ok(Dispatch::Lpt),
            _ => Err(Error::InvalidConfig(format!("unknown dispatch order `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub workers: usize,
    pub cores: usize,
    pub dispatch: Dispatch,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(workers: usize, cores: usize) -> Self {
        SimConfig {
            workers,
            cores,
            dispatch: Dispatch::Plan,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 || self.cores == 0 {
            return Err(Error::InvalidConfig("workers and cores must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SimResult<T: Scalar> {
    pub algorithm: Algorithm,
    pub workers: usize,
    pub cores: usize,
    pub dispatch: Dispatch,
    pub seed: u64,
    pub makespan: T,
    pub worker_busy: Vec<T>,
    pub executed_tasks: usize,
    pub buckets: usize,
    pub fine_grain_reuse: f64,
    pub stage_reuse: f64,
    /// Buckets per worker.
    pub s_per_w: f64,
    /// Longest chain of dependent task durations inside a single bucket.
    pub critical_path: T,
    /// Filled in when the same plan was also simulated with twice the workers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
}

impl<T: Scalar> SimResult<T> {
    pub const CSV_HEADER: &'static str = "workers,cores,algorithm,makespan,reuse,efficiency,s_per_w";

    pub fn csv_row(&self) -> String {
        let eff = self.efficiency.map(|e| format!("{e:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{:.6},{:.6},{},{:.6}",
            self.workers,
            self.cores,
            self.algorithm,
            self.makespan.as_f64(),
            self.fine_grain_reuse,
            eff,
            self.s_per_w
        )
    }
}

/// `makespan(W) / (2 * makespan(2W))` for two runs of one algorithm on the same core count.
/// The plans may differ, as they do when the bucket count follows the worker count.
pub fn parallel_efficiency<T: Scalar>(at_w: &SimResult<T>, at_2w: &SimResult<T>) -> Result<f64> {
    if at_w.algorithm != at_2w.algorithm || at_w.cores != at_2w.cores || at_2w.workers != 2 * at_w.workers {
        return Err(Error::InvalidConfig(
            "efficiency needs one algorithm at W and 2W workers".into(),
        ));
    }
    Ok(at_w.makespan.as_f64() / (2.0 * at_2w.makespan.as_f64()))
}

/// One bucket flattened into its task tree.
struct BucketTasks<T> {
    /// Children of each node; node order is insertion order of the members' task chains.
    children: Vec<Vec<u32>>,
    duration: Vec<T>,
    roots: Vec<u32>,
    critical_path: T,
}

impl<T: Scalar> BucketTasks<T> {
    fn build(plan: &Plan, members: &[usize], costs: &CostModel<T>) -> Self {
        let mut index: HashMap<(u32, &str), u32> = HashMap::new();
        let mut children: Vec<Vec<u32>> = Vec::new();
        let mut duration = Vec::new();
        let mut finish: Vec<T> = Vec::new();
        let mut roots = Vec::new();
        for &m in members {
            let inst = &plan.instances[m];
            let mut parent = u32::MAX;
            for (d, key) in inst.tasks.iter().enumerate() {
                let next = children.len() as u32;
                let node = *index.entry((parent, key.as_str())).or_insert(next);
                if node == next {
                    let dur = costs.duration(&inst.stage, d + 1);
                    let start = if parent == u32::MAX { T::zero() } else { finish[parent as usize] };
                    children.push(Vec::new());
                    duration.push(dur);
                    finish.push(start + dur);
                    if parent == u32::MAX {
                        roots.push(node);
                    } else {
                        children[parent as usize].push(node);
                    }
                }
                parent = node;
            }
        }
        let critical_path = finish.iter().copied().fold(T::zero(), T::max);
        BucketTasks {
            children,
            duration,
            roots,
            critical_path,
        }
    }

    fn weight(&self) -> T {
        self.duration.iter().copied().fold(T::zero(), |a, b| a + b)
    }
}

struct Event<T> {
    time: T,
    seq: u64,
    worker: usize,
    bucket: usize,
    node: u32,
}

impl<T: Scalar> PartialEq for Event<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Event<T> {}

impl<T: Scalar> PartialOrd for Event<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Event<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .partial_cmp(&other.time)
            .expect("finite event times")
            .then(self.seq.cmp(&other.seq))
    }
}

struct Worker<T> {
    idle_cores: usize,
    ready: VecDeque<(usize, u32)>,
    busy: T,
}

/// Runs `plan` to completion and reports makespan and reuse totals.
pub fn simulate<T: Scalar>(plan: &Plan, costs: &CostModel<T>, config: &SimConfig) -> Result<SimResult<T>> {
    config.validate()?;
    costs.validate()?;
    plan.validate()?;

    let tasks: Vec<BucketTasks<T>> = plan
        .buckets
        .iter()
        .map(|b| BucketTasks::build(plan, &b.members, costs))
        .collect();
    for (b, t) in plan.buckets.iter().zip(&tasks) {
        if t.duration.len() != b.task_cost {
            return Err(Error::InvalidPlan(format!(
                "bucket task cost {} disagrees with its {} unique tasks",
                b.task_cost,
                t.duration.len()
            )));
        }
    }

    // Bucket-level dependencies through the members' upstream instances.
    let mut bucket_of = vec![0; plan.instances.len()];
    for (b, bucket) in plan.buckets.iter().enumerate() {
        for &m in &bucket.members {
            bucket_of[m] = b;
        }
    }
    let mut waiting = vec![0usize; plan.buckets.len()];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); plan.buckets.len()];
    for (b, bucket) in plan.buckets.iter().enumerate() {
        let producers: BTreeSet<usize> = bucket
            .members
            .iter()
            .flat_map(|&m| plan.instances[m].upstream.iter().map(|&u| bucket_of[u]))
            .filter(|&p| p != b)
            .collect();
        waiting[b] = producers.len();
        for p in producers {
            dependents[p].push(b);
        }
    }

    let rank: Vec<usize> = match config.dispatch {
        Dispatch::Plan => (0..tasks.len()).collect(),
        Dispatch::Lpt => {
            let mut order: Vec<usize> = (0..tasks.len()).collect();
            order.sort_by(|&a, &b| {
                tasks[b]
                    .weight()
                    .partial_cmp(&tasks[a].weight())
                    .expect("finite weights")
                    .then(a.cmp(&b))
            });
            let mut rank = vec![0; tasks.len()];
            for (r, b) in order.into_iter().enumerate() {
                rank[b] = r;
            }
            rank
        }
    };
    let mut queue: BTreeSet<(usize, usize)> =
        (0..tasks.len()).filter(|&b| waiting[b] == 0).map(|b| (rank[b], b)).collect();

    let sigma = costs.noise_sigma.as_f64();
    let noise = if sigma > 0.0 {
        Some(LogNormal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut workers: Vec<Worker<T>> = (0..config.workers)
        .map(|_| Worker {
            idle_cores: config.cores,
            ready: VecDeque::new(),
            busy: T::zero(),
        })
        .collect();
    let mut remaining: Vec<usize> = tasks.iter().map(|t| t.duration.len()).collect();
    let mut events: BinaryHeap<Reverse<Event<T>>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut now = T::zero();
    let mut executed = 0usize;

    loop {
        for (w, worker) in workers.iter_mut().enumerate() {
            while worker.idle_cores > 0 {
                let (b, node) = match worker.ready.pop_front() {
                    Some(task) => task,
                    None => match queue.pop_first() {
                        Some((_, b)) => {
                            worker.ready.extend(tasks[b].roots.iter().map(|&r| (b, r)));
                            continue;
                        }
                        None => break,
                    },
                };
                let mut dur = tasks[b].duration[node as usize];
                if let Some(dist) = &noise {
                    dur = dur * T::of(dist.sample(&mut rng));
                }
                worker.idle_cores -= 1;
                worker.busy = worker.busy + dur;
                events.push(Reverse(Event {
                    time: now + dur,
                    seq,
                    worker: w,
                    bucket: b,
                    node,
                }));
                seq += 1;
            }
        }
        let Some(Reverse(ev)) = events.pop() else { break };
        now = ev.time;
        executed += 1;
        let worker = &mut workers[ev.worker];
        worker.idle_cores += 1;
        worker
            .ready
            .extend(tasks[ev.bucket].children[ev.node as usize].iter().map(|&c| (ev.bucket, c)));
        remaining[ev.bucket] -= 1;
        if remaining[ev.bucket] == 0 {
            for &d in &dependents[ev.bucket] {
                waiting[d] -= 1;
                if waiting[d] == 0 {
                    queue.insert((rank[d], d));
                }
            }
        }
    }

    let total: usize = plan.buckets.iter().map(|b| b.task_cost).sum();
    if executed != total {
        return Err(Error::InvalidPlan(format!(
            "bucket dependencies form a cycle: ran {executed} of {total} tasks"
        )));
    }
    Ok(SimResult {
        algorithm: plan.algorithm,
        workers: config.workers,
        cores: config.cores,
        dispatch: config.dispatch,
        seed: config.seed,
        makespan: now,
        worker_busy: workers.iter().map(|w| w.busy).collect(),
        executed_tasks: executed,
        buckets: plan.buckets.len(),
        fine_grain_reuse: plan.metrics.fine_grain_reuse,
        stage_reuse: plan.metrics.stage_reuse,
        s_per_w: plan.buckets.len() as f64 / config.workers as f64,
        critical_path: tasks.iter().map(|t| t.critical_path).fold(T::zero(), T::max),
        efficiency: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::diamond;
    use crate::plan::{plan, Constraints, PlanOptions};

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn cost_model_rejects_non_positive() {
        assert!(CostModel::<f64>::uniform(0.0).is_err());
        assert!(CostModel::<f64>::uniform(1.0).unwrap().with_stage("s", vec![1.0, -1.0]).is_err());
        let m = CostModel::<f64>::parse(r#"{"default": 2.0, "stages": {"s": [0.5]}}"#).unwrap();
        assert_eq!(m.duration("s", 1), 0.5);
        assert_eq!(m.duration("s", 2), 2.0);
        assert_eq!(m.duration("x", 1), 2.0);
        assert!(CostModel::<f64>::parse(r#"{"default": 1.0, "extra": 1}"#).is_err());
    }

    #[test]
    fn serial_makespan_is_total_work() {
        let (w, sets) = diamond();
        let costs = CostModel::<f64>::uniform(1.0).unwrap();
        for alg in [Algorithm::None, Algorithm::Stage] {
            let p = plan(&w, &sets, &PlanOptions::new(alg, Constraints::default())).unwrap();
            let r = simulate(&p, &costs, &SimConfig::new(1, 1)).unwrap();
            assert_eq!(r.executed_tasks, p.metrics.task_cost);
            assert!(approx(r.makespan, p.metrics.task_cost as f64));
        }
    }

    #[test]
    fn noise_is_seeded() {
        let (w, sets) = diamond();
        let mut costs = CostModel::<f64>::uniform(1.0).unwrap();
        costs.noise_sigma = 0.3;
        let p = plan(&w, &sets, &PlanOptions::new(Algorithm::Stage, Constraints::default())).unwrap();
        let mut cfg = SimConfig::new(2, 1);
        cfg.seed = 9;
        let a = simulate(&p, &costs, &cfg).unwrap();
        let b = simulate(&p, &costs, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed = 10;
        assert_ne!(simulate(&p, &costs, &cfg).unwrap().makespan, a.makespan);
    }

    #[test]
    fn efficiency_needs_matching_runs() {
        let (w, sets) = diamond();
        let costs = CostModel::<f64>::uniform(1.0).unwrap();
        let p = plan(&w, &sets, &PlanOptions::new(Algorithm::Stage, Constraints::default())).unwrap();
        let r1 = simulate(&p, &costs, &SimConfig::new(1, 1)).unwrap();
        let r2 = simulate(&p, &costs, &SimConfig::new(2, 1)).unwrap();
        let e = parallel_efficiency(&r1, &r2).unwrap();
        assert!(e > 0.5 && e <= 1.0);
        assert!(parallel_efficiency(&r1, &r1).is_err());
    }

    #[test]
    fn single_bucket_makespans() {
        let (w, first, second) = crate::examples::mixed_depth_pair();
        let costs = crate::reference::costs::<f64>().unwrap();
        let one = PlanOptions::new(Algorithm::Trtma, Constraints::count(1));
        let run = |sets: &[crate::workflow::ParameterSet]| {
            let p = plan(&w, sets, &one).unwrap();
            assert_eq!(p.buckets.len(), 1);
            assert_eq!(p.buckets[0].task_cost, 9.min(7 * sets.len()));
            simulate(&p, &costs, &SimConfig::new(1, 1)).unwrap().makespan
        };
        assert!(approx(run(&first[..1]), 9.51));
        let ratio = run(&second) / run(&first);
        assert!((ratio - 1.25).abs() <= 0.01, "ratio {ratio}");
    }
}
