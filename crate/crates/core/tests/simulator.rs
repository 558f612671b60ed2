//! Simulator invariants on the reference workflow and on hand-sized cases.

use std::collections::HashSet;

use reuseplan::plan::{plan, Algorithm, Constraints, Plan, PlanOptions};
use reuseplan::sampling::{moat_sample, MoatConfig};
use reuseplan::sim::{parallel_efficiency, simulate, CostModel, Dispatch, SimConfig, SEGMENTATION_PROFILE};
use reuseplan::{examples, reference};

fn options() -> Vec<PlanOptions> {
    vec![
        PlanOptions::new(Algorithm::None, Constraints::default()),
        PlanOptions::new(Algorithm::Stage, Constraints::default()),
        PlanOptions::new(Algorithm::Naive, Constraints::size(4)),
        PlanOptions::new(Algorithm::Sca, Constraints::size(4)),
        PlanOptions::new(Algorithm::Rtma, Constraints::size(5)),
        PlanOptions::new(Algorithm::Trtma, Constraints::count(6)),
    ]
}

fn reference_plans(trajectories: usize) -> Vec<Plan> {
    let w = reference::workflow().unwrap();
    let sets = moat_sample(&reference::space().unwrap(), &MoatConfig { levels: 4, trajectories, seed: 11 })
        .unwrap()
        .sets;
    options().iter().map(|o| plan(&w, &sets, o).unwrap()).collect()
}

/// Total duration of a plan, from distinct task-key prefixes per bucket.
fn weighted_work(plan: &Plan, costs: &CostModel<f64>) -> f64 {
    let mut total = 0.0;
    for b in &plan.buckets {
        let mut seen: HashSet<Vec<&str>> = HashSet::new();
        for &m in &b.members {
            let inst = &plan.instances[m];
            let keys: Vec<&str> = inst.tasks.iter().map(String::as_str).collect();
            for d in 1..=keys.len() {
                if seen.insert(keys[..d].to_vec()) {
                    total += costs.duration(&inst.stage, d);
                }
            }
        }
    }
    total
}

#[test]
fn work_is_conserved_and_bounds_hold() {
    let costs = reference::costs::<f64>().unwrap();
    for p in reference_plans(3) {
        let work = weighted_work(&p, &costs);
        for workers in [1, 2, 5, 16] {
            for cores in [1, 3] {
                for dispatch in [Dispatch::Plan, Dispatch::Lpt] {
                    let cfg = SimConfig { workers, cores, dispatch, seed: 0 };
                    let r = simulate(&p, &costs, &cfg).unwrap();
                    let busy: f64 = r.worker_busy.iter().sum();
                    let tag = format!("{} W={workers} C={cores} {dispatch}", p.algorithm);
                    assert!((busy - work).abs() < 1e-9 * work, "{tag}: {busy} vs {work}");
                    assert_eq!(r.executed_tasks, p.metrics.task_cost, "{tag}");
                    assert!(r.makespan >= r.critical_path - 1e-9, "{tag}");
                    assert!(r.makespan >= work / (workers * cores) as f64 - 1e-9, "{tag}");
                    if workers == 1 && cores == 1 {
                        assert!((r.makespan - work).abs() < 1e-9 * work, "{tag}");
                    }
                }
            }
        }
    }
}

#[test]
fn one_worker_per_singleton_runs_one_stage() {
    let (w, first, second) = examples::mixed_depth_pair();
    let sets: Vec<_> = first.into_iter().chain(second).collect();
    let p = plan(&w, &sets, &PlanOptions::new(Algorithm::Stage, Constraints::default())).unwrap();
    let costs = reference::costs::<f64>().unwrap();
    let r = simulate(&p, &costs, &SimConfig::new(sets.len(), 1)).unwrap();
    let stage: f64 = SEGMENTATION_PROFILE.iter().sum();
    assert!((r.makespan - stage).abs() < 1e-9);
    assert!((r.critical_path - stage).abs() < 1e-9);
}

#[test]
fn single_bucket_cannot_use_extra_workers() {
    let (w, first, _) = examples::mixed_depth_pair();
    let p = plan(&w, &first, &PlanOptions::new(Algorithm::Trtma, Constraints::count(1))).unwrap();
    assert_eq!(p.buckets.len(), 1);
    let costs = reference::costs::<f64>().unwrap();
    let one = simulate(&p, &costs, &SimConfig::new(1, 1)).unwrap();
    let two = simulate(&p, &costs, &SimConfig::new(2, 1)).unwrap();
    assert_eq!(one.makespan, two.makespan);
    assert!((parallel_efficiency(&one, &two).unwrap() - 0.5).abs() < 1e-12);
    assert!(parallel_efficiency(&two, &one).is_err());
}

#[test]
fn noise_is_seeded() {
    let costs = CostModel { noise_sigma: 0.3, ..reference::costs::<f64>().unwrap() };
    let p = &reference_plans(2)[4];
    let run = |seed| simulate(p, &costs, &SimConfig { workers: 3, cores: 2, dispatch: Dispatch::Plan, seed }).unwrap();
    assert_eq!(run(1).makespan, run(1).makespan);
    assert_eq!(run(1).worker_busy, run(1).worker_busy);
    assert_ne!(run(1).makespan, run(2).makespan);
}

#[test]
fn single_precision_tracks_double() {
    let p = &reference_plans(2)[5];
    let cfg = SimConfig::new(4, 2);
    let a = simulate(p, &reference::costs::<f64>().unwrap(), &cfg).unwrap();
    let b = simulate(p, &reference::costs::<f32>().unwrap(), &cfg).unwrap();
    assert!((a.makespan - f64::from(b.makespan)).abs() < 1e-4 * a.makespan);
}

#[test]
fn more_workers_do_not_slow_the_reference_plans() {
    let costs = reference::costs::<f64>().unwrap();
    for p in reference_plans(4) {
        let mut last = f64::INFINITY;
        for w in [1, 2, 4, 8, 16, 32] {
            let m = simulate(&p, &costs, &SimConfig::new(w, 1)).unwrap().makespan;
            assert!(m <= last + 1e-9, "{} W={w}: {m} > {last}", p.algorithm);
            last = m;
        }
    }
}

#[test]
fn plans_round_trip_through_json() {
    for p in reference_plans(2) {
        let text = serde_json::to_string_pretty(&p).unwrap();
        let back = Plan::parse(&text).unwrap();
        assert_eq!(back, p);
        back.validate().unwrap();
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }
    assert!(Plan::parse("{\"algorithm\":\"rtma\"}").is_err());
}

#[test]
fn bad_inputs_are_rejected() {
    let p = &reference_plans(1)[1];
    let costs = reference::costs::<f64>().unwrap();
    assert!(simulate(p, &costs, &SimConfig::new(0, 1)).is_err());
    assert!(simulate(p, &costs, &SimConfig::new(1, 0)).is_err());
    assert!(CostModel::uniform(0.0).is_err());
    assert!(CostModel::<f64>::parse("{\"default\": -1}").is_err());
    let mut broken = p.clone();
    broken.buckets.pop();
    assert!(simulate(&broken, &costs, &SimConfig::new(1, 1)).is_err());
}
