//! Grid of (algorithm, worker count) runs over one batch, planned and simulated in parallel.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use log::info;
use rayon::prelude::*;
use serde_json::json;

use reuseplan::plan::{plan, Plan, PlanOptions};
use reuseplan::sim::{parallel_efficiency, simulate, Dispatch, SimConfig, SimResult};

use crate::args::AlgoSpec;
use crate::output::{write_atomic, write_json, write_timing, Manifest};
use crate::{csv_report, load_batch, load_costs, load_workflow};

#[derive(clap::Args)]
pub struct SweepArgs {
    #[arg(long)]
    workflow: Option<PathBuf>,
    #[arg(long)]
    sets: PathBuf,
    #[arg(long)]
    costs: Option<PathBuf>,
    /// Repeatable: none, stage, naive:B, sca:B, rtma:B, trtma:N or trtma:NxW.
    #[arg(long = "algorithm", required = true)]
    algorithms: Vec<AlgoSpec>,
    #[arg(long, value_delimiter = ',', required = true)]
    workers: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    cores: usize,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Serve heaviest buckets first instead of plan order.
    #[arg(long)]
    lpt: bool,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
}

struct PlanJob {
    spec: usize,
    workers: Option<usize>,
}

pub fn run(a: SweepArgs) -> Result<()> {
    let mut manifest = Manifest::new("sweep").seed("noise", a.seed);
    let workflow = load_workflow(a.workflow.as_deref(), &mut manifest)?;
    let batch = load_batch(&a.sets, &mut manifest)?;
    let mut costs = load_costs(a.costs.as_deref(), &mut manifest)?;
    if let Some(s) = a.noise_sigma {
        costs.noise_sigma = s;
    }
    let dispatch = if a.lpt { Dispatch::Lpt } else { Dispatch::Plan };

    let mut plan_jobs = Vec::new();
    for (i, spec) in a.algorithms.iter().enumerate() {
        if spec.depends_on_workers() {
            plan_jobs.extend(a.workers.iter().map(|&w| PlanJob { spec: i, workers: Some(w) }));
        } else {
            plan_jobs.push(PlanJob { spec: i, workers: None });
        }
    }
    let plans: Vec<(Plan, f64)> = plan_jobs
        .par_iter()
        .map(|job| {
            let spec = &a.algorithms[job.spec];
            let constraints = spec.constraints(job.workers.unwrap_or(1))?;
            let started = Instant::now();
            let p = plan(&workflow, &batch.sets, &PlanOptions::new(spec.algorithm, constraints))?;
            Ok((p, started.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let plan_for = |spec: usize, w: usize| {
        plan_jobs
            .iter()
            .position(|j| j.spec == spec && j.workers.is_none_or(|x| x == w))
            .expect("every run has a plan")
    };

    let runs: Vec<(usize, usize)> = (0..a.algorithms.len())
        .flat_map(|s| a.workers.iter().map(move |&w| (s, w)))
        .collect();
    let mut results: Vec<SimResult<f64>> = runs
        .par_iter()
        .map(|&(s, w)| {
            let cfg = SimConfig {
                workers: w,
                cores: a.cores,
                dispatch,
                seed: a.seed,
            };
            Ok(simulate(&plans[plan_for(s, w)].0, &costs, &cfg)?)
        })
        .collect::<Result<_>>()?;
    for i in 0..runs.len() {
        let doubled = runs.iter().position(|&(s, w)| s == runs[i].0 && w == 2 * runs[i].1);
        if let Some(j) = doubled {
            results[i].efficiency = Some(parallel_efficiency(&results[i], &results[j])?);
        }
    }

    let mut timing = serde_json::Map::new();
    for (job, (p, seconds)) in plan_jobs.iter().zip(&plans) {
        let mut name = a.algorithms[job.spec].label();
        if let Some(w) = job.workers {
            name.push_str(&format!("-W{w}"));
        }
        let path = a.out.join("plans").join(format!("{name}.json"));
        let bytes = write_json(&path, p)?;
        manifest.output(&path, &bytes);
        timing.insert(name, json!(seconds));
    }
    for (&(s, w), r) in runs.iter().zip(&results) {
        let path = a.out.join("results").join(format!("{}-W{w}-C{}.json", a.algorithms[s].label(), a.cores));
        let bytes = write_json(&path, r)?;
        manifest.output(&path, &bytes);
    }
    let report = a.out.join("report.csv");
    let text = csv_report(&results);
    write_atomic(&report, text.as_bytes())?;
    manifest.output(&report, text.as_bytes());

    let labels: Vec<String> = a.algorithms.iter().map(AlgoSpec::label).collect();
    manifest = manifest.settings(json!({
        "algorithms": labels,
        "workers": a.workers,
        "cores": a.cores,
        "dispatch": dispatch,
        "noise_sigma": costs.noise_sigma,
    }));
    let anchor = a.out.join("sweep");
    manifest.write(&anchor)?;
    write_timing(&anchor, json!({ "planning_seconds": timing }))?;
    info!("{} runs written to {}", results.len(), a.out.display());
    Ok(())
}
