//! `reuseplan`: sample parameter sets, plan reuse-aware execution, simulate it and report.

mod args;
mod output;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use reuseplan::merging::{rtma, trtma, RtmaOptions, SmallSelection};
use reuseplan::partition::{naive_buckets, oracle_min_makespan, oracle_min_total_cost, sca_buckets, ORACLE_LIMIT};
use reuseplan::plan::{plan, Algorithm, Constraints, Plan, PlanOptions};
use reuseplan::population::Population;
use reuseplan::reference;
use reuseplan::replay::{replay, Example};
use reuseplan::sampling::{Batch, Generator, MoatConfig, VbdConfig};
use reuseplan::sim::{parallel_efficiency, simulate, CostModel, Dispatch, SimConfig, SimResult};
use reuseplan::workflow::{ParameterSpace, WorkflowTemplate};

use args::BucketCount;
use output::{error_json, read, write_atomic, write_json, write_timing, CliError, Manifest};

#[derive(Parser)]
#[command(name = "reuseplan", version, about = "Reuse-aware planning and simulation of sensitivity-analysis batches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the bundled reference workflow, stage descriptors, spaces and costs.
    Fixtures {
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Draw a MOAT or VBD batch of parameter sets.
    Sample(SampleArgs),
    /// Merge a batch into buckets.
    Plan(PlanArgs),
    /// Run a plan through the Manager-Worker simulator.
    Simulate(SimulateArgs),
    /// Collect simulation results of a directory into one CSV.
    Report {
        dir: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare the heuristics with exhaustive search on one small stage level of a plan.
    Oracle(OracleArgs),
    /// Recompute a hand-built example and check it against the known answer.
    #[command(alias = "replay-figure")]
    Replay {
        /// Example name, or `all`.
        example: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Plan and simulate a grid of algorithms and worker counts in parallel.
    Sweep(sweep::SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Moat,
    Vbd,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Mc,
    Lhs,
    Qmc,
}

#[derive(Clone, Copy, ValueEnum)]
enum DispatchArg {
    Plan,
    Lpt,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum SmallArg {
    #[default]
    LastBucket,
    GreatestReuse,
}

#[derive(clap::Args)]
struct SampleArgs {
    /// Parameter space; defaults to the bundled space for the method.
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "lhs")]
    generator: GeneratorArg,
    /// MOAT grid levels.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// MOAT trajectory count.
    #[arg(long)]
    trajectories: Option<usize>,
    /// VBD base sample size.
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct PlanArgs {
    /// Workflow descriptor; defaults to the bundled reference workflow.
    #[arg(long)]
    workflow: Option<PathBuf>,
    #[arg(long)]
    sets: PathBuf,
    #[arg(long)]
    algorithm: String,
    #[arg(long)]
    max_bucket_size: Option<usize>,
    /// A count, or `NxW` together with --workers.
    #[arg(long)]
    max_buckets: Option<BucketCount>,
    #[arg(long)]
    workers: Option<usize>,
    /// RTMA: pack the stages left under the root into full buckets.
    #[arg(long)]
    coalesce_leftovers: bool,
    /// TRTMA: which light bucket receives moved stages.
    #[arg(long, value_enum, default_value = "last-bucket")]
    small_selection: SmallArg,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Cost model; defaults to the bundled reference costs.
    #[arg(long)]
    costs: Option<PathBuf>,
    #[arg(long)]
    workers: usize,
    #[arg(long, default_value_t = 1)]
    cores: usize,
    /// Overrides the cost model's noise sigma.
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "plan")]
    dispatch: DispatchArg,
    /// Also run with twice the workers and report the parallel efficiency.
    #[arg(long)]
    efficiency: bool,
    /// Also write a one-row CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct OracleArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Stage level of the plan to examine.
    #[arg(long)]
    level: usize,
    /// Only the first N instances of the level.
    #[arg(long)]
    first: Option<usize>,
    #[arg(long)]
    max_bucket_size: Option<usize>,
    #[arg(long)]
    max_buckets: Option<usize>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("REUSEPLAN_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = anyhow::Error::new(CliError::new("usage", e.to_string().trim().to_string()));
            eprintln!("{}", error_json(&err));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fixtures { out } => {
            reference::export(&out)?;
            info!("wrote {} reference files to {}", reference::FILES.len(), out.display());
            Ok(())
        }
        Command::Sample(a) => cmd_sample(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Report { dir, out } => cmd_report(&dir, out.as_deref()),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Replay { example, out } => cmd_replay(&example, out.as_deref()),
        Command::Sweep(a) => sweep::run(a),
    }
}

/// Prints to stdout, or writes atomically when a path is given.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

pub(crate) fn load_workflow(path: Option<&Path>, manifest: &mut Manifest) -> Result<WorkflowTemplate> {
    let Some(path) = path else {
        for (name, text) in reference::FILES.iter().filter(|(n, _)| !n.starts_with("space") && *n != "costs.json") {
            manifest.bundled(name, text);
        }
        return Ok(reference::workflow()?);
    };
    let text = read(path)?;
    manifest.input(path, text.as_bytes());
    // Record the stage descriptors the workflow pulls in as well.
    if let Ok(raw) = serde_json::from_str::<serde_json::Value>(&text) {
        let base = path.parent().unwrap_or(Path::new(""));
        for s in raw["stages"].as_array().into_iter().flatten() {
            if let Some(d) = s["descriptor"].as_str() {
                let p = base.join(d);
                if let Ok(bytes) = std::fs::read(&p) {
                    manifest.input(&p, &bytes);
                }
            }
        }
    }
    WorkflowTemplate::load(path).with_context(|| format!("loading workflow {}", path.display()))
}

pub(crate) fn load_batch(path: &Path, manifest: &mut Manifest) -> Result<Batch> {
    let text = read(path)?;
    manifest.input(path, text.as_bytes());
    Batch::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

pub(crate) fn load_costs(path: Option<&Path>, manifest: &mut Manifest) -> Result<CostModel<f64>> {
    match path {
        None => {
            manifest.bundled("costs.json", reference::COSTS);
            Ok(reference::costs()?)
        }
        Some(p) => {
            let text = read(p)?;
            manifest.input(p, text.as_bytes());
            CostModel::parse(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let mut manifest = Manifest::new("sample").seed("sample", a.seed);
    let space = match &a.space {
        Some(p) => {
            let text = read(p)?;
            manifest.input(p, text.as_bytes());
            ParameterSpace::parse(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => {
            let (name, text) = match a.method {
                MethodArg::Moat => ("space.json", reference::SPACE),
                MethodArg::Vbd => ("space_vbd.json", reference::SPACE_VBD),
            };
            manifest.bundled(name, text);
            ParameterSpace::parse(text)?
        }
    };
    let batch = match a.method {
        MethodArg::Moat => {
            let trajectories = a
                .trajectories
                .ok_or_else(|| CliError::new("usage", "MOAT sampling needs --trajectories"))?;
            Batch::moat(&space, &MoatConfig { levels: a.levels, trajectories, seed: a.seed })?
        }
        MethodArg::Vbd => {
            let sample_size = a
                .sample_size
                .ok_or_else(|| CliError::new("usage", "VBD sampling needs --sample-size"))?;
            let generator = match a.generator {
                GeneratorArg::Mc => Generator::Mc,
                GeneratorArg::Lhs => Generator::Lhs,
                GeneratorArg::Qmc => Generator::Qmc,
            };
            Batch::vbd(&space, &VbdConfig { sample_size, generator, seed: a.seed })?
        }
    };
    let bytes = write_json(&a.out, &batch)?;
    manifest = manifest.settings(batch.config.clone());
    manifest.output(&a.out, &bytes);
    manifest.write(&a.out)?;
    info!("sampled {} sets into {}", batch.sets.len(), a.out.display());
    Ok(())
}

fn cmd_plan(a: PlanArgs) -> Result<()> {
    let algorithm: Algorithm = a.algorithm.parse()?;
    let constraints = Constraints {
        max_bucket_size: a.max_bucket_size,
        max_buckets: a.max_buckets.map(|c| c.resolve(a.workers)).transpose()?,
    };
    let mut opts = PlanOptions::new(algorithm, constraints);
    opts.rtma = RtmaOptions {
        coalesce_leftovers: a.coalesce_leftovers,
    };
    opts.small_selection = match a.small_selection {
        SmallArg::LastBucket => SmallSelection::LastBucket,
        SmallArg::GreatestReuse => SmallSelection::GreatestReuse,
    };
    opts.constraints.validate(algorithm)?;

    let mut manifest = Manifest::new("plan");
    let workflow = load_workflow(a.workflow.as_deref(), &mut manifest)?;
    let batch = load_batch(&a.sets, &mut manifest)?;
    if let Some(seed) = batch.config.get("seed").and_then(|s| s.as_u64()) {
        manifest = manifest.seed("sample", seed);
    }
    let started = Instant::now();
    let p = plan(&workflow, &batch.sets, &opts)?;
    let seconds = started.elapsed().as_secs_f64();

    let bytes = write_json(&a.out, &p)?;
    manifest = manifest.settings(json!({
        "algorithm": algorithm,
        "constraints": constraints,
        "max_buckets_arg": a.max_buckets.map(|c| c.to_string()),
        "coalesce_leftovers": a.coalesce_leftovers,
        "small_selection": opts.small_selection,
    }));
    manifest.output(&a.out, &bytes);
    manifest.write(&a.out)?;
    write_timing(&a.out, json!({ "planning_seconds": seconds }))?;
    info!("planned {} sets in {seconds:.3} s", batch.sets.len());
    println!("{}", serde_json::to_string(&p.metrics)?);
    Ok(())
}

fn load_plan(path: &Path, manifest: &mut Manifest) -> Result<Plan> {
    let text = read(path)?;
    manifest.input(path, text.as_bytes());
    Plan::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut manifest = Manifest::new("simulate").seed("noise", a.seed);
    let p = load_plan(&a.plan, &mut manifest)?;
    let mut costs = load_costs(a.costs.as_deref(), &mut manifest)?;
    if let Some(s) = a.noise_sigma {
        costs.noise_sigma = s;
    }
    let dispatch = match a.dispatch {
        DispatchArg::Plan => Dispatch::Plan,
        DispatchArg::Lpt => Dispatch::Lpt,
    };
    let cfg = SimConfig {
        workers: a.workers,
        cores: a.cores,
        dispatch,
        seed: a.seed,
    };
    let mut result = simulate(&p, &costs, &cfg)?;
    if a.efficiency {
        let doubled = simulate(&p, &costs, &SimConfig { workers: 2 * a.workers, ..cfg })?;
        result.efficiency = Some(parallel_efficiency(&result, &doubled)?);
    }
    let bytes = write_json(&a.out, &result)?;
    manifest.output(&a.out, &bytes);
    if let Some(csv) = &a.csv {
        let text = format!("{}\n{}\n", SimResult::<f64>::CSV_HEADER, result.csv_row());
        write_atomic(csv, text.as_bytes())?;
        manifest.output(csv, text.as_bytes());
    }
    manifest = manifest.settings(json!({
        "workers": a.workers,
        "cores": a.cores,
        "dispatch": dispatch,
        "noise_sigma": costs.noise_sigma,
        "efficiency": a.efficiency,
    }));
    manifest.write(&a.out)?;
    info!("makespan {:.3} with {} workers", result.makespan, a.workers);
    Ok(())
}

/// Fills missing efficiencies from runs of the same algorithm at W and 2W.
pub(crate) fn fill_efficiency(results: &mut [SimResult<f64>]) {
    for i in 0..results.len() {
        if results[i].efficiency.is_some() {
            continue;
        }
        let pair = results.iter().find(|r| parallel_efficiency(&results[i], r).is_ok());
        results[i].efficiency = pair.map(|r| parallel_efficiency(&results[i], r).expect("checked"));
    }
}

pub(crate) fn csv_report(results: &[SimResult<f64>]) -> String {
    let mut text = String::from(SimResult::<f64>::CSV_HEADER);
    text.push('\n');
    for r in results {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    text
}

fn cmd_report(dir: &Path, out: Option<&Path>) -> Result<()> {
    let mut files = Vec::new();
    for sub in [dir.to_path_buf(), dir.join("results")] {
        let Ok(entries) = std::fs::read_dir(&sub) else { continue };
        for e in entries {
            let path = e?.path();
            if path.extension().is_some_and(|x| x == "json") {
                files.push(path);
            }
        }
    }
    files.sort();
    let mut results: Vec<SimResult<f64>> = files
        .iter()
        .filter_map(|p| serde_json::from_str(&std::fs::read_to_string(p).ok()?).ok())
        .collect();
    if results.is_empty() {
        return Err(CliError::new("no_results", format!("no simulation results in {}", dir.display())).into());
    }
    results.sort_by(|a, b| {
        (a.algorithm.name(), a.cores, a.workers, a.dispatch.to_string())
            .cmp(&(b.algorithm.name(), b.cores, b.workers, b.dispatch.to_string()))
    });
    fill_efficiency(&mut results);
    emit(out, csv_report(&results).as_bytes())
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let mut manifest = Manifest::new("oracle");
    let p = load_plan(&a.plan, &mut manifest)?;
    let rows: Vec<(String, Vec<&str>)> = p
        .instances
        .iter()
        .filter(|i| i.level == a.level)
        .take(a.first.unwrap_or(usize::MAX))
        .map(|i| (i.id.to_string(), i.tasks.iter().map(String::as_str).collect()))
        .collect();
    if rows.is_empty() {
        return Err(CliError::new("usage", format!("plan has no instances at level {}", a.level)).into());
    }
    if rows.len() > ORACLE_LIMIT {
        return Err(reuseplan::Error::OracleTooLarge { n: rows.len(), limit: ORACLE_LIMIT }.into());
    }
    let refs: Vec<(&str, &[&str])> = rows.iter().map(|(l, k)| (l.as_str(), k.as_slice())).collect();
    let pop = Population::from_keys(&refs)?;
    let mut report = json!({ "level": a.level, "instances": pop.len(), "k": pop.k(), "unique_tasks": pop.unique_tasks() });
    if let Some(b) = a.max_bucket_size {
        let (_, best) = oracle_min_total_cost(&pop, b)?;
        let total = |bs: Vec<reuseplan::population::Bucket>| bs.iter().map(|x| x.task_cost).sum::<usize>();
        let heuristics = json!({
            "naive": total(naive_buckets(&pop, b)?),
            "sca": total(sca_buckets(&pop, b)?),
            "rtma": total(rtma(&pop, b)?),
        });
        report["max_bucket_size"] = json!({ "bound": b, "oracle_total_cost": best, "heuristics": heuristics });
    }
    if let Some(mb) = a.max_buckets {
        let (_, best) = oracle_min_makespan(&pop, mb)?;
        let got = trtma(&pop, mb)?.iter().map(|x| x.task_cost).max().unwrap_or(0);
        report["max_buckets"] = json!({ "bound": mb, "oracle_makespan": best, "trtma_makespan": got });
    }
    emit(a.out.as_deref(), &output::to_json(&report)?)
}

fn cmd_replay(name: &str, out: Option<&Path>) -> Result<()> {
    let examples: Vec<Example> = if name == "all" {
        Example::ALL.to_vec()
    } else {
        vec![name.parse()?]
    };
    let replays = examples.into_iter().map(replay).collect::<reuseplan::Result<Vec<_>>>()?;
    let failed: Vec<&str> = replays.iter().filter(|r| !r.passed()).map(|r| r.example.as_str()).collect();
    let bytes = if replays.len() == 1 {
        output::to_json(&replays[0])?
    } else {
        output::to_json(&replays)?
    };
    emit(out, &bytes)?;
    if !failed.is_empty() {
        return Err(CliError::new("replay_mismatch", format!("checks failed for {}", failed.join(", "))).into());
    }
    Ok(())
}
