//! `hfplp`: train, evaluate and inspect planar quadruped policies.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hfplp::config::{ConfigError, WorkbenchConfig};
use hfplp::env::{ActionMode, Randomization};
use hfplp::evalkit::{
    export_report, observer_diagnostics, payload_sweep, pd_mismatch_sweep, run_scenario, Controller, EvalError, Scenario,
    ScenarioKind, ScenarioResult,
};
use hfplp::par::Execution;
use hfplp::trainer::{
    load_checkpoint, read_manifest, train_stage1, train_stage1_with, train_stage2, Checkpoint, CheckpointError, TrainError,
    TrainSetup,
};

/// Environment variable that sets the worker thread count.
const THREADS_VAR: &str = "HFPLP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "hfplp", version, about = "Planar quadruped hybrid force-position locomotion workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one stage.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one scenario or sweep.
    Eval(EvalArgs),
    /// Print a checkpoint's manifest.
    Inspect {
        checkpoint: PathBuf,
    },
    /// Evaluate several checkpoints on the same scenario or sweep into one table.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Stage {
    Hfplp,
    BaselinePosition,
    /// First-stage policy fine-tuned with disturbances on.
    HfplpFt,
    Daac,
    DaacNoObserver,
}

#[derive(clap::Args, Debug)]
struct TrainArgs {
    #[arg(value_enum)]
    stage: Stage,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue from a checkpoint of the same stage.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Total iterations for this stage (additional iterations for hfplp-ft).
    #[arg(long)]
    iters: Option<usize>,
    /// First-stage checkpoint, required by daac, daac-no-observer and hfplp-ft.
    #[arg(long)]
    stage1: Option<PathBuf>,
    /// Environments per rollout.
    #[arg(long)]
    envs: Option<usize>,
}

#[derive(clap::Args, Debug, Clone)]
struct EvalOptions {
    /// Config whose eval section is used; defaults to the one embedded in the checkpoint.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// First trial seed; trials use consecutive seeds from here.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Evaluate only the first-stage policy of a two-stage checkpoint.
    #[arg(long)]
    no_compensation: bool,
}

#[derive(clap::Args, Debug)]
struct EvalArgs {
    /// Scenario name, `payload-sweep`, `pd-sweep`, `impact-sweep` or `observer-diagnostics`.
    scenario: String,
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    opts: EvalOptions,
}

#[derive(clap::Args, Debug)]
struct SweepArgs {
    scenario: String,
    /// Repeat for each method to compare.
    #[arg(long = "checkpoint", required = true)]
    checkpoints: Vec<PathBuf>,
    #[command(flatten)]
    opts: EvalOptions,
}

/// Failure category printed in the single diagnostic line.
fn category(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if cause.is::<ConfigError>() {
            return "config";
        }
        if cause.is::<CheckpointError>() {
            return "checkpoint";
        }
        if let Some(t) = cause.downcast_ref::<TrainError>() {
            return match t {
                TrainError::NonFiniteLoss(_) => "non-finite-loss",
                TrainError::Checkpoint(_) => "checkpoint",
                TrainError::InvalidConfig(_) => "config",
                _ => "train",
            };
        }
        if cause.is::<EvalError>() {
            return "eval";
        }
        if cause.is::<UsageError>() {
            return "usage";
        }
    }
    "error"
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // help and version go to stdout
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[usage]: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", category(&e), one_line(&format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.parse().map_err(|_| usage(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(usage(format!("{THREADS_VAR} must be a positive integer")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Inspect { checkpoint } => cmd_inspect(&checkpoint),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

fn load_config(path: Option<&Path>) -> Result<WorkbenchConfig> {
    Ok(match path {
        Some(p) => WorkbenchConfig::load(p)?,
        None => WorkbenchConfig::default(),
    })
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.envs {
        cfg.ppo.num_envs = n;
        cfg.ppo.observer_holdout_envs = cfg.ppo.observer_holdout_envs.min(n / 8);
    }
    if let Some(dir) = &a.out {
        cfg.io.out_dir = dir.clone();
    }
    let needs_stage1 = matches!(a.stage, Stage::Daac | Stage::DaacNoObserver | Stage::HfplpFt);
    let stage1 = match (&a.stage1, needs_stage1) {
        (Some(p), true) => Some(load_checkpoint(p, None).with_context(|| format!("loading stage-1 checkpoint {}", p.display()))?),
        (None, true) => return Err(usage(format!("train {:?} requires --stage1 <checkpoint>", a.stage).to_lowercase())),
        (Some(_), false) => return Err(usage("--stage1 only applies to daac, daac-no-observer and hfplp-ft")),
        (None, false) => None,
    };
    if let Some(ck) = &stage1 {
        if ck.stack.daac.is_some() {
            bail!(usage("--stage1 must be a first-stage checkpoint"));
        }
    }
    let resume = a.resume.as_ref().map(|p| load_checkpoint(p, None).with_context(|| format!("loading {}", p.display()))).transpose()?;
    match (a.stage, &stage1) {
        (Stage::HfplpFt, Some(ck)) => {
            let start = resume.as_ref().map_or(ck.iteration, |r| r.iteration);
            cfg.ppo.iterations = start + a.iters.unwrap_or(cfg.ppo.iterations);
        }
        _ => {
            if let Some(n) = a.iters {
                cfg.ppo.iterations = n;
            }
        }
    }
    cfg.validate()?;
    let setup = TrainSetup {
        sim: cfg.sim_params(),
        ppo: cfg.ppo.clone(),
        seed: cfg.seed,
        exec: Execution::Parallel,
        config_text: cfg.to_toml(),
        out_dir: cfg.io.out_dir.clone(),
        checkpoint_every: cfg.io.checkpoint_every,
    };
    std::fs::create_dir_all(&setup.out_dir).with_context(|| format!("creating {}", setup.out_dir.display()))?;
    let out = match a.stage {
        Stage::Hfplp => train_stage1(&setup, ActionMode::Hybrid, resume)?,
        Stage::BaselinePosition => {
            let setup = TrainSetup { out_dir: setup.out_dir.join("baseline-position"), ..setup };
            train_stage1(&setup, ActionMode::PositionOnly, resume)?
        }
        Stage::HfplpFt => {
            let ck = stage1.expect("checked above");
            let r = Randomization { disturbance_probability: cfg.env.disturbance_probability, payload_probability: cfg.env.payload_probability };
            train_stage1_with(&setup, ck.stack.mode, Some(resume.unwrap_or(ck)), r, "stage1_ft")?
        }
        Stage::Daac | Stage::DaacNoObserver => {
            let ck = stage1.expect("checked above");
            train_stage2(&setup, &ck, a.stage == Stage::Daac, resume)?
        }
    };
    let last = out.records.last();
    println!(
        "checkpoint {} iteration {} mean_reward {}",
        out.checkpoint_path.display(),
        out.checkpoint.iteration,
        last.map_or("-".into(), |r| format!("{:.6}", r.mean_reward))
    );
    Ok(())
}

/// Config for evaluation: the one embedded at training time, optionally
/// replaced by a file whose physics sections must match it.
fn eval_config(ck: &Checkpoint, opts: &EvalOptions) -> Result<WorkbenchConfig> {
    let embedded = WorkbenchConfig::from_toml(&ck.config_text).context("embedded checkpoint config")?;
    let mut cfg = match &opts.config {
        Some(p) => {
            let c = WorkbenchConfig::load(p)?;
            if c.physics_digest() != embedded.physics_digest() {
                return Err(ConfigError::Invalid(format!(
                    "{} differs from the training config in robot, contact, actuator, observer or env settings",
                    p.display()
                ))
                .into());
            }
            c
        }
        None => embedded,
    };
    if opts.seed.is_some() || opts.trials.is_some() {
        let first = opts.seed.unwrap_or(cfg.eval.seeds[0]);
        let n = opts.trials.unwrap_or(cfg.eval.seeds.len());
        if n == 0 {
            return Err(usage("--trials must be >= 1"));
        }
        cfg.eval.seeds = (0..n as u64).map(|i| first + i).collect();
    }
    Ok(cfg)
}

struct Evaluated {
    results: Vec<ScenarioResult>,
    diagnostics: Option<String>,
}

fn evaluate(name: &str, ck: &Checkpoint, cfg: &WorkbenchConfig, compensate: bool) -> Result<Evaluated> {
    let ctrl = Controller::new(&ck.stack, compensate);
    let params = cfg.sim_params();
    let exec = Execution::Parallel;
    let seeds = cfg.eval.seeds.clone();
    let base = |n: &str| Scenario::new(n, ScenarioKind::Nominal, cfg.eval.command_m_per_s, seeds.clone());
    let mut diagnostics = None;
    let results = match name {
        "payload-sweep" => payload_sweep(ctrl, &base("payload"), &cfg.eval.payloads_kg, &params, exec)?,
        "pd-sweep" => {
            let kd = cfg.actuator.kd_n_m_s_per_rad;
            let gains: Vec<(f64, f64)> = cfg.eval.kp_sweep_n_m_per_rad.iter().map(|&kp| (kp, kd)).collect();
            pd_mismatch_sweep(ctrl, &base("pd"), &gains, &params, exec)?
        }
        "impact-sweep" => cfg
            .builtin_scenarios()
            .into_iter()
            .filter(|s| s.name.starts_with("impact-"))
            .map(|s| run_scenario(ctrl, &s, &params, exec))
            .collect::<Result<Vec<_>, _>>()?,
        "observer-diagnostics" => {
            let s = cfg.scenario("square-wave").expect("built-in scenario");
            let r = run_scenario(ctrl, &s, &params, exec)?;
            let d = observer_diagnostics(r.trials.iter().map(|t| t.trace.as_slice()));
            diagnostics = Some(serde_json::to_string_pretty(&d)? + "\n");
            vec![r]
        }
        other => {
            let s = cfg.scenario(other).ok_or_else(|| {
                let known: Vec<String> = cfg.builtin_scenarios().into_iter().chain(cfg.eval.scenarios.clone()).map(|s| s.name).collect();
                usage(format!(
                    "unknown scenario {other:?}; known: {}, payload-sweep, pd-sweep, impact-sweep, observer-diagnostics",
                    known.join(", ")
                ))
            })?;
            vec![run_scenario(ctrl, &s, &params, exec)?]
        }
    };
    Ok(Evaluated { results, diagnostics })
}

fn write_outputs(out: &Path, scenario: &str, ev: &Evaluated) -> Result<()> {
    let table = format!("{scenario}.tsv");
    export_report(&ev.results, out, &table)?;
    if let Some(d) = &ev.diagnostics {
        let p = out.join(format!("{scenario}.json"));
        std::fs::write(&p, d).with_context(|| format!("writing {}", p.display()))?;
    }
    for r in &ev.results {
        let m = &r.metrics;
        println!("{}\t{}\tSR {:.3}\tATE {:.4} m/s\tPD {:.4} m", r.scenario.name, r.method, m.sr, m.ate, m.pd);
    }
    if let Some(d) = &ev.diagnostics {
        print!("{d}");
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let ck = load_checkpoint(&a.checkpoint, None).with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let cfg = eval_config(&ck, &a.opts)?;
    let out = a.opts.out.clone().unwrap_or_else(|| cfg.io.out_dir.join("eval"));
    let ev = evaluate(&a.scenario, &ck, &cfg, !a.opts.no_compensation)?;
    write_outputs(&out, &a.scenario, &ev)
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut all = Evaluated { results: Vec::new(), diagnostics: None };
    let mut cfg0: Option<WorkbenchConfig> = None;
    let mut diag = String::new();
    for p in &a.checkpoints {
        let ck = load_checkpoint(p, None).with_context(|| format!("loading {}", p.display()))?;
        let cfg = eval_config(&ck, &a.opts)?;
        if let Some(c) = &cfg0 {
            if c.eval != cfg.eval {
                bail!(ConfigError::Invalid(format!("{} was trained with different eval settings; pass --config", p.display())));
            }
        }
        let ev = evaluate(&a.scenario, &ck, &cfg, !a.opts.no_compensation)?;
        if let Some(d) = ev.diagnostics {
            diag.push_str(&format!("# {}\n{d}", p.display()));
        }
        all.results.extend(ev.results);
        cfg0.get_or_insert(cfg);
    }
    if !diag.is_empty() {
        all.diagnostics = Some(diag);
    }
    let cfg = cfg0.ok_or_else(|| anyhow!("no checkpoints"))?;
    let out = a.opts.out.clone().unwrap_or_else(|| cfg.io.out_dir.join("sweep"));
    write_outputs(&out, &a.scenario, &all)
}

fn cmd_inspect(path: &Path) -> Result<()> {
    // a full load also verifies the blob checksum and the architecture
    let ck = load_checkpoint(path, None).with_context(|| format!("loading {}", path.display()))?;
    let m = read_manifest(path)?;
    println!("format_version {}", m.version);
    println!("stage {}", m.stage);
    println!("mode {}", serde_json::to_value(m.mode)?.as_str().unwrap_or("?"));
    if let Some(d) = &ck.stack.daac {
        println!("use_observer {}", d.use_observer);
    }
    println!("iteration {}", m.iteration);
    println!("config_digest {}", m.config_digest);
    println!("blob_sha256 {}", m.blob_sha256);
    println!("parameters {}", m.param_count());
    for t in &m.tensors {
        let shape: Vec<String> = t.shape.iter().map(|d| d.to_string()).collect();
        println!("tensor {} {} ({} values)", t.name, shape.join("x"), t.len());
    }
    for (name, steps, _) in &m.adam {
        println!("optimizer {name} steps {steps}");
    }
    Ok(())
}
