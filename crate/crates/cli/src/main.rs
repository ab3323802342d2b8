use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfast_core::backward::ExpertDemonstration;
use mfast_core::harness::{
    make_demo, run_ba, run_case_study, run_hifi_baseline, run_lofi, BaInit, ExperimentConfig,
    MethodResult, RunReport, SeedReport,
};
use mfast_core::policy::Checkpoint;
use mfast_core::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "mfast",
    version,
    about = "Multi-fidelity adaptive stress testing of a crosswalk scenario"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON); defaults to the built-in preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset used when no --config is given.
    #[arg(long, default_value = "time")]
    preset: String,
    /// Run only this seed instead of the configured seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fidelity {
    Lofi,
    Hifi,
}

#[derive(Subcommand)]
enum Command {
    /// Plain DRL search from the initial state.
    RunDrl {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "hifi")]
        fidelity: Fidelity,
    },
    /// Search the lofi simulator and adapt the failure into a hifi demonstration.
    MakeDemo {
        #[command(flatten)]
        common: Common,
    },
    /// Run the backward algorithm along a demonstration.
    RunBa {
        #[command(flatten)]
        common: Common,
        /// Demonstration file; defaults to demo.jsonl in the output directory.
        #[arg(long)]
        demo: Option<PathBuf>,
        /// Lofi policy checkpoint; defaults to checkpoint.json in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, action = clap::ArgAction::Set, default_value_t = false)]
        warm_start: bool,
    },
    /// Run a complete case study.
    CaseStudy {
        #[arg(value_parser = ["time", "dynamics", "tracker", "perception"])]
        name: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, action = clap::ArgAction::Set)]
        warm_start: Option<bool>,
    },
    /// Render report.json in the output directory as a table.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load_config(common: &Common, preset: &str) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => serde_json::from_reader(BufReader::new(File::open(path)?))?,
        None => ExperimentConfig::preset(preset)?,
    };
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn single_seed(cfg: &ExperimentConfig) -> Result<u64> {
    cfg.seeds
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidConfig("no seed given".into()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn append_metrics(dir: &Path, lines: &[Value]) -> Result<()> {
    let mut f = BufWriter::new(
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join("metrics.jsonl"))?,
    );
    for line in lines {
        serde_json::to_writer(&mut f, line)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

fn method_text(label: &str, m: &MethodResult) -> String {
    let steps = m.steps_to_failure.map_or("-".into(), |s| s.to_string());
    let reward = m.final_reward.map_or("-".into(), |r| format!("{r:.3}"));
    format!(
        "{label}: outcome {:?}, steps to failure {steps}, steps used {}, final reward {reward}\n",
        m.outcome, m.steps_used
    )
}

fn tagged(seed: u64, stage: &str, metrics: &[mfast_core::ppo::EpochMetrics]) -> Vec<Value> {
    metrics
        .iter()
        .map(|m| mfast_core::harness::metric_line(seed, stage, m))
        .collect()
}

fn cmd_run_drl(common: &Common, fidelity: Fidelity) -> Result<()> {
    let cfg = load_config(common, &common.preset)?;
    let seed = single_seed(&cfg)?;
    let (run, stage) = match fidelity {
        Fidelity::Lofi => (run_lofi(&cfg, seed)?, "lofi_drl"),
        Fidelity::Hifi => (run_hifi_baseline(&cfg, seed)?, "drl_baseline"),
    };
    append_metrics(&common.out, &tagged(seed, stage, &run.outcome.metrics))?;
    run.checkpoint.save(&common.out.join("checkpoint.json"))?;
    let result = run.method_result();
    write_json(
        &common.out.join("report.json"),
        &json!({ "seed": seed, "stage": stage, "result": result }),
    )?;
    fs::write(common.out.join("report.txt"), method_text(stage, &result))?;
    print!("{}", method_text(stage, &result));
    Ok(())
}

fn cmd_make_demo(common: &Common) -> Result<()> {
    let cfg = load_config(common, &common.preset)?;
    let seed = single_seed(&cfg)?;
    let lofi = run_lofi(&cfg, seed)?;
    append_metrics(
        &common.out,
        &tagged(seed, "lofi_drl", &lofi.outcome.metrics),
    )?;
    lofi.checkpoint.save(&common.out.join("checkpoint.json"))?;
    let result = lofi.method_result();
    let failure = lofi.outcome.failure.as_ref().ok_or_else(|| {
        Error::Adaptation(format!(
            "no lofi failure within {} steps",
            cfg.budgets.lofi_steps
        ))
    })?;
    let demo = make_demo(&cfg, failure, result.steps_to_failure.unwrap_or(0))?;
    demo.write_jsonl(BufWriter::new(File::create(common.out.join("demo.jsonl"))?))?;
    let summary = json!({
        "seed": seed,
        "stage": "lofi_drl",
        "result": result,
        "demo_length": demo.len(),
        "demo_ends_in_failure": demo.ends_in_failure,
        "demo_source": demo.source,
    });
    write_json(&common.out.join("report.json"), &summary)?;
    let text = format!(
        "{}demonstration: {} hifi steps, replay collides: {}\n",
        method_text("lofi_drl", &result),
        demo.len(),
        demo.ends_in_failure
    );
    fs::write(common.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_run_ba(
    common: &Common,
    demo_path: Option<PathBuf>,
    ckpt_path: Option<PathBuf>,
    warm: bool,
) -> Result<()> {
    let cfg = load_config(common, &common.preset)?;
    let seed = single_seed(&cfg)?;
    let demo_path = demo_path.unwrap_or_else(|| common.out.join("demo.jsonl"));
    let mut hifi = cfg.hifi.build()?;
    let mut demo =
        ExpertDemonstration::read_jsonl(BufReader::new(File::open(&demo_path)?), &mut hifi)?;
    demo.source.replay_steps = demo.len() as u64;
    let checkpoint;
    let (init, stage) = if warm {
        checkpoint =
            Checkpoint::load(&ckpt_path.unwrap_or_else(|| common.out.join("checkpoint.json")))?;
        (BaInit::Warm(&checkpoint), "ba_warm")
    } else {
        (BaInit::Scratch, "ba_scratch")
    };
    let run = match run_ba(&cfg, seed, &demo, init, stage)? {
        Ok(run) => run,
        Err(incompatible) => {
            let report = json!({ "seed": seed, "stage": stage, "warm_start_incompatible": incompatible.to_string() });
            write_json(&common.out.join("report.json"), &report)?;
            let text = format!("{stage}: not run: {incompatible}\n");
            fs::write(common.out.join("report.txt"), &text)?;
            print!("{text}");
            return Ok(());
        }
    };
    append_metrics(&common.out, &run.metrics)?;
    write_json(
        &common.out.join("report.json"),
        &json!({ "seed": seed, "stage": stage, "result": run.result }),
    )?;
    let text = method_text(stage, &run.result);
    fs::write(common.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_case_study(name: &str, common: &Common, warm: Option<bool>) -> Result<()> {
    let mut cfg = load_config(common, name)?;
    if let Some(w) = warm {
        cfg.warm_start = w;
    }
    let (report, metrics) = run_case_study(&cfg)?;
    append_metrics(&common.out, &metrics)?;
    write_json(&common.out.join("report.json"), &report)?;
    let text = report.render();
    fs::write(common.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_report(out: &Path) -> Result<()> {
    let report: RunReport =
        serde_json::from_reader(BufReader::new(File::open(out.join("report.json"))?))?;
    let seeds: Vec<SeedReport> = report.seeds.clone();
    let text = RunReport::assemble(&report.name, seeds).render();
    fs::write(out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let out = match &cli.command {
        Command::RunDrl { common, .. }
        | Command::MakeDemo { common }
        | Command::RunBa { common, .. }
        | Command::CaseStudy { common, .. } => common.out.clone(),
        Command::Report { out } => out.clone(),
    };
    fs::create_dir_all(&out)?;
    match cli.command {
        Command::RunDrl { common, fidelity } => cmd_run_drl(&common, fidelity),
        Command::MakeDemo { common } => cmd_make_demo(&common),
        Command::RunBa {
            common,
            demo,
            checkpoint,
            warm_start,
        } => cmd_run_ba(&common, demo, checkpoint, warm_start),
        Command::CaseStudy {
            name,
            common,
            warm_start,
        } => cmd_case_study(&name, &common, warm_start),
        Command::Report { out } => cmd_report(&out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
