use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use prooflist::campaign::CampaignReport;
use prooflist::crypto::ProofMode;
use prooflist::scenario::{self, RunReport, Scenario};
use prooflist::sim::{History, Schedule};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "prooflist", version, about = "Batch verification of allow-list and deny-list objects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign over a scenario and write a JSON report.
    Run(RunArgs),
    /// Re-execute a recorded schedule and print the resulting history as JSON lines.
    Replay { config: PathBuf, schedule: PathBuf },
    /// Check a recorded history against the scenario's sequential specification.
    Check { config: PathBuf, history: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Seed range START..END (end exclusive); overrides the scenario.
    #[arg(long, value_parser = parse_range)]
    seeds: Option<[u64; 2]>,
    /// Enumerate every schedule instead of sampling seeds.
    #[arg(long)]
    exhaustive: bool,
    /// Directory for the report and failure artifacts.
    #[arg(long, default_value = "prooflist-out")]
    out: PathBuf,
    #[arg(long, value_parser = parse_mode)]
    proof_mode: Option<ProofMode>,
    /// Scheduler decisions per run before it counts as an overrun.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Largest run, in shared accesses, exhaustive mode accepts.
    #[arg(long)]
    step_bound: Option<u64>,
    /// Cap on enumerated schedules in exhaustive mode.
    #[arg(long, default_value_t = 2_000_000)]
    max_runs: usize,
}

fn parse_range(s: &str) -> Result<[u64; 2], String> {
    let (a, b) = s.split_once("..").ok_or("expected START..END")?;
    let a = a.parse().map_err(|e| format!("{e}"))?;
    let b = b.parse().map_err(|e| format!("{e}"))?;
    if a > b {
        return Err("START must not exceed END".into());
    }
    Ok([a, b])
}

fn parse_mode(s: &str) -> Result<ProofMode, String> {
    match s {
        "explicit" => Ok(ProofMode::Explicit),
        "mock-zk" => Ok(ProofMode::MockZk),
        _ => Err(format!("unknown proof mode {s:?} (explicit | mock-zk)")),
    }
}

fn load(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_toml(&text).with_context(|| format!("loading {}", path.display()))
}

fn write_failure(out: &Path, run: &RunReport) -> Result<()> {
    let stem = format!("failure-{}", run.seed);
    fs::write(out.join(format!("{stem}.jsonl")), run.history.to_jsonl())?;
    fs::write(
        out.join(format!("{stem}.schedule.json")),
        serde_json::to_string_pretty(&run.schedule)?,
    )?;
    Ok(())
}

fn run(args: &RunArgs) -> Result<bool> {
    let mut sc = load(&args.config)?;
    if let Some(s) = args.seeds {
        sc.schedule.seeds = s;
    }
    if let Some(m) = args.proof_mode {
        sc.proof_mode = m;
    }
    if let Some(m) = args.max_steps {
        sc.schedule.max_steps = m;
    }
    if let Some(b) = args.step_bound {
        sc.schedule.step_bound = b;
    }
    sc.schedule.exhaustive |= args.exhaustive;
    let out = args.out.as_path();

    let (report, failing) = if sc.schedule.exhaustive {
        let ex = scenario::run_exhaustive(&sc, args.max_runs, usize::MAX);
        if let Some(len) = ex.over_bound {
            bail!(
                "scenario {} has a run of {len} shared accesses, above the exhaustive step bound {}",
                sc.name,
                sc.schedule.step_bound
            );
        }
        CampaignReport::exhaustive(&sc, &ex)
    } else {
        let runs: Vec<RunReport> = sc.seeds().into_par_iter().map(|seed| scenario::run_seed(&sc, seed)).collect();
        CampaignReport::seeded(&sc, runs)
    };

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    if let Some(f) = &failing {
        write_failure(out, f)?;
    }
    let t = &report.totals;
    println!(
        "{}: {} runs, {} passed, {} violations, {} overruns, {} unchecked",
        report.scenario, t.runs, t.passed, t.violations, t.overruns, t.unchecked
    );
    if let Some(f) = &report.first_failure {
        println!("first failure: seed {} ({:?}); artifacts in {}", f.seed, f.status, out.display());
    }
    Ok(report.clean())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(&args),
        Command::Replay { config, schedule } => (|| {
            let sc = load(&config)?;
            let text = fs::read_to_string(&schedule).with_context(|| format!("reading {}", schedule.display()))?;
            let schedule: Schedule = serde_json::from_str(&text).context("parsing schedule")?;
            let r = scenario::replay(&sc, &schedule);
            print!("{}", r.history.to_jsonl());
            Ok(r.status == scenario::RunStatus::Pass)
        })(),
        Command::Check { config, history } => (|| {
            let sc = load(&config)?;
            let text = fs::read_to_string(&history).with_context(|| format!("reading {}", history.display()))?;
            let h = History::from_jsonl(&text)?;
            let Some(verdict) = scenario::linearizability_verdict(&sc, &h) else {
                bail!("{:?} objects are checked by audits during `run`, not from a history file", sc.object);
            };
            let verdict = verdict?;
            println!("{}", serde_json::to_string_pretty(&verdict)?);
            Ok(verdict.linearizable)
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
