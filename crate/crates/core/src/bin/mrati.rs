use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use mrati::bench::experiment::{coarse_config, fine_config};
use mrati::bench::gates::gates;
use mrati::bench::scenario::{example_trace_task, generate_scenario, ra_domain};
use mrati::bench::{run_experiment, Experiment, ExperimentConfig};
use mrati::controller::{run_goal, Mode};
use mrati::diagnosis::{consistent_model, History};
use mrati::domain::{ground, parse_domain, parse_ground_literals};
use mrati::search::{plan_minimal, Goal, PlanOptions};

#[derive(Parser)]
#[command(name = "mrati", version, about = "Multi-resolution intentional planning")]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ati,
    Tp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    H1h2,
    H3,
}

#[derive(Subcommand)]
enum Command {
    /// Shortest plan for a goal in a domain file.
    Plan {
        domain: PathBuf,
        #[arg(long)]
        goal: String,
        /// Known initial literals; the rest follow from defaults and closed-world assumptions.
        #[arg(long, default_value = "")]
        init: String,
        #[arg(long, default_value_t = 20)]
        horizon: usize,
    },
    /// Runs one scenario trial and prints its event trace.
    Trace {
        #[arg(long)]
        scenario: usize,
        #[arg(long, value_enum, default_value = "ati")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the fixed narrated instance of the scenario instead of sampling.
        #[arg(long)]
        example: bool,
        /// Execute refined concrete actions instead of coarse ones.
        #[arg(long)]
        fine: bool,
        #[arg(long)]
        no_zoom: bool,
        #[arg(long, default_value_t = 60)]
        timeout: u64,
    },
    /// Paired-trial experiments.
    Bench {
        #[arg(value_enum)]
        experiment: ExperimentArg,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Concrete planning deadline in seconds.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
        /// Skip the runs without zooming.
        #[arg(long)]
        no_zoom: bool,
        /// Scenario or level ids to run; all by default.
        #[arg(long, value_delimiter = ',')]
        groups: Vec<usize>,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Plan { domain, goal, init, horizon } => {
            let text = match std::fs::read_to_string(&domain) {
                Ok(t) => t,
                Err(e) => return fail(format!("{}: {e}", domain.display())),
            };
            let run = || -> Result<Vec<String>, String> {
                let desc = parse_domain(&text).map_err(|e| e.to_string())?;
                let g = ground(&desc).map_err(|e| e.to_string())?;
                let lits = |t: &str| -> Result<Vec<_>, String> {
                    parse_ground_literals(t)
                        .map_err(|e| e.to_string())?
                        .iter()
                        .map(|(a, v)| g.lit_from_ast(a, *v).map_err(|e| e.to_string()))
                        .collect()
                };
                let mut h = History::new();
                for l in lits(&init)? {
                    h.observe(l, 0).map_err(|e| e.to_string())?;
                }
                let model = consistent_model(&g, &h, 0).map_err(|e| e.to_string())?;
                let plan = plan_minimal(&g, model.current(), &Goal::new(lits(&goal)?), &PlanOptions::with_horizon(horizon))
                    .map_err(|e| e.to_string())?;
                Ok(plan.render(&g))
            };
            match run() {
                Ok(steps) if cli.json => println!("{}", serde_json::json!({ "plan": steps })),
                Ok(steps) => steps.iter().for_each(|s| println!("{s}")),
                Err(e) => return fail(e),
            }
            ExitCode::SUCCESS
        }
        Command::Trace { scenario, mode, seed, example, fine, no_zoom, timeout } => {
            let dom = ra_domain();
            let task = if example {
                match example_trace_task(scenario) {
                    Some(t) => t,
                    None => return fail(format!("no narrated instance {scenario}")),
                }
            } else {
                match generate_scenario(&dom, scenario, seed) {
                    Ok(t) => t,
                    Err(e) => return fail(e),
                }
            };
            let mode = match mode {
                ModeArg::Ati => Mode::Ati,
                ModeArg::Tp => Mode::Tp,
            };
            let mut cfg = if fine {
                fine_config(!no_zoom, seed, Duration::from_secs(timeout))
            } else {
                coarse_config(mode, seed)
            };
            cfg.mode = mode;
            match run_goal(&dom, &task, &cfg) {
                Ok(r) if cli.json => println!("{}", serde_json::to_string_pretty(&r).expect("records serialize")),
                Ok(r) => {
                    print!("{}", r.trace_text());
                    println!("{}", r.summary());
                }
                Err(e) => return fail(e),
            }
            ExitCode::SUCCESS
        }
        Command::Bench { experiment, trials, seed, out, jobs, timeout, no_zoom, groups } => {
            let experiment = match experiment {
                ExperimentArg::H1h2 => Experiment::H1H2,
                ExperimentArg::H3 => Experiment::H3,
            };
            let mut cfg = ExperimentConfig::new(experiment, trials, seed);
            cfg.jobs = jobs;
            cfg.fine_timeout = Duration::from_secs(timeout.max(1));
            cfg.baseline = !no_zoom;
            cfg.groups = groups;
            let report = match run_experiment(&cfg) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            if let Err(e) = report.write(&out) {
                return fail(e);
            }
            let gs = gates(&report);
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            } else {
                print!("{}", report.table());
                for g in &gs {
                    println!("{} {}: {}", if g.pass { "PASS" } else { "FAIL" }, g.name, g.detail);
                }
            }
            if gs.iter().all(|g| g.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
