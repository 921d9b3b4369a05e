use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::level::{level_domain, level_spec, level_task, LevelSpec};
use super::scenario::{generate_scenario, ra_domain, ScenarioError};
use crate::controller::{run_paired, ControllerConfig, ControllerError, Domain, Mode, Resolution, RunRecord};
use crate::executor::ActionModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Experiment {
    /// Intentions against plain planning, coarse resolution, scenarios 1 to 5.
    H1H2,
    /// Zooming against no zooming, concrete execution, levels 1 to 8.
    H3,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub trials: usize,
    pub seed: u64,
    /// Scenario ids or level ids; empty means all.
    pub groups: Vec<usize>,
    pub fine_timeout: Duration,
    /// Run the baseline arm of the zoom experiment.
    pub baseline: bool,
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            trials,
            seed,
            groups: Vec::new(),
            fine_timeout: Duration::from_secs(60),
            baseline: true,
            jobs: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("trial {group}/{trial} (seed {seed}) failed: {source}")]
    Trial { group: usize, trial: usize, seed: u64, source: ControllerError },
    #[error("trial {group}/{trial} (seed {seed}) panicked")]
    Panic { group: usize, trial: usize, seed: u64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("no level {0}")]
    Level(usize),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// One paired trial: `baseline` is plain planning or no zooming, `treatment`
/// is intentions or zooming.
#[derive(Debug, Clone)]
pub struct Pair {
    pub group: usize,
    pub trial: usize,
    pub seed: u64,
    pub baseline: Option<RunRecord>,
    pub treatment: RunRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub measure: String,
    pub scenario: String,
    pub ratio_mean: f64,
    pub ratio_std: f64,
    pub n: usize,
    pub acc_tp: f64,
    pub acc_ati: f64,
}

/// Absolute means of one arm within one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub group: String,
    pub arm: String,
    pub trials: usize,
    pub achieved: f64,
    pub completed: f64,
    pub planning_time: f64,
    pub coarse_time: f64,
    pub fine_time: f64,
    pub time_per_refined_plan: f64,
    pub execution_time: f64,
    pub actions: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: Experiment,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
    pub arms: Vec<ArmSummary>,
    #[serde(skip)]
    pub pairs: Vec<Pair>,
}

pub fn trial_seed(base: u64, group: usize, trial: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add((group as u64) << 20).wrapping_add(trial as u64)
}

pub fn group_name(experiment: Experiment, group: usize) -> String {
    match experiment {
        Experiment::H1H2 => group.to_string(),
        Experiment::H3 => format!("L{group}"),
    }
}

pub fn coarse_config(mode: Mode, seed: u64) -> ControllerConfig {
    ControllerConfig { mode, resolution: Resolution::Coarse, seed, model: ActionModel::noise_free(), ..Default::default() }
}

pub fn fine_config(zoom: bool, seed: u64, fine_timeout: Duration) -> ControllerConfig {
    ControllerConfig {
        mode: Mode::Ati,
        resolution: Resolution::Fine { zoom },
        seed,
        fine_timeout,
        model: ActionModel::default(),
        ..Default::default()
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

fn frac(pairs: &[&Pair], f: impl Fn(&Pair) -> bool) -> f64 {
    if pairs.is_empty() {
        return f64::NAN;
    }
    pairs.iter().filter(|p| f(p)).count() as f64 / pairs.len() as f64
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b > 0.0 && a.is_finite()).then(|| a / b)
}

type Measure = (&'static str, fn(&RunRecord) -> f64);

fn per_refined_plan(r: &RunRecord) -> f64 {
    if r.refined_plans == 0 {
        0.0
    } else {
        secs(r.fine_time) / r.refined_plans as f64
    }
}

const H1H2_MEASURES: [Measure; 3] = [
    ("plan_time", |r| secs(r.planning_time)),
    ("exec_time", |r| r.execution_time as f64),
    ("actions", |r| r.actions_executed as f64),
];

const H3_MEASURES: [Measure; 4] = [
    ("reasoning_total", |r| secs(r.planning_time)),
    ("reasoning_fine", |r| secs(r.fine_time)),
    ("reasoning_coarse", |r| secs(r.coarse_time)),
    ("time_per_refined_plan", per_refined_plan),
];

/// Ratios baseline/treatment computed pair by pair, then averaged.
pub fn metrics(experiment: Experiment, pairs: &[Pair]) -> Vec<MetricsRow> {
    let mut groups: BTreeMap<usize, Vec<&Pair>> = BTreeMap::new();
    for p in pairs {
        groups.entry(p.group).or_default().push(p);
    }
    let mut rows = Vec::new();
    for (g, ps) in groups {
        let with_base: Vec<&Pair> = ps.iter().copied().filter(|p| p.baseline.is_some()).collect();
        let acc_base = frac(&with_base, |p| p.baseline.as_ref().is_some_and(|b| b.goal_achieved));
        let acc_treat = frac(&ps, |p| p.treatment.goal_achieved);
        let row = |measure: &str, v: Vec<f64>| {
            let (m, s) = mean_std(&v);
            MetricsRow {
                measure: measure.to_owned(),
                scenario: group_name(experiment, g),
                ratio_mean: m,
                ratio_std: s,
                n: v.len(),
                acc_tp: acc_base,
                acc_ati: acc_treat,
            }
        };
        let both: Vec<(&RunRecord, &RunRecord)> = ps
            .iter()
            .filter_map(|p| p.baseline.as_ref().map(|b| (b, &p.treatment)))
            .filter(|(b, t)| experiment == Experiment::H1H2 || (b.goal_achieved && t.goal_achieved))
            .collect();
        let measures: &[Measure] = match experiment {
            Experiment::H1H2 => &H1H2_MEASURES,
            Experiment::H3 => &H3_MEASURES,
        };
        if experiment == Experiment::H1H2 {
            // Each component normalised by its intention-driven value before summing.
            let total = both
                .iter()
                .filter_map(|(b, t)| {
                    let p = ratio(secs(b.planning_time), secs(t.planning_time))?;
                    let e = ratio(b.execution_time as f64, t.execution_time as f64)?;
                    Some((p + e) / 2.0)
                })
                .collect();
            rows.push(row("total_time", total));
        }
        for (name, f) in measures {
            rows.push(row(name, both.iter().filter_map(|(b, t)| ratio(f(b), f(t))).collect()));
        }
        if experiment == Experiment::H3 {
            let done = |r: &RunRecord| if r.completed && r.goal_achieved { 1.0 } else { 0.0 };
            let mut r = row("completed", vec![]);
            r.n = ps.len();
            r.acc_tp = mean_std(&ps.iter().filter_map(|p| p.baseline.as_ref().map(done)).collect::<Vec<_>>()).0;
            r.acc_ati = mean_std(&ps.iter().map(|p| done(&p.treatment)).collect::<Vec<_>>()).0;
            rows.push(r);
        }
    }
    rows
}

pub fn arm_summaries(experiment: Experiment, pairs: &[Pair]) -> Vec<ArmSummary> {
    let mut groups: BTreeMap<usize, Vec<&Pair>> = BTreeMap::new();
    for p in pairs {
        groups.entry(p.group).or_default().push(p);
    }
    let (bname, tname) = match experiment {
        Experiment::H1H2 => ("tp", "ati"),
        Experiment::H3 => ("no_zoom", "zoom"),
    };
    let mut out = Vec::new();
    for (g, ps) in groups {
        for (arm, runs) in [
            (bname, ps.iter().filter_map(|p| p.baseline.as_ref()).collect::<Vec<_>>()),
            (tname, ps.iter().map(|p| &p.treatment).collect()),
        ] {
            if runs.is_empty() {
                continue;
            }
            let m = |f: &dyn Fn(&RunRecord) -> f64| mean_std(&runs.iter().map(|r| f(r)).collect::<Vec<_>>()).0;
            out.push(ArmSummary {
                group: group_name(experiment, g),
                arm: arm.to_owned(),
                trials: runs.len(),
                achieved: m(&|r| r.goal_achieved as u8 as f64),
                completed: m(&|r| r.completed as u8 as f64),
                planning_time: m(&|r| secs(r.planning_time)),
                coarse_time: m(&|r| secs(r.coarse_time)),
                fine_time: m(&|r| secs(r.fine_time)),
                time_per_refined_plan: m(&per_refined_plan),
                execution_time: m(&|r| r.execution_time as f64),
                actions: m(&|r| r.actions_executed as f64),
            });
        }
    }
    out
}

struct Job {
    group: usize,
    trial: usize,
    seed: u64,
    dom: Arc<Domain>,
    task: crate::controller::Task,
}

fn jobs_for(cfg: &ExperimentConfig) -> Result<Vec<Job>, BenchError> {
    let mut jobs = Vec::new();
    match cfg.experiment {
        Experiment::H1H2 => {
            let dom = Arc::new(ra_domain());
            let groups = if cfg.groups.is_empty() { super::scenario::SCENARIOS.collect() } else { cfg.groups.clone() };
            for g in groups {
                for i in 0..cfg.trials {
                    let seed = trial_seed(cfg.seed, g, i);
                    let task = generate_scenario(&dom, g, seed)?;
                    jobs.push(Job { group: g, trial: i, seed, dom: dom.clone(), task });
                }
            }
        }
        Experiment::H3 => {
            let groups = if cfg.groups.is_empty() { super::level::LEVELS.collect() } else { cfg.groups.clone() };
            for g in groups {
                let spec: LevelSpec = level_spec(g).ok_or(BenchError::Level(g))?;
                let dom = Arc::new(Domain::new(level_domain(&spec))?);
                for i in 0..cfg.trials {
                    // Levels reuse seeds so their tasks share a target where sizes allow.
                    let seed = trial_seed(cfg.seed, 0, i);
                    jobs.push(Job { group: g, trial: i, seed, dom: dom.clone(), task: level_task(&spec, seed) });
                }
            }
        }
    }
    Ok(jobs)
}

fn run_job(cfg: &ExperimentConfig, job: &Job) -> Result<Pair, BenchError> {
    let err = |source| BenchError::Trial { group: job.group, trial: job.trial, seed: job.seed, source };
    let (baseline, treatment) = match cfg.experiment {
        Experiment::H1H2 => {
            let (b, t) = run_paired(&job.dom, &job.task, &coarse_config(Mode::Tp, job.seed), &coarse_config(Mode::Ati, job.seed))
                .map_err(err)?;
            (Some(b), t)
        }
        Experiment::H3 => {
            let zoomed = fine_config(true, job.seed, cfg.fine_timeout);
            if cfg.baseline {
                let (b, t) = run_paired(&job.dom, &job.task, &fine_config(false, job.seed, cfg.fine_timeout), &zoomed)
                    .map_err(err)?;
                (Some(b), t)
            } else {
                (None, crate::controller::run_goal(&job.dom, &job.task, &zoomed).map_err(err)?)
            }
        }
    };
    Ok(Pair { group: job.group, trial: job.trial, seed: job.seed, baseline, treatment })
}

/// Runs every paired trial, spreading them over `cfg.jobs` workers.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, BenchError> {
    if cfg.trials == 0 {
        return Err(BenchError::NoTrials);
    }
    let jobs = jobs_for(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build()?;
    let pairs: Vec<Result<Pair, BenchError>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run_job(cfg, job))).unwrap_or(Err(
                    BenchError::Panic { group: job.group, trial: job.trial, seed: job.seed },
                ))
            })
            .collect()
    });
    let pairs = pairs.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Report {
        experiment: cfg.experiment,
        trials: cfg.trials,
        seed: cfg.seed,
        rows: metrics(cfg.experiment, &pairs),
        arms: arm_summaries(cfg.experiment, &pairs),
        pairs,
    })
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else {
        format!("{x:.2}")
    }
}

impl Report {
    /// Plain-text table: one line per measure, one column per group.
    pub fn table(&self) -> String {
        let mut groups: Vec<String> = Vec::new();
        for r in &self.rows {
            if !groups.contains(&r.scenario) {
                groups.push(r.scenario.clone());
            }
        }
        let mut measures: Vec<String> = Vec::new();
        for r in &self.rows {
            if !measures.contains(&r.measure) {
                measures.push(r.measure.clone());
            }
        }
        let (head, base, treat) = match self.experiment {
            Experiment::H1H2 => ("scenario", "TP", "ATI"),
            Experiment::H3 => ("level", "no zoom", "zoom"),
        };
        let mut out = format!("{:<24}", head);
        for g in &groups {
            out.push_str(&format!("{g:>16}"));
        }
        out.push('\n');
        for m in &measures {
            out.push_str(&format!("{m:<24}"));
            for g in &groups {
                let cell = self
                    .rows
                    .iter()
                    .find(|r| &r.measure == m && &r.scenario == g)
                    .map(|r| {
                        if r.measure == "completed" {
                            format!("{}/{}", pct(r.acc_tp), pct(r.acc_ati))
                        } else {
                            format!("{}±{}", fmt(r.ratio_mean), fmt(r.ratio_std))
                        }
                    })
                    .unwrap_or_default();
                out.push_str(&format!("{cell:>16}"));
            }
            out.push('\n');
        }
        out.push_str(&format!("{:<24}", format!("accuracy {base}/{treat}")));
        for g in &groups {
            let r = self.rows.iter().find(|r| &r.scenario == g).expect("group has rows");
            out.push_str(&format!("{:>16}", format!("{}/{}", pct(r.acc_tp), pct(r.acc_ati))));
        }
        out.push('\n');
        out
    }

    /// Writes `metrics.csv`, `metrics.json`, `table.txt` and one trace file
    /// per run under `traces/`.
    pub fn write(&self, out: &Path) -> Result<(), BenchError> {
        fs::create_dir_all(out.join("traces"))?;
        let mut w = csv::Writer::from_path(out.join("metrics.csv"))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        fs::write(out.join("metrics.json"), serde_json::to_string_pretty(self)? + "\n")?;
        fs::write(out.join("table.txt"), self.table())?;
        let (bname, tname) = match self.experiment {
            Experiment::H1H2 => ("tp", "ati"),
            Experiment::H3 => ("nozoom", "zoom"),
        };
        for p in &self.pairs {
            let stem = format!("{}_{:03}", group_name(self.experiment, p.group), p.trial);
            if let Some(b) = &p.baseline {
                fs::write(out.join("traces").join(format!("{stem}_{bname}.txt")), b.trace_text() + &b.summary() + "\n")?;
            }
            fs::write(out.join("traces").join(format!("{stem}_{tname}.txt")), p.treatment.trace_text() + &p.treatment.summary() + "\n")?;
        }
        Ok(())
    }
}

fn pct(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else {
        format!("{:.0}%", 100.0 * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(achieved: bool, plan_ms: u64, exec: u64, actions: usize) -> RunRecord {
        RunRecord {
            goal_achieved: achieved,
            completed: true,
            reason: None,
            plans_computed: 1,
            refined_plans: actions,
            planning_time: Duration::from_millis(plan_ms),
            coarse_time: Duration::from_millis(plan_ms / 2),
            fine_time: Duration::from_millis(plan_ms / 2),
            execution_time: exec,
            actions_executed: actions,
            concrete_actions: actions,
            trace: Vec::new(),
        }
    }

    fn pair(group: usize, base: RunRecord, treat: RunRecord) -> Pair {
        Pair { group, trial: 0, seed: 0, baseline: Some(base), treatment: treat }
    }

    fn row<'a>(rows: &'a [MetricsRow], measure: &str) -> &'a MetricsRow {
        rows.iter().find(|r| r.measure == measure).unwrap()
    }

    #[test]
    fn ratios_are_averaged_pair_by_pair() {
        let pairs = [
            pair(2, record(true, 10, 40, 8), record(true, 20, 20, 4)),
            pair(2, record(false, 30, 60, 6), record(true, 10, 60, 6)),
        ];
        let rows = metrics(Experiment::H1H2, &pairs);
        let actions = row(&rows, "actions");
        assert_eq!((actions.ratio_mean, actions.ratio_std, actions.n), (1.5, 0.5, 2));
        assert_eq!((actions.acc_tp, actions.acc_ati), (0.5, 1.0));
        let total = row(&rows, "total_time");
        assert!((total.ratio_mean - (((0.5 + 2.0) / 2.0 + (3.0 + 1.0) / 2.0) / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn level_ratios_use_only_pairs_both_arms_finished() {
        let pairs = [
            pair(3, record(true, 100, 10, 2), record(true, 10, 10, 2)),
            pair(3, record(false, 900, 10, 2), record(true, 10, 10, 2)),
        ];
        let rows = metrics(Experiment::H3, &pairs);
        assert_eq!(row(&rows, "reasoning_total").ratio_mean, 10.0);
        assert_eq!(row(&rows, "reasoning_total").n, 1);
        let done = row(&rows, "completed");
        assert_eq!((done.acc_tp, done.acc_ati, done.n), (0.5, 1.0, 2));
    }

    #[test]
    fn missing_baseline_has_no_accuracy() {
        let p = Pair { group: 1, trial: 0, seed: 0, baseline: None, treatment: record(true, 1, 1, 1) };
        let rows = metrics(Experiment::H3, &[p]);
        assert!(rows.iter().all(|r| r.acc_tp.is_nan()));
        assert_eq!(row(&rows, "completed").acc_ati, 1.0);
    }

    #[test]
    fn trial_seeds_differ_across_groups_and_trials() {
        let mut seen = std::collections::BTreeSet::new();
        for g in 0..9 {
            for t in 0..50 {
                assert!(seen.insert(trial_seed(7, g, t)));
            }
        }
        assert_eq!(trial_seed(7, 2, 3), trial_seed(7, 2, 3));
    }
}
