use super::experiment::{Experiment, Pair, Report};
use crate::controller::RunRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn group(pairs: &[Pair], g: usize) -> Vec<(&RunRecord, &RunRecord)> {
    pairs
        .iter()
        .filter(|p| p.group == g)
        .filter_map(|p| p.baseline.as_ref().map(|b| (b, &p.treatment)))
        .collect()
}

fn acc<'a>(runs: impl Iterator<Item = &'a RunRecord>) -> f64 {
    let v: Vec<bool> = runs.map(|r| r.goal_achieved).collect();
    v.iter().filter(|b| **b).count() as f64 / v.len().max(1) as f64
}

/// One-sided sign test: probability of at least `wins` successes in `n` fair coin flips.
pub fn sign_test(wins: usize, n: usize) -> f64 {
    let mut p = 0.0;
    let mut c = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            c = c * (n - k + 1) as f64 / k as f64;
        }
        if k >= wins {
            p += c;
        }
    }
    p / 2f64.powi(n as i32)
}

pub fn h1h2_gates(pairs: &[Pair]) -> Vec<Gate> {
    let mut out = Vec::new();
    let s5 = group(pairs, 5);
    let (tp, ati) = (acc(s5.iter().map(|p| p.0)), acc(s5.iter().map(|p| p.1)));
    out.push(Gate {
        name: "scenario 5 accuracy",
        pass: !s5.is_empty() && tp == 0.0 && ati == 1.0,
        detail: format!("n={} tp={tp:.2} ati={ati:.2}", s5.len()),
    });
    let mut pass = true;
    let mut detail = Vec::new();
    for g in [3, 4, 5] {
        let ps = group(pairs, g);
        let (tp, ati) = (acc(ps.iter().map(|p| p.0)), acc(ps.iter().map(|p| p.1)));
        pass &= !ps.is_empty() && ati == 1.0;
        if g != 5 {
            let wins = ps.iter().filter(|p| p.1.goal_achieved && !p.0.goal_achieved).count();
            let losses = ps.iter().filter(|p| !p.1.goal_achieved && p.0.goal_achieved).count();
            let p = sign_test(wins, wins + losses);
            pass &= tp < 1.0 && p < 0.05;
            detail.push(format!("s{g}: tp={tp:.2} ati={ati:.2} p={p:.4}"));
        } else {
            detail.push(format!("s{g}: ati={ati:.2}"));
        }
    }
    out.push(Gate { name: "scenarios 3-5 accuracy", pass, detail: detail.join(" ") });
    let s1 = group(pairs, 1);
    let faster = s1.iter().filter(|p| p.0.planning_time < p.1.planning_time).count();
    let same_len = s1.iter().all(|p| p.0.actions_executed == p.1.actions_executed);
    let all_ok = s1.iter().all(|p| p.0.goal_achieved && p.1.goal_achieved);
    out.push(Gate {
        name: "scenario 1 planning overhead",
        pass: !s1.is_empty() && faster * 5 >= s1.len() * 4 && same_len && all_ok,
        detail: format!("tp faster in {faster}/{} equal_lengths={same_len} all_achieved={all_ok}", s1.len()),
    });
    let s2 = group(pairs, 2);
    let fewer = s2
        .iter()
        .all(|p| p.1.actions_executed < p.0.actions_executed && p.1.execution_time < p.0.execution_time);
    let ratio = s2.iter().map(|p| p.0.actions_executed as f64 / p.1.actions_executed.max(1) as f64).sum::<f64>()
        / s2.len().max(1) as f64;
    out.push(Gate {
        name: "scenario 2 efficiency",
        pass: !s2.is_empty() && fewer && ratio >= 1.5,
        detail: format!("ati strictly better in every pair={fewer} action ratio={ratio:.2}"),
    });
    out
}

fn done(r: &RunRecord) -> bool {
    r.completed && r.goal_achieved
}

pub fn h3_gates(pairs: &[Pair]) -> Vec<Gate> {
    let levels = 1..=8usize;
    let rate = |g: usize, base: bool| {
        let runs: Vec<&RunRecord> = pairs
            .iter()
            .filter(|p| p.group == g)
            .filter_map(|p| if base { p.baseline.as_ref() } else { Some(&p.treatment) })
            .collect();
        (runs.iter().filter(|r| done(r)).count() as f64 / runs.len().max(1) as f64, runs.len())
    };
    let mean = |g: usize, f: &dyn Fn(&RunRecord) -> f64| {
        let v: Vec<f64> = pairs.iter().filter(|p| p.group == g && done(&p.treatment)).map(|p| f(&p.treatment)).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    let per_plan = |r: &RunRecord| r.fine_time.as_secs_f64() / r.refined_plans.max(1) as f64;
    let mut detail = Vec::new();
    let mut pass = true;
    let mut prev: Option<f64> = None;
    for g in levels.clone() {
        let (z, nz) = (rate(g, false), rate(g, true));
        let expect_base = match g {
            1 | 2 => nz.0 == 1.0,
            3 => nz.0 < 1.0,
            _ => nz.0 == 0.0,
        };
        let t = mean(g, &per_plan);
        // Per-plan time may stay flat between levels of equal size.
        let grows = prev.is_none_or(|p| t >= 0.9 * p);
        prev = Some(t);
        pass &= z.1 > 0 && nz.1 > 0 && z.0 == 1.0 && expect_base && grows;
        detail.push(format!("L{g}: zoom={:.0}% nozoom={:.0}% per_plan={:.4}s", 100.0 * z.0, 100.0 * nz.0, t));
    }
    let fine = |g| mean(g, &|r: &RunRecord| r.fine_time.as_secs_f64());
    let coarse = |g| mean(g, &|r: &RunRecord| r.coarse_time.as_secs_f64());
    let (f7, f8, c7, c8) = (fine(7), fine(8), coarse(7), coarse(8));
    vec![
        Gate { name: "zoom completion", pass, detail: detail.join(" ") },
        Gate {
            name: "L7 to L8 zoom robustness",
            pass: f7 > 0.0 && (f8 - f7).abs() <= 0.25 * f7 && c8 > c7,
            detail: format!("fine {f7:.4}s -> {f8:.4}s, coarse {c7:.4}s -> {c8:.4}s"),
        },
    ]
}

pub fn gates(report: &Report) -> Vec<Gate> {
    match report.experiment {
        Experiment::H1H2 => h1h2_gates(&report.pairs),
        Experiment::H3 => h3_gates(&report.pairs),
    }
}
